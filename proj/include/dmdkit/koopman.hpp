#pragma once

// Finite-dimensional Koopman approximation. States are lifted through a
// dictionary of scalar observables y = g(x), DMD runs on the lifted
// trajectories, and predictions are decoded back by projecting onto the
// observables that return the raw coordinates.
//
// The lifted eigenvectors are the finite analogue of Koopman
// eigenfunctions restricted to the span of the dictionary; nothing here
// claims convergence to the infinite-dimensional operator.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dmdkit/dmd.hpp"
#include "dmdkit/error.hpp"
#include "dmdkit/numerics.hpp"
#include "dmdkit/trajectory.hpp"

namespace dmdkit {

struct Observable {
  std::string name;
  std::function<double(const RealVector&)> eval;
};

enum class DictionaryFamily { Identity, Monomial, Custom };

constexpr std::string_view to_string(DictionaryFamily f) {
  switch (f) {
    case DictionaryFamily::Identity: return "identity";
    case DictionaryFamily::Monomial: return "monomial";
    case DictionaryFamily::Custom: return "custom";
  }
  return "custom";
}

/// Serializable description of a builtin dictionary. `means` and `scales`
/// hold one entry per observable once standardization has been fitted;
/// coordinate and constant observables always carry (0, 1).
struct DictionarySpec {
  DictionaryFamily family = DictionaryFamily::Identity;
  std::size_t degree = 1;
  bool include_constant = false;
  bool standardize = false;
  std::vector<double> means;
  std::vector<double> scales;

  bool has_standardization() const { return !means.empty(); }
};

/// Parses the command-line form `identity` or `monomial:d[,const][,std]`.
inline DictionarySpec parse_dictionary_spec(std::string_view text) {
  DictionarySpec spec;
  if (text == "identity") return spec;
  if (text.substr(0, 9) != "monomial:")
    throw Error(ErrorCode::InvalidArgument, "dictionary must be 'identity' or 'monomial:d[,const][,std]'");
  spec.family = DictionaryFamily::Monomial;
  text.remove_prefix(9);
  bool first = true;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto token = text.substr(0, comma);
    if (first) {
      std::size_t d = 0;
      auto res = std::from_chars(token.data(), token.data() + token.size(), d);
      if (res.ec != std::errc() || res.ptr != token.data() + token.size() || d == 0)
        throw Error(ErrorCode::InvalidArgument, "bad monomial degree '" + std::string(token) + "'");
      spec.degree = d;
      first = false;
    } else if (token == "const") {
      spec.include_constant = true;
    } else if (token == "std") {
      spec.standardize = true;
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown dictionary option '" + std::string(token) + "'");
    }
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (first) throw Error(ErrorCode::InvalidArgument, "monomial dictionary needs a degree");
  return spec;
}

class Dictionary {
 public:
  static constexpr std::size_t default_cap = 10000;

  /// Custom dictionary. When `coordinate_slots` is given, observable
  /// `coordinate_slots[i]` must return x_i.
  Dictionary(std::size_t n, std::vector<Observable> observables,
             std::optional<std::vector<std::size_t>> coordinate_slots = std::nullopt)
      : n_(n), observables_(std::move(observables)), slots_(std::move(coordinate_slots)) {
    spec_.family = DictionaryFamily::Custom;
    check_invariants();
  }

  std::size_t input_dim() const { return n_; }
  std::size_t output_dim() const { return observables_.size(); }
  const std::vector<Observable>& observables() const { return observables_; }
  const std::optional<std::vector<std::size_t>>& coordinate_slots() const { return slots_; }
  const DictionarySpec& spec() const { return spec_; }

  bool is_coordinate_slot(std::size_t i) const {
    if (!slots_) return false;
    for (auto s : *slots_)
      if (s == i) return true;
    return false;
  }

  /// g(x), including standardization when fitted.
  RealVector evaluate(const RealVector& x) const {
    if (static_cast<std::size_t>(x.size()) != n_)
      throw Error(ErrorCode::DimensionMismatch, "state has dimension " + std::to_string(x.size()) +
                                                    ", dictionary expects " + std::to_string(n_));
    RealVector y(static_cast<Eigen::Index>(observables_.size()));
    for (std::size_t i = 0; i < observables_.size(); ++i) {
      double v = observables_[i].eval(x);
      if (spec_.has_standardization()) v = (v - spec_.means[i]) / spec_.scales[i];
      if (!std::isfinite(v))
        throw Error(ErrorCode::NonFiniteObservable, "observable '" + observables_[i].name + "' returned " +
                                                        detail::format_double(v));
      y(static_cast<Eigen::Index>(i)) = v;
    }
    return y;
  }

  /// Copy with standardization parameters baked in. Entries for coordinate
  /// and constant observables are forced to (0, 1).
  Dictionary with_standardization(std::vector<double> means, std::vector<double> scales) const {
    if (means.size() != output_dim() || scales.size() != output_dim())
      throw Error(ErrorCode::DimensionMismatch, "standardization needs one mean and scale per observable");
    Dictionary out = *this;
    for (std::size_t i = 0; i < output_dim(); ++i) {
      if (!std::isfinite(means[i]) || !std::isfinite(scales[i]) || !(scales[i] > 0.0))
        throw Error(ErrorCode::InvalidArgument, "standardization parameters must be finite with positive scale");
      if (is_coordinate_slot(i) || constant_slot_ == i) {
        means[i] = 0.0;
        scales[i] = 1.0;
      }
    }
    out.spec_.standardize = true;
    out.spec_.means = std::move(means);
    out.spec_.scales = std::move(scales);
    return out;
  }

  /// Dictionary described by `spec` for n-dimensional states. Fitted
  /// standardization parameters in the spec are kept.
  static Dictionary from_spec(std::size_t n, const DictionarySpec& spec, std::size_t cap = default_cap);

 private:
  friend Dictionary identity_dictionary(std::size_t n);
  friend Dictionary monomial_dictionary(std::size_t n, std::size_t degree, bool include_constant,
                                        std::size_t cap);

  Dictionary() = default;

  void check_invariants() const {
    if (n_ == 0) throw Error(ErrorCode::InvalidArgument, "dictionary input dimension must be positive");
    if (observables_.empty()) throw Error(ErrorCode::InvalidArgument, "dictionary needs at least one observable");
    for (const auto& o : observables_)
      if (!o.eval) throw Error(ErrorCode::InvalidArgument, "observable '" + o.name + "' has no function");
    if (!slots_) return;
    if (slots_->size() != n_)
      throw Error(ErrorCode::InvalidArgument, "coordinate slots must list exactly one observable per state coordinate");
    RealVector probe(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) probe(static_cast<Eigen::Index>(i)) = 1.25 + 0.5 * static_cast<double>(i);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto slot = (*slots_)[i];
      if (slot >= observables_.size())
        throw Error(ErrorCode::InvalidArgument, "coordinate slot " + std::to_string(slot) + " out of range");
      if (observables_[slot].eval(probe) != probe(static_cast<Eigen::Index>(i)))
        throw Error(ErrorCode::InvalidArgument,
                    "observable '" + observables_[slot].name + "' is not coordinate x" + std::to_string(i + 1));
    }
  }

  std::size_t n_ = 0;
  std::vector<Observable> observables_;
  std::optional<std::vector<std::size_t>> slots_;
  std::optional<std::size_t> constant_slot_;
  DictionarySpec spec_;
};

inline Dictionary identity_dictionary(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "dictionary input dimension must be positive");
  Dictionary d;
  d.n_ = n;
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < n; ++i) {
    d.observables_.push_back({"x" + std::to_string(i + 1),
                              [i](const RealVector& x) { return x(static_cast<Eigen::Index>(i)); }});
    slots.push_back(i);
  }
  d.slots_ = std::move(slots);
  d.spec_.family = DictionaryFamily::Identity;
  return d;
}

namespace detail {

/// Number of monomials in n variables with total degree 1..d, or nullopt
/// when it exceeds `limit`.
inline std::optional<std::size_t> monomial_count(std::size_t n, std::size_t d, std::size_t limit) {
  // C(n + d, d) - 1 via the running product C(n + k, k) = C(n + k - 1, k - 1) * (n + k) / k.
  unsigned long long c = 1;
  for (std::size_t k = 1; k <= d; ++k) {
    const unsigned long long num = static_cast<unsigned long long>(n + k);
    if (c > (static_cast<unsigned long long>(limit) + 2ULL) * 64ULL) return std::nullopt;
    c = c * num / k;
  }
  if (c - 1 > limit) return std::nullopt;
  return static_cast<std::size_t>(c - 1);
}

/// Exponent tuples of total degree t in descending lexicographic order.
inline void exponents_of_degree(std::size_t n, std::size_t t, std::vector<unsigned>& current,
                                std::vector<std::vector<unsigned>>& out) {
  const std::size_t pos = current.size();
  if (pos + 1 == n) {
    current.push_back(static_cast<unsigned>(t));
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (std::size_t a = t + 1; a-- > 0;) {
    current.push_back(static_cast<unsigned>(a));
    exponents_of_degree(n, t - a, current, out);
    current.pop_back();
  }
}

inline std::string monomial_name(const std::vector<unsigned>& exps) {
  std::string name;
  for (std::size_t i = 0; i < exps.size(); ++i) {
    if (exps[i] == 0) continue;
    if (!name.empty()) name += '*';
    name += "x" + std::to_string(i + 1);
    if (exps[i] > 1) name += "^" + std::to_string(exps[i]);
  }
  return name;
}

}  // namespace detail

/// All monomials x1^a1 ... xn^an with 1 <= sum(a) <= degree in graded
/// lexicographic order, optionally preceded by the constant 1.
inline Dictionary monomial_dictionary(std::size_t n, std::size_t degree, bool include_constant = false,
                                      std::size_t cap = Dictionary::default_cap) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "dictionary input dimension must be positive");
  if (degree == 0) throw Error(ErrorCode::InvalidArgument, "monomial degree must be at least 1");
  const auto count = detail::monomial_count(n, degree, cap);
  if (!count || *count + (include_constant ? 1 : 0) > cap)
    throw Error(ErrorCode::DimensionTooLarge, "monomial dictionary of degree " + std::to_string(degree) + " in " +
                                                  std::to_string(n) + " variables exceeds " +
                                                  std::to_string(cap) + " observables");

  Dictionary d;
  d.n_ = n;
  if (include_constant) {
    d.constant_slot_ = 0;
    d.observables_.push_back({"1", [](const RealVector&) { return 1.0; }});
  }
  std::vector<std::size_t> slots;
  for (std::size_t t = 1; t <= degree; ++t) {
    std::vector<std::vector<unsigned>> tuples;
    std::vector<unsigned> scratch;
    detail::exponents_of_degree(n, t, scratch, tuples);
    for (auto& exps : tuples) {
      if (t == 1) slots.push_back(d.observables_.size());
      auto name = detail::monomial_name(exps);
      d.observables_.push_back({std::move(name), [exps = std::move(exps)](const RealVector& x) {
                                  double v = 1.0;
                                  for (std::size_t i = 0; i < exps.size(); ++i)
                                    for (unsigned k = 0; k < exps[i]; ++k) v *= x(static_cast<Eigen::Index>(i));
                                  return v;
                                }});
    }
  }
  d.slots_ = std::move(slots);
  d.spec_.family = DictionaryFamily::Monomial;
  d.spec_.degree = degree;
  d.spec_.include_constant = include_constant;
  return d;
}

inline Dictionary Dictionary::from_spec(std::size_t n, const DictionarySpec& spec, std::size_t cap) {
  Dictionary d = [&] {
    switch (spec.family) {
      case DictionaryFamily::Identity: return identity_dictionary(n);
      case DictionaryFamily::Monomial: return monomial_dictionary(n, spec.degree, spec.include_constant, cap);
      case DictionaryFamily::Custom: break;
    }
    throw Error(ErrorCode::InvalidArgument, "custom dictionaries cannot be rebuilt from a spec");
  }();
  d.spec_.standardize = spec.standardize;
  if (spec.has_standardization()) return d.with_standardization(spec.means, spec.scales);
  return d;
}

/// Maps every state of every trajectory through the dictionary. Sampling
/// interval and start index carry over.
inline TrajectorySet lift(const Dictionary& dict, const TrajectorySet& data) {
  if (data.dim() != dict.input_dim())
    throw Error(ErrorCode::DimensionMismatch, "data has dimension " + std::to_string(data.dim()) +
                                                  ", dictionary expects " + std::to_string(dict.input_dim()));
  TrajectorySet out;
  out.delta_k = data.delta_k;
  out.start_index = data.start_index;
  const auto p = static_cast<Eigen::Index>(dict.output_dim());
  for (const auto& traj : data.trajectories) {
    RealMatrix lifted(p, traj.states.cols());
    for (Eigen::Index j = 0; j < traj.states.cols(); ++j) lifted.col(j) = dict.evaluate(traj.states.col(j));
    out.trajectories.emplace_back(std::move(lifted));
  }
  return out;
}

/// Projection decode: the entries of y at the coordinate slots.
inline RealVector decode(const Dictionary& dict, const RealVector& y) {
  if (!dict.coordinate_slots())
    throw Error(ErrorCode::NoCoordinateSlots, "dictionary has no identity observables to decode through");
  if (static_cast<std::size_t>(y.size()) != dict.output_dim())
    throw Error(ErrorCode::DimensionMismatch, "lifted vector has dimension " + std::to_string(y.size()) +
                                                  ", dictionary has " + std::to_string(dict.output_dim()));
  const auto& slots = *dict.coordinate_slots();
  RealVector x(static_cast<Eigen::Index>(slots.size()));
  for (std::size_t i = 0; i < slots.size(); ++i)
    x(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(slots[i]));
  return x;
}

struct KoopmanModel {
  Dictionary dictionary;
  DmdModel lifted_model;
};

namespace detail {

/// Mean and population standard deviation of each lifted observable over
/// the X columns (every sample but the last of each run).
inline Dictionary fit_standardization(const Dictionary& dict, const TrajectorySet& data) {
  const auto pair = build_snapshot_pair(lift(dict, data));
  const auto p = dict.output_dim();
  std::vector<double> means(p), scales(p);
  const double count = static_cast<double>(pair.X.cols());
  for (std::size_t i = 0; i < p; ++i) {
    const auto row = pair.X.row(static_cast<Eigen::Index>(i));
    const double mean = row.sum() / count;
    const double var = (row.array() - mean).square().sum() / count;
    means[i] = mean;
    scales[i] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return dict.with_standardization(std::move(means), std::move(scales));
}

}  // namespace detail

/// DMD in the lifted space. A dictionary flagged for standardization
/// without fitted parameters gets them from `data` first.
inline KoopmanModel fit_koopman(const TrajectorySet& data, const Dictionary& dict, const RankPolicy& policy,
                                ModeKind mode_kind) {
  data.validate();
  Dictionary fitted = (dict.spec().standardize && !dict.spec().has_standardization())
                          ? detail::fit_standardization(dict, data)
                          : dict;
  auto lifted_model = fit(lift(fitted, data), policy, mode_kind);
  return KoopmanModel{std::move(fitted), std::move(lifted_model)};
}

struct KoopmanPrediction {
  RealVector state;
  RealVector lifted;
  double imag_residual = 0.0;
  /// ||y_j - g(decode(y))_j|| over the non-coordinate observables: how far
  /// the lifted prediction has drifted off the dictionary manifold.
  double manifold_defect = 0.0;
};

inline KoopmanPrediction predict_koopman(const KoopmanModel& model, double index, PredictionMode mode) {
  const auto lifted = predict_at(model.lifted_model, index, mode);
  KoopmanPrediction out;
  out.lifted = lifted.state;
  out.imag_residual = lifted.imag_residual;
  out.state = decode(model.dictionary, lifted.state);
  const RealVector relifted = model.dictionary.evaluate(out.state);
  double defect = 0.0;
  for (std::size_t i = 0; i < model.dictionary.output_dim(); ++i) {
    if (model.dictionary.is_coordinate_slot(i)) continue;
    const double d = lifted.state(static_cast<Eigen::Index>(i)) - relifted(static_cast<Eigen::Index>(i));
    defect += d * d;
  }
  out.manifold_defect = std::sqrt(defect);
  return out;
}

}  // namespace dmdkit
