#pragma once

// Dynamic Mode Decomposition: fit a reduced linear operator to snapshot
// pairs, extract eigenvalues, modes and amplitudes, and evaluate the
// spectral expansion x_k = sum_i lambda_i^k b_i w_i at any discrete step or
// continuous index.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dmdkit/error.hpp"
#include "dmdkit/numerics.hpp"
#include "dmdkit/trajectory.hpp"

namespace dmdkit {

enum class ModeKind {
  Exact,              // W = X' V S^-1 W~
  Projected,          // W = U W~
  ExactWithFallback,  // exact, except projected where both lambda and the exact column vanish
};

constexpr std::string_view to_string(ModeKind kind) {
  switch (kind) {
    case ModeKind::Exact: return "exact";
    case ModeKind::Projected: return "projected";
    case ModeKind::ExactWithFallback: return "auto";
  }
  return "exact";
}

inline ModeKind parse_mode_kind(std::string_view text) {
  if (text == "exact") return ModeKind::Exact;
  if (text == "projected") return ModeKind::Projected;
  if (text == "auto") return ModeKind::ExactWithFallback;
  throw Error(ErrorCode::InvalidArgument, "unknown mode kind '" + std::string(text) + "'");
}

namespace tolerances {
inline constexpr double zero_mode = 1e-12;
inline constexpr double unit_circle = 1e-6;
inline constexpr double integral_steps = 1e-9;
inline constexpr std::size_t full_operator_cap = 1000;
}  // namespace tolerances

struct FitDiagnostics {
  double residual = 0.0;  // ||X' - A X||_F / ||X'||_F with the rank-r operator
  double eig_condition = 1.0;
  std::size_t fallback_columns = 0;
  std::vector<Warning> warnings;
};

/// A fitted DMD model. U, sigma and V are the truncated SVD factors of X;
/// they are empty for models restored from a file, which keep only what
/// prediction needs.
struct DmdModel {
  std::size_t n = 0;
  std::size_t r = 0;
  RealMatrix U;
  RealVector sigma;
  RealMatrix V;
  RealMatrix A_tilde;
  ComplexVector eigenvalues;
  ComplexMatrix modes;
  ComplexVector amplitudes;
  double delta_k = 1.0;
  double start_index = 0.0;
  ModeKind mode_kind = ModeKind::Exact;
  FitDiagnostics diagnostics;

  bool has_factors() const { return U.size() != 0 && V.size() != 0 && sigma.size() != 0; }

  /// Steps from the anchor snapshot to `index` (original units).
  double steps_from(double index) const { return (index - start_index) / delta_k; }
};

/// b = diag(lambda)^(-i) W^+ x_init, where x_init is the state at step i.
inline ComplexVector amplitudes(const ComplexMatrix& W, const ComplexVector& lambdas,
                                const RealVector& x_init, double start_index_steps) {
  if (x_init.size() != W.rows())
    throw Error(ErrorCode::DimensionMismatch, "initial state has dimension " + std::to_string(x_init.size()) +
                                                  ", modes have " + std::to_string(W.rows()) + " rows");
  if (lambdas.size() != W.cols())
    throw Error(ErrorCode::DimensionMismatch, "eigenvalue count does not match mode count");
  if (!std::isfinite(start_index_steps)) throw Error(ErrorCode::InvalidArgument, "start index must be finite");

  ComplexVector b = pinv(W) * x_init.cast<Complex>();
  if (start_index_steps != 0.0) {
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
      if (lambdas(i) == Complex(0.0, 0.0))
        throw Error(ErrorCode::ZeroEigenvalueWithOffset,
                    "eigenvalue " + std::to_string(i) + " is zero; cannot anchor at a nonzero index");
    }
    b = b.cwiseProduct(diag_power(lambdas, -start_index_steps));
  }
  return b;
}

struct Prediction {
  RealVector state;
  double imag_residual = 0.0;  // max |Im| discarded from the complex expansion
};

/// W diag(weights) b, split into real state and imaginary residual.
inline Prediction expand(const ComplexMatrix& W, const ComplexVector& weights, const ComplexVector& b) {
  const ComplexVector x = W * weights.cwiseProduct(b);
  Prediction p;
  p.state = x.real();
  p.imag_residual = x.size() ? x.imag().cwiseAbs().maxCoeff() : 0.0;
  return p;
}

/// State `k` steps after the anchor snapshot. Non-integer k uses the
/// principal branch of lambda^k.
inline Prediction predict_discrete(const DmdModel& model, double k) {
  return expand(model.modes, diag_power(model.eigenvalues, k), model.amplitudes);
}

struct ContinuousSpectrum {
  ComplexVector omegas;
};

/// Principal logarithm with imaginary part in (-pi, pi].
inline Complex principal_log(Complex z) {
  Complex w = std::log(z);
  if (w.imag() == -std::numbers::pi) w.imag(std::numbers::pi);
  return w;
}

inline void check_delta_k(double delta_k) {
  if (!(delta_k > 0.0) || !std::isfinite(delta_k))
    throw Error(ErrorCode::InvalidArgument, "sampling interval must be positive and finite");
}

inline ContinuousSpectrum to_continuous(const ComplexVector& lambdas, double delta_k) {
  check_delta_k(delta_k);
  ContinuousSpectrum out{ComplexVector(lambdas.size())};
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    if (lambdas(i) == Complex(0.0, 0.0))
      throw Error(ErrorCode::ZeroEigenvalueLog, "eigenvalue " + std::to_string(i) + " is zero");
    out.omegas(i) = principal_log(lambdas(i)) / delta_k;
  }
  return out;
}

inline ComplexVector from_continuous(const ContinuousSpectrum& spectrum, double delta_k) {
  check_delta_k(delta_k);
  ComplexVector out(spectrum.omegas.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = std::exp(spectrum.omegas(i) * delta_k);
  return out;
}

/// One BranchWarning per eigenvalue whose principal log reaches the branch
/// cut (|Im(omega)| * delta_k >= pi), i.e. negative real eigenvalues.
inline std::vector<Warning> branch_warnings(const ComplexVector& lambdas) {
  std::vector<Warning> out;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    if (lambdas(i) == Complex(0.0, 0.0)) continue;
    if (std::abs(std::arg(lambdas(i))) >= std::numbers::pi) {
      out.push_back({WarningKind::Branch, "eigenvalue " + std::to_string(i) +
                                              " lies on the log branch cut; continuous and discrete "
                                              "predictions may disagree"});
    }
  }
  return out;
}

/// State at `t` in original index units via x(t) = W e^{Omega (t - start)} b.
inline Prediction predict_continuous(const DmdModel& model, double t) {
  if (!std::isfinite(t)) throw Error(ErrorCode::InvalidArgument, "index must be finite");
  const auto spectrum = to_continuous(model.eigenvalues, model.delta_k);
  const double elapsed = t - model.start_index;
  ComplexVector weights(spectrum.omegas.size());
  for (Eigen::Index i = 0; i < weights.size(); ++i) weights(i) = std::exp(spectrum.omegas(i) * elapsed);
  return expand(model.modes, weights, model.amplitudes);
}

enum class PredictionMode { Discrete, Continuous };

constexpr std::string_view to_string(PredictionMode mode) {
  return mode == PredictionMode::Discrete ? "discrete" : "continuous";
}

/// Step count for an original-units index, rounded when it lies within
/// 1e-9 of an integer. Throws InvalidArgument otherwise.
inline double integral_steps(const DmdModel& model, double index) {
  const double steps = model.steps_from(index);
  const double rounded = std::nearbyint(steps);
  if (!(std::abs(steps - rounded) <= tolerances::integral_steps * std::max(1.0, std::abs(steps))))
    throw Error(ErrorCode::InvalidArgument,
                "index " + detail::format_double(index) + " is " + detail::format_double(steps) +
                    " steps from the start; discrete prediction needs a whole number of steps "
                    "(use continuous mode)");
  return rounded;
}

/// Prediction at an index in original units.
inline Prediction predict_at(const DmdModel& model, double index, PredictionMode mode) {
  if (mode == PredictionMode::Discrete) return predict_discrete(model, integral_steps(model, index));
  return predict_continuous(model, index);
}

namespace detail {

inline DmdModel fit_snapshots(const SnapshotPair& pair, const RealVector& anchor, double delta_k,
                              double start_index, const RankPolicy& policy, ModeKind mode_kind) {
  const auto svd = svd_truncated(pair.X, policy);
  check_invertible(svd.sigma);
  const RealMatrix sigma_inv_v = svd.V * svd.sigma.cwiseInverse().asDiagonal();

  const RealMatrix x_prime_v_sinv = pair.X_prime * sigma_inv_v;  // n x r
  DmdModel model;
  model.n = pair.dim();
  model.r = svd.rank();
  model.A_tilde = svd.U.adjoint() * x_prime_v_sinv;

  auto decomposition = eig(model.A_tilde);
  model.eigenvalues = decomposition.values;

  const ComplexMatrix projected = svd.U.cast<Complex>() * decomposition.vectors;
  const double column_floor = tolerances::zero_mode * pair.X_prime.norm();
  if (mode_kind == ModeKind::Projected) {
    model.modes = projected;
  } else {
    model.modes = x_prime_v_sinv.cast<Complex>() * decomposition.vectors;
    if (mode_kind == ModeKind::ExactWithFallback) {
      for (Eigen::Index i = 0; i < model.modes.cols(); ++i) {
        if (std::abs(model.eigenvalues(i)) < tolerances::zero_mode && model.modes.col(i).norm() < column_floor) {
          model.modes.col(i) = projected.col(i);
          ++model.diagnostics.fallback_columns;
        }
      }
    }
  }
  // Same unit-norm, real-positive-peak convention as the eigenvectors.
  // Vanishing exact columns are left alone rather than inflated.
  for (Eigen::Index i = 0; i < model.modes.cols(); ++i) {
    if (model.modes.col(i).norm() >= column_floor) normalize_phase(model.modes.col(i));
  }

  model.delta_k = delta_k;
  model.start_index = start_index;
  model.mode_kind = mode_kind;
  model.amplitudes = amplitudes(model.modes, model.eigenvalues, anchor, 0.0);

  const RealMatrix one_step = x_prime_v_sinv * (svd.U.adjoint() * pair.X);
  const double scale = pair.X_prime.norm();
  model.diagnostics.residual = scale > 0.0 ? (pair.X_prime - one_step).norm() / scale : 0.0;
  model.diagnostics.eig_condition = decomposition.condition;
  model.diagnostics.warnings = std::move(decomposition.warnings);
  for (auto& w : branch_warnings(model.eigenvalues)) model.diagnostics.warnings.push_back(std::move(w));

  model.U = svd.U;
  model.sigma = svd.sigma;
  model.V = svd.V;
  return model;
}

}  // namespace detail

/// Fits the rank-r DMD operator to `data`. Amplitudes are anchored at the
/// first sample of the first trajectory, which sits at `data.start_index`.
inline DmdModel fit(const TrajectorySet& data, const RankPolicy& policy, ModeKind mode_kind) {
  const auto pair = build_snapshot_pair(data);
  return detail::fit_snapshots(pair, data.trajectories.front().state(0), data.delta_k, data.start_index,
                               policy, mode_kind);
}

/// Materializes A = X' V S^-1 U^H. Test-oracle use only.
inline RealMatrix full_operator(const DmdModel& model, const RealMatrix& X_prime,
                                std::size_t cap = tolerances::full_operator_cap) {
  if (model.n > cap)
    throw Error(ErrorCode::DimensionCapExceeded,
                "state dimension " + std::to_string(model.n) + " exceeds cap " + std::to_string(cap));
  if (!model.has_factors())
    throw Error(ErrorCode::MissingFactors, "model carries no SVD factors (restored from file?)");
  if (X_prime.rows() != static_cast<Eigen::Index>(model.n) || X_prime.cols() != model.V.rows())
    throw Error(ErrorCode::DimensionMismatch, "X' shape does not match the fitted factors");
  return X_prime * model.V * model.sigma.cwiseInverse().asDiagonal() * model.U.adjoint();
}

enum class Stability { Stable, Marginal, Exploding };

constexpr std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Marginal: return "marginal";
    case Stability::Exploding: return "exploding";
  }
  return "stable";
}

struct SpectrumEntry {
  Complex lambda;
  double magnitude = 0.0;
  double argument = 0.0;
  double unit_distance = 0.0;    // |lambda| - 1
  std::optional<Complex> omega;  // absent for lambda = 0
};

/// Eigenvalue diagnostics. The stability flag keys on |lambda|; Re(lambda)
/// is available per entry for callers that want the real-part criterion.
struct SpectrumReport {
  std::vector<SpectrumEntry> entries;
  std::size_t dominant = 0;
  Stability stability = Stability::Stable;
  double conditioning_ratio = 1.0;  // |lambda_max| / |lambda_min|, inf if some lambda = 0
  bool past_ill_conditioned = false;
  std::vector<Warning> warnings;
};

inline SpectrumReport spectrum_report(const DmdModel& model) {
  SpectrumReport report;
  double largest = 0.0;
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i) {
    const Complex lambda = model.eigenvalues(i);
    SpectrumEntry e;
    e.lambda = lambda;
    e.magnitude = std::abs(lambda);
    e.argument = lambda == Complex(0.0, 0.0) ? 0.0 : principal_log(lambda).imag();
    e.unit_distance = e.magnitude - 1.0;
    if (lambda != Complex(0.0, 0.0)) e.omega = principal_log(lambda) / model.delta_k;
    if (e.magnitude > largest) {
      largest = e.magnitude;
      report.dominant = static_cast<std::size_t>(i);
    }
    smallest = std::min(smallest, e.magnitude);
    report.entries.push_back(e);
  }

  if (largest > 1.0 + tolerances::unit_circle)
    report.stability = Stability::Exploding;
  else if (largest >= 1.0 - tolerances::unit_circle)
    report.stability = Stability::Marginal;
  else
    report.stability = Stability::Stable;

  report.conditioning_ratio = smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();
  report.past_ill_conditioned = !report.entries.empty() && smallest < 1.0 - tolerances::unit_circle;
  if (report.past_ill_conditioned) {
    report.warnings.push_back({WarningKind::PastIllConditioned,
                               "eigenvalues inside the unit circle grow without bound backward in "
                               "index; past predictions amplify error (|lambda_max|/|lambda_min| = " +
                                   detail::format_double(report.conditioning_ratio) + ")"});
  }
  for (auto& w : branch_warnings(model.eigenvalues)) report.warnings.push_back(std::move(w));
  return report;
}

}  // namespace dmdkit
