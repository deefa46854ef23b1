#pragma once

// Versioned JSON model files. Doubles are written in shortest round-trip
// form, so a saved model predicts bit-for-bit like the in-memory one.

#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dmdkit/dmd.hpp"
#include "dmdkit/error.hpp"
#include "dmdkit/koopman.hpp"
#include "dmdkit/numerics.hpp"

namespace dmdkit::model_file {

inline constexpr int schema_version = 1;

using json = nlohmann::json;

struct InputDigest {
  std::string path;
  std::string sha256;
};

struct Provenance {
  std::vector<InputDigest> inputs;
  std::string rank_policy;
  std::vector<double> selected_indices;
};

struct ModelFile {
  std::variant<DmdModel, KoopmanModel> model;
  Provenance provenance;

  bool is_koopman() const { return std::holds_alternative<KoopmanModel>(model); }
  const DmdModel& dmd() const {
    return is_koopman() ? std::get<KoopmanModel>(model).lifted_model : std::get<DmdModel>(model);
  }
  /// Dimension of the states a prediction returns.
  std::size_t state_dim() const {
    return is_koopman() ? std::get<KoopmanModel>(model).dictionary.input_dim() : dmd().n;
  }
};

namespace detail {

inline json complex_pair(Complex z) { return json::array({z.real(), z.imag()}); }

inline json complex_vector(const ComplexVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_pair(v(i)));
  return out;
}

inline json complex_matrix(const ComplexMatrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_pair(m(i, j)));
    out.push_back(std::move(row));
  }
  return out;
}

inline json real_matrix(const RealMatrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

[[noreturn]] inline void bad(const std::string& msg) { throw Error(ErrorCode::MalformedInput, "model file: " + msg); }

inline double number(const json& j, const char* what) {
  if (!j.is_number()) bad(std::string(what) + " must be a number");
  return j.get<double>();
}

inline Complex read_complex(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) bad(std::string(what) + " entries must be [re, im] pairs");
  return {number(j[0], what), number(j[1], what)};
}

inline ComplexVector read_complex_vector(const json& j, std::size_t size, const char* what) {
  if (!j.is_array() || j.size() != size) bad(std::string(what) + " must hold " + std::to_string(size) + " entries");
  ComplexVector v(static_cast<Eigen::Index>(size));
  for (std::size_t i = 0; i < size; ++i) v(static_cast<Eigen::Index>(i)) = read_complex(j[i], what);
  return v;
}

inline ComplexMatrix read_complex_matrix(const json& j, std::size_t rows, std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != rows) bad(std::string(what) + " must have " + std::to_string(rows) + " rows");
  ComplexMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      bad(std::string(what) + " rows must have " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = read_complex(j[i][c], what);
  }
  return m;
}

inline RealMatrix read_real_matrix(const json& j, std::size_t rows, std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != rows) bad(std::string(what) + " must have " + std::to_string(rows) + " rows");
  RealMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      bad(std::string(what) + " rows must have " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = number(j[i][c], what);
  }
  return m;
}

inline std::size_t count(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number_unsigned()) bad(std::string(key) + " must be a nonnegative integer");
  return doc[key].get<std::size_t>();
}

inline json warning_list(const std::vector<Warning>& warnings) {
  json out = json::array();
  for (const auto& w : warnings) out.push_back({{"kind", std::string(to_string(w.kind))}, {"message", w.message}});
  return out;
}

inline std::vector<Warning> read_warnings(const json& j) {
  std::vector<Warning> out;
  if (!j.is_array()) return out;
  for (const auto& w : j) {
    const auto kind = w.value("kind", std::string());
    WarningKind k;
    if (kind == to_string(WarningKind::DefectiveMatrix))
      k = WarningKind::DefectiveMatrix;
    else if (kind == to_string(WarningKind::Branch))
      k = WarningKind::Branch;
    else if (kind == to_string(WarningKind::PastIllConditioned))
      k = WarningKind::PastIllConditioned;
    else
      bad("unknown warning kind '" + kind + "'");
    out.push_back({k, w.value("message", std::string())});
  }
  return out;
}

inline json dictionary_spec(const DictionarySpec& spec) {
  if (spec.family == DictionaryFamily::Custom) throw Error(ErrorCode::InvalidArgument, "custom dictionaries are not serializable");
  json out = {{"family", std::string(to_string(spec.family))},
              {"degree", spec.degree},
              {"include_constant", spec.include_constant},
              {"standardize", spec.standardize}};
  if (spec.has_standardization()) {
    out["means"] = spec.means;
    out["scales"] = spec.scales;
  }
  return out;
}

inline DictionarySpec read_dictionary_spec(const json& j) {
  if (!j.is_object()) bad("dictionary must be an object");
  DictionarySpec spec;
  const auto family = j.value("family", std::string());
  if (family == "identity")
    spec.family = DictionaryFamily::Identity;
  else if (family == "monomial")
    spec.family = DictionaryFamily::Monomial;
  else
    bad("unknown dictionary family '" + family + "'");
  spec.degree = count(j, "degree");
  spec.include_constant = j.value("include_constant", false);
  spec.standardize = j.value("standardize", false);
  if (j.contains("means")) {
    spec.means = j.at("means").get<std::vector<double>>();
    spec.scales = j.at("scales").get<std::vector<double>>();
  }
  return spec;
}

}  // namespace detail

inline json to_json(const ModelFile& file) {
  const DmdModel& m = file.dmd();
  json doc;
  doc["schema_version"] = schema_version;
  doc["kind"] = file.is_koopman() ? "koopman" : "dmd";
  doc["n"] = file.state_dim();
  if (file.is_koopman()) doc["p"] = m.n;
  doc["r"] = m.r;
  doc["delta_k"] = m.delta_k;
  doc["start_index"] = m.start_index;
  doc["mode_kind"] = std::string(to_string(m.mode_kind));
  doc["eigenvalues"] = detail::complex_vector(m.eigenvalues);
  doc["modes"] = detail::complex_matrix(m.modes);
  doc["amplitudes"] = detail::complex_vector(m.amplitudes);
  doc["singular_values"] = std::vector<double>(m.sigma.data(), m.sigma.data() + m.sigma.size());
  doc["a_tilde"] = detail::real_matrix(m.A_tilde);
  if (file.is_koopman()) doc["dictionary"] = detail::dictionary_spec(std::get<KoopmanModel>(file.model).dictionary.spec());
  doc["diagnostics"] = {{"residual", m.diagnostics.residual},
                        {"eig_condition", m.diagnostics.eig_condition},
                        {"fallback_columns", m.diagnostics.fallback_columns},
                        {"warnings", detail::warning_list(m.diagnostics.warnings)}};
  json inputs = json::array();
  for (const auto& d : file.provenance.inputs) inputs.push_back({{"path", d.path}, {"sha256", d.sha256}});
  doc["provenance"] = {{"inputs", inputs},
                       {"rank_policy", file.provenance.rank_policy},
                       {"selected_indices", file.provenance.selected_indices}};
  return doc;
}

inline ModelFile from_json(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) bad("top level must be an object");
  if (!doc.contains("schema_version") || doc["schema_version"] != schema_version)
    bad("unsupported schema_version (expected " + std::to_string(schema_version) + ")");
  const auto kind = doc.value("kind", std::string());
  if (kind != "dmd" && kind != "koopman") bad("kind must be 'dmd' or 'koopman'");
  const bool koopman = kind == "koopman";

  DmdModel m;
  const std::size_t n = count(doc, "n");
  m.n = koopman ? count(doc, "p") : n;
  m.r = count(doc, "r");
  if (n == 0 || m.n == 0 || m.r == 0) bad("dimensions must be positive");
  m.delta_k = number(doc.value("delta_k", json()), "delta_k");
  m.start_index = number(doc.value("start_index", json()), "start_index");
  if (!(m.delta_k > 0.0)) bad("delta_k must be positive");
  try {
    m.mode_kind = parse_mode_kind(doc.value("mode_kind", std::string()));
  } catch (const Error& e) {
    bad(e.what());
  }
  m.eigenvalues = read_complex_vector(doc.value("eigenvalues", json()), m.r, "eigenvalues");
  m.modes = read_complex_matrix(doc.value("modes", json()), m.n, m.r, "modes");
  m.amplitudes = read_complex_vector(doc.value("amplitudes", json()), m.r, "amplitudes");
  if (doc.contains("singular_values")) {
    const auto s = doc["singular_values"].get<std::vector<double>>();
    m.sigma = Eigen::Map<const RealVector>(s.data(), static_cast<Eigen::Index>(s.size()));
  }
  if (doc.contains("a_tilde")) m.A_tilde = read_real_matrix(doc["a_tilde"], m.r, m.r, "a_tilde");
  if (doc.contains("diagnostics")) {
    const auto& d = doc["diagnostics"];
    m.diagnostics.residual = d.value("residual", 0.0);
    m.diagnostics.eig_condition = d.value("eig_condition", 1.0);
    m.diagnostics.fallback_columns = d.value("fallback_columns", std::size_t{0});
    m.diagnostics.warnings = read_warnings(d.value("warnings", json::array()));
  }

  ModelFile file;
  if (koopman) {
    auto dict = Dictionary::from_spec(n, read_dictionary_spec(doc.value("dictionary", json())));
    if (dict.output_dim() != m.n) bad("dictionary dimension does not match p");
    file.model = KoopmanModel{std::move(dict), std::move(m)};
  } else {
    file.model = std::move(m);
  }
  if (doc.contains("provenance")) {
    const auto& p = doc["provenance"];
    for (const auto& in : p.value("inputs", json::array()))
      file.provenance.inputs.push_back({in.value("path", std::string()), in.value("sha256", std::string())});
    file.provenance.rank_policy = p.value("rank_policy", std::string());
    file.provenance.selected_indices = p.value("selected_indices", std::vector<double>());
  }
  return file;
}

inline std::string dump(const ModelFile& file) { return to_json(file).dump(2) + "\n"; }

inline ModelFile parse(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    detail::bad(e.what());
  }
  try {
    return from_json(doc);
  } catch (const json::exception& e) {
    detail::bad(e.what());
  }
}

inline void save(const ModelFile& file, const std::string& path) {
  const auto text = dump(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path + "'");
}

inline ModelFile load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace dmdkit::model_file
