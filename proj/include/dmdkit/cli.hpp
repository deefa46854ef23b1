#pragma once

// Command-line front end: fit | predict | spectrum | demo.
//
// Exit codes: 0 success, 2 input error (bad files, bad arguments, irregular
// spacing), 3 numerical failure. Results go to stdout or --output files;
// warnings and errors go to stderr only.

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "dmdkit/csv.hpp"
#include "dmdkit/dmd.hpp"
#include "dmdkit/error.hpp"
#include "dmdkit/koopman.hpp"
#include "dmdkit/model_file.hpp"
#include "dmdkit/svg.hpp"
#include "dmdkit/systems.hpp"

namespace dmdkit::cli {

enum ExitCode : int { ok = 0, input_error = 2, numerical_failure = 3 };

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::IoError, "SHA-256 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

/// Sink for --output: the named file, or `fallback` when the name is empty.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : path_(path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    }
    stream_ = path.empty() ? &fallback : &file_;
  }
  std::ostream& stream() { return *stream_; }
  void close() {
    if (path_.empty()) return;
    file_.close();
    if (!file_) throw Error(ErrorCode::IoError, "failed writing '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_;
};

inline std::string fmt(double v) { return dmdkit::detail::format_double(v); }

inline std::string fmt(Complex z) {
  std::ostringstream s;
  s << fmt(z.real()) << (std::signbit(z.imag()) ? " - " : " + ") << fmt(std::abs(z.imag())) << "i";
  return s.str();
}

inline void print_warnings(std::ostream& err, const std::vector<Warning>& warnings) {
  for (const auto& w : warnings) err << "warning: " << to_string(w.kind) << ": " << w.message << '\n';
}

inline RealMatrix parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream rs(text);
  std::string row;
  while (std::getline(rs, row, ';')) {
    std::vector<double> values;
    std::stringstream cs(row);
    std::string cell;
    while (std::getline(cs, cell, ',')) {
      double v = 0.0;
      if (!dmdkit::detail::parse_double(csv::detail::trim(cell), v))
        throw Error(ErrorCode::InvalidArgument, "bad matrix entry '" + cell + "'");
      values.push_back(v);
    }
    rows.push_back(std::move(values));
  }
  const auto n = rows.size();
  RealMatrix A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) throw Error(ErrorCode::InvalidArgument, "matrix must be square, rows separated by ';'");
    for (std::size_t j = 0; j < n; ++j) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return A;
}

inline RealVector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const RealVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct FitOptions {
  std::vector<std::string> inputs;
  std::string rank = "tol:1e-10";
  std::string modes = "auto";
  std::string dict = "identity";
  std::vector<double> select;
  std::string output;
};

inline int cmd_fit(const FitOptions& opt, std::ostream& out, std::ostream& err) {
  const auto policy = parse_rank_policy(opt.rank);
  const auto mode_kind = parse_mode_kind(opt.modes);
  const auto dict_spec = parse_dictionary_spec(opt.dict);

  model_file::Provenance provenance;
  provenance.rank_policy = to_string(policy);
  provenance.selected_indices = opt.select;
  std::vector<csv::RawTrajectory> runs;
  for (const auto& path : opt.inputs) {
    const auto bytes = read_file(path);
    provenance.inputs.push_back({path, sha256_hex(bytes)});
    std::istringstream in(bytes);
    auto parsed = csv::read_trajectories(in, path);
    runs.insert(runs.end(), parsed.begin(), parsed.end());
  }
  if (!opt.select.empty()) runs = csv::select_indices(runs, opt.select);
  const auto data = csv::assemble(runs);

  model_file::ModelFile file;
  file.provenance = std::move(provenance);
  if (dict_spec.family == DictionaryFamily::Identity && !dict_spec.standardize) {
    file.model = fit(data, policy, mode_kind);
  } else {
    file.model = fit_koopman(data, Dictionary::from_spec(data.dim(), dict_spec), policy, mode_kind);
  }
  model_file::save(file, opt.output);

  const DmdModel& m = file.dmd();
  const auto report = spectrum_report(m);
  out << "model: " << (file.is_koopman() ? "koopman" : "dmd") << "  n=" << file.state_dim();
  if (file.is_koopman()) out << "  p=" << m.n;
  out << "  r=" << m.r << "  delta_k=" << fmt(m.delta_k) << "  start_index=" << fmt(m.start_index) << '\n';
  out << "rank policy: " << file.provenance.rank_policy << "  modes: " << to_string(m.mode_kind) << '\n';
  out << "eigenvalues:\n";
  for (std::size_t i = 0; i < report.entries.size(); ++i)
    out << "  " << i << "  " << fmt(report.entries[i].lambda) << "  |lambda|=" << fmt(report.entries[i].magnitude)
        << '\n';
  if (!report.entries.empty())
    out << "dominant |lambda|: " << fmt(report.entries[report.dominant].magnitude) << '\n';
  out << "stability: " << to_string(report.stability) << '\n';
  out << "fit residual: " << fmt(m.diagnostics.residual) << '\n';
  out << "wrote " << opt.output << '\n';
  print_warnings(err, m.diagnostics.warnings);
  return ok;
}

struct PredictOptions {
  std::string model;
  std::vector<double> at;
  std::string mode = "discrete";
  std::string output;
};

inline int cmd_predict(const PredictOptions& opt, std::ostream& out, std::ostream& err) {
  const auto file = model_file::load(opt.model);
  PredictionMode mode;
  if (opt.mode == "discrete")
    mode = PredictionMode::Discrete;
  else if (opt.mode == "continuous")
    mode = PredictionMode::Continuous;
  else
    throw Error(ErrorCode::InvalidArgument, "mode must be 'discrete' or 'continuous'");

  if (mode == PredictionMode::Continuous) print_warnings(err, branch_warnings(file.dmd().eigenvalues));

  std::vector<csv::PredictionRow> rows;
  for (double index : opt.at) {
    if (file.is_koopman()) {
      const auto p = predict_koopman(std::get<KoopmanModel>(file.model), index, mode);
      rows.push_back({index, p.state, p.imag_residual});
    } else {
      const auto p = predict_at(std::get<DmdModel>(file.model), index, mode);
      rows.push_back({index, p.state, p.imag_residual});
    }
  }
  Output sink(opt.output, out);
  csv::write_predictions(sink.stream(), rows, file.state_dim());
  sink.close();
  return ok;
}

struct SpectrumOptions {
  std::string model;
  std::string svg;
};

inline int cmd_spectrum(const SpectrumOptions& opt, std::ostream& out, std::ostream& err) {
  const auto file = model_file::load(opt.model);
  const auto report = spectrum_report(file.dmd());
  out << "i,re,im,abs,arg,abs_minus_1,omega_re,omega_im\n";
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    const auto& e = report.entries[i];
    out << i << ',' << fmt(e.lambda.real()) << ',' << fmt(e.lambda.imag()) << ',' << fmt(e.magnitude) << ','
        << fmt(e.argument) << ',' << fmt(e.unit_distance) << ',';
    if (e.omega)
      out << fmt(e.omega->real()) << ',' << fmt(e.omega->imag());
    else
      out << "-inf,nan";
    out << '\n';
  }
  out << "dominant: " << report.dominant << '\n';
  out << "stability: " << to_string(report.stability) << '\n';
  out << "conditioning (|lambda_max|/|lambda_min|): " << fmt(report.conditioning_ratio) << '\n';
  print_warnings(err, report.warnings);
  if (!opt.svg.empty()) {
    std::ofstream svg(opt.svg, std::ios::binary);
    if (!svg) throw Error(ErrorCode::IoError, "cannot write '" + opt.svg + "'");
    svg << svg::spectrum_plot(file.dmd().eigenvalues);
    if (!svg) throw Error(ErrorCode::IoError, "failed writing '" + opt.svg + "'");
  }
  return ok;
}

struct DemoOptions {
  std::string family;
  std::vector<double> eigs;
  std::string matrix;
  std::vector<double> x0;
  std::size_t steps = 20;
  double dt = 1.0;
  double start = 0.0;
  double sigma = 0.01;
  std::uint64_t seed = 0;
  double lambda = 0.9;
  double mu = 0.5;
  std::string output;
};

inline int cmd_demo(const DemoOptions& opt, std::ostream& out, std::ostream&) {
  systems::GeneratorSpec spec;
  spec.steps = opt.steps;
  spec.delta_k = opt.dt;
  spec.start_index = opt.start;
  std::string description = opt.family;

  auto generator_matrix = [&]() -> RealMatrix {
    if (!opt.matrix.empty()) {
      if (!opt.eigs.empty()) throw Error(ErrorCode::InvalidArgument, "give either --eigs or --matrix, not both");
      return parse_matrix(opt.matrix);
    }
    if (opt.eigs.empty()) throw Error(ErrorCode::InvalidArgument, opt.family + " demo needs --eigs or --matrix");
    return to_vector(opt.eigs).asDiagonal();
  };

  std::size_t n = 0;
  if (opt.family == "linear") {
    auto A = generator_matrix();
    n = static_cast<std::size_t>(A.rows());
    spec.family = systems::LinearDiscrete{std::move(A)};
  } else if (opt.family == "continuous") {
    auto A = generator_matrix();
    n = static_cast<std::size_t>(A.rows());
    spec.family = systems::LinearContinuous{std::move(A)};
  } else if (opt.family == "randomwalk") {
    n = opt.x0.empty() ? 1 : opt.x0.size();
    spec.family = systems::NoisyRandomWalk{opt.sigma, opt.seed};
    description += " sigma=" + fmt(opt.sigma) + " seed=" + std::to_string(opt.seed) +
                   " noise=" + std::string(systems::noise_algorithm);
  } else if (opt.family == "slowmanifold") {
    n = 2;
    spec.family = systems::SlowManifold{opt.lambda, opt.mu};
    description += " lambda=" + fmt(opt.lambda) + " mu=" + fmt(opt.mu);
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "unknown demo family '" + opt.family + "' (linear, continuous, randomwalk, slowmanifold)");
  }
  spec.x0 = opt.x0.empty() ? RealVector(RealVector::Ones(static_cast<Eigen::Index>(n))) : to_vector(opt.x0);

  const auto data = systems::generate(spec);
  Output sink(opt.output, out);
  sink.stream() << "# dmdkit demo " << description << '\n';
  csv::write_trajectories(sink.stream(), data);
  sink.close();
  return ok;
}

}  // namespace detail

/// Runs the CLI on `args` (program name excluded).
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dmdkit: dynamic mode decomposition and Koopman models for sampled trajectories"};
  app.require_subcommand(1);

  detail::FitOptions fit_opt;
  auto* fit_cmd = app.add_subcommand("fit", "fit a model to trajectory CSV files");
  fit_cmd->add_option("-i,--input", fit_opt.inputs, "trajectory CSV (repeatable)")->required();
  fit_cmd->add_option("--rank", fit_opt.rank, "fixed:r | tol:tau | energy:eta")->capture_default_str();
  fit_cmd->add_option("--modes", fit_opt.modes, "exact | projected | auto")->capture_default_str();
  fit_cmd->add_option("--dict", fit_opt.dict, "identity | monomial:d[,const][,std]")->capture_default_str();
  fit_cmd->add_option("--select-indices", fit_opt.select, "keep only these indices")->delimiter(',');
  fit_cmd->add_option("-o,--output", fit_opt.output, "model file to write")->required();

  detail::PredictOptions predict_opt;
  auto* predict_cmd = app.add_subcommand("predict", "predict states at indices in original units");
  predict_cmd->add_option("model", predict_opt.model, "model file")->required();
  predict_cmd->add_option("--at", predict_opt.at, "indices, comma separated")->required()->delimiter(',');
  predict_cmd->add_option("--mode", predict_opt.mode, "discrete | continuous")->capture_default_str();
  predict_cmd->add_option("-o,--output", predict_opt.output, "CSV file (default stdout)");

  detail::SpectrumOptions spectrum_opt;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "print eigenvalue diagnostics");
  spectrum_cmd->add_option("model", spectrum_opt.model, "model file")->required();
  spectrum_cmd->add_option("--svg", spectrum_opt.svg, "write a unit-circle plot");

  detail::DemoOptions demo_opt;
  auto* demo_cmd = app.add_subcommand("demo", "generate a synthetic trajectory CSV");
  demo_cmd->add_option("family", demo_opt.family, "linear | continuous | randomwalk | slowmanifold")->required();
  demo_cmd->add_option("--eigs", demo_opt.eigs, "diagonal generator entries")->delimiter(',');
  demo_cmd->add_option("--matrix", demo_opt.matrix, "generator matrix, e.g. '0.9,0.1;0,0.5'");
  demo_cmd->add_option("--x0", demo_opt.x0, "initial state (default all ones)")->delimiter(',');
  demo_cmd->add_option("--steps", demo_opt.steps, "number of steps")->capture_default_str();
  demo_cmd->add_option("--dt", demo_opt.dt, "sampling interval")->capture_default_str();
  demo_cmd->add_option("--start", demo_opt.start, "index of the first sample")->capture_default_str();
  demo_cmd->add_option("--sigma", demo_opt.sigma, "random-walk noise level")->capture_default_str();
  demo_cmd->add_option("--seed", demo_opt.seed, "random-walk seed")->capture_default_str();
  demo_cmd->add_option("--lambda", demo_opt.lambda, "slow-manifold fast rate")->capture_default_str();
  demo_cmd->add_option("--mu", demo_opt.mu, "slow-manifold slow rate")->capture_default_str();
  demo_cmd->add_option("-o,--output", demo_opt.output, "CSV file (default stdout)");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : input_error;
  }

  try {
    if (*fit_cmd) return detail::cmd_fit(fit_opt, out, err);
    if (*predict_cmd) return detail::cmd_predict(predict_opt, out, err);
    if (*spectrum_cmd) return detail::cmd_spectrum(spectrum_opt, out, err);
    return detail::cmd_demo(demo_opt, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_input_error(e.code()) ? input_error : numerical_failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return numerical_failure;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(std::move(args), out, err);
}

}  // namespace dmdkit::cli
