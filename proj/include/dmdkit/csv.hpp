#pragma once

// Trajectory and prediction CSV files.
//
//   index,x1,...,xn        header
//   0,1.0,2.0              one row per sample, index in original units
//                          blank line = next trajectory
//   # ...                  comment lines are skipped
//
// Index gaps inside a trajectory must all equal one shared sampling
// interval (relative tolerance 1e-9) across every trajectory and file.

#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dmdkit/dmd.hpp"
#include "dmdkit/error.hpp"
#include "dmdkit/numerics.hpp"
#include "dmdkit/trajectory.hpp"

namespace dmdkit::csv {

inline constexpr double spacing_tolerance = 1e-9;

/// One trajectory as read from disk, before spacing checks.
struct RawTrajectory {
  std::vector<double> indices;
  std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace detail

/// Parses one CSV stream into raw trajectories. `source` names the stream
/// in error messages.
inline std::vector<RawTrajectory> read_trajectories(std::istream& in, const std::string& source) {
  std::vector<RawTrajectory> out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t fields = 0;
  bool in_run = false;

  auto fail = [&](const std::string& msg) {
    return Error(ErrorCode::MalformedInput, source + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (!text.empty() && text.front() == '#') continue;
    if (fields == 0) {
      if (text.empty()) continue;
      const auto header = detail::split(text);
      if (header.size() < 2 || header.front() != "index")
        throw fail("header must be 'index,x1,...,xn'");
      fields = header.size();
      continue;
    }
    if (text.empty()) {
      in_run = false;
      continue;
    }
    const auto cells = detail::split(text);
    if (cells.size() != fields)
      throw fail("expected " + std::to_string(fields) + " fields, found " + std::to_string(cells.size()));
    std::vector<double> values(fields);
    for (std::size_t i = 0; i < fields; ++i) {
      if (!dmdkit::detail::parse_double(cells[i], values[i]))
        throw fail("'" + std::string(cells[i]) + "' is not a number");
      if (!std::isfinite(values[i])) throw fail("non-finite value '" + std::string(cells[i]) + "'");
    }
    if (!in_run) {
      out.emplace_back();
      in_run = true;
    }
    auto& run = out.back();
    if (!run.indices.empty() && !(values[0] > run.indices.back()))
      throw fail("index " + std::string(cells[0]) + " does not increase");
    run.indices.push_back(values[0]);
    run.rows.emplace_back(values.begin() + 1, values.end());
  }
  if (fields == 0) throw Error(ErrorCode::MalformedInput, source + ": missing header");
  if (out.empty()) throw Error(ErrorCode::MalformedInput, source + ": no data rows");
  return out;
}

inline bool index_matches(double a, double b) {
  return std::abs(a - b) <= spacing_tolerance * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

/// Keeps only rows whose index appears in `keep`. Runs left empty vanish.
inline std::vector<RawTrajectory> select_indices(const std::vector<RawTrajectory>& runs,
                                                 const std::vector<double>& keep) {
  std::vector<RawTrajectory> out;
  for (const auto& run : runs) {
    RawTrajectory filtered;
    for (std::size_t j = 0; j < run.indices.size(); ++j) {
      for (double k : keep) {
        if (index_matches(run.indices[j], k)) {
          filtered.indices.push_back(run.indices[j]);
          filtered.rows.push_back(run.rows[j]);
          break;
        }
      }
    }
    if (!filtered.indices.empty()) out.push_back(std::move(filtered));
  }
  return out;
}

/// Checks uniform spacing and builds the trajectory set. The start index is
/// the first index of the first run.
inline TrajectorySet assemble(const std::vector<RawTrajectory>& runs) {
  if (runs.empty()) throw Error(ErrorCode::MalformedInput, "no samples left to fit");
  std::optional<double> delta;
  for (std::size_t t = 0; t < runs.size(); ++t) {
    const auto& idx = runs[t].indices;
    for (std::size_t j = 1; j < idx.size(); ++j) {
      const double gap = idx[j] - idx[j - 1];
      if (!delta) {
        delta = gap;
        continue;
      }
      if (std::abs(gap - *delta) > spacing_tolerance * *delta)
        throw Error(ErrorCode::IrregularSpacing,
                    "trajectory " + std::to_string(t + 1) + ": gap " + dmdkit::detail::format_double(gap) +
                        " between indices " + dmdkit::detail::format_double(idx[j - 1]) + " and " +
                        dmdkit::detail::format_double(idx[j]) + " differs from sampling interval " +
                        dmdkit::detail::format_double(*delta) +
                        "; pick a regularly spaced subset with --select-indices");
    }
  }
  TrajectorySet set;
  for (const auto& run : runs) {
    if (run.rows.size() < 2)
      throw Error(ErrorCode::TrajectoryTooShort, "every trajectory needs at least 2 samples");
    set.trajectories.push_back(Trajectory::from_rows(run.rows));
  }
  set.delta_k = *delta;
  set.start_index = runs.front().indices.front();
  set.validate();
  return set;
}

inline std::string format(double v) { return dmdkit::detail::format_double(v); }

inline void write_header(std::ostream& out, std::size_t n) {
  out << "index";
  for (std::size_t i = 1; i <= n; ++i) out << ",x" << i;
}

/// Writes a trajectory set; runs are separated by blank lines and indexed
/// from the set's start index.
inline void write_trajectories(std::ostream& out, const TrajectorySet& set) {
  write_header(out, set.dim());
  out << '\n';
  for (std::size_t t = 0; t < set.trajectories.size(); ++t) {
    if (t > 0) out << '\n';
    const auto& states = set.trajectories[t].states;
    for (Eigen::Index j = 0; j < states.cols(); ++j) {
      out << format(set.index_of(static_cast<std::size_t>(j)));
      for (Eigen::Index i = 0; i < states.rows(); ++i) out << ',' << format(states(i, j));
      out << '\n';
    }
  }
}

struct PredictionRow {
  double index;
  RealVector state;
  double imag_residual;
};

inline void write_predictions(std::ostream& out, const std::vector<PredictionRow>& rows, std::size_t n) {
  write_header(out, n);
  out << ",imag_residual\n";
  for (const auto& row : rows) {
    out << format(row.index);
    for (Eigen::Index i = 0; i < row.state.size(); ++i) out << ',' << format(row.state(i));
    out << ',' << format(row.imag_residual) << '\n';
  }
}

}  // namespace dmdkit::csv
