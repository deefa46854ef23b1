#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dmdkit/error.hpp"
#include "dmdkit/numerics.hpp"

namespace dmdkit {

/// One run of a system: column j holds the state at step j.
struct Trajectory {
  RealMatrix states;  // n x (m + 1)

  Trajectory() = default;
  explicit Trajectory(RealMatrix s) : states(std::move(s)) {}

  /// Builds from a list of state vectors. All must share one dimension.
  static Trajectory from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Trajectory(RealMatrix(0, 0));
    const auto n = rows.front().size();
    RealMatrix s(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (rows[j].size() != n)
        throw Error(ErrorCode::DimensionMismatch, "state " + std::to_string(j) + " has dimension " +
                                                      std::to_string(rows[j].size()) + ", expected " +
                                                      std::to_string(n));
      for (std::size_t i = 0; i < n; ++i)
        s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[j][i];
    }
    return Trajectory(std::move(s));
  }

  std::size_t dim() const { return static_cast<std::size_t>(states.rows()); }
  std::size_t length() const { return static_cast<std::size_t>(states.cols()); }
  RealVector state(std::size_t j) const { return states.col(static_cast<Eigen::Index>(j)); }
};

/// Trajectories sharing a state dimension and a sampling interval.
/// `start_index` is the index (original units) of the first sample of the
/// first trajectory; a nonzero value is only meaningful for a single run.
struct TrajectorySet {
  std::vector<Trajectory> trajectories;
  double delta_k = 1.0;
  double start_index = 0.0;

  std::size_t dim() const { return trajectories.empty() ? 0 : trajectories.front().dim(); }

  /// Original-units index of sample j in the first trajectory.
  double index_of(std::size_t j) const { return start_index + static_cast<double>(j) * delta_k; }

  void validate() const {
    if (trajectories.empty()) throw Error(ErrorCode::InvalidArgument, "no trajectories");
    if (!(delta_k > 0.0) || !std::isfinite(delta_k))
      throw Error(ErrorCode::InvalidArgument, "sampling interval must be positive and finite");
    if (!std::isfinite(start_index)) throw Error(ErrorCode::InvalidArgument, "start index must be finite");
    if (start_index != 0.0 && trajectories.size() != 1)
      throw Error(ErrorCode::InvalidArgument, "a nonzero start index needs exactly one trajectory");
    const auto n = dim();
    if (n == 0) throw Error(ErrorCode::DimensionMismatch, "state dimension must be positive");
    for (std::size_t t = 0; t < trajectories.size(); ++t) {
      const auto& traj = trajectories[t];
      if (traj.dim() != n)
        throw Error(ErrorCode::DimensionMismatch, "trajectory " + std::to_string(t) + " has dimension " +
                                                      std::to_string(traj.dim()) + ", expected " +
                                                      std::to_string(n));
      if (traj.length() < 2)
        throw Error(ErrorCode::TrajectoryTooShort,
                    "trajectory " + std::to_string(t) + " has " + std::to_string(traj.length()) +
                        " sample(s); at least 2 are needed");
      if (!all_finite(traj.states))
        throw Error(ErrorCode::NonFiniteInput, "trajectory " + std::to_string(t) + " has NaN or Inf");
    }
  }
};

/// Snapshot matrices X (states 0..m-1 of each run) and X' (states 1..m),
/// runs concatenated along the column axis.
struct SnapshotPair {
  RealMatrix X;
  RealMatrix X_prime;

  std::size_t dim() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t columns() const { return static_cast<std::size_t>(X.cols()); }
};

inline SnapshotPair build_snapshot_pair(const TrajectorySet& data) {
  data.validate();
  Eigen::Index total = 0;
  for (const auto& t : data.trajectories) total += t.states.cols() - 1;

  const auto n = static_cast<Eigen::Index>(data.dim());
  SnapshotPair pair{RealMatrix(n, total), RealMatrix(n, total)};
  Eigen::Index offset = 0;
  for (const auto& t : data.trajectories) {
    const auto m = t.states.cols() - 1;
    pair.X.middleCols(offset, m) = t.states.leftCols(m);
    pair.X_prime.middleCols(offset, m) = t.states.rightCols(m);
    offset += m;
  }
  return pair;
}

}  // namespace dmdkit
