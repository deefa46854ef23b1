#pragma once

// Synthetic systems with known dynamics, used as ground truth by the test
// suites and the `demo` command.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <variant>

#include "dmdkit/error.hpp"
#include "dmdkit/numerics.hpp"
#include "dmdkit/trajectory.hpp"

namespace dmdkit::systems {

/// x_{k+1} = A x_k.
struct LinearDiscrete {
  RealMatrix A;
};

/// dx/dt = A x, sampled exactly through the eigendecomposition of A.
struct LinearContinuous {
  RealMatrix A;
};

/// x_{k+1} = x_k + sigma * psi, psi i.i.d. standard normal per component.
struct NoisyRandomWalk {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// x1+ = lambda x1,  x2+ = mu x2 + (lambda^2 - mu) x1^2.
/// The dictionary [x1, x2, x1^2] makes it exactly linear.
struct SlowManifold {
  double lambda = 0.9;
  double mu = 0.5;
};

using Family = std::variant<LinearDiscrete, LinearContinuous, NoisyRandomWalk, SlowManifold>;

struct GeneratorSpec {
  Family family;
  RealVector x0;
  std::size_t steps = 1;
  double delta_k = 1.0;
  double start_index = 0.0;
};

/// Identity of the noise stream written into demo files.
inline constexpr std::string_view noise_algorithm = "mt19937_64/box-muller-cos/v1";

/// Gaussian stream pinned bit-for-bit: mt19937_64 outputs become uniforms
/// in (0, 1] from their top 53 bits, and each normal draw consumes two of
/// them as sqrt(-2 ln u1) cos(2 pi u2).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  double uniform() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  std::mt19937_64 engine_;
};

namespace detail {

struct Diagonalization {
  ComplexMatrix W;
  ComplexVector values;
  ComplexMatrix W_inv;
};

inline Diagonalization diagonalize(const RealMatrix& A) {
  Eigen::EigenSolver<RealMatrix> solver(A, true);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::NonConvergence, "generator eigendecomposition did not converge");
  Diagonalization d{solver.eigenvectors(), solver.eigenvalues(), {}};
  if (!(condition_number(d.W) <= tolerances::defective_condition))
    throw Error(ErrorCode::NonDiagonalizableGenerator, "generator matrix is not diagonalizable");
  d.W_inv = d.W.inverse();
  return d;
}

inline RealVector real_or_throw(const ComplexVector& v) {
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  if (v.imag().cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error(ErrorCode::NoClosedForm, "state is not real on this branch");
  return v.real();
}

inline void check_spec(const GeneratorSpec& spec) {
  if (spec.steps < 1) throw Error(ErrorCode::InvalidArgument, "generator needs at least one step");
  if (!(spec.delta_k > 0.0) || !std::isfinite(spec.delta_k))
    throw Error(ErrorCode::InvalidArgument, "sampling interval must be positive and finite");
  if (!std::isfinite(spec.start_index)) throw Error(ErrorCode::InvalidArgument, "start index must be finite");
  if (spec.x0.size() == 0 || !all_finite(spec.x0))
    throw Error(ErrorCode::InvalidArgument, "initial state must be nonempty and finite");
  const auto n = spec.x0.size();
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, LinearDiscrete> || std::is_same_v<F, LinearContinuous>) {
          if (f.A.rows() != n || f.A.cols() != n)
            throw Error(ErrorCode::DimensionMismatch, "generator matrix does not match the initial state");
          if (!all_finite(f.A)) throw Error(ErrorCode::NonFiniteInput, "generator matrix has NaN or Inf");
        } else if constexpr (std::is_same_v<F, NoisyRandomWalk>) {
          if (!(f.sigma >= 0.0) || !std::isfinite(f.sigma))
            throw Error(ErrorCode::InvalidArgument, "noise level must be finite and nonnegative");
        } else {
          if (n != 2) throw Error(ErrorCode::DimensionMismatch, "slow-manifold system is two-dimensional");
          if (!std::isfinite(f.lambda) || !std::isfinite(f.mu))
            throw Error(ErrorCode::InvalidArgument, "slow-manifold parameters must be finite");
        }
      },
      spec.family);
}

inline RealVector slow_manifold_step(const SlowManifold& f, const RealVector& x) {
  RealVector next(2);
  next(0) = f.lambda * x(0);
  next(1) = f.mu * x(1) + (f.lambda * f.lambda - f.mu) * x(0) * x(0);
  return next;
}

}  // namespace detail

/// Samples states 0..steps into a single-trajectory set.
inline TrajectorySet generate(const GeneratorSpec& spec) {
  detail::check_spec(spec);
  const auto n = spec.x0.size();
  const auto count = static_cast<Eigen::Index>(spec.steps + 1);
  RealMatrix states(n, count);
  states.col(0) = spec.x0;

  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, LinearDiscrete>) {
          for (Eigen::Index k = 1; k < count; ++k) states.col(k) = f.A * states.col(k - 1);
        } else if constexpr (std::is_same_v<F, LinearContinuous>) {
          const auto d = detail::diagonalize(f.A);
          const ComplexVector coeffs = d.W_inv * spec.x0.cast<Complex>();
          for (Eigen::Index k = 1; k < count; ++k) {
            const double t = static_cast<double>(k) * spec.delta_k;
            const ComplexVector growth = (d.values * t).array().exp().matrix();
            states.col(k) = detail::real_or_throw(d.W * growth.cwiseProduct(coeffs));
          }
        } else if constexpr (std::is_same_v<F, NoisyRandomWalk>) {
          NormalStream noise(f.seed);
          for (Eigen::Index k = 1; k < count; ++k) {
            states.col(k) = states.col(k - 1);
            for (Eigen::Index i = 0; i < n; ++i) states(i, k) += f.sigma * noise.next();
          }
        } else {
          for (Eigen::Index k = 1; k < count; ++k) states.col(k) = detail::slow_manifold_step(f, states.col(k - 1));
        }
      },
      spec.family);

  TrajectorySet out;
  out.trajectories.emplace_back(std::move(states));
  out.delta_k = spec.delta_k;
  out.start_index = spec.start_index;
  return out;
}

/// Exact state at `index` in original units.
inline RealVector true_state(const GeneratorSpec& spec, double index) {
  detail::check_spec(spec);
  if (!std::isfinite(index)) throw Error(ErrorCode::InvalidArgument, "index must be finite");
  const double steps = (index - spec.start_index) / spec.delta_k;
  const double rounded = std::nearbyint(steps);
  const bool sampled_step = std::abs(steps - rounded) <= 1e-12 * std::max(1.0, std::abs(steps));
  const auto n = spec.x0.size();

  return std::visit(
      [&](const auto& f) -> RealVector {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, LinearDiscrete>) {
          if (sampled_step && rounded >= 0.0) {
            RealVector x = spec.x0;
            for (long long k = 0; k < static_cast<long long>(rounded); ++k) x = f.A * x;
            return x;
          }
          if (sampled_step) {
            Eigen::FullPivLU<RealMatrix> lu(f.A);
            if (!lu.isInvertible()) throw Error(ErrorCode::NoClosedForm, "generator is singular; no backward map");
            RealVector x = spec.x0;
            for (long long k = 0; k < static_cast<long long>(-rounded); ++k) x = lu.solve(x);
            return x;
          }
          const auto d = detail::diagonalize(f.A);
          ComplexVector powers(d.values.size());
          for (Eigen::Index i = 0; i < powers.size(); ++i) {
            if (d.values(i) == Complex(0.0, 0.0))
              throw Error(ErrorCode::NoClosedForm, "zero eigenvalue has no fractional power");
            powers(i) = std::pow(d.values(i), steps);
          }
          return detail::real_or_throw(d.W * powers.cwiseProduct(d.W_inv * spec.x0.cast<Complex>()));
        } else if constexpr (std::is_same_v<F, LinearContinuous>) {
          const auto d = detail::diagonalize(f.A);
          const double t = index - spec.start_index;
          const ComplexVector growth = (d.values * t).array().exp().matrix();
          return detail::real_or_throw(d.W * growth.cwiseProduct(d.W_inv * spec.x0.cast<Complex>()));
        } else if constexpr (std::is_same_v<F, NoisyRandomWalk>) {
          if (f.sigma == 0.0) return spec.x0;
          if (!sampled_step || rounded < 0.0 || rounded > static_cast<double>(spec.steps))
            throw Error(ErrorCode::NoClosedForm, "noisy random walk is only known at its sampled indices");
          return generate(spec).trajectories.front().state(static_cast<std::size_t>(rounded));
        } else {
          if (!sampled_step && (f.lambda <= 0.0 || f.mu <= 0.0))
            throw Error(ErrorCode::NoClosedForm, "fractional steps need positive slow-manifold rates");
          const double x1 = spec.x0(0);
          const double x2 = spec.x0(1);
          const double p = sampled_step ? rounded : steps;
          const double lam_p = std::pow(f.lambda, p);
          const double lam_2p = std::pow(f.lambda * f.lambda, p);
          const double mu_p = std::pow(f.mu, p);
          RealVector x(n);
          x(0) = lam_p * x1;
          x(1) = mu_p * (x2 - x1 * x1) + lam_2p * x1 * x1;
          return x;
        }
      },
      spec.family);
}

}  // namespace dmdkit::systems
