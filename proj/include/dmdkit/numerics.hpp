#pragma once

// Dense linear algebra used by the DMD and Koopman layers: truncated SVD
// under a rank policy, pseudoinverses, eigendecomposition with a canonical
// ordering and phase convention, and elementwise eigenvalue powers.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dmdkit/error.hpp"

namespace dmdkit {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

namespace tolerances {
inline constexpr double singular_value_floor = 1e-150;
inline constexpr double defective_condition = 1e8;
inline constexpr double eig_residual = 1e-8;
}  // namespace tolerances

struct FixedRank {
  std::size_t r;
};

/// Drop every singular value below tau * sigma_1.
struct RelativeTolerance {
  double tau;
};

/// Keep the smallest r whose squared singular values carry at least eta of
/// the total energy.
struct EnergyFraction {
  double eta;
};

using RankPolicy = std::variant<FixedRank, RelativeTolerance, EnergyFraction>;

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

}  // namespace detail

inline void validate(const RankPolicy& policy) {
  if (const auto* f = std::get_if<FixedRank>(&policy)) {
    if (f->r == 0) throw Error(ErrorCode::InvalidArgument, "fixed rank must be positive");
  } else if (const auto* t = std::get_if<RelativeTolerance>(&policy)) {
    if (!(t->tau > 0.0 && t->tau < 1.0))
      throw Error(ErrorCode::InvalidArgument, "relative tolerance must lie in (0, 1)");
  } else if (const auto* e = std::get_if<EnergyFraction>(&policy)) {
    if (!(e->eta > 0.0 && e->eta <= 1.0))
      throw Error(ErrorCode::InvalidArgument, "energy fraction must lie in (0, 1]");
  }
}

/// Text form used on the command line and in model provenance:
/// `fixed:r`, `tol:tau`, `energy:eta`.
inline std::string to_string(const RankPolicy& policy) {
  if (const auto* f = std::get_if<FixedRank>(&policy)) return "fixed:" + std::to_string(f->r);
  if (const auto* t = std::get_if<RelativeTolerance>(&policy))
    return "tol:" + detail::format_double(t->tau);
  return "energy:" + detail::format_double(std::get<EnergyFraction>(policy).eta);
}

inline RankPolicy parse_rank_policy(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw Error(ErrorCode::InvalidArgument, "rank policy must look like fixed:r, tol:tau or energy:eta");
  const auto kind = text.substr(0, colon);
  const auto value = text.substr(colon + 1);
  RankPolicy policy;
  if (kind == "fixed") {
    std::size_t r = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), r);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size())
      throw Error(ErrorCode::InvalidArgument, "bad fixed rank '" + std::string(value) + "'");
    policy = FixedRank{r};
  } else if (kind == "tol" || kind == "energy") {
    double v = 0.0;
    if (!detail::parse_double(value, v))
      throw Error(ErrorCode::InvalidArgument, "bad number '" + std::string(value) + "'");
    if (kind == "tol")
      policy = RelativeTolerance{v};
    else
      policy = EnergyFraction{v};
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown rank policy '" + std::string(kind) + "'");
  }
  validate(policy);
  return policy;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

struct TruncatedSvd {
  RealMatrix U;      // n x r, orthonormal columns
  RealVector sigma;  // r values, strictly positive, descending
  RealMatrix V;      // M x r, orthonormal columns

  std::size_t rank() const { return static_cast<std::size_t>(sigma.size()); }
};

/// Rank chosen by `policy` for the descending singular values `s`.
inline std::size_t select_rank(const RealVector& s, const RankPolicy& policy) {
  const auto full = static_cast<std::size_t>(s.size());
  if (const auto* f = std::get_if<FixedRank>(&policy)) {
    if (f->r > full)
      throw Error(ErrorCode::RankPolicyUnsatisfiable,
                  "fixed rank " + std::to_string(f->r) + " exceeds min(n, M) = " + std::to_string(full));
    return f->r;
  }
  if (const auto* t = std::get_if<RelativeTolerance>(&policy)) {
    const double cutoff = t->tau * s(0);
    std::size_t r = 0;
    while (r < full && s(static_cast<Eigen::Index>(r)) >= cutoff) ++r;
    return std::max<std::size_t>(r, 1);
  }
  const double eta = std::get<EnergyFraction>(policy).eta;
  const double total = s.squaredNorm();
  double kept = 0.0;
  for (std::size_t r = 0; r < full; ++r) {
    const double v = s(static_cast<Eigen::Index>(r));
    kept += v * v;
    if (kept >= eta * total) return r + 1;
  }
  return full;
}

inline TruncatedSvd svd_truncated(const RealMatrix& X, const RankPolicy& policy) {
  validate(policy);
  if (X.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty matrix");
  if (!all_finite(X)) throw Error(ErrorCode::NonFiniteInput, "matrix has NaN or Inf entries");
  if ((X.array() == 0.0).all()) throw Error(ErrorCode::ZeroMatrix, "all-zero matrix has no SVD basis");

  Eigen::BDCSVD<RealMatrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "SVD did not converge");

  const RealVector& s = svd.singularValues();
  const auto r = static_cast<Eigen::Index>(select_rank(s, policy));
  return TruncatedSvd{svd.matrixU().leftCols(r), s.head(r), svd.matrixV().leftCols(r)};
}

inline void check_invertible(const RealVector& sigma) {
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (!(sigma(i) >= tolerances::singular_value_floor))
      throw Error(ErrorCode::SingularValueUnderflow,
                  "singular value " + detail::format_double(sigma(i)) + " below inversion floor");
  }
}

/// X^+ = V diag(1/sigma) U^H from truncated factors.
inline RealMatrix pinv_from_svd(const TruncatedSvd& f) {
  check_invertible(f.sigma);
  return f.V * f.sigma.cwiseInverse().asDiagonal() * f.U.adjoint();
}

/// Moore-Penrose pseudoinverse of a general complex matrix. Singular values
/// below max(rows, cols) * eps * sigma_1 are treated as zero.
inline ComplexMatrix pinv(const ComplexMatrix& A) {
  if (A.size() == 0) return ComplexMatrix(A.cols(), A.rows());
  Eigen::BDCSVD<ComplexMatrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& s = svd.singularValues();
  const double cutoff = static_cast<double>(std::max(A.rows(), A.cols())) *
                        std::numeric_limits<double>::epsilon() * (s.size() ? s(0) : 0.0);
  RealVector inv = RealVector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

/// Scales `v` to unit 2-norm and rotates it so its largest-magnitude entry
/// is real and positive. The first entry within 1e-12 of the maximum wins.
template <typename Derived>
void normalize_phase(Eigen::MatrixBase<Derived>& v) {
  const double norm = v.norm();
  if (norm == 0.0) return;
  v /= norm;
  double biggest = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) biggest = std::max(biggest, std::abs(v(i)));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    if (mag >= biggest * (1.0 - 1e-12)) {
      v *= std::conj(v(i)) / mag;
      v(i) = Complex(mag, 0.0);
      return;
    }
  }
}

template <typename Derived>
void normalize_phase(Eigen::MatrixBase<Derived>&& v) {
  normalize_phase(v);
}

inline ComplexMatrix phase_normalized_columns(ComplexMatrix m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) normalize_phase(m.col(j));
  return m;
}

/// Canonical eigenvalue order: descending |lambda|, then descending real
/// part, then descending imaginary part. Comparisons use a 1e-12 relative
/// tie band so conjugate pairs from roundoff-level asymmetry stay together.
inline bool canonical_before(Complex a, Complex b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  const double tie = 1e-12 * scale;
  if (std::abs(std::abs(a) - std::abs(b)) > tie) return std::abs(a) > std::abs(b);
  if (std::abs(a.real() - b.real()) > tie) return a.real() > b.real();
  return a.imag() > b.imag();
}

inline std::vector<Eigen::Index> canonical_order(const ComplexVector& values) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return canonical_before(values(i), values(j));
  });
  return order;
}

inline double condition_number(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  const RealVector& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double smallest = s(s.size() - 1);
  if (smallest == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smallest;
}

struct EigenDecomposition {
  ComplexMatrix vectors;  // columns, unit norm, phase-normalized
  ComplexVector values;   // canonical order
  double condition = 1.0; // cond(vectors)
  std::vector<Warning> warnings;
};

namespace detail {

inline EigenDecomposition finish_eig(const ComplexMatrix& A, const ComplexVector& raw_values,
                                    const ComplexMatrix& raw_vectors) {
  const auto order = canonical_order(raw_values);
  EigenDecomposition out;
  out.values.resize(raw_values.size());
  out.vectors.resize(raw_vectors.rows(), raw_vectors.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto dst = static_cast<Eigen::Index>(k);
    out.values(dst) = raw_values(order[k]);
    out.vectors.col(dst) = raw_vectors.col(order[k]);
    normalize_phase(out.vectors.col(dst));
  }

  const double scale = std::max(A.norm(), std::numeric_limits<double>::min());
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    const double residual = (A * out.vectors.col(i) - out.values(i) * out.vectors.col(i)).norm();
    if (!(residual <= tolerances::eig_residual * scale))
      throw Error(ErrorCode::NonConvergence, "eigenpair residual " + format_double(residual) +
                                                 " exceeds tolerance");
  }

  out.condition = condition_number(out.vectors);
  if (!(out.condition <= tolerances::defective_condition)) {
    out.warnings.push_back({WarningKind::DefectiveMatrix,
                            "eigenvector matrix condition number " + format_double(out.condition) +
                                " exceeds 1e8; matrix is numerically defective"});
  }
  return out;
}

}  // namespace detail

/// Eigendecomposition of a real square matrix. Complex eigenvalues come in
/// exact conjugate pairs.
inline EigenDecomposition eig(const RealMatrix& A) {
  if (A.rows() != A.cols()) throw Error(ErrorCode::DimensionMismatch, "eig needs a square matrix");
  if (!all_finite(A)) throw Error(ErrorCode::NonFiniteInput, "matrix has NaN or Inf entries");
  if (A.size() == 0) return {};
  Eigen::EigenSolver<RealMatrix> solver(A, true);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "QR iteration did not converge");
  return detail::finish_eig(A.cast<Complex>(), solver.eigenvalues(), solver.eigenvectors());
}

/// Eigendecomposition of a complex square matrix. Dispatches to the real
/// solver when every imaginary part is exactly zero.
inline EigenDecomposition eig(const ComplexMatrix& A) {
  if (A.rows() != A.cols()) throw Error(ErrorCode::DimensionMismatch, "eig needs a square matrix");
  if (!all_finite(A)) throw Error(ErrorCode::NonFiniteInput, "matrix has NaN or Inf entries");
  if ((A.imag().array() == 0.0).all()) return eig(RealMatrix(A.real()));
  Eigen::ComplexEigenSolver<ComplexMatrix> solver(A, true);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "QR iteration did not converge");
  return detail::finish_eig(A, solver.eigenvalues(), solver.eigenvectors());
}

namespace detail {

inline Complex integer_power(Complex base, long long exponent) {
  Complex result(1.0, 0.0);
  unsigned long long e = exponent < 0 ? static_cast<unsigned long long>(-exponent)
                                      : static_cast<unsigned long long>(exponent);
  while (e != 0) {
    if (e & 1ULL) result *= base;
    base *= base;
    e >>= 1ULL;
  }
  return exponent < 0 ? Complex(1.0, 0.0) / result : result;
}

}  // namespace detail

inline bool is_integral(double k) {
  return std::isfinite(k) && std::abs(k) < 9007199254740992.0 && k == std::nearbyint(k);
}

/// lambda_i^k elementwise. Integer exponents use repeated squaring; other
/// exponents use the principal branch.
inline ComplexVector diag_power(const ComplexVector& lambdas, double k) {
  if (!std::isfinite(k)) throw Error(ErrorCode::InvalidArgument, "exponent must be finite");
  ComplexVector out(lambdas.size());
  const bool integral = is_integral(k);
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    const Complex lambda = lambdas(i);
    if (lambda == Complex(0.0, 0.0)) {
      if (k < 0.0)
        throw Error(ErrorCode::ZeroToNegativePower,
                    "eigenvalue " + std::to_string(i) + " is zero and exponent is negative");
      out(i) = (k == 0.0) ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
    } else if (integral) {
      out(i) = detail::integer_power(lambda, static_cast<long long>(k));
    } else {
      out(i) = std::pow(lambda, k);
    }
  }
  return out;
}

}  // namespace dmdkit
