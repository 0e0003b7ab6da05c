#ifndef MVST_DISTRIBUTIONS_HPP
#define MVST_DISTRIBUTIONS_HPP

// Building blocks: matrix normal, inverse Gamma and generalized inverse
// Gaussian laws.

#include <cmath>
#include <numbers>
#include <string>

#include "mvst/errors.hpp"
#include "mvst/linalg.hpp"
#include "mvst/random.hpp"
#include "mvst/specfun.hpp"

namespace mvst {

// ---------------------------------------------------------------- matrix normal

template <typename Scalar>
struct MatNormParams {
  Matrix<Scalar> location;   // n x p
  Matrix<Scalar> row_scale;  // n x n
  Matrix<Scalar> col_scale;  // p x p
};

template <typename Scalar>
void validate(const MatNormParams<Scalar>& params) {
  const auto n = params.location.rows();
  const auto p = params.location.cols();
  if (n == 0 || p == 0) throw ValidationError("location must be non-empty");
  if (params.row_scale.rows() != n || params.row_scale.cols() != n)
    throw ValidationError("row scale must be n x n");
  if (params.col_scale.rows() != p || params.col_scale.cols() != p)
    throw ValidationError("column scale must be p x p");
  if (!params.location.allFinite())
    throw NonFiniteError("location has non-finite entries");
  if (!is_symmetric(params.row_scale))
    throw ValidationError("row scale is not symmetric");
  if (!is_symmetric(params.col_scale))
    throw ValidationError("column scale is not symmetric");
}

/// Log density of N_{n x p}(M, Sigma, Psi) at X.
template <typename Scalar, typename Derived>
Scalar matnorm_log_density(const Eigen::MatrixBase<Derived>& x,
                           const MatNormParams<Scalar>& params) {
  validate(params);
  if (x.rows() != params.location.rows() || x.cols() != params.location.cols())
    throw ValidationError("observation shape does not match location");
  const SpdFactor<Scalar> row(params.row_scale, "row scale");
  const SpdFactor<Scalar> col(params.col_scale, "column scale");
  const Scalar n = static_cast<Scalar>(x.rows());
  const Scalar p = static_cast<Scalar>(x.cols());
  const Scalar quad = whiten<Scalar>(x - params.location, row, col).squaredNorm();
  return -(n * p / 2) * std::log(2 * std::numbers::pi_v<Scalar>) -
         (p / 2) * row.log_det() - (n / 2) * col.log_det() - quad / 2;
}

/// X = M + L_row Z L_col' with Z iid standard normal, filled column-major.
template <typename Scalar>
Matrix<Scalar> matnorm_sample(Rng& rng, const Eigen::Index rows,
                              const Eigen::Index cols,
                              const SpdFactor<Scalar>& row,
                              const SpdFactor<Scalar>& col) {
  Matrix<Scalar> z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = static_cast<Scalar>(rng.normal());
  return Matrix<Scalar>(row.lower()) * z * Matrix<Scalar>(col.lower()).transpose();
}

template <typename Scalar>
Matrix<Scalar> matnorm_sample(Rng& rng, const MatNormParams<Scalar>& params) {
  validate(params);
  const SpdFactor<Scalar> row(params.row_scale, "row scale");
  const SpdFactor<Scalar> col(params.col_scale, "column scale");
  return params.location + matnorm_sample<Scalar>(rng, params.location.rows(),
                                                  params.location.cols(), row, col);
}

// ---------------------------------------------------------------- inverse Gamma

/// IG(shape, rate_like) with density beta^alpha / Gamma(alpha) x^{-alpha-1} e^{-beta/x}.
template <typename Scalar>
struct InvGammaParams {
  Scalar shape;
  Scalar rate_like;
};

template <typename Scalar>
void validate(const InvGammaParams<Scalar>& params) {
  if (!(params.shape > 0) || !std::isfinite(params.shape))
    throw ValidationError("inverse-Gamma shape must be positive and finite");
  if (!(params.rate_like > 0) || !std::isfinite(params.rate_like))
    throw ValidationError("inverse-Gamma rate must be positive and finite");
}

template <typename Scalar>
Scalar invgamma_log_density(Scalar x, const InvGammaParams<Scalar>& params) {
  validate(params);
  if (!(x > 0)) throw DomainError("inverse-Gamma support is x > 0");
  const auto [alpha, beta] = params;
  return alpha * std::log(beta) - log_gamma(alpha) - (alpha + 1) * std::log(x) -
         beta / x;
}

/// Reciprocal of a Gamma(shape, rate = rate_like) draw.
template <typename Scalar>
Scalar invgamma_sample(Rng& rng, const InvGammaParams<Scalar>& params) {
  validate(params);
  const double g = rng.gamma(static_cast<double>(params.shape));
  return params.rate_like / static_cast<Scalar>(g);
}

// ---------------------------------------------------------------- GIG

/// GIG(a, b, index): density proportional to y^{index-1} exp(-(a y + b / y) / 2).
template <typename Scalar>
struct GigParams {
  Scalar a;
  Scalar b;
  Scalar index;
};

template <typename Scalar>
void validate(const GigParams<Scalar>& params) {
  if (!(params.a > 0) || !std::isfinite(params.a))
    throw ValidationError("GIG parameter a must be positive and finite");
  if (!(params.b > 0) || !std::isfinite(params.b))
    throw ValidationError("GIG parameter b must be positive and finite");
  if (!std::isfinite(params.index)) throw ValidationError("GIG index must be finite");
}

template <typename Scalar>
Scalar gig_log_density(Scalar y, const GigParams<Scalar>& params) {
  validate(params);
  if (!(y > 0) || !std::isfinite(y)) throw DomainError("GIG support is y > 0");
  const auto [a, b, lambda] = params;
  return (lambda / 2) * std::log(a / b) + (lambda - 1) * std::log(y) -
         std::numbers::ln2_v<Scalar> - log_bessel_k(lambda, std::sqrt(a * b)) -
         (a * y + b / y) / 2;
}

template <typename Scalar>
struct GigMoments {
  Scalar mean;            // E(Y)
  Scalar mean_reciprocal; // E(1/Y)
  Scalar mean_log;        // E(log Y)
};

/// Closed-form E(Y), E(1/Y), E(log Y); Bessel ratios taken as exp of log
/// differences.
template <typename Scalar>
GigMoments<Scalar> gig_expectations(const GigParams<Scalar>& params) {
  validate(params);
  const auto [a, b, lambda] = params;
  const Scalar arg = std::sqrt(a * b);
  const Scalar log_k = log_bessel_k(lambda, arg);
  const Scalar ratio = std::exp(log_bessel_k(lambda + 1, arg) - log_k);
  GigMoments<Scalar> out;
  out.mean = std::sqrt(b / a) * ratio;
  out.mean_reciprocal = std::sqrt(a / b) * ratio - 2 * lambda / b;
  out.mean_log = std::log(b / a) / 2 + dlog_bessel_k_dorder(lambda, arg);
  if (!std::isfinite(out.mean) || !std::isfinite(out.mean_reciprocal) ||
      !std::isfinite(out.mean_log))
    throw NumericalError("GIG expectations are not finite at a=" + std::to_string(a) +
                         " b=" + std::to_string(b) +
                         " index=" + std::to_string(lambda));
  return out;
}

}  // namespace mvst

#endif  // MVST_DISTRIBUTIONS_HPP
