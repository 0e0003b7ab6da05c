#ifndef MVST_MVST_HPP
#define MVST_MVST_HPP

// The matrix-variate skew-t law X = M + W A + sqrt(W) V with
// W ~ IG(nu/2, nu/2) and V ~ N_{n x p}(0, Sigma, Psi).

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "mvst/distributions.hpp"
#include "mvst/errors.hpp"
#include "mvst/linalg.hpp"
#include "mvst/random.hpp"
#include "mvst/specfun.hpp"

namespace mvst {

/// Skewness forms rho at or below this use the skewless (matrix-t) limit.
inline constexpr double kRhoMin = 1e-12;

template <typename Scalar>
struct MvstParams {
  Matrix<Scalar> location;   // M, n x p
  Matrix<Scalar> skewness;   // A, n x p
  Matrix<Scalar> row_scale;  // Sigma, n x n
  Matrix<Scalar> col_scale;  // Psi, p x p
  Scalar dof{};              // nu

  Eigen::Index rows() const { return location.rows(); }
  Eigen::Index cols() const { return location.cols(); }
  bool has_finite_mean() const { return dof > 2; }
};

using MvstParamsd = MvstParams<double>;

template <typename Scalar>
void validate(const MvstParams<Scalar>& params) {
  const auto n = params.rows();
  const auto p = params.cols();
  if (n == 0 || p == 0) throw ValidationError("location must be non-empty");
  if (params.skewness.rows() != n || params.skewness.cols() != p)
    throw ValidationError("skewness must have the shape of the location");
  if (params.row_scale.rows() != n || params.row_scale.cols() != n)
    throw ValidationError("Sigma must be n x n");
  if (params.col_scale.rows() != p || params.col_scale.cols() != p)
    throw ValidationError("Psi must be p x p");
  if (!params.location.allFinite()) throw NonFiniteError("M has non-finite entries");
  if (!params.skewness.allFinite()) throw NonFiniteError("A has non-finite entries");
  if (!params.row_scale.allFinite()) throw NonFiniteError("Sigma has non-finite entries");
  if (!params.col_scale.allFinite()) throw NonFiniteError("Psi has non-finite entries");
  if (!is_symmetric(params.row_scale)) throw ValidationError("Sigma is not symmetric");
  if (!is_symmetric(params.col_scale)) throw ValidationError("Psi is not symmetric");
  if (!std::isfinite(params.dof) || !(params.dof > 0))
    throw ValidationError("degrees of freedom must be positive and finite");
  if (Eigen::LLT<Matrix<Scalar>>(params.row_scale).info() != Eigen::Success)
    throw ValidationError("Sigma is not positive definite");
  if (Eigen::LLT<Matrix<Scalar>>(params.col_scale).info() != Eigen::Success)
    throw ValidationError("Psi is not positive definite");
}

/// N observed n x p matrices in insertion order.
template <typename Scalar>
struct Dataset {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<Matrix<Scalar>> observations;

  std::size_t size() const { return observations.size(); }
  const Matrix<Scalar>& operator[](std::size_t i) const { return observations[i]; }
};

using Datasetd = Dataset<double>;

template <typename Scalar>
void validate(const Dataset<Scalar>& data) {
  if (data.rows <= 0 || data.cols <= 0)
    throw ValidationError("dataset dimensions must be positive");
  if (data.observations.empty()) throw ValidationError("dataset has no observations");
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& x = data.observations[i];
    if (x.rows() != data.rows || x.cols() != data.cols)
      throw DimensionError(i, "shape does not match dataset dimensions");
    if (!x.allFinite()) throw NonFiniteError("observation " + std::to_string(i) +
                                             " has non-finite entries");
  }
}

template <typename Scalar>
struct QuadForms {
  Scalar delta;  // tr(Sigma^-1 (X-M) Psi^-1 (X-M)')
  Scalar rho;    // tr(Sigma^-1 A Psi^-1 A')
};

/// tr(Sigma^{-1} (X - M) Psi^{-1} (X - M)') through triangular solves.
template <typename DerivedX, typename DerivedM, typename DerivedS, typename DerivedP>
auto delta_form(const Eigen::MatrixBase<DerivedX>& x,
                const Eigen::MatrixBase<DerivedM>& location,
                const Eigen::MatrixBase<DerivedS>& row_scale,
                const Eigen::MatrixBase<DerivedP>& col_scale) {
  using Scalar = typename DerivedX::Scalar;
  if (x.rows() != location.rows() || x.cols() != location.cols() ||
      row_scale.rows() != x.rows() || col_scale.rows() != x.cols())
    throw ValidationError("delta_form: inconsistent dimensions");
  const SpdFactor<Scalar> row(row_scale, "Sigma");
  const SpdFactor<Scalar> col(col_scale, "Psi");
  return whiten<Scalar>(x - location, row, col).squaredNorm();
}

/// tr(Sigma^{-1} A Psi^{-1} A').
template <typename DerivedA, typename DerivedS, typename DerivedP>
auto rho_form(const Eigen::MatrixBase<DerivedA>& skewness,
              const Eigen::MatrixBase<DerivedS>& row_scale,
              const Eigen::MatrixBase<DerivedP>& col_scale) {
  using Scalar = typename DerivedA::Scalar;
  if (row_scale.rows() != skewness.rows() || col_scale.rows() != skewness.cols())
    throw ValidationError("rho_form: inconsistent dimensions");
  const SpdFactor<Scalar> row(row_scale, "Sigma");
  const SpdFactor<Scalar> col(col_scale, "Psi");
  return whiten<Scalar>(skewness, row, col).squaredNorm();
}

/// Posterior moments of the latent mixing weight W given one observation.
template <typename Scalar>
struct LatentMoments {
  Scalar mean;             // E(W | X)
  Scalar mean_reciprocal;  // E(1/W | X)
  Scalar mean_log;         // E(log W | X)
  Scalar bessel_arg;       // sqrt(rho (delta + nu))
};

/// Factored, reusable view of one parameter set. Everything that does not
/// depend on the observation is computed once here.
template <typename Scalar>
class MvstModel {
 public:
  explicit MvstModel(MvstParams<Scalar> params) : params_(std::move(params)) {
    validate(params_);
    row_ = SpdFactor<Scalar>(params_.row_scale, "Sigma");
    col_ = SpdFactor<Scalar>(params_.col_scale, "Psi");
    skew_white_ = whiten<Scalar>(params_.skewness, row_, col_);
    rho_ = skew_white_.squaredNorm();
    const Scalar n = static_cast<Scalar>(params_.rows());
    const Scalar p = static_cast<Scalar>(params_.cols());
    const Scalar nu = params_.dof;
    np_ = n * p;
    index_ = -(nu + np_) / 2;
    log_norm_ = (nu / 2) * std::log(nu / 2) -
                (np_ / 2) * std::log(2 * std::numbers::pi_v<Scalar>) -
                (p / 2) * row_.log_det() - (n / 2) * col_.log_det() -
                log_gamma(nu / 2);
  }

  const MvstParams<Scalar>& params() const { return params_; }
  const SpdFactor<Scalar>& row_factor() const { return row_; }
  const SpdFactor<Scalar>& col_factor() const { return col_; }
  Scalar rho() const { return rho_; }
  /// GIG index of W | X, -(nu + np) / 2.
  Scalar gig_index() const { return index_; }
  bool skewless() const { return !(rho_ > static_cast<Scalar>(kRhoMin)); }

  template <typename Derived>
  QuadForms<Scalar> forms(const Eigen::MatrixBase<Derived>& x) const {
    check_shape(x);
    return {whiten<Scalar>(x - params_.location, row_, col_).squaredNorm(), rho_};
  }

  template <typename Derived>
  Scalar log_density(const Eigen::MatrixBase<Derived>& x) const {
    check_shape(x);
    const Matrix<Scalar> resid_white = whiten<Scalar>(x - params_.location, row_, col_);
    const Scalar delta = resid_white.squaredNorm();
    const Scalar cross = resid_white.cwiseProduct(skew_white_).sum();
    const Scalar nu = params_.dof;
    const Scalar shape = (nu + np_) / 2;
    Scalar value;
    if (skewless()) {
      // Integral of w^{-shape-1} exp(-(delta + nu) / (2w)) over w > 0.
      value = log_norm_ + cross + log_gamma(shape) + shape * std::log(2 / (delta + nu));
    } else {
      const Scalar arg = std::sqrt(rho_ * (delta + nu));
      value = std::numbers::ln2_v<Scalar> + log_norm_ + cross -
              (shape / 2) * std::log((delta + nu) / rho_) + log_bessel_k(index_, arg);
    }
    if (!std::isfinite(value))
      throw NumericalError("log-density is not finite (delta=" + std::to_string(delta) +
                           ", rho=" + std::to_string(rho_) + ")");
    return value;
  }

  /// W | X ~ GIG(rho, delta + nu, -(nu + np) / 2).
  template <typename Derived>
  GigParams<Scalar> conditional_w(const Eigen::MatrixBase<Derived>& x) const {
    if (skewless())
      throw SkewnessBelowThreshold("rho below threshold; use the inverse-Gamma limit");
    const auto f = forms(x);
    return {rho_, f.delta + params_.dof, index_};
  }

  /// E(W|X), E(1/W|X), E(log W|X). Uses the GIG closed forms, or the
  /// IG((nu + np) / 2, (delta + nu) / 2) limit when the skewness vanishes.
  template <typename Derived>
  LatentMoments<Scalar> latent_moments(const Eigen::MatrixBase<Derived>& x) const {
    if (!skewless()) {
      const GigParams<Scalar> gig = conditional_w(x);
      const auto m = gig_expectations(gig);
      return {m.mean, m.mean_reciprocal, m.mean_log, std::sqrt(gig.a * gig.b)};
    }
    const Scalar delta = forms(x).delta;
    const Scalar shape = (params_.dof + np_) / 2;
    const Scalar rate = (delta + params_.dof) / 2;
    if (!(shape > 1))
      throw NumericalError("E(W|X) is infinite in the skewless limit with nu + np <= 2");
    return {rate / (shape - 1), shape / rate, std::log(rate) - digamma(shape),
            std::sqrt(rho_ * (delta + params_.dof))};
  }

 private:
  template <typename Derived>
  void check_shape(const Eigen::MatrixBase<Derived>& x) const {
    if (x.rows() != params_.rows() || x.cols() != params_.cols())
      throw ValidationError("observation shape does not match parameters");
  }

  MvstParams<Scalar> params_;
  SpdFactor<Scalar> row_;
  SpdFactor<Scalar> col_;
  Matrix<Scalar> skew_white_;
  Scalar rho_{};
  Scalar np_{};
  Scalar index_{};
  Scalar log_norm_{};
};

template <typename Scalar, typename Derived>
Scalar mvst_log_density(const Eigen::MatrixBase<Derived>& x,
                        const MvstParams<Scalar>& params) {
  return MvstModel<Scalar>(params).log_density(x);
}

template <typename Scalar, typename Derived>
GigParams<Scalar> conditional_w_given_x(const Eigen::MatrixBase<Derived>& x,
                                        const MvstParams<Scalar>& params) {
  return MvstModel<Scalar>(params).conditional_w(x);
}

/// `count` draws of M + W A + sqrt(W) V. Per draw the generator yields W
/// first, then the n p normals of V in column-major order.
template <typename Scalar>
Dataset<Scalar> mvst_sample(Rng& rng, const MvstParams<Scalar>& params,
                            std::size_t count) {
  validate(params);
  const SpdFactor<Scalar> row(params.row_scale, "Sigma");
  const SpdFactor<Scalar> col(params.col_scale, "Psi");
  const InvGammaParams<Scalar> mixing{params.dof / 2, params.dof / 2};
  Dataset<Scalar> out{params.rows(), params.cols(), {}};
  out.observations.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Scalar w = invgamma_sample(rng, mixing);
    const Matrix<Scalar> v =
        matnorm_sample<Scalar>(rng, params.rows(), params.cols(), row, col);
    out.observations.push_back(params.location + w * params.skewness + std::sqrt(w) * v);
  }
  return out;
}

/// Multivariate skew-t parameters of vec(X).
template <typename Scalar>
struct MstParams {
  Vector<Scalar> location;
  Vector<Scalar> skewness;
  Matrix<Scalar> scale;
  Scalar dof;

  /// The same law as an (np x 1) matrix-variate skew-t with unit column scale.
  MvstParams<Scalar> as_column() const {
    return {location, skewness, scale, Matrix<Scalar>::Identity(1, 1), dof};
  }
};

/// (vec M, vec A, Psi (x) Sigma, nu).
template <typename Scalar>
MstParams<Scalar> vec_params(const MvstParams<Scalar>& params) {
  validate(params);
  return {vec(params.location), vec(params.skewness),
          kron(params.col_scale, params.row_scale), params.dof};
}

/// Rescales to tr(Sigma) = n, moving the scalar into Psi. Psi (x) Sigma and
/// the density are unchanged.
template <typename Scalar>
MvstParams<Scalar> normalize_scale(MvstParams<Scalar> params) {
  validate(params);
  const Scalar n = static_cast<Scalar>(params.rows());
  const Scalar trace = params.row_scale.trace();
  if (trace == n) return params;
  params.row_scale *= n / trace;
  params.col_scale *= trace / n;
  return params;
}

}  // namespace mvst

#endif  // MVST_MVST_HPP
