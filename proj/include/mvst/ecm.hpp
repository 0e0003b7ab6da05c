#ifndef MVST_ECM_HPP
#define MVST_ECM_HPP

// Maximum-likelihood fitting of the matrix-variate skew-t by expectation /
// conditional maximization, stopped with the Aitken-accelerated estimate of
// the final log-likelihood.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mvst/errors.hpp"
#include "mvst/linalg.hpp"
#include "mvst/mvst.hpp"
#include "mvst/specfun.hpp"
#include "mvst/summation.hpp"

namespace mvst {

/// Threshold on |sum(a_bar b_i) - N| below which the location/skewness
/// update is refused.
inline constexpr double kDegenerateDenominator = 1e-10;

template <typename Scalar>
struct EStepStats {
  Vector<Scalar> a;           // E(W_i | X_i)
  Vector<Scalar> b;           // E(1/W_i | X_i)
  Vector<Scalar> c;           // E(log W_i | X_i)
  Vector<Scalar> bessel_arg;  // kappa_i
  Scalar gig_index{};         // -(nu + np) / 2

  std::size_t size() const { return static_cast<std::size_t>(a.size()); }
};

template <typename Scalar>
EStepStats<Scalar> e_step(const Dataset<Scalar>& data, const MvstModel<Scalar>& model) {
  const auto count = static_cast<Eigen::Index>(data.size());
  EStepStats<Scalar> stats;
  stats.a.resize(count);
  stats.b.resize(count);
  stats.c.resize(count);
  stats.bessel_arg.resize(count);
  stats.gig_index = model.gig_index();
  for (Eigen::Index i = 0; i < count; ++i) {
    LatentMoments<Scalar> m;
    try {
      m = model.latent_moments(data[static_cast<std::size_t>(i)]);
    } catch (const Error& e) {
      throw NumericalError("E-step, observation " + std::to_string(i) + ": " + e.what());
    }
    stats.a(i) = m.mean;
    stats.b(i) = m.mean_reciprocal;
    stats.c(i) = m.mean_log;
    stats.bessel_arg(i) = m.bessel_arg;
  }
  return stats;
}

template <typename Scalar>
EStepStats<Scalar> e_step(const Dataset<Scalar>& data, const MvstParams<Scalar>& params) {
  return e_step(data, MvstModel<Scalar>(params));
}

template <typename Scalar>
Scalar mean_of(const Vector<Scalar>& v) {
  return pairwise_sum(std::span<const Scalar>(v.data(), static_cast<std::size_t>(v.size()))) /
         static_cast<Scalar>(v.size());
}

template <typename Scalar>
struct LocationSkewness {
  Matrix<Scalar> location;
  Matrix<Scalar> skewness;
};

/// M = sum X_i (a_bar b_i - 1) / D,  A = sum X_i (b_bar - b_i) / D,
/// D = sum a_bar b_i - N.
template <typename Scalar>
LocationSkewness<Scalar> cm_update_location_skewness(const Dataset<Scalar>& data,
                                                     const EStepStats<Scalar>& stats) {
  const std::size_t count = data.size();
  if (stats.size() != count) throw ValidationError("E-step statistics do not match data");
  const Scalar a_bar = mean_of(stats.a);
  const Scalar b_bar = mean_of(stats.b);
  const Scalar denom =
      pairwise_sum<Scalar>(0, count, [&](std::size_t i) { return a_bar * stats.b(i); }) -
      static_cast<Scalar>(count);
  if (!(std::abs(denom) >= static_cast<Scalar>(kDegenerateDenominator)))
    throw DegenerateWeightsError("location/skewness denominator " + std::to_string(denom) +
                                 " is degenerate");
  const Matrix<Scalar> m_sum = pairwise_sum<Matrix<Scalar>>(0, count, [&](std::size_t i) {
    return Matrix<Scalar>(data[i] * (a_bar * stats.b(i) - 1));
  });
  const Matrix<Scalar> a_sum = pairwise_sum<Matrix<Scalar>>(0, count, [&](std::size_t i) {
    return Matrix<Scalar>(data[i] * (b_bar - stats.b(i)));
  });
  return {m_sum / denom, a_sum / denom};
}

template <typename Scalar>
struct NuSolution {
  Scalar nu;
  bool clamped;
  Scalar residual;  // log(nu/2) + 1 - psi(nu/2) - target at the returned nu
};

/// Root in nu of log(nu/2) + 1 - psi(nu/2) - target on [low, high].
///
/// The left side decreases strictly in nu, so a bracketed root is unique.
/// Without a sign change the bound with the smaller residual is returned and
/// `clamped` is set.
template <typename Scalar>
NuSolution<Scalar> solve_nu(Scalar target, Scalar low, Scalar high) {
  if (!std::isfinite(target)) throw DomainError("solve_nu: target must be finite");
  if (!(low > 0) || !(low < high) || !std::isfinite(high))
    throw ValidationError("solve_nu: need 0 < low < high");
  auto f = [&](Scalar nu) { return std::log(nu / 2) + 1 - digamma(nu / 2) - target; };

  Scalar a = low, b = high;
  Scalar fa = f(a), fb = f(b);
  if (fa == 0) return {a, false, fa};
  if (fb == 0) return {b, false, fb};
  if ((fa > 0) == (fb > 0)) {
    return std::abs(fa) <= std::abs(fb) ? NuSolution<Scalar>{a, true, fa}
                                        : NuSolution<Scalar>{b, true, fb};
  }

  // Brent's method.
  constexpr Scalar eps = std::numeric_limits<Scalar>::epsilon();
  Scalar c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < 200; ++iter) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const Scalar tol = 2 * eps * std::abs(b);
    const Scalar m = (c - b) / 2;
    // Run to a machine-precision bracket rather than stopping on a small
    // residual, so that nu moves continuously with the target.
    if (fb == 0 || std::abs(m) <= tol) break;
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      Scalar p, q, r;
      const Scalar s = fb / fa;
      if (a == c) {
        p = 2 * m * s;
        q = 1 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2 * m * q * (q - r) - (b - a) * (r - 1));
        q = (q - 1) * (r - 1) * (s - 1);
      }
      if (p > 0)
        q = -q;
      else
        p = -p;
      if (2 * p < std::min(3 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol ? d : (m > 0 ? tol : -tol);
    fb = f(b);
  }
  return {b, false, fb};
}

namespace detail {

// Symmetrize; if the result does not factor, add 1e-10 tr/dim once.
template <typename Scalar>
Matrix<Scalar> finish_scale_update(const Matrix<Scalar>& raw, const std::string& name) {
  Matrix<Scalar> s = symmetrize(raw);
  if (!s.allFinite()) throw NumericalError(name + " update is not finite");
  Eigen::LLT<Matrix<Scalar>> llt(s);
  if (llt.info() == Eigen::Success) return s;
  s.diagonal().array() += Scalar(1e-10) * std::abs(s.trace()) / static_cast<Scalar>(s.rows());
  llt.compute(s);
  if (llt.info() != Eigen::Success)
    throw FactorizationError(name, "update is not positive definite after jitter");
  return s;
}

}  // namespace detail

/// Sigma = 1/(N p) sum [b_i R_i Psi^-1 R_i' - A Psi^-1 R_i' - R_i Psi^-1 A'
///                       + a_i A Psi^-1 A'],  R_i = X_i - M.
template <typename Scalar>
Matrix<Scalar> cm_update_row_scale(const Dataset<Scalar>& data, const EStepStats<Scalar>& stats,
                                   const Matrix<Scalar>& location,
                                   const Matrix<Scalar>& skewness,
                                   const Matrix<Scalar>& col_scale) {
  const std::size_t count = data.size();
  const SpdFactor<Scalar> col(col_scale, "Psi");
  const Matrix<Scalar> skew_w = col.whiten_right(skewness);
  const Matrix<Scalar> sum = pairwise_sum<Matrix<Scalar>>(0, count, [&](std::size_t i) {
    const Matrix<Scalar> resid_w = col.whiten_right(data[i] - location);
    const Matrix<Scalar> cross = skew_w * resid_w.transpose();
    return Matrix<Scalar>(stats.b(i) * resid_w * resid_w.transpose() - cross -
                          cross.transpose() + stats.a(i) * skew_w * skew_w.transpose());
  });
  const Scalar scale = static_cast<Scalar>(count) * static_cast<Scalar>(data.cols);
  return detail::finish_scale_update<Scalar>(sum / scale, "Sigma");
}

/// Psi = 1/(N n) sum [b_i R_i' Sigma^-1 R_i - A' Sigma^-1 R_i - R_i' Sigma^-1 A
///                     + a_i A' Sigma^-1 A].
template <typename Scalar>
Matrix<Scalar> cm_update_col_scale(const Dataset<Scalar>& data, const EStepStats<Scalar>& stats,
                                   const Matrix<Scalar>& location,
                                   const Matrix<Scalar>& skewness,
                                   const Matrix<Scalar>& row_scale) {
  const std::size_t count = data.size();
  const SpdFactor<Scalar> row(row_scale, "Sigma");
  const Matrix<Scalar> skew_w = row.whiten_left(skewness);
  const Matrix<Scalar> sum = pairwise_sum<Matrix<Scalar>>(0, count, [&](std::size_t i) {
    const Matrix<Scalar> resid_w = row.whiten_left(data[i] - location);
    const Matrix<Scalar> cross = skew_w.transpose() * resid_w;
    return Matrix<Scalar>(stats.b(i) * resid_w.transpose() * resid_w - cross -
                          cross.transpose() + stats.a(i) * skew_w.transpose() * skew_w);
  });
  const Scalar scale = static_cast<Scalar>(count) * static_cast<Scalar>(data.rows);
  return detail::finish_scale_update<Scalar>(sum / scale, "Psi");
}

template <typename Scalar>
Scalar observed_loglik(const Dataset<Scalar>& data, const MvstModel<Scalar>& model) {
  return pairwise_sum<Scalar>(0, data.size(),
                              [&](std::size_t i) { return model.log_density(data[i]); });
}

template <typename Scalar>
Scalar observed_loglik(const Dataset<Scalar>& data, const MvstParams<Scalar>& params) {
  return observed_loglik(data, MvstModel<Scalar>(params));
}

template <typename Scalar>
struct AitkenResult {
  bool converged;
  Scalar acceleration;  // a^(t)
  Scalar asymptote;     // l_inf^(t+1)
};

/// a = (l_curr - l_prev) / (l_prev - l_prev2),
/// l_inf = l_prev + (l_curr - l_prev) / (1 - a);
/// converged when 0 <= l_inf - l_prev < epsilon.
template <typename Scalar>
AitkenResult<Scalar> aitken_check(Scalar l_prev2, Scalar l_prev, Scalar l_curr,
                                  Scalar epsilon) {
  const Scalar prev_step = l_prev - l_prev2;
  const Scalar step = l_curr - l_prev;
  if (prev_step == 0) {
    // Flat, then possibly moving.
    return {step < epsilon && step >= 0, Scalar(0), l_curr};
  }
  const Scalar accel = step / prev_step;
  const Scalar asymptote = l_prev + step / (1 - accel);
  const Scalar gap = asymptote - l_prev;
  return {gap < epsilon && gap >= 0, accel, asymptote};
}

enum class InitStrategy { moment, provided };

template <typename Scalar>
struct FitConfig {
  int max_iterations = 1000;
  Scalar epsilon = Scalar(1e-6);
  Scalar nu_low = Scalar(0.5);
  Scalar nu_high = Scalar(200);
  std::uint64_t seed = 0;  // reserved for randomized starts; moment starts ignore it
  InitStrategy init = InitStrategy::moment;
  std::optional<MvstParams<Scalar>> initial;  // used with InitStrategy::provided
};

using FitConfigd = FitConfig<double>;

template <typename Scalar>
void validate(const FitConfig<Scalar>& config) {
  if (config.max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  if (!(config.epsilon > 0)) throw ValidationError("epsilon must be positive");
  if (!(config.nu_low > 0) || !(config.nu_low < config.nu_high))
    throw ValidationError("nu bounds must satisfy 0 < low < high");
  if (config.init == InitStrategy::provided && !config.initial)
    throw ValidationError("provided initialization requires initial parameters");
}

/// Starting values.
///
/// moment: M = elementwise mean, A = mean - elementwise median (0.01 added to
/// the largest |entry| if rho would fall under 10 rho_min), Sigma = s I_n with
/// s the mean squared residual, Psi = I_p, nu = 10.
template <typename Scalar>
MvstParams<Scalar> init_params(const Dataset<Scalar>& data, const FitConfig<Scalar>& config) {
  validate(data);
  if (data.size() < 2) throw ValidationError("at least two observations are required");
  if (config.init == InitStrategy::provided) {
    if (!config.initial) throw ValidationError("no initial parameters provided");
    validate(*config.initial);
    if (config.initial->rows() != data.rows || config.initial->cols() != data.cols)
      throw ValidationError("initial parameters do not match data dimensions");
    return *config.initial;
  }

  const std::size_t count = data.size();
  const Eigen::Index n = data.rows, p = data.cols;
  const Matrix<Scalar> mean =
      pairwise_sum<Matrix<Scalar>>(0, count, [&](std::size_t i) { return data[i]; }) /
      static_cast<Scalar>(count);

  Matrix<Scalar> median(n, p);
  std::vector<Scalar> column(count);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index s = 0; s < p; ++s) {
      for (std::size_t i = 0; i < count; ++i) column[i] = data[i](r, s);
      std::sort(column.begin(), column.end());
      median(r, s) = count % 2 == 1
                         ? column[count / 2]
                         : (column[count / 2 - 1] + column[count / 2]) / 2;
    }
  }

  const Scalar spread =
      pairwise_sum<Scalar>(0, count,
                           [&](std::size_t i) { return (data[i] - mean).squaredNorm(); }) /
      (static_cast<Scalar>(count) * static_cast<Scalar>(n * p));
  const Scalar row_var = spread > 0 ? spread : Scalar(1);

  MvstParams<Scalar> params{mean, mean - median,
                            row_var * Matrix<Scalar>::Identity(n, n),
                            Matrix<Scalar>::Identity(p, p), Scalar(10)};
  if (rho_form(params.skewness, params.row_scale, params.col_scale) <
      10 * static_cast<Scalar>(kRhoMin)) {
    Eigen::Index r = 0, s = 0;
    params.skewness.cwiseAbs().maxCoeff(&r, &s);
    params.skewness(r, s) += Scalar(0.01);
  }
  return params;
}

template <typename Scalar>
struct FitResult {
  MvstParams<Scalar> params;          // tr(Sigma) = n
  std::vector<Scalar> loglik_trace;   // l^(t) after each iteration t = 1, 2, ...
  int iterations = 0;
  bool converged = false;
  std::vector<Scalar> aitken_history; // a^(t), one per convergence check
  Scalar initial_loglik{};            // at the starting values
  int nu_clamped = 0;                 // iterations where the nu root hit a bound
};

using FitResultd = FitResult<double>;

/// A step failed. Carries the iteration and the last parameters that were
/// fully valid.
template <typename Scalar>
class FitError : public NumericalError {
 public:
  FitError(int iteration, MvstParams<Scalar> last_valid, const std::string& detail)
      : NumericalError("fit failed at iteration " + std::to_string(iteration) + ": " + detail),
        iteration_(iteration),
        last_valid_(std::move(last_valid)) {}

  int iteration() const noexcept { return iteration_; }
  const MvstParams<Scalar>& last_valid() const noexcept { return last_valid_; }

 private:
  int iteration_;
  MvstParams<Scalar> last_valid_;
};

/// One ECM iteration: E-step; (M, A, nu); Sigma given the previous Psi; Psi
/// given the new Sigma.
template <typename Scalar>
MvstParams<Scalar> ecm_step(const Dataset<Scalar>& data, const MvstModel<Scalar>& model,
                            Scalar nu_low, Scalar nu_high, bool* nu_clamped = nullptr) {
  const EStepStats<Scalar> stats = e_step(data, model);
  auto [location, skewness] = cm_update_location_skewness(data, stats);
  const Vector<Scalar> b_plus_c = stats.b + stats.c;
  const NuSolution<Scalar> nu = solve_nu(mean_of(b_plus_c), nu_low, nu_high);
  if (nu_clamped) *nu_clamped = nu.clamped;
  Matrix<Scalar> row_scale =
      cm_update_row_scale(data, stats, location, skewness, model.params().col_scale);
  Matrix<Scalar> col_scale = cm_update_col_scale(data, stats, location, skewness, row_scale);
  return {std::move(location), std::move(skewness), std::move(row_scale),
          std::move(col_scale), nu.nu};
}

template <typename Scalar>
FitResult<Scalar> fit(const Dataset<Scalar>& data, const FitConfig<Scalar>& config) {
  validate(config);
  validate(data);
  FitResult<Scalar> result;
  MvstParams<Scalar> params = init_params(data, config);
  int iteration = 0;
  try {
    MvstModel<Scalar> model(params);
    result.initial_loglik = observed_loglik(data, model);
    for (iteration = 1; iteration <= config.max_iterations; ++iteration) {
      bool clamped = false;
      MvstParams<Scalar> next = ecm_step(data, model, config.nu_low, config.nu_high, &clamped);
      MvstModel<Scalar> next_model(next);
      const Scalar loglik = observed_loglik(data, next_model);
      if (!std::isfinite(loglik)) throw NumericalError("log-likelihood is not finite");
      params = std::move(next);
      model = std::move(next_model);
      result.nu_clamped += clamped ? 1 : 0;
      result.loglik_trace.push_back(loglik);
      result.iterations = iteration;
      const auto& trace = result.loglik_trace;
      if (trace.size() >= 3) {
        const auto check = aitken_check(trace[trace.size() - 3], trace[trace.size() - 2],
                                        trace.back(), config.epsilon);
        result.aitken_history.push_back(check.acceleration);
        if (check.converged) {
          result.converged = true;
          break;
        }
      }
    }
  } catch (const FitError<Scalar>&) {
    throw;
  } catch (const Error& e) {
    throw FitError<Scalar>(iteration, params, e.what());
  }
  result.params = normalize_scale(params);
  return result;
}

}  // namespace mvst

#endif  // MVST_ECM_HPP
