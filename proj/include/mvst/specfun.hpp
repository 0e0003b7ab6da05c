#ifndef MVST_SPECFUN_HPP
#define MVST_SPECFUN_HPP

// Log-space special functions: the modified Bessel function of the third kind
// K_v(x) for real order, its order derivative, digamma and log-gamma.

#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <string>

#include "mvst/errors.hpp"

namespace mvst {

namespace detail {

template <std::floating_point Real>
void require_finite(Real v, const char* what) {
  if (!std::isfinite(v))
    throw DomainError(std::string(what) + " must be finite");
}

// Taylor coefficients of 1/Gamma(z) about z = 0, index k holds the z^k term.
inline constexpr std::array<double, 29> kRecipGammaTaylor = {
    0.0,
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.042002635034095235529,
    0.1665386113822914895,
    -0.042197734555544336748,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.00021524167411495097282,
    0.00012805028238811618615,
    -0.000020134854780788238656,
    -1.2504934821426706573e-6,
    1.1330272319816958824e-6,
    -2.0563384169776071035e-7,
    6.1160951044814158179e-9,
    5.0020076444692229301e-9,
    -1.1812745704870201446e-9,
    1.0434267116911005105e-10,
    7.782263439905071254e-12,
    -3.6968056186422057082e-12,
    5.100370287454475979e-13,
    -2.0583260535665067832e-14,
    -5.3481225394230179824e-15,
    1.2267786282382607902e-15,
    -1.1812593016974587695e-16,
    1.1866922547516003326e-18,
    1.4123806553180317816e-18,
};

// Temme's auxiliary gamma quantities for |mu| <= 1/2:
//   gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu),  gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2
// from the even/odd parts of the 1/Gamma series, which avoids the 0/0 at mu = 0.
template <std::floating_point Real>
void temme_gammas(Real mu, Real& gam1, Real& gam2, Real& rg_plus,
                  Real& rg_minus) {
  const Real mu2 = mu * mu;
  Real odd = 0;   // sum over odd k of c_k mu^(k-1)
  Real even = 0;  // sum over even k of c_k mu^(k-2)
  for (int k = static_cast<int>(kRecipGammaTaylor.size()) - 1; k >= 1; --k) {
    const Real c = static_cast<Real>(kRecipGammaTaylor[k]);
    if (k % 2 == 1)
      odd = odd * mu2 + c;
    else
      even = even * mu2 + c;
  }
  gam1 = -even;
  gam2 = odd;
  rg_plus = gam2 - mu * gam1;   // 1/Gamma(1+mu)
  rg_minus = gam2 + mu * gam1;  // 1/Gamma(1-mu)
}

/// log K_mu(x) and K_{mu+1}(x)/K_mu(x) for |mu| <= 1/2.
template <std::floating_point Real>
struct SmallOrderK {
  Real log_k;
  Real ratio;
};

template <std::floating_point Real>
SmallOrderK<Real> small_order_k(Real mu, Real x) {
  using std::numbers::pi_v;
  constexpr Real eps = std::numeric_limits<Real>::epsilon();
  constexpr int max_iter = 100000;
  const Real mu2 = mu * mu;

  if (x <= Real(2)) {
    // Temme's series.
    const Real half_x = x / 2;
    const Real pimu = pi_v<Real> * mu;
    const Real fact = std::abs(pimu) < eps ? Real(1) : pimu / std::sin(pimu);
    Real d = -std::log(half_x);
    Real e = mu * d;
    const Real fact2 = std::abs(e) < eps ? Real(1) : std::sinh(e) / e;
    Real gam1, gam2, rg_plus, rg_minus;
    temme_gammas(mu, gam1, gam2, rg_plus, rg_minus);
    Real ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    Real sum = ff;
    e = std::exp(e);
    Real p = Real(0.5) * e / rg_plus;
    Real q = Real(0.5) / (e * rg_minus);
    Real c = 1;
    d = half_x * half_x;
    Real sum1 = p;
    for (int i = 1; i <= max_iter; ++i) {
      const Real ri = static_cast<Real>(i);
      ff = (ri * ff + p + q) / (ri * ri - mu2);
      c *= d / ri;
      p /= ri - mu;
      q /= ri + mu;
      const Real del = c * ff;
      sum += del;
      sum1 += c * (p - ri * ff);
      if (std::abs(del) < std::abs(sum) * eps) break;
    }
    return {std::log(sum), sum1 * (Real(2) / x) / sum};
  }

  // Steed's continued fraction with Temme's normalization.
  Real b = 2 * (1 + x);
  Real d = 1 / b;
  Real h = d;
  Real delh = d;
  Real q1 = 0;
  Real q2 = 1;
  const Real a1 = Real(0.25) - mu2;
  Real q = a1;
  Real c = a1;
  Real a = -a1;
  Real s = 1 + q * delh;
  for (int i = 2; i <= max_iter; ++i) {
    const Real ri = static_cast<Real>(i);
    a -= 2 * (ri - 1);
    c = -a * c / ri;
    const Real qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2;
    d = 1 / (b + a * d);
    delh = (b * d - 1) * delh;
    h += delh;
    const Real dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < eps) break;
  }
  h = a1 * h;
  const Real log_k = Real(0.5) * std::log(pi_v<Real> / (2 * x)) - x - std::log(s);
  return {log_k, (mu + x + Real(0.5) - h) / x};
}

// log K_v(x) for v >= 0 by upward recurrence on the ratio
// r_v = K_{v+1}/K_v, r_v = 2v/x + 1/r_{v-1}, which is stable for K.
template <std::floating_point Real>
Real log_bessel_k_recurrence(Real order, Real x) {
  const Real steps = std::floor(order + Real(0.5));
  const Real mu = order - steps;
  const auto base = small_order_k(mu, x);
  Real log_k = base.log_k;
  Real ratio = base.ratio;
  const long n = static_cast<long>(steps);
  for (long k = 0; k < n; ++k) {
    log_k += std::log(ratio);
    const Real v = mu + static_cast<Real>(k + 1);
    ratio = 2 * v / x + 1 / ratio;
  }
  return log_k;
}

// Debye uniform asymptotic expansion in the order:
//   K_v(v z) ~ sqrt(pi/(2v)) exp(-v eta) (1+z^2)^(-1/4) sum_k (-1)^k u_k(t) / v^k
template <std::floating_point Real>
Real log_bessel_k_uniform(Real order, Real x) {
  using std::numbers::pi_v;
  const Real z = x / order;
  const Real root = std::sqrt(1 + z * z);
  const Real t = 1 / root;
  const Real eta = root + std::log(z / (1 + root));
  const Real t2 = t * t;
  const Real u1 = t * (3 - 5 * t2) / 24;
  const Real u2 = t2 * (81 + t2 * (-462 + t2 * 385)) / 1152;
  const Real u3 =
      t * t2 * (30375 + t2 * (-369603 + t2 * (765765 - t2 * 425425))) / 414720;
  const Real u4 =
      t2 * t2 *
      (4465125 +
       t2 * (-94121676 + t2 * (349922430 + t2 * (-446185740 + t2 * 185910725)))) /
      39813120;
  const Real iv = 1 / order;
  const Real series = 1 + iv * (-u1 + iv * (u2 + iv * (-u3 + iv * u4)));
  return Real(0.5) * std::log(pi_v<Real> / (2 * order)) - order * eta -
         Real(0.25) * std::log1p(z * z) + std::log(series);
}

/// Orders at or above this use the uniform expansion instead of recurrence.
inline constexpr double kUniformOrderThreshold = 400.0;

}  // namespace detail

/// log K_order(argument), even in the order by construction.
template <std::floating_point Real>
Real log_bessel_k(Real order, Real argument) {
  detail::require_finite(order, "Bessel order");
  detail::require_finite(argument, "Bessel argument");
  if (!(argument > 0)) throw DomainError("Bessel argument must be positive");
  const Real v = std::abs(order);
  if (v >= static_cast<Real>(detail::kUniformOrderThreshold))
    return detail::log_bessel_k_uniform(v, argument);
  return detail::log_bessel_k_recurrence(v, argument);
}

/// d/d(order) of log K_order(argument).
///
/// Central difference with h = 1e-3 max(1, |order|) and one Richardson step.
/// Evaluated at |order| and sign-flipped, so it is exactly odd in the order.
template <std::floating_point Real>
Real dlog_bessel_k_dorder(Real order, Real argument) {
  detail::require_finite(order, "Bessel order");
  detail::require_finite(argument, "Bessel argument");
  if (!(argument > 0)) throw DomainError("Bessel argument must be positive");
  const Real v = std::abs(order);
  const Real h = Real(1e-3) * std::max(Real(1), v);
  auto central = [&](Real step) {
    return (log_bessel_k(v + step, argument) - log_bessel_k(v - step, argument)) /
           (2 * step);
  };
  const Real coarse = central(h);
  const Real fine = central(h / 2);
  const Real d = (4 * fine - coarse) / 3;
  return std::signbit(order) ? -d : d;
}

/// psi(x) = d/dx log Gamma(x) for x > 0.
template <std::floating_point Real>
Real digamma(Real x) {
  detail::require_finite(x, "digamma argument");
  if (!(x > 0)) throw DomainError("digamma argument must be positive");
  Real shift = 0;
  while (x < Real(10)) {
    shift += 1 / x;
    x += 1;
  }
  const Real r = 1 / (x * x);
  // Bernoulli tail: B_2k / (2k x^2k), k = 1..7
  const Real tail =
      r * (Real(1) / 12 -
           r * (Real(1) / 120 -
                r * (Real(1) / 252 -
                     r * (Real(1) / 240 -
                          r * (Real(1) / 132 -
                               r * (Real(691) / 32760 - r * (Real(1) / 12)))))));
  return std::log(x) - Real(0.5) / x - tail - shift;
}

namespace detail {
inline double lgamma_reentrant(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}
inline float lgamma_reentrant(float x) {
  int sign = 0;
  return ::lgammaf_r(x, &sign);
}
inline long double lgamma_reentrant(long double x) {
  int sign = 0;
  return ::lgammal_r(x, &sign);
}
}  // namespace detail

/// log Gamma(x) for x > 0. Uses the reentrant libm entry point so that
/// concurrent callers never touch the global signgam.
template <std::floating_point Real>
Real log_gamma(Real x) {
  detail::require_finite(x, "log-gamma argument");
  if (!(x > 0)) throw DomainError("log-gamma argument must be positive");
  return detail::lgamma_reentrant(x);
}

}  // namespace mvst

#endif  // MVST_SPECFUN_HPP
