#ifndef LPBALL_SPECFUN_HPP
#define LPBALL_SPECFUN_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "lpball/errors.hpp"

namespace lpball {

/// Ball exponent p, statistic exponent q and dimension n.
struct BallParams {
  double p = 2.0;
  double q = 1.0;
  std::uint64_t n = 1;

  void validate() const {
    if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("BallParams: p must be positive");
    if (!(q > 0.0) || !std::isfinite(q)) throw DomainError("BallParams: q must be positive");
    if (n < 1) throw DomainError("BallParams: n must be at least 1");
  }
};

/// Symmetric 2x2 covariance of (|Y|^q, |Y|^p).
struct CovMatrix2 {
  double c11 = 0.0;
  double c12 = 0.0;
  double c22 = 0.0;

  double det() const { return c11 * c22 - c12 * c12; }
  bool is_psd(double tol = 0.0) const {
    return c11 >= -tol && c22 >= -tol && det() >= -tol * (1.0 + std::abs(c11 * c22));
  }
};

namespace detail {

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw DomainError(std::string(what) + " must be positive and finite");
}

/// Variances computed as differences of gamma ratios may land slightly
/// below zero at degenerate parameters.
inline double clamp_variance(double v, const char* what) {
  if (v >= 0.0) return v;
  if (v > -1e-12) return 0.0;
  throw ConsistencyError(std::string(what) + ": negative variance " + std::to_string(v));
}

}  // namespace detail

/// log Gamma(x) for x > 0, Lanczos approximation (g = 607/128, 14 terms).
/// Relative accuracy is about 1e-15 over the whole positive axis and, unlike
/// std::lgamma, the function touches no global state.
inline double log_gamma(double x) {
  static constexpr double cof[14] = {
      57.1562356658629235,     -59.5979603554754912,    14.1360979747417471,
      -0.491913816097620199,   .339946499848118887e-4,  .465236289270485756e-4,
      -.983744753048795646e-4, .158088703224912494e-3,  -.210264441724104883e-3,
      .217439618115212643e-3,  -.164318106536763890e-3, .844182239838527433e-4,
      -.261908384015814087e-4, .368991826595316234e-5};
  if (!(x > 0.0)) throw DomainError("log_gamma: argument must be positive");
  if (std::isinf(x)) return x;
  double y = x;
  double tmp = x + 5.24218750000000000;
  tmp = (x + 0.5) * std::log(tmp) - tmp;
  double ser = 0.999999999999997092;
  for (double c : cof) ser += c / ++y;
  return tmp + std::log(2.5066282746310005 * ser / x);
}

inline double gamma_fn(double x) { return std::exp(log_gamma(x)); }

/// q-th absolute moment of the p-generalized Gaussian.
inline double m_p(double p, double q) {
  detail::require_positive(p, "m_p: p");
  detail::require_positive(q, "m_p: q");
  if (q == p) return 1.0;
  return std::exp((q / p) * std::log(p) + log_gamma((q + 1.0) / p) - log_gamma(1.0 / p));
}

/// Cov(|Y|^r, |Y|^s) for Y p-generalized Gaussian.
inline double moment_cov(double p, double r, double s) {
  detail::require_positive(p, "moment_cov: p");
  detail::require_positive(r, "moment_cov: r");
  detail::require_positive(s, "moment_cov: s");
  return m_p(p, r + s) - m_p(p, r) * m_p(p, s);
}

/// Gamma(1/p) Gamma((2q+1)/p) / Gamma((q+1)/p)^2, equal to M_p(2q)/M_p(q)^2.
inline double gamma_ratio(double p, double q) {
  return std::exp(log_gamma(1.0 / p) + log_gamma((2.0 * q + 1.0) / p) -
                  2.0 * log_gamma((q + 1.0) / p));
}

inline CovMatrix2 covariance_matrix(double p, double q) {
  detail::require_positive(p, "covariance_matrix: p");
  detail::require_positive(q, "covariance_matrix: q");
  const double mq = m_p(p, q);
  CovMatrix2 c;
  // M_p(2q) - M_p(q)^2 written as M_p(q)^2 (ratio - 1) keeps the relative
  // accuracy when q is small.
  c.c11 = detail::clamp_variance(mq * mq * (gamma_ratio(p, q) - 1.0), "covariance_matrix c11");
  c.c22 = m_p(p, 2.0 * p) - 1.0;
  c.c12 = m_p(p, p + q) - mq;
  return c;
}

/// Asymptotic variance of the CLT for n^{1/p-1/q} ||Z||_q.
inline double clt_variance(double p, double q) {
  detail::require_positive(p, "clt_variance: p");
  detail::require_positive(q, "clt_variance: q");
  if (p == q) return 0.0;
  const double v = (gamma_ratio(p, q) - 1.0) / (q * q) - 1.0 / p;
  return detail::clamp_variance(v, "clt_variance");
}

/// The same variance assembled as Var(xi/(q M_p(q)) - eta/p) from the covariance entries.
inline double clt_variance_from_cov(const CovMatrix2& c, double p, double q) {
  const double a = 1.0 / (q * m_p(p, q));
  const double b = 1.0 / p;
  return detail::clamp_variance(a * a * c.c11 + b * b * c.c22 - 2.0 * a * b * c.c12,
                                "clt_variance_from_cov");
}

inline double clt_variance_from_cov(double p, double q) {
  return clt_variance_from_cov(covariance_matrix(p, q), p, q);
}

/// Variance in the generalized CLT, mu = lim mu_n/n and tau2 = lim Var(W_n)/n.
inline double gen_clt_variance(double p, double q, double mu, double tau2) {
  detail::require_positive(p, "gen_clt_variance: p");
  detail::require_positive(q, "gen_clt_variance: q");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw DomainError("gen_clt_variance: mu must be >= 0");
  if (!(tau2 >= 0.0) || !std::isfinite(tau2))
    throw DomainError("gen_clt_variance: tau2 must be >= 0");
  const double g = gamma_ratio(p, q);
  const double m1 = 1.0 + mu;
  const double v = g / (q * q) - 1.0 / (q * q) + 1.0 / (p * m1 * m1) - 2.0 / (p * m1) +
                   tau2 / (p * p * m1 * m1);
  return detail::clamp_variance(v, "gen_clt_variance");
}

inline double gen_clt_variance_from_cov(const CovMatrix2& c, double p, double q, double mu,
                                        double tau2) {
  const double a = 1.0 / (q * m_p(p, q));
  const double b = 1.0 / (p * (1.0 + mu));
  return detail::clamp_variance(a * a * c.c11 + b * b * (c.c22 + tau2) - 2.0 * a * b * c.c12,
                                "gen_clt_variance_from_cov");
}

inline double projection_gamma_ratio(double p) {
  return std::exp(log_gamma(1.0 / p) + log_gamma(5.0 / p) - 2.0 * log_gamma(3.0 / p));
}

/// CLT variance of the Euclidean norm of a Haar-random k_n-dimensional projection, k_n/n -> lambda.
inline double proj_variance_random(double p, double lambda) {
  detail::require_positive(p, "proj_variance_random: p");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw DomainError("proj_variance_random: lambda must lie in [0, 1]");
  const double v =
      0.25 * lambda * projection_gamma_ratio(p) - lambda * (0.75 + 1.0 / p) + 0.5;
  return detail::clamp_variance(v, "proj_variance_random");
}

/// CLT variance of the Euclidean norm of the projection onto the first k_n coordinates.
inline double proj_variance_det(double p, double lambda) {
  detail::require_positive(p, "proj_variance_det: p");
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw DomainError("proj_variance_det: lambda must lie in (0, 1]");
  const double v = 0.25 * (projection_gamma_ratio(p) - 1.0) - lambda / p;
  return detail::clamp_variance(v, "proj_variance_det");
}

inline double holder_conjugate(double q) {
  if (!(q > 1.0) || !std::isfinite(q)) throw DomainError("holder_conjugate: q must exceed 1");
  return q / (q - 1.0);
}

/// M_2(q*)^{1/q*}, the centering constant of the 1-dimensional projection width.
inline double width_constant(double q) {
  const double qs = holder_conjugate(q);
  return std::pow(m_p(2.0, qs), 1.0 / qs);
}

/// Same constant through the explicit gamma expression.
inline double width_constant_closed_form(double q) {
  if (!(q > 1.0)) throw DomainError("width_constant_closed_form: q must exceed 1");
  const double pi = std::numbers::pi;
  return std::sqrt(2.0 * std::pow(pi, (1.0 - q) / q)) *
         std::exp((1.0 - 1.0 / q) * log_gamma((2.0 * q - 1.0) / (2.0 * q - 2.0)));
}

/// CLT variance of the 1-dimensional projection width of the l_q ball.
inline double width_variance(double q) { return clt_variance(2.0, holder_conjugate(q)); }

/// The same variance written out with q* = q/(q-1).
inline double width_variance_closed_form(double q) {
  const double qs = holder_conjugate(q);
  const double r = std::exp(0.5 * std::log(std::numbers::pi) + log_gamma((2.0 * qs + 1.0) / 2.0) -
                            2.0 * log_gamma((qs + 1.0) / 2.0));
  return (r - 1.0) / (qs * qs) - 0.5;
}

/// (p + q^2) Gamma((1+q)/p)^2 - p Gamma(1/p) Gamma((1+2q)/p); strictly negative for p, q > 0.
inline double c_pq(double p, double q) {
  detail::require_positive(p, "c_pq: p");
  detail::require_positive(q, "c_pq: q");
  return std::exp(2.0 * log_gamma((1.0 + q) / p)) * ((p + q * q) - p * gamma_ratio(p, q));
}

}  // namespace lpball

#endif  // LPBALL_SPECFUN_HPP
