#ifndef LPBALL_RATEFUN_HPP
#define LPBALL_RATEFUN_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lpball/errors.hpp"
#include "lpball/ext_real.hpp"
#include "lpball/optim.hpp"
#include "lpball/quadrature.hpp"
#include "lpball/specfun.hpp"

namespace lpball {

enum class SpeedKind { N, BnSquared, NPowPOverQ };

inline std::string speed_kind_name(SpeedKind k) {
  switch (k) {
    case SpeedKind::N: return "n";
    case SpeedKind::BnSquared: return "b_n^2";
    case SpeedKind::NPowPOverQ: return "n^(p/q)";
  }
  return "unknown";
}

/// A rate function tabulated on a 1-D grid, with the speed it belongs to.
struct RateGrid {
  std::vector<double> x;
  std::vector<ExtReal> rate;
  SpeedKind speed = SpeedKind::N;
};

struct DiracRate {};
struct ExponentialRate {
  double p = 1.0;
};
struct UserGridRate {
  RateGrid grid;
};

/// Rate function of the mixing variable W_n / n.
using MixingRate = std::variant<DiracRate, ExponentialRate, UserGridRate>;

inline ExtReal mixing_rate_eval(const MixingRate& iw, double x) {
  if (std::isnan(x)) throw DomainError("mixing_rate_eval: NaN argument");
  if (std::holds_alternative<DiracRate>(iw)) return x == 0.0 ? ExtReal(0.0) : ExtReal::infinity();
  if (const auto* e = std::get_if<ExponentialRate>(&iw)) {
    if (x < 0.0) return ExtReal::infinity();
    return ExtReal(x / e->p);
  }
  const RateGrid& g = std::get<UserGridRate>(iw).grid;
  if (g.x.empty() || g.x.size() != g.rate.size())
    throw DomainError("mixing_rate_eval: malformed user grid");
  if (x < g.x.front() || x > g.x.back()) return ExtReal::infinity();
  const auto it = std::lower_bound(g.x.begin(), g.x.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - g.x.begin());
  if (*it == x) return g.rate[j];
  const ExtReal lo = g.rate[j - 1], hi = g.rate[j];
  if (lo.is_infinite() || hi.is_infinite()) return ExtReal::infinity();
  const double w = (x - g.x[j - 1]) / (g.x[j] - g.x[j - 1]);
  return ExtReal((1.0 - w) * lo.value() + w * hi.value());
}

namespace detail {

inline void require_q_less_p(double p, double q, const char* what) {
  require_positive(p, what);
  require_positive(q, what);
  if (!(q < p)) throw DomainError(std::string(what) + ": requires q < p");
}

}  // namespace detail

/// t^2 / (2 sigma^2), the MDP rate of V_n / b_n.
inline ExtReal mdp_rate(double t, double p, double q) {
  detail::require_positive(p, "mdp_rate: p");
  detail::require_positive(q, "mdp_rate: q");
  if (p == q) throw DegenerateError("mdp_rate: sigma^2 = 0 at p = q, there is no MDP");
  if (q > p) throw DomainError("mdp_rate: requires q < p");
  return ExtReal(t * t / (2.0 * clt_variance(p, q)));
}

/// 1/2 <(x, y), C^{-1} (x, y)> with C the covariance of (|Y|^q, |Y|^p).
inline ExtReal mdp_rate_bivariate(double x, double y, double p, double q) {
  detail::require_q_less_p(p, q, "mdp_rate_bivariate");
  const CovMatrix2 c = covariance_matrix(p, q);
  const double det = c.det();
  if (det < 1e-14) throw DegenerateError("mdp_rate_bivariate: singular covariance matrix");
  return ExtReal(0.5 * (c.c22 * x * x + c.c11 * y * y - 2.0 * c.c12 * x * y) / det);
}

/// The bivariate rate written out in gamma functions as printed alongside the
/// bivariate MDP. Kept for comparison only: its xy coefficient lacks a factor
/// q, so it agrees with mdp_rate_bivariate only when q = 1.
inline double mdp_rate_bivariate_printed(double x, double y, double p, double q) {
  detail::require_q_less_p(p, q, "mdp_rate_bivariate_printed");
  const double c = c_pq(p, q);
  const double g1 = gamma_fn(1.0 / p);
  const double gq = gamma_fn((1.0 + q) / p);
  const double g2q = gamma_fn((1.0 + 2.0 * q) / p);
  return -std::pow(p, 1.0 - 2.0 * q / p) * g1 * g1 / (2.0 * c) * x * x -
         (g1 * g2q / (2.0 * c) - gq * gq / (2.0 * c)) * y * y +
         std::pow(p, -q / p) * g1 * gq / c * x * y;
}

struct BivariateFormComparison {
  double quadratic_form = 0.0;
  double printed_form = 0.0;
  double abs_diff = 0.0;
  bool agree = false;
};

inline BivariateFormComparison compare_bivariate_forms(double x, double y, double p, double q,
                                                        double tol = 1e-9) {
  BivariateFormComparison r;
  r.quadratic_form = mdp_rate_bivariate(x, y, p, q).value();
  r.printed_form = mdp_rate_bivariate_printed(x, y, p, q);
  r.abs_diff = std::abs(r.quadratic_form - r.printed_form);
  r.agree = r.abs_diff <= tol * (1.0 + std::abs(r.quadratic_form));
  return r;
}

struct ContractionSolution {
  double x = 0.0;
  double y = 0.0;
  double lambda = 0.0;
  double value = 0.0;
};

/// Minimizes the bivariate MDP rate over {x/(q M_p(q)) - y/p = t} by solving
/// the 3x3 Lagrange system.
inline ContractionSolution mdp_rate_contraction(double t, double p, double q) {
  detail::require_q_less_p(p, q, "mdp_rate_contraction");
  const CovMatrix2 c = covariance_matrix(p, q);
  const double det = c.det();
  if (det < 1e-14) throw DegenerateError("mdp_rate_contraction: singular covariance matrix");
  const double gx = 1.0 / (q * m_p(p, q));
  const double gy = -1.0 / p;
  // Unknowns (x, y, lambda).
  double A[3][4] = {{c.c22 / det, -c.c12 / det, gx, 0.0},
                    {-c.c12 / det, c.c11 / det, gy, 0.0},
                    {gx, gy, 0.0, t}};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    if (std::abs(A[piv][col]) < 1e-300) throw NumericError("mdp_rate_contraction: singular system");
    if (piv != col)
      for (int k = 0; k < 4; ++k) std::swap(A[col][k], A[piv][k]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = A[r][col] / A[col][col];
      for (int k = col; k < 4; ++k) A[r][k] -= f * A[col][k];
    }
  }
  ContractionSolution s;
  s.x = A[0][3] / A[0][0];
  s.y = A[1][3] / A[1][1];
  s.lambda = A[2][3] / A[2][2];
  s.value = mdp_rate_bivariate(s.x, s.y, p, q).value();
  return s;
}

/// LDP rate of n^{1/p-1/q} ||Z||_q for p < q, speed n^{p/q}.
inline ExtReal ldp_rate_qgtp(double x, double p, double q) {
  detail::require_positive(p, "ldp_rate_qgtp: p");
  detail::require_positive(q, "ldp_rate_qgtp: q");
  if (!(p < q)) throw DomainError("ldp_rate_qgtp: requires p < q");
  if (std::isnan(x)) throw DomainError("ldp_rate_qgtp: NaN argument");
  const double m = m_p(p, q);
  if (!(x >= std::pow(m, 1.0 / q))) return ExtReal::infinity();
  const double d = std::max(0.0, std::pow(x, q) - m);
  return ExtReal(std::pow(d, p / q) / p);
}

/// Value, gradient and Hessian of Lambda at one point.
struct LambdaValue {
  ExtReal value = ExtReal::infinity();
  std::array<double, 2> grad{};
  std::array<double, 3> hess{};  // (11, 12, 22)
};

namespace detail {

// Bound on log of int_U^inf x^k exp(-b x^r) dx, via Gamma(s, y) <= c y^{s-1} e^{-y}.
inline double log_tail_bound(double k, double b, double r, double U) {
  if (!(b > 0.0)) return std::numeric_limits<double>::infinity();
  const double s = (k + 1.0) / r;
  const double y = b * std::pow(U, r);
  double c = 1.0;
  if (s > 1.0) {
    if (y < 2.0 * (s - 1.0)) return std::numeric_limits<double>::infinity();
    c = 2.0;
  }
  return std::log(c / r) - s * std::log(b) + (s - 1.0) * std::log(y) - y;
}

}  // namespace detail

/// Lambda(t1, t2) = log int_0^inf exp(t1 x^q + (t2 - 1/p) x^p) dx / (p^{1/p} Gamma(1 + 1/p))
/// together with its gradient (tilted moments of |Y|^q, |Y|^p) and Hessian
/// (tilted covariance). +inf for t2 >= 1/p.
///
/// The integral is taken in x after factoring out the maximum of the exponent,
/// with breakpoints at the peak, on [0, U] where U is pushed out until an
/// incomplete-gamma bound on the remaining tail is below 1e-15 of every moment.
inline LambdaValue log_mgf_lambda_eval(double t1, double t2, double p, double q) {
  detail::require_q_less_p(p, q, "log_mgf_lambda");
  if (!std::isfinite(t1) || std::isnan(t2)) throw DomainError("log_mgf_lambda: non-finite argument");
  LambdaValue out;
  const double a = 1.0 / p - t2;
  if (!(a > 0.0)) return out;

  double m = 0.0, scale = 1.0, xstar = 0.0, width = 0.0;
  if (t1 > 0.0) {
    xstar = std::pow(q * t1 / (p * a), 1.0 / (p - q));
    m = t1 * std::pow(xstar, q) - a * std::pow(xstar, p);
    // The Laplace width degenerates when the peak sits near 0 and p > 2; the
    // spread never exceeds the larger of the peak and the a^{-1/p} scale.
    width = std::min(1.0 / std::sqrt(a * p * (p - q) * std::pow(xstar, p - 2.0)),
                     std::max(xstar, std::pow(a, -1.0 / p)));
    scale = std::max(xstar, width);
  } else if (t1 < 0.0) {
    scale = std::min(std::pow(a, -1.0 / p), std::pow(-t1, -1.0 / q));
  } else {
    scale = std::pow(a, -1.0 / p);
  }

  auto log_tail = [&](double k, double U) {
    double best = std::numeric_limits<double>::infinity();
    if (t1 > 0.0) {
      best = detail::log_tail_bound(k, a - t1 * std::pow(U, q - p), p, U) - m;
    } else {
      best = detail::log_tail_bound(k, a, p, U);
      if (t1 < 0.0) best = std::min(best, detail::log_tail_bound(k, -t1, q, U));
    }
    return best;
  };

  const std::array<double, 6> powers = {0.0, q, p, 2.0 * q, p + q, 2.0 * p};
  double U = (t1 > 0.0 ? xstar + 8.0 * width : 0.0) + 4.0 * scale;
  for (int i = 0; i < 200 && (log_tail(0.0, U) > -45.0 || log_tail(2.0 * p, U) > -45.0); ++i)
    U *= 1.5;

  auto integrand = [&](double x) {
    std::array<double, 6> v{};
    const double lx = std::log(x);
    const double xq = std::exp(q * lx);
    const double xp = std::exp(p * lx);
    const double e = std::exp(t1 * xq - a * xp - m);
    if (e == 0.0) return v;
    v[0] = e;
    v[1] = xq * e;
    v[2] = xp * e;
    v[3] = xq * xq * e;
    v[4] = xq * xp * e;
    v[5] = xp * xp * e;
    return v;
  };

  for (int attempt = 0; attempt < 6; ++attempt) {
    std::vector<double> cand;
    const double natural = std::pow(a, -1.0 / p);
    for (double f : {1.0 / 64, 1.0 / 8, 0.5, 1.0}) cand.push_back(f * std::min(scale, natural));
    if (t1 > 0.0) {
      for (double f : {1.0 / 64, 1.0 / 8, 0.5}) cand.push_back(f * xstar);
      for (double k : {-8.0, -2.0, 0.0, 2.0, 8.0}) cand.push_back(xstar + k * width);
    } else {
      for (double f : {1.0 / 64, 1.0 / 8, 0.5, 1.0}) cand.push_back(f * scale);
    }
    std::sort(cand.begin(), cand.end());
    std::vector<double> bp = {0.0};
    auto add = [&](double x) {
      if (x > bp.back() * (1.0 + 1e-12) && x > 0.0 && x < U * (1.0 - 1e-12)) bp.push_back(x);
    };
    for (double x : cand) add(x);
    for (double x = 2.0 * std::max(bp.back(), scale); x < U; x *= 2.0) add(x);
    bp.push_back(U);

    // The exponent carries absolute rounding error of order eps times its largest
    // term, which caps the attainable relative accuracy.
    const double expo_scale = t1 > 0.0 ? t1 * std::pow(xstar, q) + a * std::pow(xstar, p) : 1.0;
    const double rel = std::max(1e-13, 256.0 * std::numeric_limits<double>::epsilon() * expo_scale);
    const auto res = integrate_gk<std::array<double, 6>>(integrand, bp, {1e-300, rel, 3000});
    if (!res.converged)
      throw NumericError("log_mgf_lambda: quadrature did not converge at t = (" +
                         std::to_string(t1) + ", " + std::to_string(t2) + ")");
    bool tail_ok = true;
    for (std::size_t k = 0; k < 6; ++k)
      if (!(res.value[k] > 0.0) || log_tail(powers[k], U) > std::log(res.value[k]) - 34.5)
        tail_ok = false;
    if (!tail_ok) {
      U *= 2.0;
      continue;
    }
    const double i0 = res.value[0];
    const double lognorm = std::log(p) / p + log_gamma(1.0 + 1.0 / p);
    out.value = ExtReal(m + std::log(i0) - lognorm);
    const double g1 = res.value[1] / i0, g2 = res.value[2] / i0;
    out.grad = {g1, g2};
    out.hess = {res.value[3] / i0 - g1 * g1, res.value[4] / i0 - g1 * g2,
                res.value[5] / i0 - g2 * g2};
    return out;
  }
  throw NumericError("log_mgf_lambda: tail truncation failed");
}

inline ExtReal log_mgf_lambda(double t1, double t2, double p, double q) {
  return log_mgf_lambda_eval(t1, t2, p, q).value;
}

/// Lambda~(t) = log E exp(t |Y|^p) = -(1/p) log(1 - p t) for t < 1/p.
inline ExtReal log_mgf_lambda_tilde(double t, double p) {
  detail::require_positive(p, "log_mgf_lambda_tilde: p");
  if (std::isnan(t)) throw DomainError("log_mgf_lambda_tilde: NaN argument");
  if (!(t < 1.0 / p)) return ExtReal::infinity();
  const double v = -std::log1p(-p * t) / p;
  if (std::isinf(v)) return ExtReal::infinity();
  return ExtReal(v);
}

/// Conjugate of Lambda~: (s - 1)/p - (1/p) log s for s > 0.
inline ExtReal lambda_tilde_conjugate(double s, double p) {
  detail::require_positive(p, "lambda_tilde_conjugate: p");
  if (!(s > 0.0)) return ExtReal::infinity();
  return ExtReal(std::max(0.0, ((s - 1.0) - std::log(s)) / p));
}

enum class ConjugateStatus { Converged, Boundary, Unbounded, NotConverged };

inline std::string conjugate_status_name(ConjugateStatus s) {
  switch (s) {
    case ConjugateStatus::Converged: return "converged";
    case ConjugateStatus::Boundary: return "boundary";
    case ConjugateStatus::Unbounded: return "unbounded";
    case ConjugateStatus::NotConverged: return "not_converged";
  }
  return "unknown";
}

struct ConjugatePoint {
  ExtReal value = ExtReal::infinity();
  std::array<double, 2> argmax{};
  bool converged = false;
  int iterations = 0;
  ConjugateStatus status = ConjugateStatus::NotConverged;
  double grad_norm = std::numeric_limits<double>::infinity();
};

struct ConjugateOptions {
  std::optional<std::array<double, 2>> start;
  double grad_tol = 1e-8;
  int max_iter = 400;
};

/// Lambda*(s) = sup_{t2 < 1/p} t.s - Lambda(t).
///
/// Damped Newton on the barrier objective t.s - Lambda(t) + kappa log(1/p - t2)
/// with kappa shrunk geometrically, then Newton on the bare objective. The
/// supremum is +inf outside {s1 > 0, s2 > s1^{p/q}}; it can also be attained
/// only in the limit t2 -> 1/p, reported as status Boundary.
inline ConjugatePoint legendre_fenchel(double s1, double s2, double p, double q,
                                       const ConjugateOptions& opt = {}) {
  detail::require_q_less_p(p, q, "legendre_fenchel");
  if (!std::isfinite(s1) || !std::isfinite(s2)) throw DomainError("legendre_fenchel: non-finite s");
  ConjugatePoint res;
  if (!(s1 > 0.0) || !(s2 > 0.0) || !(s2 > std::pow(s1, p / q))) {
    res.status = ConjugateStatus::Unbounded;
    return res;
  }
  const double tmax = 1.0 / p;

  struct Eval {
    double f = -std::numeric_limits<double>::infinity();
    std::array<double, 2> g{};
    std::array<double, 3> h{};
  };
  auto eval = [&](const std::array<double, 2>& t) {
    Eval e;
    if (!(t[1] < tmax)) return e;
    LambdaValue L;
    try {
      L = log_mgf_lambda_eval(t[0], t[1], p, q);
    } catch (const NumericError&) {
      return e;
    }
    if (L.value.is_infinite()) return e;
    e.f = t[0] * s1 + t[1] * s2 - L.value.value();
    e.g = {s1 - L.grad[0], s2 - L.grad[1]};
    e.h = {L.hess[0], L.hess[1], L.hess[2]};  // Hessian of Lambda (the objective's is its negative)
    return e;
  };

  std::array<double, 2> t{};
  Eval cur;
  if (opt.start && (*opt.start)[1] < tmax) {
    t = *opt.start;
    cur = eval(t);
  }
  if (!std::isfinite(cur.f)) {
    const double t1s[] = {-20, -10, -5, -2, -1, -0.5, 0, 0.5, 1, 2, 5, 10, 20};
    const double t2s[] = {-20, -10, -5, -2, -1, -0.5, 0, 0.5 * tmax, 0.9 * tmax, 0.99 * tmax};
    for (double a : t1s)
      for (double b : t2s) {
        if (!(b < tmax)) continue;
        const Eval e = eval({a, b});
        if (e.f > cur.f) {
          cur = e;
          t = {a, b};
        }
      }
    if (!std::isfinite(cur.f)) throw NumericError("legendre_fenchel: no finite starting point");
  }

  // One damped Newton step on f + kappa log(tmax - t2). Returns false when no progress is possible.
  auto newton_step = [&](double kappa) {
    const double gap = tmax - t[1];
    const double gb1 = cur.g[0];
    const double gb2 = cur.g[1] - kappa / gap;
    const double h11 = cur.h[0], h12 = cur.h[1], h22 = cur.h[2] + kappa / (gap * gap);
    const double det = h11 * h22 - h12 * h12;
    std::array<double, 2> d;
    if (det > 1e-300 * (1.0 + h11 * h22) && h11 > 0.0) {
      d = {(h22 * gb1 - h12 * gb2) / det, (h11 * gb2 - h12 * gb1) / det};
    } else {
      d = {gb1, gb2};  // gradient ascent fallback
    }
    double alpha = 1.0;
    if (d[1] > 0.0) alpha = std::min(1.0, 0.95 * gap / d[1]);
    const double slope = gb1 * d[0] + gb2 * d[1];
    if (!(slope > 1e-30)) return false;
    // Once the predicted gain is below the quadrature noise in f, Armijo cannot
    // discriminate any more; the local quadratic model is trusted instead.
    if (slope < 1e-12 && alpha == 1.0 && det > 0.0) {
      const std::array<double, 2> tn = {t[0] + d[0], t[1] + d[1]};
      const Eval en = eval(tn);
      if (std::isfinite(en.f)) {
        t = tn;
        cur = en;
        return true;
      }
    }
    const double barrier0 = kappa > 0.0 ? kappa * std::log(gap) : 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      const std::array<double, 2> tn = {t[0] + alpha * d[0], t[1] + alpha * d[1]};
      if (tn[1] < tmax) {
        const Eval en = eval(tn);
        if (std::isfinite(en.f)) {
          const double bn = kappa > 0.0 ? kappa * std::log(tmax - tn[1]) : 0.0;
          if (en.f + bn >= cur.f + barrier0 + 1e-4 * alpha * slope ||
              (ls > 40 && en.f + bn >= cur.f + barrier0)) {
            t = tn;
            cur = en;
            return true;
          }
        }
      }
      alpha *= 0.5;
    }
    return false;
  };

  // Gradient noise of the quadrature scales with the moments, i.e. with s.
  const double gfloor = 1e-11 * (1.0 + std::abs(s1) + std::abs(s2));
  int it = 0;
  for (double kappa = 1e-2; kappa > 1e-14 && it < opt.max_iter; kappa *= 0.1) {
    for (int inner = 0; inner < 40 && it < opt.max_iter; ++inner, ++it) {
      const double gap = tmax - t[1];
      const double gn = std::hypot(cur.g[0], cur.g[1] - kappa / gap);
      if (gn < gfloor) break;
      const std::array<double, 2> before = t;
      if (!newton_step(kappa)) break;
      if (std::hypot(t[0] - before[0], t[1] - before[1]) < 1e-14 * (1.0 + std::hypot(t[0], t[1]))) break;
      if (std::abs(t[0]) > 1e8) break;
    }
  }

  auto finish = [&](ConjugateStatus st) {
    res.iterations = it;
    res.argmax = t;
    res.grad_norm = std::hypot(cur.g[0], cur.g[1]);
    res.status = st;
    res.converged = st == ConjugateStatus::Converged;
    res.value = st == ConjugateStatus::Unbounded ? ExtReal::infinity() : ExtReal(std::max(0.0, cur.f));
    return res;
  };

  for (; it < opt.max_iter; ++it) {
    const double gn = std::hypot(cur.g[0], cur.g[1]);
    if (gn < opt.grad_tol) return finish(ConjugateStatus::Converged);
    if (std::abs(t[0]) > 1e8) return finish(ConjugateStatus::Unbounded);
    const double gap = tmax - t[1];
    if (gap < 1e-9 && cur.g[1] > 0.0) return finish(ConjugateStatus::Boundary);
    if (!newton_step(0.0)) break;
  }
  const double gap = tmax - t[1];
  if (gap < 1e-7 && cur.g[1] > 0.0) return finish(ConjugateStatus::Boundary);
  return finish(ConjugateStatus::NotConverged);
}

struct LdpOptions {
  int starts = 8;
  int max_sweeps = 40;
  double objective_tol = 1e-8;
};

namespace detail {

// Lambda* with a warm start carried between nearby evaluations.
class ConjugateCache {
 public:
  ConjugateCache(double p, double q) : p_(p), q_(q) {}

  ExtReal operator()(double s1, double s2) {
    ConjugateOptions o;
    o.start = last_;
    ConjugatePoint c = legendre_fenchel(s1, s2, p_, q_, o);
    if (c.status == ConjugateStatus::NotConverged && last_) {
      o.start.reset();
      c = legendre_fenchel(s1, s2, p_, q_, o);
    }
    if (c.status == ConjugateStatus::Converged) last_ = c.argmax;
    if (c.status == ConjugateStatus::NotConverged)
      throw NumericError("ldp_rate: conjugate did not converge at s = (" + std::to_string(s1) +
                         ", " + std::to_string(s2) + ")");
    return c.value;
  }

 private:
  double p_, q_;
  std::optional<std::array<double, 2>> last_;
};

inline double to_objective(ExtReal v) { return v.to_double(); }

}  // namespace detail

/// LDP rate (speed n) of n^{1/p-1/q} ||Z||_q for q < p: the infimum of
/// Lambda*(t1, t2) + I_W(t3) over t1^{1/q} (t2 + t3)^{-1/p} = x.
///
/// On the level set t1 = x^q (t2 + t3)^{q/p}. Finite values need x < 1 and
/// t3 < t2 (1 - x^p)/x^p, so the search runs over u = log t2 and the fraction
/// theta in [0, 1) of that bound.
inline ExtReal ldp_rate_qltp(double x, double p, double q, const MixingRate& iw,
                             const LdpOptions& opt = {}) {
  detail::require_q_less_p(p, q, "ldp_rate_qltp");
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("ldp_rate_qltp: x must be positive");
  const double xp = std::pow(x, p);
  if (!(xp < 1.0)) return ExtReal::infinity();
  const double xq = std::pow(x, q);
  const double slack = (1.0 - xp) / xp;
  detail::ConjugateCache lf(p, q);

  auto objective = [&](double u, double theta) {
    const double t2 = std::exp(u);
    const double t3 = theta * t2 * slack;
    const ExtReal iw_val = mixing_rate_eval(iw, t3);
    if (iw_val.is_infinite()) return std::numeric_limits<double>::infinity();
    const ExtReal c = lf(xq * std::pow(t2 + t3, q / p), t2);
    return (c + iw_val).to_double();
  };

  if (std::holds_alternative<DiracRate>(iw)) {
    auto f = [&](double u) { return objective(u, 0.0); };
    const Minimum1D r = minimize_scan_brent(f, -8.0, 8.0, 32, 1e-9);
    if (!std::isfinite(r.value)) return ExtReal::infinity();
    return ExtReal(std::max(0.0, r.value));
  }

  const double theta_max = 1.0 - 1e-9;
  double best = std::numeric_limits<double>::infinity();
  const double u_starts[] = {0.0, -1.0, 1.0, 2.0};
  const double th_starts[] = {0.0, 0.5};
  int started = 0;
  for (double u0 : u_starts)
    for (double th0 : th_starts) {
      if (started++ >= opt.starts) break;
      double u = u0, th = th0;
      double fval = objective(u, th);
      for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        const double before = fval;
        const Minimum1D ru = minimize_brent([&](double v) { return objective(v, th); }, u - 3.0,
                                            u + 3.0, 1e-9);
        if (ru.value <= fval) {
          u = ru.x;
          fval = ru.value;
        }
        const Minimum1D rt =
            minimize_scan_brent([&](double v) { return objective(u, v); }, 0.0, theta_max, 8, 1e-10);
        if (rt.value <= fval) {
          th = rt.x;
          fval = rt.value;
        }
        if (std::isfinite(before) && before - fval < 0.1 * opt.objective_tol) break;
      }
      // Finite-difference Newton polish in (u, theta).
      for (int k = 0; k < 20 && std::isfinite(fval); ++k) {
        const double hu = 1e-4, ht = 1e-4;
        auto F = [&](double a, double b) { return objective(a, std::clamp(b, 0.0, theta_max)); };
        const double fpu = F(u + hu, th), fmu = F(u - hu, th);
        const double tp = std::min(th + ht, theta_max), tm = std::max(th - ht, 0.0);
        const double fpt = F(u, tp), fmt = F(u, tm);
        if (!std::isfinite(fpu + fmu + fpt + fmt)) break;
        const double gu = (fpu - fmu) / (2 * hu);
        const double huu = (fpu - 2 * fval + fmu) / (hu * hu);
        const double gt = (fpt - fmt) / (tp - tm);
        const double htt = (fpt - 2 * fval + fmt) / (0.25 * (tp - tm) * (tp - tm));
        if (!(huu > 0.0)) break;
        double du = -gu / huu;
        double dt = htt > 0.0 ? -gt / htt : 0.0;
        double nu = u + du, nt = std::clamp(th + dt, 0.0, theta_max);
        double fn = F(nu, nt);
        if (!(fn < fval)) break;
        const double gain = fval - fn;
        u = nu;
        th = nt;
        fval = fn;
        if (gain < 0.1 * opt.objective_tol) break;
      }
      best = std::min(best, fval);
    }
  if (!std::isfinite(best)) return ExtReal::infinity();
  return ExtReal(std::max(0.0, best));
}

/// LDP rate (speed n) of ||Z||_p: the infimum of Lambda~*(t1) + I_W(t2)
/// over t1 / (t1 + t2) = x^p, i.e. t2 = t1 (x^{-p} - 1).
inline ExtReal ldp_rate_p_eq_q(double x, double p, const MixingRate& iw) {
  detail::require_positive(p, "ldp_rate_p_eq_q: p");
  if (!(x > 0.0 && x <= 1.0)) return ExtReal::infinity();
  const double ratio = std::pow(x, -p) - 1.0;
  auto f = [&](double u) {
    const double t1 = std::exp(u);
    const ExtReal v = lambda_tilde_conjugate(t1, p) + mixing_rate_eval(iw, ratio == 0.0 ? 0.0 : t1 * ratio);
    return v.to_double();
  };
  const Minimum1D r = minimize_scan_brent(f, -30.0, 30.0, 240, 1e-12);
  if (!std::isfinite(r.value)) return ExtReal::infinity();
  return ExtReal(std::max(0.0, r.value));
}

}  // namespace lpball

#endif  // LPBALL_RATEFUN_HPP
