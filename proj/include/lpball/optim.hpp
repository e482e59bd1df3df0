#ifndef LPBALL_OPTIM_HPP
#define LPBALL_OPTIM_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace lpball {

struct Minimum1D {
  double x = 0.0;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
};

/// Brent's minimizer on [a, b] (golden section with parabolic steps).
/// f may return +inf; such points are simply never accepted as the minimum.
template <class F>
Minimum1D minimize_brent(F&& f, double a, double b, double xtol = 1e-10, int max_iter = 200) {
  constexpr double golden = 0.3819660112501051;
  Minimum1D res;
  double x = a + golden * (b - a);
  double w = x, v = x;
  double fx = f(x);
  res.evaluations = 1;
  double fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const double m = 0.5 * (a + b);
    const double tol1 = xtol * std::abs(x) + xtol;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
    bool golden_step = true;
    if (std::abs(e) > tol1 && std::isfinite(fx) && std::isfinite(fw) && std::isfinite(fv)) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (x < m) ? tol1 : -tol1;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = (x < m) ? b - x : a - x;
      d = golden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
    const double fu = f(u);
    ++res.evaluations;
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

/// Scan n+1 equispaced points of [a, b], then refine with Brent around the best.
/// Guards against multimodality and against +inf plateaus that defeat pure bracketing.
template <class F>
Minimum1D minimize_scan_brent(F&& f, double a, double b, int n = 24, double xtol = 1e-10) {
  Minimum1D best;
  int best_i = -1;
  std::vector<double> vals(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    const double x = a + (b - a) * i / n;
    vals[static_cast<std::size_t>(i)] = f(x);
    ++best.evaluations;
    if (vals[static_cast<std::size_t>(i)] < best.value) {
      best.value = vals[static_cast<std::size_t>(i)];
      best.x = x;
      best_i = i;
    }
  }
  if (best_i < 0) return best;
  const double lo = a + (b - a) * std::max(0, best_i - 1) / n;
  const double hi = a + (b - a) * std::min(n, best_i + 1) / n;
  Minimum1D r = minimize_brent(f, lo, hi, xtol);
  r.evaluations += best.evaluations;
  if (r.value <= best.value) return r;
  best.evaluations = r.evaluations;
  return best;
}

}  // namespace lpball

#endif  // LPBALL_OPTIM_HPP
