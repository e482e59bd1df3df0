#ifndef LPBALL_QUADRATURE_HPP
#define LPBALL_QUADRATURE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "lpball/errors.hpp"

namespace lpball {

struct QuadOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  std::size_t max_intervals = 4000;
};

template <class T>
struct QuadResult {
  T value{};
  T error{};
  std::size_t evaluations = 0;
  bool converged = false;
};

namespace detail {

// Scalars and fixed-size arrays are integrated with the same code.
template <class T>
struct QuadTraits;

template <>
struct QuadTraits<double> {
  static constexpr std::size_t size = 1;
  static double& at(double& v, std::size_t) { return v; }
  static double at(const double& v, std::size_t) { return v; }
};

template <std::size_t N>
struct QuadTraits<std::array<double, N>> {
  static constexpr std::size_t size = N;
  static double& at(std::array<double, N>& v, std::size_t i) { return v[i]; }
  static double at(const std::array<double, N>& v, std::size_t i) { return v[i]; }
};

inline constexpr std::array<double, 8> kGkNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Segment {
  double a, b;
  T value, error;
};

template <class T, class F>
Segment<T> gk15(F& f, double a, double b) {
  using Tr = QuadTraits<T>;
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  T kron{}, gauss{};
  const T fc = f(c);
  for (std::size_t k = 0; k < Tr::size; ++k) {
    Tr::at(kron, k) = kKronrodWeights[7] * Tr::at(fc, k);
    Tr::at(gauss, k) = kGaussWeights[3] * Tr::at(fc, k);
  }
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = h * kGkNodes[j];
    const T f1 = f(c - dx);
    const T f2 = f(c + dx);
    for (std::size_t k = 0; k < Tr::size; ++k) {
      const double s = Tr::at(f1, k) + Tr::at(f2, k);
      Tr::at(kron, k) += kKronrodWeights[j] * s;
      if (j % 2 == 1) Tr::at(gauss, k) += kGaussWeights[j / 2] * s;
    }
  }
  Segment<T> seg{a, b, {}, {}};
  for (std::size_t k = 0; k < Tr::size; ++k) {
    Tr::at(seg.value, k) = h * Tr::at(kron, k);
    Tr::at(seg.error, k) = std::abs(h * (Tr::at(kron, k) - Tr::at(gauss, k)));
  }
  return seg;
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature over [x0, x1, ..., xm].
///
/// T is double or std::array<double, N>; for arrays every component must meet
/// max(abs_tol, rel_tol * |I_k|). The interval with the largest scaled error
/// is bisected until that holds or max_intervals is reached.
template <class T, class F>
QuadResult<T> integrate_gk(F f, const std::vector<double>& breakpoints, const QuadOptions& opt = {}) {
  using Tr = detail::QuadTraits<T>;
  using Seg = detail::Segment<T>;
  if (breakpoints.size() < 2) throw DomainError("integrate_gk: need at least two breakpoints");
  for (std::size_t i = 1; i < breakpoints.size(); ++i)
    if (!(breakpoints[i] > breakpoints[i - 1]) || !std::isfinite(breakpoints[i]))
      throw DomainError("integrate_gk: breakpoints must be finite and increasing");

  QuadResult<T> res;
  std::vector<Seg> segs;
  segs.reserve(breakpoints.size() - 1);
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    segs.push_back(detail::gk15<T>(f, breakpoints[i - 1], breakpoints[i]));
    res.evaluations += 15;
  }

  auto totals = [&](T& value, T& error) {
    value = T{};
    error = T{};
    for (const Seg& s : segs)
      for (std::size_t k = 0; k < Tr::size; ++k) {
        Tr::at(value, k) += Tr::at(s.value, k);
        Tr::at(error, k) += Tr::at(s.error, k);
      }
  };

  for (;;) {
    totals(res.value, res.error);
    std::array<double, Tr::size> tol{};
    bool ok = true;
    for (std::size_t k = 0; k < Tr::size; ++k) {
      tol[k] = std::max(opt.abs_tol, opt.rel_tol * std::abs(Tr::at(res.value, k)));
      if (!(Tr::at(res.error, k) <= tol[k])) ok = false;
    }
    if (ok) {
      res.converged = true;
      return res;
    }
    if (segs.size() >= opt.max_intervals) return res;

    std::size_t worst = 0;
    double worst_score = -1.0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      double score = 0.0;
      for (std::size_t k = 0; k < Tr::size; ++k)
        score = std::max(score, Tr::at(segs[i].error, k) / tol[k]);
      if (std::isnan(score)) score = std::numeric_limits<double>::infinity();
      if (score > worst_score) {
        worst_score = score;
        worst = i;
      }
    }
    const Seg w = segs[worst];
    const double mid = 0.5 * (w.a + w.b);
    if (!(mid > w.a && mid < w.b)) return res;  // interval exhausted at machine precision
    segs[worst] = detail::gk15<T>(f, w.a, mid);
    segs.push_back(detail::gk15<T>(f, mid, w.b));
    res.evaluations += 30;
  }
}

template <class F>
QuadResult<double> integrate(F f, double a, double b, const QuadOptions& opt = {}) {
  return integrate_gk<double>(std::move(f), {a, b}, opt);
}

/// Integral over [a, inf) via x = a + t/(1-t).
template <class T = double, class F>
QuadResult<T> integrate_semi_infinite(F f, double a, const QuadOptions& opt = {}) {
  using Tr = detail::QuadTraits<T>;
  auto g = [&](double t) {
    T out{};
    if (t >= 1.0) return out;
    const double om = 1.0 - t;
    const double x = a + t / om;
    const double jac = 1.0 / (om * om);
    T v = f(x);
    for (std::size_t k = 0; k < Tr::size; ++k) {
      const double fk = Tr::at(v, k);
      Tr::at(out, k) = (fk == 0.0) ? 0.0 : fk * jac;
    }
    return out;
  };
  return integrate_gk<T>(g, {0.0, 0.5, 0.9, 0.99, 1.0}, opt);
}

}  // namespace lpball

#endif  // LPBALL_QUADRATURE_HPP
