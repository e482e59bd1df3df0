#ifndef LPBALL_VARIATES_HPP
#define LPBALL_VARIATES_HPP

#include <array>
#include <cmath>
#include <cstdint>

#include "lpball/errors.hpp"
#include "lpball/rng.hpp"

namespace lpball {

namespace detail {

// 256-layer ziggurat for the standard normal (Marsaglia and Tsang 2000),
// with unnormalized density f(x) = exp(-x^2/2).
struct ZigguratTables {
  static constexpr double R = 3.6541528853610088;
  static constexpr double V = 0.00492867323399;
  std::array<double, 257> x{};
  std::array<double, 257> f{};

  ZigguratTables() {
    auto pdf = [](double v) { return std::exp(-0.5 * v * v); };
    x[0] = V / pdf(R);
    x[1] = R;
    for (int i = 1; i < 256; ++i) x[i + 1] = std::sqrt(-2.0 * std::log(V / x[i] + pdf(x[i])));
    x[256] = 0.0;
    for (int i = 0; i <= 256; ++i) f[i] = pdf(x[i]);
  }
};

inline const ZigguratTables& zig() {
  static const ZigguratTables t;
  return t;
}

template <class G>
[[gnu::noinline]] double normal_slow(G& g, double u, int i, double xx) {
  const ZigguratTables& z = zig();
  for (;;) {
    if (i == 0) {
      double a, c;
      do {
        a = -std::log(uniform_open01(g)) / ZigguratTables::R;
        c = -std::log(uniform_open01(g));
      } while (c + c < a * a);
      return u < 0.0 ? -(ZigguratTables::R + a) : ZigguratTables::R + a;
    }
    if (z.f[i] + uniform_open01(g) * (z.f[i + 1] - z.f[i]) < std::exp(-0.5 * xx * xx)) return xx;
    const std::uint64_t b = g();
    i = static_cast<int>(b & 0xff);
    u = static_cast<double>(static_cast<std::int64_t>(b) >> 11) * 0x1.0p-52;
    xx = u * z.x[i];
    if (std::abs(xx) < z.x[i + 1]) return xx;
  }
}

}  // namespace detail

/// Standard normal variate.
template <class G>
inline double standard_normal(G& g) {
  const detail::ZigguratTables& z = detail::zig();
  const std::uint64_t b = g();
  const int i = static_cast<int>(b & 0xff);
  const double u = static_cast<double>(static_cast<std::int64_t>(b) >> 11) * 0x1.0p-52;
  const double xx = u * z.x[i];
  if (std::abs(xx) < z.x[i + 1]) [[likely]]
    return xx;
  return detail::normal_slow(g, u, i, xx);
}

template <class G>
inline double standard_exponential(G& g) {
  return -std::log(uniform_open01(g));
}

/// log of a Gamma(shape, 1) variate; usable where the variate itself underflows.
template <class G>
double log_gamma_variate(G& g, double shape) {
  if (!(shape > 0.0)) throw DomainError("gamma variate: shape must be positive");
  if (shape == 1.0) return std::log(standard_exponential(g));
  double boost = 0.0;
  double a = shape;
  if (a < 1.0) {
    // G(a) = G(a+1) * U^{1/a}
    boost = std::log(uniform_open01(g)) / a;
    a += 1.0;
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = standard_normal(g);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open01(g);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2 || std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v)))
      return std::log(d * v) + boost;
  }
}

/// Gamma(shape, 1) by Marsaglia and Tsang, with the U^{1/a} boost for shape < 1.
template <class G>
double gamma_variate(G& g, double shape) {
  if (!(shape > 0.0)) throw DomainError("gamma variate: shape must be positive");
  if (shape == 1.0) return standard_exponential(g);
  if (shape >= 1.0) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = standard_normal(g);
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open01(g);
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }
  return std::exp(log_gamma_variate(g, shape));
}

/// Beta(a, b) as G_a / (G_a + G_b).
template <class G>
double beta_variate(G& g, double a, double b) {
  const double x = gamma_variate(g, a);
  const double y = gamma_variate(g, b);
  return x / (x + y);
}

}  // namespace lpball

#endif  // LPBALL_VARIATES_HPP
