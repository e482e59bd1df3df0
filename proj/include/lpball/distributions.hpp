#ifndef LPBALL_DISTRIBUTIONS_HPP
#define LPBALL_DISTRIBUTIONS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <type_traits>
#include <vector>

#include "lpball/errors.hpp"
#include "lpball/quadrature.hpp"
#include "lpball/rng.hpp"
#include "lpball/specfun.hpp"
#include "lpball/summation.hpp"
#include "lpball/variates.hpp"

namespace lpball {

struct Dirac0 {};

struct ExponentialLaw {
  double rate = 1.0;
};

struct GammaLaw {
  double shape = 1.0;
  double rate = 1.0;
};

/// User-supplied mixing law. The density is optional and only needed by density_h.
/// The assumptions of the limit theorems are the caller's responsibility.
struct ExternalLaw {
  std::function<double(Xoshiro256pp&)> sampler;
  std::function<double(double)> density;
  double mass_at_zero = 0.0;
  std::string name = "external";
};

using MixingLaw = std::variant<Dirac0, ExponentialLaw, GammaLaw, ExternalLaw>;

inline void validate_law(const MixingLaw& law) {
  std::visit(
      [](const auto& w) {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, ExponentialLaw>) {
          if (!(w.rate > 0.0) || !std::isfinite(w.rate))
            throw DomainError("Exponential law: rate must be positive");
        } else if constexpr (std::is_same_v<T, GammaLaw>) {
          if (!(w.rate > 0.0) || !std::isfinite(w.rate))
            throw DomainError("Gamma law: rate must be positive");
          if (!(w.shape > 0.0) || !std::isfinite(w.shape))
            throw DomainError("Gamma law: shape must be positive");
        } else if constexpr (std::is_same_v<T, ExternalLaw>) {
          if (!w.sampler) throw DomainError("External law: a sampler is required");
          if (!(w.mass_at_zero >= 0.0 && w.mass_at_zero <= 1.0))
            throw DomainError("External law: mass_at_zero must lie in [0, 1]");
        }
      },
      law);
}

/// W({0}).
inline double law_mass_at_zero(const MixingLaw& law) {
  if (std::holds_alternative<Dirac0>(law)) return 1.0;
  if (const auto* e = std::get_if<ExternalLaw>(&law)) return e->mass_at_zero;
  return 0.0;
}

/// Mean of W, or nullopt when not known in closed form.
inline std::optional<double> law_mean(const MixingLaw& law) {
  if (std::holds_alternative<Dirac0>(law)) return 0.0;
  if (const auto* e = std::get_if<ExponentialLaw>(&law)) return 1.0 / e->rate;
  if (const auto* g = std::get_if<GammaLaw>(&law)) return g->shape / g->rate;
  return std::nullopt;
}

inline std::optional<double> law_variance(const MixingLaw& law) {
  if (std::holds_alternative<Dirac0>(law)) return 0.0;
  if (const auto* e = std::get_if<ExponentialLaw>(&law)) return 1.0 / (e->rate * e->rate);
  if (const auto* g = std::get_if<GammaLaw>(&law)) return g->shape / (g->rate * g->rate);
  return std::nullopt;
}

inline std::string law_name(const MixingLaw& law) {
  struct V {
    std::string operator()(const Dirac0&) const { return "dirac0"; }
    std::string operator()(const ExponentialLaw& e) const {
      return "exponential(rate=" + std::to_string(e.rate) + ")";
    }
    std::string operator()(const GammaLaw& g) const {
      return "gamma(shape=" + std::to_string(g.shape) + ",rate=" + std::to_string(g.rate) + ")";
    }
    std::string operator()(const ExternalLaw& x) const { return x.name; }
  };
  return std::visit(V{}, law);
}

struct GGVector {
  std::vector<double> coords;
  double p = 2.0;
};

struct BallPoint {
  std::vector<double> coords;
  double p = 2.0;
};

/// One draw from W.
inline double sample_mixing(const MixingLaw& law, Xoshiro256pp& rng) {
  struct V {
    Xoshiro256pp& g;
    double operator()(const Dirac0&) const { return 0.0; }
    double operator()(const ExponentialLaw& e) const { return standard_exponential(g) / e.rate; }
    double operator()(const GammaLaw& w) const { return gamma_variate(g, w.shape) / w.rate; }
    double operator()(const ExternalLaw& x) const {
      const double w = x.sampler(g);
      if (!(w >= 0.0) || std::isinf(w))
        throw ConsistencyError("External law sampler returned " + std::to_string(w) +
                               "; draws must be finite and nonnegative");
      return w;
    }
  };
  return std::visit(V{rng}, law);
}

/// |Y|^p for a p-generalized Gaussian Y; equals p * Gamma(1/p, 1).
template <class G>
inline double sample_abs_pow(double p, G& g) {
  if (p == 2.0) {
    const double z = standard_normal(g);
    return z * z;
  }
  if (p == 1.0) return standard_exponential(g);
  return p * gamma_variate(g, 1.0 / p);
}

/// n independent p-generalized Gaussians, Y = s (pG)^{1/p}.
inline GGVector sample_pgg(double p, std::uint64_t n, Xoshiro256pp& rng) {
  detail::require_positive(p, "sample_pgg: p");
  if (n < 1) throw DomainError("sample_pgg: n must be at least 1");
  GGVector out;
  out.p = p;
  out.coords.resize(n);
  for (auto& y : out.coords) {
    if (p == 2.0) {
      // |N| has exactly the law of (2G)^{1/2}, G ~ Gamma(1/2, 1), and the sign is symmetric.
      y = standard_normal(rng);
      continue;
    }
    const double a = std::pow(sample_abs_pow(p, rng), 1.0 / p);
    y = (rng() >> 63) ? -a : a;
  }
  return out;
}

namespace detail {
inline double pow_sum(std::span<const double> xs, double p) {
  CompensatedSum s;
  for (double x : xs) s.add(p == 2.0 ? x * x : p == 1.0 ? std::abs(x) : std::pow(std::abs(x), p));
  return s.value();
}
}  // namespace detail

/// One draw from P_{W,n,p}: Y / (||Y||_p^p + W)^{1/p}.
inline BallPoint sample_ball(const BallParams& params, const MixingLaw& law, Xoshiro256pp& rng) {
  params.validate();
  GGVector y = sample_pgg(params.p, params.n, rng);
  const double w = sample_mixing(law, rng);
  const double denom = detail::pow_sum(y.coords, params.p) + w;
  if (!(denom > 0.0)) throw NumericError("sample_ball: ||Y||_p^p + W vanished");
  const double scale = std::pow(denom, -1.0 / params.p);
  BallPoint z;
  z.p = params.p;
  z.coords = std::move(y.coords);
  for (auto& c : z.coords) c *= scale;
#ifdef LPBALL_CHECK_INVARIANTS
  const double norm = std::pow(detail::pow_sum(z.coords, params.p), 1.0 / params.p);
  if (norm > 1.0 + 1e-12) throw ConsistencyError("sample_ball: point outside the ball");
  if (w == 0.0 && std::abs(norm - 1.0) > 1e-12)
    throw ConsistencyError("sample_ball: sphere point off the sphere");
#endif
  return z;
}

/// Power sums of one draw of Y^{(n)}: the full sums of |Y_i|^p and |Y_i|^q and
/// the sum of |Y_i|^q over the first `head` coordinates.
struct PowerSums {
  double sum_p = 0.0;
  double sum_q = 0.0;
  double head_q = 0.0;
};

/// Hot loop of the experiment harness. Draws are consumed in coordinate order,
/// so the result is a deterministic function of the generator state.
template <class G>
PowerSums sample_power_sums(double p, double q, std::uint64_t n, std::uint64_t head, G& g) {
  constexpr std::size_t kBlock = 256;
  std::array<double, kBlock> bp;
  std::array<double, kBlock> bq;
  const double r = q / p;
  CompensatedSum sp, sq, sh;
  std::uint64_t done = 0;
  while (done < n) {
    const std::size_t m = static_cast<std::size_t>(std::min<std::uint64_t>(kBlock, n - done));
    if (p == 2.0) {
      for (std::size_t i = 0; i < m; ++i) {
        const double z = standard_normal(g);
        bp[i] = z * z;
      }
    } else if (p == 1.0) {
      for (std::size_t i = 0; i < m; ++i) bp[i] = standard_exponential(g);
    } else {
      const double shape = 1.0 / p;
      for (std::size_t i = 0; i < m; ++i) bp[i] = p * gamma_variate(g, shape);
    }
    if (r == 1.0) {
      std::copy_n(bp.begin(), m, bq.begin());
    } else if (r == 0.5) {
      for (std::size_t i = 0; i < m; ++i) bq[i] = std::sqrt(bp[i]);
    } else if (r == 2.0) {
      for (std::size_t i = 0; i < m; ++i) bq[i] = bp[i] * bp[i];
    } else {
      for (std::size_t i = 0; i < m; ++i) bq[i] = std::pow(bp[i], r);
    }
    sp.add(block_sum(std::span<const double>(bp.data(), m)));
    sq.add(block_sum(std::span<const double>(bq.data(), m)));
    if (done < head) {
      const std::size_t h = static_cast<std::size_t>(std::min<std::uint64_t>(m, head - done));
      sh.add(block_sum(std::span<const double>(bq.data(), h)));
    }
    done += m;
  }
  return {sp.value(), sq.value(), sh.value()};
}

/// Radial density h(r) of the absolutely continuous part of P_{W,n,p}
/// with respect to the uniform distribution on the ball.
inline double density_h(double r, const BallParams& params, const MixingLaw& law) {
  params.validate();
  validate_law(law);
  if (!(r >= 0.0) || !(r < 1.0)) throw DomainError("density_h: r must lie in [0, 1)");
  const double p = params.p;
  const double np = static_cast<double>(params.n) / p;
  if (std::holds_alternative<Dirac0>(law)) return 0.0;
  const double rp = std::pow(r, p);
  const double one_minus = 1.0 - rp;
  const double kappa = rp / one_minus;
  const double log_front = -np * std::log(p) - log_gamma(1.0 + np) - (1.0 + np) * std::log(one_minus);

  auto gamma_case = [&](double alpha, double beta) {
    const double log_int = log_gamma(np + alpha) + alpha * std::log(beta) - log_gamma(alpha) -
                           (np + alpha) * std::log(kappa / p + beta);
    return std::exp(log_front + log_int);
  };

  if (const auto* e = std::get_if<ExponentialLaw>(&law)) {
    if (std::abs(e->rate * p - 1.0) < 4e-16) return 1.0;
    return gamma_case(1.0, e->rate);
  }
  if (const auto* g = std::get_if<GammaLaw>(&law)) return gamma_case(g->shape, g->rate);

  const auto& x = std::get<ExternalLaw>(law);
  if (!x.density)
    throw DomainError("density_h: the external law has no density; only a sampler was supplied");
  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double w = x.density(s);
    if (w == 0.0) return 0.0;
    return std::exp(np * std::log(s) - s * kappa / p + log_front) * w;
  };
  const auto res = integrate_semi_infinite<double>(integrand, 0.0, {1e-14, 1e-10, 4000});
  if (!res.converged) throw NumericError("density_h: quadrature did not converge");
  return res.value;
}

/// First k coordinates of x.
inline std::vector<double> project_coordinates(std::span<const double> x, std::uint64_t k) {
  if (k < 1 || k > x.size()) throw DomainError("project_coordinates: need 1 <= k <= n");
  return {x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k)};
}

/// ||P_E x||_2 for a Haar-distributed k-dimensional subspace E, realized by
/// orthonormalizing k standard Gaussian vectors in R^n.
inline double project_haar(std::span<const double> x, std::uint64_t k, Xoshiro256pp& rng) {
  const std::size_t n = x.size();
  if (k < 1 || k > n) throw DomainError("project_haar: need 1 <= k <= n");
  if (k == n) return std::sqrt(detail::pow_sum(x, 2.0));
  for (int attempt = 0; attempt < 16; ++attempt) {
    std::vector<std::vector<double>> basis;
    basis.reserve(k);
    bool ok = true;
    for (std::size_t r = 0; r < k && ok; ++r) {
      std::vector<double> v(n);
      for (auto& c : v) c = standard_normal(rng);
      const double n0 = std::sqrt(detail::pow_sum(v, 2.0));
      // Two passes of modified Gram-Schmidt.
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) {
          double d = 0.0;
          for (std::size_t i = 0; i < n; ++i) d += b[i] * v[i];
          for (std::size_t i = 0; i < n; ++i) v[i] -= d * b[i];
        }
      const double nv = std::sqrt(detail::pow_sum(v, 2.0));
      if (!(nv > 1e-10 * n0)) {
        ok = false;
        break;
      }
      for (auto& c : v) c /= nv;
      basis.push_back(std::move(v));
    }
    if (!ok) continue;
    CompensatedSum s;
    for (const auto& b : basis) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += b[i] * x[i];
      s.add(d * d);
    }
    return std::sqrt(s.value());
  }
  throw NumericError("project_haar: orthonormalization failed repeatedly");
}

/// Same law as project_haar given only ||x||_2: by rotation invariance
/// ||P_E x||_2^2 / ||x||_2^2 ~ Beta(k/2, (n-k)/2).
template <class G>
double haar_projection_norm(double norm2, std::uint64_t n, std::uint64_t k, G& g) {
  if (k < 1 || k > n) throw DomainError("haar_projection_norm: need 1 <= k <= n");
  if (k == n) return norm2;
  return norm2 * std::sqrt(beta_variate(g, 0.5 * static_cast<double>(k),
                                        0.5 * static_cast<double>(n - k)));
}

}  // namespace lpball

#endif  // LPBALL_DISTRIBUTIONS_HPP
