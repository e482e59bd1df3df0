#ifndef LPBALL_STATISTICS_HPP
#define LPBALL_STATISTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lpball/errors.hpp"
#include "lpball/specfun.hpp"

namespace lpball {

/// Streaming count / mean / sum of squared deviations / extremes.
struct MomentSummary {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  void push(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
    min = std::min(min, x);
    max = std::max(max, x);
  }

  double variance() const {
    if (count < 2) return 0.0;
    return std::max(0.0, m2 / static_cast<double>(count - 1));
  }
  /// Standard error of the mean.
  double stderr_mean() const {
    return count < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(count));
  }
};

/// Parallel-variance combination (Chan, Golub and LeVeque).
inline MomentSummary merge(const MomentSummary& a, const MomentSummary& b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  MomentSummary r;
  r.count = a.count + b.count;
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  const double n = static_cast<double>(r.count);
  const double d = b.mean - a.mean;
  r.mean = (na * a.mean + nb * b.mean) / n;
  r.m2 = a.m2 + b.m2 + d * d * na * nb / n;
  r.min = std::min(a.min, b.min);
  r.max = std::max(a.max, b.max);
  return r;
}

inline MomentSummary summarize(std::span<const double> values) {
  MomentSummary s;
  for (double v : values) s.push(v);
  return s;
}

/// Standard error of the sample variance, sqrt((m4 - (n-3)/(n-1) s^4) / n).
inline double variance_stderr(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 4) return std::numeric_limits<double>::infinity();
  const MomentSummary s = summarize(values);
  double m4 = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    m4 += d * d * d * d;
  }
  m4 /= static_cast<double>(n);
  const double s2 = s.variance();
  const double nn = static_cast<double>(n);
  const double v = (m4 - (nn - 3.0) / (nn - 1.0) * s2 * s2) / nn;
  return std::sqrt(std::max(v, 0.0));
}

enum class StatisticKind { Vn, VnGeneral, Un, MdpScaled, RawNorm };

inline std::string statistic_name(StatisticKind k) {
  switch (k) {
    case StatisticKind::Vn: return "vn";
    case StatisticKind::VnGeneral: return "vn_general";
    case StatisticKind::Un: return "un";
    case StatisticKind::MdpScaled: return "mdp_scaled";
    case StatisticKind::RawNorm: return "raw_norm";
  }
  return "unknown";
}

/// n^{1/p - 1/q} ||Z||_q.
inline double raw_norm(double norm_q, const BallParams& params) {
  const double n = static_cast<double>(params.n);
  return std::pow(n, 1.0 / params.p - 1.0 / params.q) * norm_q;
}

/// sqrt(n) (n^{1/p-1/q} ||Z||_q / M_p(q)^{1/q} - 1).
inline double stat_vn(double norm_q, const BallParams& params) {
  const double n = static_cast<double>(params.n);
  const double c = std::pow(n, 1.0 / params.p - 1.0 / params.q) /
                   std::pow(m_p(params.p, params.q), 1.0 / params.q);
  return std::sqrt(n) * (c * norm_q - 1.0);
}

/// The generalized-CLT normalization with centering mu_n of W_n.
inline double stat_vn_general(double norm_q, const BallParams& params, double mu_n) {
  if (!(mu_n >= 0.0)) throw DomainError("stat_vn_general: mu_n must be nonnegative");
  const double n = static_cast<double>(params.n);
  const double c = std::pow(n, 1.0 / params.p - 1.0 / params.q) *
                   std::pow(1.0 + mu_n / n, 1.0 / params.p) /
                   std::pow(m_p(params.p, params.q), 1.0 / params.q);
  return std::sqrt(n) * (c * norm_q - 1.0);
}

/// V_n / b_n with b_n = n^beta.
inline double mdp_scaled(double norm_q, const BallParams& params, double beta) {
  return stat_vn(norm_q, params) / std::pow(static_cast<double>(params.n), beta);
}

/// (sum_q / n)^{1/q}.
inline double stat_un(double sum_q, std::uint64_t n, double q) {
  if (!(sum_q >= 0.0)) throw DomainError("stat_un: sum_q must be nonnegative");
  return std::pow(sum_q / static_cast<double>(n), 1.0 / q);
}

/// Count of v >= threshold together with the sample size.
struct TailCount {
  std::uint64_t exceed = 0;
  std::uint64_t total = 0;

  /// log(exceed/total), -inf when nothing exceeded.
  double logprob() const {
    if (total == 0) throw DomainError("tail_logprob: empty sample");
    if (exceed == 0) return -std::numeric_limits<double>::infinity();
    return std::log(static_cast<double>(exceed) / static_cast<double>(total));
  }
};

inline TailCount tail_count(std::span<const double> sorted, double threshold) {
  if (sorted.empty()) throw DomainError("tail_logprob: empty sample");
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), threshold);
  return {static_cast<std::uint64_t>(sorted.end() - it), sorted.size()};
}

/// Empirical log P[X >= threshold] of a sorted sample; -inf when no value reaches it.
inline double tail_logprob(std::span<const double> sorted, double threshold) {
  return tail_count(sorted, threshold).logprob();
}

inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

/// sup_x |F_n(x) - F(x)| for a sorted sample.
inline double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf) {
  if (sorted.empty()) throw DomainError("ks_statistic: empty sample");
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Two-sample Kolmogorov-Smirnov distance of two sorted samples.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Asymptotic Kolmogorov p-value for distance d with effective sample size n
/// (Stephens' small-sample correction).
inline double kolmogorov_pvalue(double d, double n) {
  const double sn = std::sqrt(n);
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

namespace detail {
inline std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}
}  // namespace detail

/// Spearman rank correlation (average ranks for ties).
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("spearman: need two equal-length series");
  const auto rx = detail::ranks(x);
  const auto ry = detail::ranks(y);
  const MomentSummary sx = summarize(rx), sy = summarize(ry);
  double cov = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) cov += (rx[i] - sx.mean) * (ry[i] - sy.mean);
  const double den = std::sqrt(sx.m2 * sy.m2);
  return den > 0.0 ? cov / den : 0.0;
}

}  // namespace lpball

#endif  // LPBALL_STATISTICS_HPP
