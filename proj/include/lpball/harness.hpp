#ifndef LPBALL_HARNESS_HPP
#define LPBALL_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "lpball/distributions.hpp"
#include "lpball/errors.hpp"
#include "lpball/ratefun.hpp"
#include "lpball/rng.hpp"
#include "lpball/specfun.hpp"
#include "lpball/statistics.hpp"

namespace lpball {

enum class ExperimentKind { Clt, GenClt, Mdp, Ldp, ProjCompare, Width1d };

inline std::string experiment_kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Clt: return "clt";
    case ExperimentKind::GenClt: return "gen_clt";
    case ExperimentKind::Mdp: return "mdp";
    case ExperimentKind::Ldp: return "ldp";
    case ExperimentKind::ProjCompare: return "proj_compare";
    case ExperimentKind::Width1d: return "width_1d";
  }
  return "unknown";
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::Clt, ExperimentKind::GenClt, ExperimentKind::Mdp, ExperimentKind::Ldp,
                 ExperimentKind::ProjCompare, ExperimentKind::Width1d})
    if (experiment_kind_name(k) == s) return k;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

/// Mean of W_n as a function of n, for generalized-CLT runs.
///   zero:       W_n = 0.
///   gamma:      W_n ~ Gamma(coefficient * n^exponent, rate).
///   projection: the law induced by projecting onto k_n coordinates, W ~ Gamma((n-k)/p + 1, 1/p)
///               in dimension k, so mu_k = n - k + p (needs k_rule).
struct MuRule {
  enum class Kind { Zero, Gamma, Projection };
  Kind kind = Kind::Zero;
  double coefficient = 0.5;
  double exponent = 1.0;
  double rate = 1.0;

  void validate() const {
    if (kind != Kind::Gamma) return;
    if (!(coefficient > 0.0) || !std::isfinite(coefficient))
      throw ConfigError("mu_n_rule: coefficient must be positive");
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("mu_n_rule: rate must be positive");
    if (!(exponent >= 0.0)) throw ConfigError("mu_n_rule: exponent must be nonnegative");
    if (exponent > 1.0)
      throw ConfigError("mu_n_rule: exponent > 1 makes mu_n/n diverge; no generalized CLT");
  }
};

inline std::string mu_rule_name(MuRule::Kind k) {
  switch (k) {
    case MuRule::Kind::Zero: return "zero";
    case MuRule::Kind::Gamma: return "gamma";
    case MuRule::Kind::Projection: return "projection";
  }
  return "unknown";
}

/// Projection dimension k_n.
struct KRule {
  enum class Kind { Identity, CeilLambda, NMinusSqrt };
  Kind kind = Kind::Identity;
  double lambda = 1.0;

  void validate() const {
    if (kind == Kind::CeilLambda && !(lambda > 0.0 && lambda <= 1.0))
      throw ConfigError("k_rule: lambda must lie in (0, 1]");
  }

  std::uint64_t k(std::uint64_t n) const {
    switch (kind) {
      case Kind::Identity: return n;
      case Kind::CeilLambda: {
        const auto k = static_cast<std::uint64_t>(std::ceil(lambda * static_cast<double>(n)));
        if (k > n) throw ConfigError("k_rule: k_n exceeds n");
        return std::max<std::uint64_t>(k, 1);
      }
      case Kind::NMinusSqrt: {
        std::uint64_t r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
        while (r * r < n) ++r;
        while (r > 0 && (r - 1) * (r - 1) >= n) --r;
        if (r >= n) throw ConfigError("k_rule: n - ceil(sqrt(n)) is not positive for n = " + std::to_string(n));
        return n - r;
      }
    }
    return n;
  }

  double limit_lambda() const { return kind == Kind::CeilLambda ? lambda : 1.0; }
};

inline std::string k_rule_name(KRule::Kind k) {
  switch (k) {
    case KRule::Kind::Identity: return "identity";
    case KRule::Kind::CeilLambda: return "ceil_lambda";
    case KRule::Kind::NMinusSqrt: return "n_minus_sqrt";
  }
  return "unknown";
}

/// Relative tolerances of the verdicts. KS is an absolute distance.
struct Tolerances {
  double clt_variance = 0.10;
  double ks_distance = 0.02;
  double tail_slope = 0.25;
  double proj_variance = 0.15;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Clt;
  BallParams params{2.0, 1.0, 1};  // n is taken from n_grid
  MixingLaw law = Dirac0{};
  std::vector<std::uint64_t> n_grid;
  std::uint64_t samples_per_n = 10000;
  std::uint64_t seed = 1;
  double beta = 0.25;
  std::vector<double> thresholds;
  std::optional<MuRule> mu_n_rule;
  std::optional<KRule> k_rule;
  std::uint64_t chunk_size = 1024;
  Tolerances tolerances;

  void validate() const {
    try {
      BallParams{params.p, params.q, 1}.validate();
      validate_law(law);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    if (n_grid.empty()) throw ConfigError("n_grid must not be empty");
    if (n_grid.front() < 1) throw ConfigError("n_grid entries must be positive");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
      if (!(n_grid[i] > n_grid[i - 1])) throw ConfigError("n_grid must be strictly increasing");
    if (samples_per_n < 1000) throw ConfigError("samples_per_n must be at least 1000");
    if (!(beta > 0.0 && beta < 0.5)) throw ConfigError("beta must lie in (0, 1/2)");
    if (chunk_size < 1) throw ConfigError("chunk_size must be positive");
    for (double t : thresholds)
      if (!std::isfinite(t)) throw ConfigError("thresholds must be finite");
    if (mu_n_rule) mu_n_rule->validate();
    if (k_rule) k_rule->validate();
  }
};

struct RunOptions {
  unsigned threads = 1;
};

enum class Outcome { Pass, Fail, Insufficient, Info };

inline std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Pass: return "PASS";
    case Outcome::Fail: return "FAIL";
    case Outcome::Insufficient: return "INSUFFICIENT";
    case Outcome::Info: return "INFO";
  }
  return "UNKNOWN";
}

/// One row of the per-n report table.
struct ReportRow {
  std::uint64_t n = 0;
  std::string statistic;
  double empirical = 0.0;
  double target = 0.0;
  double stderr_ = 0.0;
  Outcome verdict = Outcome::Info;
};

/// A checked claim. `criterion` names the property being verified.
struct Verdict {
  std::string criterion;
  Outcome outcome = Outcome::Info;
  double observed = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  double stderr_ = 0.0;
  std::string detail;
};

/// Convergence diagnostic of one statistic across n: Spearman correlation of
/// |empirical - target| with n, and the least-squares slope of
/// log|empirical - target| against log n.
struct TrendFit {
  std::string statistic;
  std::size_t points = 0;
  double spearman = std::numeric_limits<double>::quiet_NaN();
  double slope = std::numeric_limits<double>::quiet_NaN();
  double slope_stderr = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string speed_kind;
  std::vector<ReportRow> rows;
  std::vector<Verdict> verdicts;
  std::vector<TrendFit> trends;
  std::vector<std::string> notes;

  bool any_failed() const {
    return std::any_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.outcome == Outcome::Fail; });
  }
  bool all_passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) {
      return v.outcome == Outcome::Pass || v.outcome == Outcome::Info;
    });
  }
  const Verdict* find(const std::string& criterion) const {
    for (const auto& v : verdicts)
      if (v.criterion == criterion) return &v;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Sampling engine

/// What to draw per sample: the power sums of Y in dimension n, the mixing
/// variable and, for Haar projections onto k dimensions, the Beta(k/2, (n-k)/2)
/// fraction of squared Euclidean norm that the projection keeps.
struct DrawPlan {
  double p = 2.0;
  double q = 1.0;
  std::uint64_t n = 1;
  std::uint64_t head = 0;
  MixingLaw law = Dirac0{};
  bool haar_fraction = false;
};

struct Draw {
  double sum_p = 0.0;
  double sum_q = 0.0;
  double head_q = 0.0;
  double w = 0.0;
  double haar = 1.0;

  /// ||Z||_q with Z = Y / (sum_p + W)^{1/p}.
  double norm_q(double p, double q) const { return std::pow(sum_q, 1.0 / q) / std::pow(sum_p + w, 1.0 / p); }
  double head_norm_q(double p, double q) const {
    return std::pow(head_q, 1.0 / q) / std::pow(sum_p + w, 1.0 / p);
  }
};

/// Draws `samples` records. Chunk c uses stream_rng(seed, n, c) and writes
/// records [c * chunk, (c + 1) * chunk), so the output does not depend on how
/// chunks are spread over threads.
inline std::vector<Draw> simulate_draws(const DrawPlan& plan, std::uint64_t samples, std::uint64_t seed,
                                        std::uint64_t chunk, unsigned threads) {
  if (chunk < 1) throw ConfigError("chunk_size must be positive");
  if (plan.head > plan.n) throw ConfigError("projection dimension exceeds n");
  std::vector<Draw> out(samples);
  const std::uint64_t chunks = (samples + chunk - 1) / chunk;
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    try {
      for (;;) {
        const std::uint64_t c = next.fetch_add(1);
        if (c >= chunks) return;
        Xoshiro256pp g = stream_rng(seed, plan.n, c);
        const std::uint64_t end = std::min(samples, (c + 1) * chunk);
        for (std::uint64_t i = c * chunk; i < end; ++i) {
          const PowerSums s = sample_power_sums(plan.p, plan.q, plan.n, plan.head, g);
          Draw& d = out[i];
          d.sum_p = s.sum_p;
          d.sum_q = s.sum_q;
          d.head_q = s.head_q;
          d.w = sample_mixing(plan.law, g);
          if (plan.haar_fraction && plan.head < plan.n)
            d.haar = beta_variate(g, 0.5 * static_cast<double>(plan.head),
                                  0.5 * static_cast<double>(plan.n - plan.head));
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next.store(chunks);
    }
  };

  const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::uint64_t>(chunks, 1))));
  if (t == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (unsigned i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------
// Report helpers

namespace detail {

inline std::string fmt_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

/// Mean of the one-sample KS distance under the null, about 0.8687 / sqrt(N).
inline double ks_scale(std::size_t n) { return 0.8687 / std::sqrt(static_cast<double>(n)); }

inline Verdict relative_verdict(std::string criterion, double observed, double target, double tol, double se,
                                std::string detail = {}) {
  Verdict v{std::move(criterion), Outcome::Fail, observed, target, tol, se, std::move(detail)};
  if (!std::isfinite(observed)) {
    v.outcome = Outcome::Insufficient;
  } else if (target == 0.0) {
    v.outcome = std::abs(observed) <= tol ? Outcome::Pass : Outcome::Fail;
  } else {
    v.outcome = std::abs(observed - target) / std::abs(target) < tol ? Outcome::Pass : Outcome::Fail;
  }
  return v;
}

/// Strictly decreasing |empirical - target| along the rows of one statistic.
inline Verdict trend_verdict(std::string criterion, const std::vector<const ReportRow*>& series) {
  Verdict v{std::move(criterion), Outcome::Pass, nan(), 0.0, 0.0, nan(), {}};
  if (series.size() < 2) {
    v.outcome = Outcome::Info;
    v.detail = "fewer than two n values";
    return v;
  }
  std::string path;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double e = std::abs(series[i]->empirical - series[i]->target);
    if (!std::isfinite(e)) {
      v.outcome = Outcome::Insufficient;
      v.detail = "empty tail at n = " + std::to_string(series[i]->n);
      return v;
    }
    path += (i ? " > " : "") + fmt_num(e);
    if (i > 0 && !(e < std::abs(series[i - 1]->empirical - series[i - 1]->target))) v.outcome = Outcome::Fail;
  }
  v.observed = std::abs(series.back()->empirical - series.back()->target);
  v.detail = "|empirical - target| over n: " + path;
  return v;
}

inline std::vector<const ReportRow*> series_of(const std::vector<ReportRow>& rows, const std::string& stat) {
  std::vector<const ReportRow*> out;
  for (const auto& r : rows)
    if (r.statistic == stat) out.push_back(&r);
  return out;
}

inline TrendFit fit_trend(const std::vector<ReportRow>& rows, const std::string& stat) {
  TrendFit f;
  f.statistic = stat;
  std::vector<double> ns, err, lx, ly;
  for (const auto* r : series_of(rows, stat)) {
    const double e = std::abs(r->empirical - r->target);
    if (!std::isfinite(e)) continue;
    ns.push_back(static_cast<double>(r->n));
    err.push_back(e);
    if (e > 0.0) {
      lx.push_back(std::log(static_cast<double>(r->n)));
      ly.push_back(std::log(e));
    }
  }
  f.points = ns.size();
  if (ns.size() >= 2) f.spearman = spearman(ns, err);
  if (lx.size() >= 2) {
    const double m = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx > 0.0) {
      f.slope = sxy / sxx;
      if (lx.size() >= 3) {
        double rss = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
          const double r = ly[i] - (my + f.slope * (lx[i] - mx));
          rss += r * r;
        }
        f.slope_stderr = std::sqrt(rss / (m - 2.0) / sxx);
      }
    }
  }
  return f;
}

/// Marks the row of `stat` at n with the outcome of a verdict.
inline void mark_row(std::vector<ReportRow>& rows, const std::string& stat, std::uint64_t n, Outcome o) {
  for (auto& r : rows)
    if (r.statistic == stat && r.n == n) r.verdict = o;
}

struct VarianceBlock {
  double mean = 0.0;
  double mean_se = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  double ks = nan();
};

/// Mean, variance and KS distance against N(0, target_var) of one sample.
inline VarianceBlock variance_block(std::vector<double>& values, double target_var) {
  VarianceBlock b;
  const MomentSummary s = summarize(values);
  b.mean = s.mean;
  b.mean_se = s.stderr_mean();
  b.variance = s.variance();
  b.variance_se = variance_stderr(values);
  if (target_var > 0.0) {
    std::sort(values.begin(), values.end());
    const double sd = std::sqrt(target_var);
    b.ks = ks_statistic(values, [sd](double x) { return normal_cdf(x, 0.0, sd); });
  }
  return b;
}

/// Empirical log-tail y = sign * log P / speed with P the upper tail for
/// `upper` and the lower tail otherwise; the standard error is by the delta method.
struct TailCell {
  double y = 0.0;
  double se = 0.0;
  std::uint64_t exceed = 0;
};

inline TailCell tail_cell(const std::vector<double>& sorted, double t, bool upper, double speed, double sign) {
  TailCell c;
  const std::uint64_t total = sorted.size();
  if (upper) {
    c.exceed = tail_count(sorted, t).exceed;
  } else {
    c.exceed = static_cast<std::uint64_t>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
  }
  if (c.exceed == 0) {
    c.y = sign * -std::numeric_limits<double>::infinity();
    c.se = nan();
    return c;
  }
  const double prob = static_cast<double>(c.exceed) / static_cast<double>(total);
  c.y = sign * std::log(prob) / speed;
  c.se = std::sqrt((1.0 - prob) / static_cast<double>(c.exceed)) / speed;
  return c;
}

inline void require_kind(const ExperimentConfig& c, ExperimentKind k) {
  if (c.kind != k)
    throw ConfigError("experiment kind is " + experiment_kind_name(c.kind) + ", expected " + experiment_kind_name(k));
}

inline DrawPlan plan_for(const ExperimentConfig& c, std::uint64_t n) {
  DrawPlan d;
  d.p = c.params.p;
  d.q = c.params.q;
  d.n = n;
  d.law = c.law;
  return d;
}

inline void finish_trends(ExperimentReport& r) {
  std::vector<std::string> names;
  for (const auto& row : r.rows)
    if (std::find(names.begin(), names.end(), row.statistic) == names.end()) names.push_back(row.statistic);
  for (const auto& s : names) r.trends.push_back(fit_trend(r.rows, s));
}

inline std::string threshold_label(const char* what, double t) { return std::string(what) + "[" + fmt_num(t) + "]"; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiments

/// CLT for V_n = sqrt(n)(n^{1/p-1/q} ||Z||_q / M_p(q)^{1/q} - 1).
inline ExperimentReport run_clt(const ExperimentConfig& config, const RunOptions& opt = {}) {
  detail::require_kind(config, ExperimentKind::Clt);
  config.validate();
  ExperimentReport rep;
  rep.config = config;
  rep.speed_kind = "sqrt(n)";
  const double p = config.params.p, q = config.params.q;
  const bool degenerate = p == q;
  const double target = degenerate ? 0.0 : clt_variance(p, q);
  if (degenerate) rep.notes.push_back("p = q: the limit variance is 0 (degenerate case)");

  detail::VarianceBlock last;
  std::size_t last_count = 0;
  for (std::uint64_t n : config.n_grid) {
    const auto draws = simulate_draws(detail::plan_for(config, n), config.samples_per_n, config.seed,
                                      config.chunk_size, opt.threads);
    std::vector<double> v(draws.size());
    const BallParams bp{p, q, n};
    for (std::size_t i = 0; i < draws.size(); ++i) v[i] = stat_vn(draws[i].norm_q(p, q), bp);
    const auto b = detail::variance_block(v, target);
    rep.rows.push_back({n, "vn_mean", b.mean, 0.0, b.mean_se, Outcome::Info});
    rep.rows.push_back({n, "vn_variance", b.variance, target, b.variance_se, Outcome::Info});
    if (!degenerate) rep.rows.push_back({n, "ks_distance", b.ks, 0.0, detail::ks_scale(v.size()), Outcome::Info});
    last = b;
    last_count = v.size();
  }
  const std::uint64_t nmax = config.n_grid.back();
  if (degenerate) {
    // Either identically zero (W = 0 gives ||Z||_p = 1 exactly) or shrinking with n.
    const auto series = detail::series_of(rep.rows, "vn_variance");
    const bool zero = std::all_of(series.begin(), series.end(), [](const ReportRow* r) { return r->empirical < 1e-20; });
    Verdict t = detail::trend_verdict("degenerate_variance_to_zero", series);
    if (zero) {
      t = {"degenerate_variance_to_zero", Outcome::Pass, last.variance, 0.0, 1e-20, 0.0, "variance vanishes at every n"};
    } else if (config.n_grid.size() < 2) {
      t = detail::relative_verdict("degenerate_variance_to_zero", last.variance, 0.0, 1e-6, last.variance_se);
    }
    detail::mark_row(rep.rows, "vn_variance", nmax, t.outcome);
    rep.verdicts.push_back(t);
  } else {
    auto v = detail::relative_verdict("clt_variance", last.variance, target, config.tolerances.clt_variance,
                                      last.variance_se, "largest n");
    detail::mark_row(rep.rows, "vn_variance", nmax, v.outcome);
    rep.verdicts.push_back(v);
    Verdict ks{"clt_ks_distance", last.ks < config.tolerances.ks_distance ? Outcome::Pass : Outcome::Fail, last.ks,
               0.0, config.tolerances.ks_distance, detail::ks_scale(last_count),
               "p-value " + detail::fmt_num(kolmogorov_pvalue(last.ks, static_cast<double>(last_count)))};
    detail::mark_row(rep.rows, "ks_distance", nmax, ks.outcome);
    rep.verdicts.push_back(ks);
  }
  detail::finish_trends(rep);
  return rep;
}

/// Generalized CLT with a mixing law that depends on n.
inline ExperimentReport run_gen_clt(const ExperimentConfig& config, const RunOptions& opt = {}) {
  detail::require_kind(config, ExperimentKind::GenClt);
  config.validate();
  if (!config.mu_n_rule) throw ConfigError("gen_clt requires mu_n_rule");
  const MuRule& rule = *config.mu_n_rule;
  const double p = config.params.p, q = config.params.q;
  if (p == q) throw ConfigError("gen_clt: p = q is degenerate");
  ExperimentReport rep;
  rep.config = config;
  rep.speed_kind = "sqrt(n)";

  double mu = 0.0, tau2 = 0.0;
  switch (rule.kind) {
    case MuRule::Kind::Zero: {
      const auto m = law_mean(config.law);
      if (!m || *m != 0.0) throw ConfigError("mu_n_rule zero requires the dirac0 law");
      break;
    }
    case MuRule::Kind::Gamma:
      if (rule.exponent == 1.0) {
        mu = rule.coefficient / rule.rate;
        tau2 = rule.coefficient / (rule.rate * rule.rate);
      }
      break;
    case MuRule::Kind::Projection: {
      if (!config.k_rule) throw ConfigError("mu_n_rule projection requires k_rule");
      const double lam = config.k_rule->limit_lambda();
      mu = (1.0 - lam) / lam;
      tau2 = p * (1.0 - lam) / lam;
      break;
    }
  }
  const double target = gen_clt_variance(p, q, mu, tau2);
  rep.notes.push_back("mu_n_rule " + mu_rule_name(rule.kind) + ": mu = " + detail::fmt_num(mu) +
                      ", tau^2 = " + detail::fmt_num(tau2));

  detail::VarianceBlock last;
  std::size_t last_count = 0;
  for (std::uint64_t n : config.n_grid) {
    DrawPlan plan = detail::plan_for(config, n);
    double mu_n = 0.0;
    if (rule.kind == MuRule::Kind::Gamma) {
      const double shape = rule.coefficient * std::pow(static_cast<double>(n), rule.exponent);
      plan.law = GammaLaw{shape, rule.rate};
      mu_n = shape / rule.rate;
    } else if (rule.kind == MuRule::Kind::Projection) {
      const std::uint64_t k = config.k_rule->k(n);
      plan.n = k;
      plan.law = GammaLaw{static_cast<double>(n - k) / p + 1.0, 1.0 / p};
      mu_n = static_cast<double>(n - k) + p;
    }
    const auto draws = simulate_draws(plan, config.samples_per_n, config.seed, config.chunk_size, opt.threads);
    std::vector<double> v(draws.size());
    const BallParams bp{p, q, plan.n};
    for (std::size_t i = 0; i < draws.size(); ++i) v[i] = stat_vn_general(draws[i].norm_q(p, q), bp, mu_n);
    const auto b = detail::variance_block(v, target);
    rep.rows.push_back({n, "vn_mean", b.mean, 0.0, b.mean_se, Outcome::Info});
    rep.rows.push_back({n, "vn_variance", b.variance, target, b.variance_se, Outcome::Info});
    rep.rows.push_back({n, "ks_distance", b.ks, 0.0, detail::ks_scale(v.size()), Outcome::Info});
    last = b;
    last_count = v.size();
  }
  const std::uint64_t nmax = config.n_grid.back();
  auto v = detail::relative_verdict("gen_clt_variance", last.variance, target, config.tolerances.clt_variance,
                                    last.variance_se, "largest n");
  detail::mark_row(rep.rows, "vn_variance", nmax, v.outcome);
  rep.verdicts.push_back(v);
  Verdict ks{"gen_clt_ks_distance", last.ks < config.tolerances.ks_distance ? Outcome::Pass : Outcome::Fail,
             last.ks, 0.0, config.tolerances.ks_distance, detail::ks_scale(last_count), {}};
  detail::mark_row(rep.rows, "ks_distance", nmax, ks.outcome);
  rep.verdicts.push_back(ks);
  detail::finish_trends(rep);
  return rep;
}

/// MDP: y(n, t) = log P[V_n / b_n >= t] / b_n^2 (lower tail for t < 0)
/// against -t^2 / (2 sigma^2).
inline ExperimentReport run_mdp(const ExperimentConfig& config, const RunOptions& opt = {}) {
  detail::require_kind(config, ExperimentKind::Mdp);
  config.validate();
  const double p = config.params.p, q = config.params.q;
  if (!(q < p)) throw ConfigError("mdp requires q < p");
  if (config.thresholds.empty()) throw ConfigError("mdp requires thresholds");
  ExperimentReport rep;
  rep.config = config;
  rep.speed_kind = speed_kind_name(SpeedKind::BnSquared);

  for (std::uint64_t n : config.n_grid) {
    const auto draws = simulate_draws(detail::plan_for(config, n), config.samples_per_n, config.seed,
                                      config.chunk_size, opt.threads);
    std::vector<double> v(draws.size());
    const BallParams bp{p, q, n};
    for (std::size_t i = 0; i < draws.size(); ++i) v[i] = mdp_scaled(draws[i].norm_q(p, q), bp, config.beta);
    std::sort(v.begin(), v.end());
    const double bn = std::pow(static_cast<double>(n), config.beta);
    for (double t : config.thresholds) {
      const auto c = detail::tail_cell(v, t, t >= 0.0, bn * bn, 1.0);
      const double target = -mdp_rate(t, p, q).value();
      rep.rows.push_back({n, detail::threshold_label("y", t), c.y, target, c.se,
                          c.exceed == 0 ? Outcome::Insufficient : Outcome::Info});
    }
  }
  const std::uint64_t nmax = config.n_grid.back();
  for (double t : config.thresholds) {
    const std::string stat = detail::threshold_label("y", t);
    const auto series = detail::series_of(rep.rows, stat);
    const ReportRow& last = *series.back();
    if (t == 0.0) {
      rep.verdicts.push_back(detail::trend_verdict("mdp_zero_threshold_to_zero", series));
      continue;
    }
    auto v = detail::relative_verdict("mdp_tail_slope" + stat.substr(1), last.empirical, last.target,
                                      config.tolerances.tail_slope, last.stderr_, "largest n");
    if (last.verdict != Outcome::Insufficient) detail::mark_row(rep.rows, stat, nmax, v.outcome);
    rep.verdicts.push_back(v);
    rep.verdicts.push_back(detail::trend_verdict("mdp_trend" + stat.substr(1), series));
  }
  // Even rate: y(t) and y(-t) agree within the joint standard error band.
  for (double t : config.thresholds) {
    if (!(t > 0.0)) continue;
    if (std::find(config.thresholds.begin(), config.thresholds.end(), -t) == config.thresholds.end()) continue;
    const auto a = detail::series_of(rep.rows, detail::threshold_label("y", t)).back();
    const auto b = detail::series_of(rep.rows, detail::threshold_label("y", -t)).back();
    const double se = std::hypot(a->stderr_, b->stderr_);
    const double diff = a->empirical - b->empirical;
    Verdict v{"mdp_symmetry[" + detail::fmt_num(t) + "]", Outcome::Pass, diff, 0.0, 3.0 * se, se,
              "tolerance is 3 joint standard errors"};
    if (!std::isfinite(diff) || !std::isfinite(se))
      v.outcome = Outcome::Insufficient;
    else if (!(std::abs(diff) <= 3.0 * se))
      v.outcome = Outcome::Fail;
    rep.verdicts.push_back(v);
  }
  detail::finish_trends(rep);
  return rep;
}

/// Mixing rate matching a configured law, for the q < p branch.
inline MixingRate mixing_rate_for(const MixingLaw& law) {
  if (std::holds_alternative<Dirac0>(law)) return DiracRate{};
  if (const auto* e = std::get_if<ExponentialLaw>(&law)) return ExponentialRate{1.0 / e->rate};
  if (const auto* g = std::get_if<GammaLaw>(&law)) return ExponentialRate{1.0 / g->rate};
  throw ConfigError("ldp with q < p needs the rate function of W; external laws are not supported");
}

/// LDP: y(n, x) = -log P[n^{1/p-1/q} ||Z||_q >= x] / s_n (lower tail below the
/// LLN point), with s_n = n^{p/q} for p < q and s_n = n otherwise.
inline ExperimentReport run_ldp(const ExperimentConfig& config, const RunOptions& opt = {}) {
  detail::require_kind(config, ExperimentKind::Ldp);
  config.validate();
  const double p = config.params.p, q = config.params.q;
  if (config.thresholds.empty()) throw ConfigError("ldp requires thresholds");
  ExperimentReport rep;
  rep.config = config;
  const bool qgtp = p < q;
  rep.speed_kind = speed_kind_name(qgtp ? SpeedKind::NPowPOverQ : SpeedKind::N);
  const double lln = std::pow(m_p(p, q), 1.0 / q);

  std::vector<double> targets;
  for (double x : config.thresholds) {
    if (!(x > 0.0)) throw ConfigError("ldp thresholds must be positive");
    ExtReal r;
    if (qgtp) {
      r = ldp_rate_qgtp(x, p, q);
    } else if (p == q) {
      r = ldp_rate_p_eq_q(x, p, mixing_rate_for(config.law));
    } else {
      r = ldp_rate_qltp(x, p, q, mixing_rate_for(config.law));
    }
    targets.push_back(r.to_double());
  }
  rep.notes.push_back("LLN point " + detail::fmt_num(lln));

  for (std::uint64_t n : config.n_grid) {
    const auto draws = simulate_draws(detail::plan_for(config, n), config.samples_per_n, config.seed,
                                      config.chunk_size, opt.threads);
    const BallParams bp{p, q, n};
    std::vector<double> z(draws.size()), u;
    for (std::size_t i = 0; i < draws.size(); ++i) z[i] = raw_norm(draws[i].norm_q(p, q), bp);
    std::sort(z.begin(), z.end());
    if (qgtp) {
      u.resize(draws.size());
      for (std::size_t i = 0; i < draws.size(); ++i) u[i] = stat_un(draws[i].sum_q, n, q);
      std::sort(u.begin(), u.end());
    }
    const double nd = static_cast<double>(n);
    const double speed = qgtp ? std::pow(nd, p / q) : nd;
    double gap = 0.0;
    bool gap_ok = qgtp;
    for (std::size_t j = 0; j < config.thresholds.size(); ++j) {
      const double x = config.thresholds[j];
      const bool upper = x >= lln;
      const auto c = detail::tail_cell(z, x, upper, speed, -1.0);
      rep.rows.push_back({n, detail::threshold_label("y", x), c.y, targets[j], c.se,
                          c.exceed == 0 ? Outcome::Insufficient : Outcome::Info});
      if (qgtp) {
        const auto cu = detail::tail_cell(u, x, upper, speed, -1.0);
        rep.rows.push_back({n, detail::threshold_label("y_un", x), cu.y, targets[j], cu.se,
                            cu.exceed == 0 ? Outcome::Insufficient : Outcome::Info});
        if (std::isfinite(targets[j])) {
          if (c.exceed == 0 || cu.exceed == 0) gap_ok = false;
          else gap = std::max(gap, std::abs(c.y - cu.y));
        }
      }
    }
    if (qgtp)
      rep.rows.push_back({n, "equivalence_gap", gap_ok ? gap : std::numeric_limits<double>::infinity(), 0.0,
                          detail::nan(), gap_ok ? Outcome::Info : Outcome::Insufficient});
  }

  const std::uint64_t nmax = config.n_grid.back();
  for (std::size_t j = 0; j < config.thresholds.size(); ++j) {
    const std::string stat = detail::threshold_label("y", config.thresholds[j]);
    const auto series = detail::series_of(rep.rows, stat);
    const ReportRow& last = *series.back();
    if (!std::isfinite(targets[j])) {
      rep.notes.push_back(stat + ": rate is +inf at this speed; reported only");
      continue;
    }
    if (targets[j] < 1e-8) {
      rep.verdicts.push_back(detail::trend_verdict("ldp_zero_at_lln" + stat.substr(1), series));
      continue;
    }
    auto v = detail::relative_verdict("ldp_rate" + stat.substr(1), last.empirical, last.target,
                                      config.tolerances.tail_slope, last.stderr_, "largest n");
    if (last.verdict != Outcome::Insufficient) detail::mark_row(rep.rows, stat, nmax, v.outcome);
    rep.verdicts.push_back(v);
    rep.verdicts.push_back(detail::trend_verdict("ldp_trend" + stat.substr(1), series));
  }
  if (qgtp) {
    auto g = detail::trend_verdict("ldp_equivalence_gap", detail::series_of(rep.rows, "equivalence_gap"));
    rep.verdicts.push_back(g);
  }
  detail::finish_trends(rep);
  return rep;
}

/// Euclidean norm of Haar-random vs coordinate projections onto k_n dimensions
/// of a uniform point of the l_p ball. The statistic is
/// n^{1/p} / sqrt(M_p(2)) ||P X||_2 - sqrt(k_n).
inline ExperimentReport run_proj_compare(const ExperimentConfig& config, const RunOptions& opt = {}) {
  detail::require_kind(config, ExperimentKind::ProjCompare);
  config.validate();
  if (!config.k_rule) throw ConfigError("proj_compare requires k_rule");
  const double p = config.params.p;
  if (config.params.q != 2.0) throw ConfigError("proj_compare uses the Euclidean norm; set q = 2");
  const auto* e = std::get_if<ExponentialLaw>(&config.law);
  if (!e || std::abs(e->rate - 1.0 / p) > 1e-12 * (1.0 / p))
    throw ConfigError("proj_compare assumes the uniform distribution: law exponential with rate 1/p");
  ExperimentReport rep;
  rep.config = config;
  rep.speed_kind = "sqrt(n)";
  const double lam = config.k_rule->limit_lambda();
  const double t_haar = proj_variance_random(p, lam);
  const double t_coord = proj_variance_det(p, lam);
  const double scale_m = std::sqrt(m_p(p, 2.0));
  const bool ldp = !config.thresholds.empty() && p < 2.0 && lam == 1.0;
  std::vector<double> ldp_targets;
  if (ldp)
    for (double x : config.thresholds) ldp_targets.push_back(ldp_rate_qgtp(x, p, 2.0).to_double());

  double vh = 0, vc = 0, seh = 0, sec = 0;
  for (std::uint64_t n : config.n_grid) {
    const std::uint64_t k = config.k_rule->k(n);
    if (k > n || k < 1) throw ConfigError("k_rule gives k_n outside [1, n]");
    DrawPlan plan = detail::plan_for(config, n);
    plan.q = 2.0;
    plan.head = k;
    plan.haar_fraction = true;
    const auto draws = simulate_draws(plan, config.samples_per_n, config.seed, config.chunk_size, opt.threads);
    const double nd = static_cast<double>(n);
    const double c = std::pow(nd, 1.0 / p) / scale_m;
    const double sk = std::sqrt(static_cast<double>(k));
    std::vector<double> h(draws.size()), d(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
      h[i] = c * draws[i].norm_q(p, 2.0) * std::sqrt(draws[i].haar) - sk;
      d[i] = c * draws[i].head_norm_q(p, 2.0) - sk;
    }
    const auto bh = detail::variance_block(h, 0.0);
    const auto bc = detail::variance_block(d, 0.0);
    rep.rows.push_back({n, "haar_variance", bh.variance, t_haar, bh.variance_se, Outcome::Info});
    rep.rows.push_back({n, "coordinate_variance", bc.variance, t_coord, bc.variance_se, Outcome::Info});
    rep.rows.push_back({n, "variance_gap", bh.variance - bc.variance, t_haar - t_coord,
                        std::hypot(bh.variance_se, bc.variance_se), Outcome::Info});
    vh = bh.variance, vc = bc.variance, seh = bh.variance_se, sec = bc.variance_se;
    if (ldp) {
      std::vector<double> z(draws.size());
      const double f = std::pow(nd, 1.0 / p - 0.5);
      for (std::size_t i = 0; i < draws.size(); ++i) z[i] = f * draws[i].head_norm_q(p, 2.0);
      std::sort(z.begin(), z.end());
      const double speed = std::pow(nd, p / 2.0);
      const double lln = std::sqrt(m_p(p, 2.0));
      for (std::size_t j = 0; j < config.thresholds.size(); ++j) {
        const double x = config.thresholds[j];
        const auto cell = detail::tail_cell(z, x, x >= lln, speed, -1.0);
        rep.rows.push_back({n, detail::threshold_label("y_coordinate", x), cell.y, ldp_targets[j], cell.se,
                            cell.exceed == 0 ? Outcome::Insufficient : Outcome::Info});
      }
    }
  }
  const std::uint64_t nmax = config.n_grid.back();
  auto a = detail::relative_verdict("proj_haar_variance", vh, t_haar, config.tolerances.proj_variance, seh,
                                    "target sigma^2(p, lambda)");
  auto b = detail::relative_verdict("proj_coordinate_variance", vc, t_coord, config.tolerances.proj_variance, sec,
                                    "target sigma~^2(p, lambda)");
  detail::mark_row(rep.rows, "haar_variance", nmax, a.outcome);
  detail::mark_row(rep.rows, "coordinate_variance", nmax, b.outcome);
  rep.verdicts.push_back(a);
  rep.verdicts.push_back(b);
  if (lam == 1.0) {
    const double se = std::hypot(seh, sec);
    // k_n / n < 1 at finite n, so the two variances still differ by about
    // sigma^2(p, k/n) - sigma~^2(p, k/n); reported next to the verdict.
    const double lam_n = static_cast<double>(config.k_rule->k(nmax)) / static_cast<double>(nmax);
    const double finite_gap = proj_variance_random(p, lam_n) - proj_variance_det(p, lam_n);
    Verdict g{"proj_same_limit", std::abs(vh - vc) <= 2.0 * se ? Outcome::Pass : Outcome::Fail, vh - vc, 0.0,
              2.0 * se, se,
              "tolerance is 2 joint standard errors; gap of the targets at k/n = " + detail::fmt_num(lam_n) +
                  " is " + detail::fmt_num(finite_gap)};
    detail::mark_row(rep.rows, "variance_gap", nmax, g.outcome);
    rep.verdicts.push_back(g);
  }
  if (ldp)
    for (std::size_t j = 0; j < config.thresholds.size(); ++j) {
      if (!std::isfinite(ldp_targets[j]) || ldp_targets[j] < 1e-8) continue;
      const std::string stat = detail::threshold_label("y_coordinate", config.thresholds[j]);
      rep.verdicts.push_back(detail::trend_verdict("proj_ldp_trend" + stat.substr(12), detail::series_of(rep.rows, stat)));
    }
  detail::finish_trends(rep);
  return rep;
}

/// Width of the 1-dimensional projection of the l_q ball onto a uniform
/// direction theta, vol_1 = 2 ||theta||_{q*}. With theta on the sphere, the
/// width statistic n^{1/q} vol_1 / (2 M_2(q*)^{1/q*}) - sqrt(n) equals V_n at
/// (p, q) = (2, q*), so the CLT/MDP/LDP checks reuse those runs.
inline ExperimentReport run_width_1d(const ExperimentConfig& config, const RunOptions& opt = {}) {
  detail::require_kind(config, ExperimentKind::Width1d);
  const double q = config.params.q;
  if (!(q > 1.0)) throw ConfigError("width_1d requires q > 1 (q* is undefined otherwise)");
  if (q == 2.0) throw ConfigError("width_1d requires q != 2");
  if (config.params.p != 2.0 || !std::holds_alternative<Dirac0>(config.law))
    throw ConfigError("width_1d samples theta with p = 2 and the dirac0 law");
  config.validate();
  const double qs = holder_conjugate(q);

  ExperimentReport rep;
  rep.config = config;
  rep.notes.push_back("q* = " + detail::fmt_num(qs));
  {
    const double a = width_constant(q), b = width_constant_closed_form(q);
    rep.verdicts.push_back({"width_constant_identity", std::abs(a - b) < 1e-12 ? Outcome::Pass : Outcome::Fail,
                            a, b, 1e-12, 0.0, "M_2(q*)^{1/q*} against its gamma expression"});
    const double s = width_variance(q), t = width_variance_closed_form(q);
    rep.verdicts.push_back({"width_variance_identity", std::abs(s - t) < 1e-12 ? Outcome::Pass : Outcome::Fail,
                            s, t, 1e-12, 0.0, "sigma^2(q) against clt_variance(2, q*)"});
  }
  auto absorb = [&](ExperimentReport sub, const std::string& prefix) {
    for (auto& r : sub.rows) {
      r.statistic = prefix + r.statistic;
      rep.rows.push_back(std::move(r));
    }
    for (auto& v : sub.verdicts) {
      v.criterion = "width_" + v.criterion;
      rep.verdicts.push_back(std::move(v));
    }
    for (auto& n : sub.notes) rep.notes.push_back(prefix + n);
  };

  ExperimentConfig sub = config;
  sub.params = {2.0, qs, 1};
  sub.kind = ExperimentKind::Clt;
  absorb(run_clt(sub, opt), "clt:");
  rep.speed_kind = "sqrt(n)";
  if (!config.thresholds.empty()) {
    if (qs < 2.0) {
      sub.kind = ExperimentKind::Mdp;
      auto m = run_mdp(sub, opt);
      rep.speed_kind += "; mdp " + m.speed_kind;
      absorb(std::move(m), "mdp:");
    } else {
      sub.kind = ExperimentKind::Ldp;
      auto l = run_ldp(sub, opt);
      rep.speed_kind += "; ldp " + l.speed_kind;
      absorb(std::move(l), "ldp:");
    }
  }
  detail::finish_trends(rep);
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& opt = {}) {
  switch (config.kind) {
    case ExperimentKind::Clt: return run_clt(config, opt);
    case ExperimentKind::GenClt: return run_gen_clt(config, opt);
    case ExperimentKind::Mdp: return run_mdp(config, opt);
    case ExperimentKind::Ldp: return run_ldp(config, opt);
    case ExperimentKind::ProjCompare: return run_proj_compare(config, opt);
    case ExperimentKind::Width1d: return run_width_1d(config, opt);
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace lpball

#endif  // LPBALL_HARNESS_HPP
