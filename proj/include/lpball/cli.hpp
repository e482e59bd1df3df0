#ifndef LPBALL_CLI_HPP
#define LPBALL_CLI_HPP

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lpball/distributions.hpp"
#include "lpball/errors.hpp"
#include "lpball/harness.hpp"
#include "lpball/io.hpp"
#include "lpball/ratefun.hpp"
#include "lpball/specfun.hpp"
#include "lpball/statistics.hpp"

namespace lpball::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kNumericError = 2, kVerdictFailed = 3 };

inline constexpr const char* kOutputDirEnv = "LPBALL_OUTPUT_DIR";

/// `start:stop:count`, both endpoints included.
inline std::vector<double> parse_grid(const std::string& text) {
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? a : text.find(':', a + 1);
  if (b == std::string::npos || text.find(':', b + 1) != std::string::npos)
    throw ConfigError("grid must look like start:stop:count, got '" + text + "'");
  double lo, hi;
  long long count;
  try {
    std::size_t used = 0;
    lo = std::stod(text.substr(0, a), &used);
    if (used != a) throw std::invalid_argument("start");
    const std::string hs = text.substr(a + 1, b - a - 1);
    hi = std::stod(hs, &used);
    if (used != hs.size()) throw std::invalid_argument("stop");
    const std::string cs = text.substr(b + 1);
    count = std::stoll(cs, &used);
    if (used != cs.size()) throw std::invalid_argument("count");
  } catch (const std::exception&) {
    throw ConfigError("grid must look like start:stop:count, got '" + text + "'");
  }
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw ConfigError("grid endpoints must be finite");
  if (count < 1) throw ConfigError("grid count must be at least 1");
  if (count == 1) {
    if (lo != hi) throw ConfigError("a one-point grid needs start == stop");
    return {lo};
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (long long i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

/// `dirac0`, `exponential:RATE` or `gamma:SHAPE:RATE`.
inline MixingLaw parse_law(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto k = text.find(':', start);
    parts.push_back(text.substr(start, k - start));
    if (k == std::string::npos) break;
    start = k + 1;
  }
  auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + s + "' in law '" + text + "'");
    }
  };
  MixingLaw law;
  if (parts[0] == "dirac0" && parts.size() == 1) {
    law = Dirac0{};
  } else if (parts[0] == "exponential" && parts.size() == 2) {
    law = ExponentialLaw{num(parts[1])};
  } else if (parts[0] == "gamma" && parts.size() == 3) {
    law = GammaLaw{num(parts[1]), num(parts[2])};
  } else {
    throw ConfigError("law must be dirac0, exponential:RATE or gamma:SHAPE:RATE, got '" + text + "'");
  }
  try {
    validate_law(law);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return law;
}

namespace detail {

inline BallParams checked_params(double p, double q, std::uint64_t n) {
  BallParams bp{p, q, n};
  try {
    bp.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return bp;
}

/// Writes `content` to `<dir>/<name>` atomically, or to `out` when no directory is set.
inline void emit(const std::optional<std::string>& dir, const std::string& name, const std::string& content,
                 std::ostream& out) {
  if (dir) {
    io::write_file_atomic(std::filesystem::path(*dir) / name, content);
  } else {
    out << content;
  }
}

inline std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace detail

struct Invocation {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;

  double p = 2.0;
  double q = 1.0;
  std::uint64_t n = 16;
  std::uint64_t count = 10;
  std::string law = "dirac0";
  std::string statistic = "norm_q";
  std::string rate_kind;
  std::string grid;
  std::string s1_grid;
  std::string s2_grid;
  std::string config_path;
};

inline std::string constants_csv(const Invocation& inv) {
  const BallParams bp = detail::checked_params(inv.p, inv.q, 1);
  const CovMatrix2 c = covariance_matrix(bp.p, bp.q);
  std::string out = "p,q,m_p,clt_variance,c11,c12,c22\n";
  out += io::format_double(bp.p) + "," + io::format_double(bp.q) + "," + io::format_double(m_p(bp.p, bp.q)) + "," +
         io::format_double(clt_variance(bp.p, bp.q)) + "," + io::format_double(c.c11) + "," +
         io::format_double(c.c12) + "," + io::format_double(c.c22) + "\n";
  return out;
}

/// One row per draw: a norm statistic (`draw_index,value`) or the point itself.
inline std::string sample_csv(const Invocation& inv) {
  const BallParams bp = detail::checked_params(inv.p, inv.q, inv.n);
  const MixingLaw law = parse_law(inv.law);
  const std::uint64_t seed = inv.seed.value_or(1);
  if (inv.count < 1) throw ConfigError("--count must be positive");
  constexpr std::uint64_t kChunk = 1024;
  std::string out;
  if (inv.statistic == "points") {
    out = "draw_index";
    for (std::uint64_t i = 1; i <= bp.n; ++i) out += ",x" + std::to_string(i);
    out += "\n";
    for (std::uint64_t c = 0; c * kChunk < inv.count; ++c) {
      Xoshiro256pp g = stream_rng(seed, bp.n, c);
      for (std::uint64_t i = c * kChunk; i < std::min(inv.count, (c + 1) * kChunk); ++i) {
        const BallPoint z = sample_ball(bp, law, g);
        out += std::to_string(i);
        for (double x : z.coords) out += "," + io::format_double(x);
        out += "\n";
      }
    }
    return out;
  }
  DrawPlan plan;
  plan.p = bp.p;
  plan.q = bp.q;
  plan.n = bp.n;
  plan.law = law;
  const auto draws = simulate_draws(plan, inv.count, seed, kChunk, inv.threads);
  out = "draw_index,value\n";
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double nq = draws[i].norm_q(bp.p, bp.q);
    double v;
    if (inv.statistic == "norm_q") v = nq;
    else if (inv.statistic == "raw_norm") v = raw_norm(nq, bp);
    else if (inv.statistic == "vn") v = stat_vn(nq, bp);
    else throw ConfigError("--statistic must be norm_q, raw_norm, vn or points");
    out += std::to_string(i) + "," + io::format_double(v) + "\n";
  }
  return out;
}

inline std::string rate_csv(const Invocation& inv) {
  const BallParams bp = detail::checked_params(inv.p, inv.q, 1);
  const std::vector<double> xs = parse_grid(inv.grid);
  RateGrid g;
  g.x = xs;
  const std::string& k = inv.rate_kind;
  try {
    if (k == "mdp") {
      g.speed = SpeedKind::BnSquared;
      for (double x : xs) g.rate.push_back(mdp_rate(x, bp.p, bp.q));
    } else if (k == "ldp_qgtp") {
      g.speed = SpeedKind::NPowPOverQ;
      for (double x : xs) g.rate.push_back(ldp_rate_qgtp(x, bp.p, bp.q));
    } else if (k == "ldp_qltp" || k == "ldp_peq") {
      g.speed = SpeedKind::N;
      const MixingRate iw = mixing_rate_for(parse_law(inv.law));
      for (double x : xs) {
        if (!(x > 0.0)) {
          g.rate.push_back(ExtReal::infinity());
        } else if (k == "ldp_qltp") {
          g.rate.push_back(ldp_rate_qltp(x, bp.p, bp.q, iw));
        } else {
          g.rate.push_back(ldp_rate_p_eq_q(x, bp.p, iw));
        }
      }
    } else {
      throw ConfigError("--kind must be mdp, ldp_qgtp, ldp_qltp or ldp_peq");
    }
  } catch (const DegenerateError& e) {
    throw ConfigError(e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return io::rate_grid_csv(g);
}

inline std::string conjugate_csv(const Invocation& inv) {
  const BallParams bp = detail::checked_params(inv.p, inv.q, 1);
  if (!(bp.q < bp.p)) throw ConfigError("conjugate requires q < p");
  const auto s1s = parse_grid(inv.s1_grid);
  const auto s2s = parse_grid(inv.s2_grid);
  std::string out = "s1,s2,value,t1,t2,converged\n";
  for (double s1 : s1s)
    for (double s2 : s2s) {
      const ConjugatePoint c = legendre_fenchel(s1, s2, bp.p, bp.q);
      const bool finite_arg = c.status == ConjugateStatus::Converged || c.status == ConjugateStatus::Boundary;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out += io::format_double(s1) + "," + io::format_double(s2) + "," + c.value.to_string() + "," +
             io::format_double(finite_arg ? c.argmax[0] : nan) + "," +
             io::format_double(finite_arg ? c.argmax[1] : nan) + "," +
             (c.status == ConjugateStatus::NotConverged ? "false" : "true") + "\n";
    }
  return out;
}

/// Runs one experiment config, writes `<stem>_report.csv` and
/// `<stem>_summary.json` and prints one line per verdict.
inline int verify(const Invocation& inv, std::ostream& out) {
  ExperimentConfig cfg = io::load_config(inv.config_path);
  if (inv.seed) cfg.seed = *inv.seed;
  std::string dir = ".";
  if (inv.output_dir) dir = *inv.output_dir;
  else if (const char* env = std::getenv(kOutputDirEnv); env && *env) dir = env;
  const ExperimentReport rep = run_experiment(cfg, RunOptions{inv.threads});
  const std::string stem = std::filesystem::path(inv.config_path).stem().string();
  const std::string csv = io::report_csv(rep);
  const std::string js = io::report_json_text(rep);
  io::write_file_atomic(std::filesystem::path(dir) / (stem + "_report.csv"), csv);
  io::write_file_atomic(std::filesystem::path(dir) / (stem + "_summary.json"), js);
  for (const auto& v : rep.verdicts)
    out << outcome_name(v.outcome) << " " << v.criterion << " observed=" << io::format_double(v.observed)
        << " target=" << io::format_double(v.target) << " tolerance=" << io::format_double(v.tolerance)
        << " stderr=" << io::format_double(v.stderr_) << "\n";
  return rep.any_failed() ? kVerdictFailed : kOk;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sampling, limit constants and rate functions for l_p^n balls"};
  app.require_subcommand(1);
  Invocation inv;
  std::string output_dir;
  std::uint64_t seed = 0;
  app.add_option("--output-dir", output_dir, "Directory for output files");
  app.add_option("--seed", seed, "64-bit seed override");
  app.add_option("--threads", inv.threads, "Worker threads for sampling")->check(CLI::PositiveNumber);

  auto* constants = app.add_subcommand("constants", "M_p(q), the CLT variance and the covariance entries");
  constants->add_option("--p", inv.p)->required();
  constants->add_option("--q", inv.q)->required();

  auto* sample = app.add_subcommand("sample", "Draws from P_{W,n,p}: one CSV row per draw");
  sample->add_option("--p", inv.p)->required();
  sample->add_option("--q", inv.q, "Exponent of the reported norm");
  sample->add_option("--n", inv.n)->required()->check(CLI::PositiveNumber);
  sample->add_option("--count", inv.count, "Number of draws");
  sample->add_option("--law", inv.law, "dirac0, exponential:RATE or gamma:SHAPE:RATE");
  sample->add_option("--statistic", inv.statistic, "norm_q, raw_norm, vn or points");

  auto* rate = app.add_subcommand("rate", "Tabulates a rate function as x,rate,speed_kind");
  rate->add_option("--kind", inv.rate_kind, "mdp, ldp_qgtp, ldp_qltp or ldp_peq")->required();
  rate->add_option("--p", inv.p)->required();
  rate->add_option("--q", inv.q)->required();
  rate->add_option("--grid", inv.grid, "start:stop:count, endpoints included")->required();
  rate->add_option("--law", inv.law, "Mixing law for the speed-n rates");

  auto* conj = app.add_subcommand("conjugate", "Legendre-Fenchel transform of Lambda on a grid");
  conj->add_option("--p", inv.p)->required();
  conj->add_option("--q", inv.q)->required();
  conj->add_option("--s1", inv.s1_grid, "start:stop:count")->required();
  conj->add_option("--s2", inv.s2_grid, "start:stop:count")->required();

  auto* ver = app.add_subcommand("verify", "Runs an experiment config and reports verdicts");
  ver->add_option("--config", inv.config_path, "Experiment JSON")->required();

  for (auto* sub : {constants, sample, rate, conj, ver}) {
    sub->add_option("--output-dir", output_dir, "Directory for output files");
    sub->add_option("--seed", seed, "64-bit seed override");
    sub->add_option("--threads", inv.threads, "Worker threads for sampling")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error=config " << detail::one_line(e.what()) << "\n";
    return kConfigError;
  }
  auto given = [&](const char* name) {
    if (app.count(name)) return true;
    for (auto* sub : app.get_subcommands())
      if (sub->count(name)) return true;
    return false;
  };
  if (given("--output-dir")) inv.output_dir = output_dir;
  if (given("--seed")) inv.seed = seed;

  try {
    const std::string which = app.get_subcommands().front()->get_name();
    if (which == "verify") return verify(inv, out);
    std::string content;
    if (which == "constants") content = constants_csv(inv);
    else if (which == "sample") content = sample_csv(inv);
    else if (which == "rate") content = rate_csv(inv);
    else content = conjugate_csv(inv);
    detail::emit(inv.output_dir, which + ".csv", content, out);
    return kOk;
  } catch (const ConfigError& e) {
    err << "error=config " << detail::one_line(e.what()) << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    err << "error=domain " << detail::one_line(e.what()) << "\n";
    return kConfigError;
  } catch (const NumericError& e) {
    err << "error=numeric " << detail::one_line(e.what()) << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error=internal " << detail::one_line(e.what()) << "\n";
    return kNumericError;
  }
}

}  // namespace lpball::cli

#endif  // LPBALL_CLI_HPP
