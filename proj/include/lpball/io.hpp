#ifndef LPBALL_IO_HPP
#define LPBALL_IO_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lpball/errors.hpp"
#include "lpball/harness.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <unistd.h>
#endif

namespace lpball::io {

using nlohmann::json;

/// Round-trip decimal for CSV: 17 significant digits, "inf", "-inf", "nan".
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// JSON has no infinity; use the strings "inf" / "-inf" and null for NaN.
inline json json_number(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed run never leaves a truncated output behind.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
#if defined(__unix__) || defined(__APPLE__)
  tmp += ".tmp." + std::to_string(::getpid());
#else
  tmp += ".tmp";
#endif
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw ConfigError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw ConfigError("cannot move output into place at " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

inline void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(std::string(where) + ": unknown key '" + it.key() + "'");
}

inline double get_double(const json& j, const char* key, const char* where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string(where) + ": missing '" + key + "'");
  if (!it->is_number()) throw ConfigError(std::string(where) + ": '" + key + "' must be a number");
  return it->get<double>();
}

inline std::uint64_t get_u64(const json& j, const char* key, const char* where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string(where) + ": missing '" + key + "'");
  if (!it->is_number_unsigned())
    throw ConfigError(std::string(where) + ": '" + key + "' must be a nonnegative integer");
  return it->get<std::uint64_t>();
}

inline std::string get_string(const json& j, const char* key, const char* where) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw ConfigError(std::string(where) + ": '" + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace detail

inline MixingLaw law_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("law must be a JSON object");
  const std::string kind = detail::get_string(j, "kind", "law");
  if (kind == "dirac0") {
    detail::check_keys(j, "law", {"kind"});
    return Dirac0{};
  }
  if (kind == "exponential") {
    detail::check_keys(j, "law", {"kind", "rate"});
    return ExponentialLaw{detail::get_double(j, "rate", "law")};
  }
  if (kind == "gamma") {
    detail::check_keys(j, "law", {"kind", "shape", "rate"});
    return GammaLaw{detail::get_double(j, "shape", "law"), detail::get_double(j, "rate", "law")};
  }
  throw ConfigError("law: unknown kind '" + kind + "' (dirac0, exponential, gamma)");
}

inline json law_to_json(const MixingLaw& law) {
  if (std::holds_alternative<Dirac0>(law)) return {{"kind", "dirac0"}};
  if (const auto* e = std::get_if<ExponentialLaw>(&law)) return {{"kind", "exponential"}, {"rate", e->rate}};
  if (const auto* g = std::get_if<GammaLaw>(&law))
    return {{"kind", "gamma"}, {"shape", g->shape}, {"rate", g->rate}};
  return {{"kind", "external"}, {"name", std::get<ExternalLaw>(law).name}};
}

inline ExperimentConfig config_from_json(const json& j) {
  detail::check_keys(j, "config",
                     {"kind", "params", "law", "n_grid", "samples_per_n", "seed", "beta", "thresholds",
                      "mu_n_rule", "k_rule", "chunk_size", "tolerances"});
  ExperimentConfig c;
  c.kind = parse_experiment_kind(detail::get_string(j, "kind", "config"));
  if (!j.contains("params")) throw ConfigError("config: missing 'params'");
  detail::check_keys(j["params"], "params", {"p", "q"});
  c.params.p = detail::get_double(j["params"], "p", "params");
  c.params.q = detail::get_double(j["params"], "q", "params");
  if (j.contains("law")) c.law = law_from_json(j["law"]);
  if (!j.contains("n_grid") || !j["n_grid"].is_array()) throw ConfigError("config: 'n_grid' must be an array");
  for (const auto& v : j["n_grid"]) {
    if (!v.is_number_unsigned()) throw ConfigError("n_grid entries must be positive integers");
    c.n_grid.push_back(v.get<std::uint64_t>());
  }
  c.samples_per_n = detail::get_u64(j, "samples_per_n", "config");
  c.seed = detail::get_u64(j, "seed", "config");
  if (j.contains("beta")) c.beta = detail::get_double(j, "beta", "config");
  if (j.contains("thresholds")) {
    if (!j["thresholds"].is_array()) throw ConfigError("config: 'thresholds' must be an array");
    for (const auto& v : j["thresholds"]) {
      if (!v.is_number()) throw ConfigError("thresholds must be numbers");
      c.thresholds.push_back(v.get<double>());
    }
  }
  if (j.contains("mu_n_rule") && !j["mu_n_rule"].is_null()) {
    const json& r = j["mu_n_rule"];
    if (!r.is_object()) throw ConfigError("mu_n_rule must be a JSON object");
    MuRule m;
    const std::string kind = detail::get_string(r, "kind", "mu_n_rule");
    if (kind == "zero") {
      detail::check_keys(r, "mu_n_rule", {"kind"});
      m.kind = MuRule::Kind::Zero;
    } else if (kind == "gamma") {
      detail::check_keys(r, "mu_n_rule", {"kind", "coefficient", "exponent", "rate"});
      m.kind = MuRule::Kind::Gamma;
      m.coefficient = detail::get_double(r, "coefficient", "mu_n_rule");
      m.exponent = r.contains("exponent") ? detail::get_double(r, "exponent", "mu_n_rule") : 1.0;
      m.rate = r.contains("rate") ? detail::get_double(r, "rate", "mu_n_rule") : 1.0;
    } else if (kind == "projection") {
      detail::check_keys(r, "mu_n_rule", {"kind"});
      m.kind = MuRule::Kind::Projection;
    } else {
      throw ConfigError("mu_n_rule: unknown kind '" + kind + "' (zero, gamma, projection)");
    }
    c.mu_n_rule = m;
  }
  if (j.contains("k_rule") && !j["k_rule"].is_null()) {
    const json& r = j["k_rule"];
    if (!r.is_object()) throw ConfigError("k_rule must be a JSON object");
    KRule k;
    const std::string kind = detail::get_string(r, "kind", "k_rule");
    if (kind == "identity") {
      detail::check_keys(r, "k_rule", {"kind"});
      k.kind = KRule::Kind::Identity;
    } else if (kind == "ceil_lambda") {
      detail::check_keys(r, "k_rule", {"kind", "lambda"});
      k.kind = KRule::Kind::CeilLambda;
      k.lambda = detail::get_double(r, "lambda", "k_rule");
    } else if (kind == "n_minus_sqrt") {
      detail::check_keys(r, "k_rule", {"kind"});
      k.kind = KRule::Kind::NMinusSqrt;
    } else {
      throw ConfigError("k_rule: unknown kind '" + kind + "' (identity, ceil_lambda, n_minus_sqrt)");
    }
    c.k_rule = k;
  }
  if (j.contains("chunk_size")) c.chunk_size = detail::get_u64(j, "chunk_size", "config");
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    detail::check_keys(t, "tolerances", {"clt_variance", "ks_distance", "tail_slope", "proj_variance"});
    if (t.contains("clt_variance")) c.tolerances.clt_variance = detail::get_double(t, "clt_variance", "tolerances");
    if (t.contains("ks_distance")) c.tolerances.ks_distance = detail::get_double(t, "ks_distance", "tolerances");
    if (t.contains("tail_slope")) c.tolerances.tail_slope = detail::get_double(t, "tail_slope", "tolerances");
    if (t.contains("proj_variance")) c.tolerances.proj_variance = detail::get_double(t, "proj_variance", "tolerances");
  }
  c.validate();
  return c;
}

inline ExperimentConfig config_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) { return config_from_string(read_file(path)); }

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["kind"] = experiment_kind_name(c.kind);
  j["params"] = {{"p", c.params.p}, {"q", c.params.q}};
  j["law"] = law_to_json(c.law);
  j["n_grid"] = c.n_grid;
  j["samples_per_n"] = c.samples_per_n;
  j["seed"] = c.seed;
  j["beta"] = c.beta;
  j["thresholds"] = c.thresholds;
  if (c.mu_n_rule) {
    json r{{"kind", mu_rule_name(c.mu_n_rule->kind)}};
    if (c.mu_n_rule->kind == MuRule::Kind::Gamma) {
      r["coefficient"] = c.mu_n_rule->coefficient;
      r["exponent"] = c.mu_n_rule->exponent;
      r["rate"] = c.mu_n_rule->rate;
    }
    j["mu_n_rule"] = r;
  }
  if (c.k_rule) {
    json r{{"kind", k_rule_name(c.k_rule->kind)}};
    if (c.k_rule->kind == KRule::Kind::CeilLambda) r["lambda"] = c.k_rule->lambda;
    j["k_rule"] = r;
  }
  j["chunk_size"] = c.chunk_size;
  j["tolerances"] = {{"clt_variance", c.tolerances.clt_variance},
                     {"ks_distance", c.tolerances.ks_distance},
                     {"tail_slope", c.tolerances.tail_slope},
                     {"proj_variance", c.tolerances.proj_variance}};
  return j;
}

// ---------------------------------------------------------------------------
// Report emission

inline std::string report_csv(const ExperimentReport& r) {
  std::string out = "n,statistic,empirical,target,stderr,verdict\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.n) + "," + row.statistic + "," + format_double(row.empirical) + "," +
           format_double(row.target) + "," + format_double(row.stderr_) + "," + outcome_name(row.verdict) + "\n";
  }
  return out;
}

inline json report_json(const ExperimentReport& r) {
  json j;
  j["kind"] = experiment_kind_name(r.config.kind);
  j["speed_kind"] = r.speed_kind;
  j["config"] = config_to_json(r.config);
  json vs = json::array();
  for (const auto& v : r.verdicts)
    vs.push_back({{"criterion", v.criterion},
                  {"outcome", outcome_name(v.outcome)},
                  {"observed", json_number(v.observed)},
                  {"target", json_number(v.target)},
                  {"tolerance", json_number(v.tolerance)},
                  {"stderr", json_number(v.stderr_)},
                  {"detail", v.detail}});
  j["verdicts"] = vs;
  json ts = json::array();
  for (const auto& t : r.trends)
    ts.push_back({{"statistic", t.statistic},
                  {"points", t.points},
                  {"spearman", json_number(t.spearman)},
                  {"slope", json_number(t.slope)},
                  {"slope_stderr", json_number(t.slope_stderr)}});
  j["trends"] = ts;
  j["notes"] = r.notes;
  j["passed"] = r.all_passed();
  return j;
}

inline std::string report_json_text(const ExperimentReport& r) { return report_json(r).dump(2) + "\n"; }

/// CSV `x,rate,speed_kind` of a tabulated rate function.
inline std::string rate_grid_csv(const RateGrid& g) {
  std::string out = "x,rate,speed_kind\n";
  const std::string speed = speed_kind_name(g.speed);
  for (std::size_t i = 0; i < g.x.size(); ++i)
    out += format_double(g.x[i]) + "," + g.rate[i].to_string() + "," + speed + "\n";
  return out;
}

}  // namespace lpball::io

#endif  // LPBALL_IO_HPP
