#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "epifilter/assimilation.hpp"
#include "epifilter/errors.hpp"

namespace epifilter {

struct CovarianceConfig {
  std::string mode = "fixed";  // fixed | residual | hybrid
  double q = 1.0;              // fixed observation-misfit weight
  double p = 1.0;              // fixed background weight
  int ensemble_size = 8;       // hybrid mode
  std::uint64_t seed = 0;      // hybrid mode; defaults to the run seed
  bool seed_set = false;
};

struct DataConfig {
  std::string series;  // normalized series CSV; or the three JHU files:
  std::string confirmed;
  std::string deaths;
  std::string recovered;
};

/// Everything a run needs, loadable from a flat key = value file with
/// [section] headers. Unknown keys and malformed values fail with
/// file:line positions.
struct RunConfig {
  // [run]
  std::string region;
  double population = 0;
  Model model = Model::sitr;
  int tau = 7;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int forecast_horizon = 14;
  Date start_date{0, 0, 0};  // optional sample bounds; zero = unbounded
  Date end_date{0, 0, 0};

  // [data]
  DataConfig data;

  // [model]
  double beta_init = 0.3;
  double gamma_init = 0.1;
  double alpha = 0.2;    // SITR fixed transition rate
  double gamma = 0.071;  // SITR fixed recovery rate
  bool estimate_gamma = false;
  double initial_infected_multiplier = 10;
  ParamBounds bounds;

  // [filter]
  double tolerance = 1e-9;
  int max_evals = 20000;

  // [covariance]
  CovarianceConfig covariance;

  // [sensitivity]
  std::vector<double> q_values = {0.5, 1, 10, 100};
  std::vector<double> p_values = {0.1, 1, 100};

  bool strict = false;  // CLI flag, not persisted

  FilterConfig filter_config(CovarianceSpec cov) const {
    FilterConfig f;
    f.model = model;
    f.tau = tau;
    f.bounds = bounds;
    f.fixed_alpha = alpha;
    f.fixed_gamma = gamma;
    f.estimate_gamma = estimate_gamma;
    f.beta_init = beta_init;
    f.gamma_init = gamma_init;
    f.tolerance = tolerance;
    f.max_evals = max_evals;
    f.initial_infected_multiplier = initial_infected_multiplier;
    f.covariance = std::move(cov);
    return f;
  }
};

namespace detail {

struct ConfigCursor {
  std::string what;
  int line = 0;
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(what + ":" + std::to_string(line) + ": " + msg);
  }
};

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& v, const ConfigCursor& at) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) at.fail("expected a number, got '" + v + "'");
  return x;
}

inline int to_int(const std::string& v, const ConfigCursor& at) {
  char* end = nullptr;
  long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size()) at.fail("expected an integer, got '" + v + "'");
  return static_cast<int>(x);
}

inline std::uint64_t to_u64(const std::string& v, const ConfigCursor& at) {
  // strtoull silently wraps negative input, so refuse signs up front
  if (v.empty() || v[0] == '-' || v[0] == '+')
    at.fail("expected an unsigned integer, got '" + v + "'");
  char* end = nullptr;
  unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) at.fail("expected an unsigned integer, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& v, const ConfigCursor& at) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  at.fail("expected true/false, got '" + v + "'");
}

inline std::vector<double> to_double_list(const std::string& v, const ConfigCursor& at) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    std::size_t comma = v.find(',', pos);
    std::string item = trim(comma == std::string::npos ? v.substr(pos) : v.substr(pos, comma - pos));
    if (item.empty()) at.fail("empty item in list '" + v + "'");
    out.push_back(to_double(item, at));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) at.fail("empty list");
  return out;
}

}  // namespace detail

/// Parse a config stream. Lines are `key = value` grouped under
/// `[section]` headers; `#` and `;` start full-line comments.
inline RunConfig parse_config(std::istream& in, const std::string& what) {
  RunConfig cfg;
  detail::ConfigCursor at{what, 0};
  std::string section;
  std::string line;

  while (std::getline(in, line)) {
    ++at.line;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') at.fail("unterminated section header");
      section = t.substr(1, t.size() - 2);
      if (section != "run" && section != "data" && section != "model" && section != "filter" &&
          section != "covariance" && section != "sensitivity" && section != "resolved")
        at.fail("unknown section [" + section + "]");
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) at.fail("expected key = value");
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty()) at.fail("empty key");

    if (section == "resolved") continue;  // informational echo from a previous run

    if (section == "run") {
      if (key == "region") cfg.region = value;
      else if (key == "population") cfg.population = detail::to_double(value, at);
      else if (key == "model") {
        try {
          cfg.model = parse_model(value);
        } catch (const ConfigError&) {
          at.fail("model must be sir or sitr, got '" + value + "'");
        }
      } else if (key == "tau") cfg.tau = detail::to_int(value, at);
      else if (key == "seed") cfg.seed = detail::to_u64(value, at);
      else if (key == "out_dir") cfg.out_dir = value;
      else if (key == "forecast_horizon") cfg.forecast_horizon = detail::to_int(value, at);
      else if (key == "start_date") {
        try {
          cfg.start_date = parse_iso_date(value);
        } catch (const FormatError& e) {
          at.fail(e.what());
        }
      } else if (key == "end_date") {
        try {
          cfg.end_date = parse_iso_date(value);
        } catch (const FormatError& e) {
          at.fail(e.what());
        }
      } else at.fail("unknown key '" + key + "' in [run]");
    } else if (section == "data") {
      if (key == "series") cfg.data.series = value;
      else if (key == "confirmed") cfg.data.confirmed = value;
      else if (key == "deaths") cfg.data.deaths = value;
      else if (key == "recovered") cfg.data.recovered = value;
      else at.fail("unknown key '" + key + "' in [data]");
    } else if (section == "model") {
      if (key == "beta_init") cfg.beta_init = detail::to_double(value, at);
      else if (key == "gamma_init") cfg.gamma_init = detail::to_double(value, at);
      else if (key == "alpha") cfg.alpha = detail::to_double(value, at);
      else if (key == "gamma") cfg.gamma = detail::to_double(value, at);
      else if (key == "estimate_gamma") cfg.estimate_gamma = detail::to_bool(value, at);
      else if (key == "initial_infected_multiplier")
        cfg.initial_infected_multiplier = detail::to_double(value, at);
      else if (key == "beta_min") cfg.bounds.beta_lo = detail::to_double(value, at);
      else if (key == "beta_max") cfg.bounds.beta_hi = detail::to_double(value, at);
      else if (key == "gamma_min") cfg.bounds.gamma_lo = detail::to_double(value, at);
      else if (key == "gamma_max") cfg.bounds.gamma_hi = detail::to_double(value, at);
      else if (key == "alpha_min") cfg.bounds.alpha_lo = detail::to_double(value, at);
      else if (key == "alpha_max") cfg.bounds.alpha_hi = detail::to_double(value, at);
      else at.fail("unknown key '" + key + "' in [model]");
    } else if (section == "filter") {
      if (key == "tolerance") cfg.tolerance = detail::to_double(value, at);
      else if (key == "max_evals") cfg.max_evals = detail::to_int(value, at);
      else at.fail("unknown key '" + key + "' in [filter]");
    } else if (section == "covariance") {
      if (key == "mode") {
        if (value != "fixed" && value != "residual" && value != "hybrid")
          at.fail("covariance mode must be fixed, residual or hybrid, got '" + value + "'");
        cfg.covariance.mode = value;
      } else if (key == "q") cfg.covariance.q = detail::to_double(value, at);
      else if (key == "p") cfg.covariance.p = detail::to_double(value, at);
      else if (key == "ensemble_size") cfg.covariance.ensemble_size = detail::to_int(value, at);
      else if (key == "seed") {
        cfg.covariance.seed = detail::to_u64(value, at);
        cfg.covariance.seed_set = true;
      } else at.fail("unknown key '" + key + "' in [covariance]");
    } else if (section == "sensitivity") {
      if (key == "q_values") cfg.q_values = detail::to_double_list(value, at);
      else if (key == "p_values") cfg.p_values = detail::to_double_list(value, at);
      else at.fail("unknown key '" + key + "' in [sensitivity]");
    } else {
      at.fail("key '" + key + "' outside any section");
    }
  }

  // cross-field validation with the file (not a line) as the location
  if (cfg.region.empty()) throw ConfigError(what + ": [run] region is required");
  if (!(cfg.population > 0)) throw ConfigError(what + ": [run] population must be > 0");
  if (cfg.tau < 1) throw ConfigError(what + ": [run] tau must be >= 1");
  if (cfg.forecast_horizon < 0) throw ConfigError(what + ": [run] forecast_horizon must be >= 0");
  bool has_series = !cfg.data.series.empty();
  bool has_jhu =
      !cfg.data.confirmed.empty() && !cfg.data.deaths.empty() && !cfg.data.recovered.empty();
  if (!has_series && !has_jhu)
    throw ConfigError(what +
                      ": [data] needs either series=, or all of confirmed=/deaths=/recovered=");
  if (cfg.covariance.mode == "fixed" && (!(cfg.covariance.q > 0) || !(cfg.covariance.p > 0)))
    throw ConfigError(what + ": [covariance] fixed mode needs q > 0 and p > 0");
  if (cfg.covariance.mode == "hybrid" && cfg.covariance.ensemble_size < 2)
    throw ConfigError(what + ": [covariance] ensemble_size must be >= 2");
  if (cfg.start_date.y != 0 && cfg.end_date.y != 0 && cfg.end_date < cfg.start_date)
    throw ConfigError(what + ": [run] end_date precedes start_date");
  return cfg;
}

/// Loads a config file. Relative [data] paths are taken relative to the
/// config file's directory so bundles stay relocatable.
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open config '" + path + "'");
  RunConfig cfg = parse_config(in, path);
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto rebase = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative())
      p = (base / p).lexically_normal().string();
  };
  rebase(cfg.data.series);
  rebase(cfg.data.confirmed);
  rebase(cfg.data.deaths);
  rebase(cfg.data.recovered);
  return cfg;
}

/// Extra values recorded alongside the input settings when a run writes
/// back its fully-resolved configuration.
struct ResolvedInfo {
  std::string covariance_provenance;
  double q_effective = 0;  // scalar on the window weight's diagonal
  double p_effective = 0;
  std::string q_reduction;  // how a full ensemble covariance was collapsed
};

inline void write_config(const RunConfig& cfg, std::ostream& out, const ResolvedInfo* resolved) {
  auto num = [](double v) { return detail::format_number(v); };
  out << "# fully-resolved epifilter configuration (written back by the run)\n";
  out << "[run]\n";
  out << "region = " << cfg.region << "\n";
  out << "population = " << num(cfg.population) << "\n";
  out << "model = " << model_name(cfg.model) << "\n";
  out << "tau = " << cfg.tau << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  out << "forecast_horizon = " << cfg.forecast_horizon << "\n";
  if (cfg.start_date.y != 0) out << "start_date = " << cfg.start_date.iso() << "\n";
  if (cfg.end_date.y != 0) out << "end_date = " << cfg.end_date.iso() << "\n";
  out << "\n[data]\n";
  if (!cfg.data.series.empty()) out << "series = " << cfg.data.series << "\n";
  if (!cfg.data.confirmed.empty()) out << "confirmed = " << cfg.data.confirmed << "\n";
  if (!cfg.data.deaths.empty()) out << "deaths = " << cfg.data.deaths << "\n";
  if (!cfg.data.recovered.empty()) out << "recovered = " << cfg.data.recovered << "\n";
  out << "\n[model]\n";
  out << "beta_init = " << num(cfg.beta_init) << "\n";
  out << "gamma_init = " << num(cfg.gamma_init) << "\n";
  out << "alpha = " << num(cfg.alpha) << "\n";
  out << "gamma = " << num(cfg.gamma) << "\n";
  out << "estimate_gamma = " << (cfg.estimate_gamma ? "true" : "false") << "\n";
  out << "initial_infected_multiplier = " << num(cfg.initial_infected_multiplier) << "\n";
  out << "beta_min = " << num(cfg.bounds.beta_lo) << "\n";
  out << "beta_max = " << num(cfg.bounds.beta_hi) << "\n";
  out << "gamma_min = " << num(cfg.bounds.gamma_lo) << "\n";
  out << "gamma_max = " << num(cfg.bounds.gamma_hi) << "\n";
  out << "alpha_min = " << num(cfg.bounds.alpha_lo) << "\n";
  out << "alpha_max = " << num(cfg.bounds.alpha_hi) << "\n";
  out << "\n[filter]\n";
  out << "tolerance = " << num(cfg.tolerance) << "\n";
  out << "max_evals = " << cfg.max_evals << "\n";
  out << "\n[covariance]\n";
  out << "mode = " << cfg.covariance.mode << "\n";
  out << "q = " << num(cfg.covariance.q) << "\n";
  out << "p = " << num(cfg.covariance.p) << "\n";
  out << "ensemble_size = " << cfg.covariance.ensemble_size << "\n";
  if (cfg.covariance.seed_set) out << "seed = " << cfg.covariance.seed << "\n";
  out << "\n[sensitivity]\n";
  out << "q_values = ";
  for (std::size_t k = 0; k < cfg.q_values.size(); ++k)
    out << (k ? ", " : "") << num(cfg.q_values[k]);
  out << "\np_values = ";
  for (std::size_t k = 0; k < cfg.p_values.size(); ++k)
    out << (k ? ", " : "") << num(cfg.p_values[k]);
  out << "\n";
  if (resolved) {
    out << "\n[resolved]\n";
    out << "covariance_provenance = " << resolved->covariance_provenance << "\n";
    out << "q_effective = " << num(resolved->q_effective) << "\n";
    out << "p_effective = " << num(resolved->p_effective) << "\n";
    if (!resolved->q_reduction.empty()) out << "q_reduction = " << resolved->q_reduction << "\n";
  }
}

}  // namespace epifilter
