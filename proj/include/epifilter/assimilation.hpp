#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "epifilter/compartments.hpp"
#include "epifilter/covariance.hpp"
#include "epifilter/ingest.hpp"
#include "epifilter/linalg.hpp"
#include "epifilter/log.hpp"
#include "epifilter/metrics.hpp"
#include "epifilter/optimize.hpp"

namespace epifilter {

struct ParamBounds {
  double beta_lo = 0, beta_hi = 2;    // also bounds beta_e in SITR mode
  double gamma_lo = 0, gamma_hi = 1;
  double alpha_lo = 0, alpha_hi = 1;
};

/// Settings for the sliding-window filter.
struct FilterConfig {
  Model model = Model::sitr;
  int tau = 7;  // window length in days
  ParamBounds bounds;
  double fixed_alpha = 0.2;    // SITR infected -> treated rate
  double fixed_gamma = 0.071;  // SITR treated -> removed rate
  bool estimate_gamma = false; // SITR: jointly estimate (beta_e, gamma)
  double beta_init = 0.3;
  double gamma_init = 0.1;  // SIR initialization
  double tolerance = 1e-9;  // optimizer tolerance, relative to search-box width
  int max_evals = 20000;
  double initial_infected_multiplier = 10;
  CovarianceSpec covariance = scalar_spec(1, 1, 7);

  void check() const {
    if (tau < 1) throw ConfigError("tau must be >= 1");
    if (!(tolerance > 0)) throw ConfigError("optimizer tolerance must be > 0");
    if (max_evals < 10) throw ConfigError("max_evals too small");
    if (bounds.beta_lo > bounds.beta_hi || bounds.gamma_lo > bounds.gamma_hi ||
        bounds.alpha_lo > bounds.alpha_hi)
      throw ConfigError("parameter bounds must satisfy lo <= hi");
    if (!(initial_infected_multiplier > 0))
      throw ConfigError("initial_infected_multiplier must be > 0");
    if (covariance.q.rows() != static_cast<std::size_t>(tau) ||
        covariance.q.rows() != covariance.q.cols())
      throw ConfigError("observation weight Q must be tau x tau (tau=" + std::to_string(tau) +
                        ", got " + std::to_string(covariance.q.rows()) + "x" +
                        std::to_string(covariance.q.cols()) + ")");
    if (covariance.p.rows() != 1 || covariance.p.cols() != 1)
      throw ConfigError("background weight P must be 1x1 for the scalar latent state");
  }
};

/// One date of filter output. t_pred/r_pred are the model's propagated
/// values, never reset from data, so pred-vs-obs gaps are true forecast
/// errors.
struct FilterStep {
  Date date;
  double s = 0;
  double i_da = 0;
  double t_pred = 0, t_obs = 0;
  double r_pred = 0, r_obs = 0;
  AnyParams params;
  bool assimilated = false;
  bool converged = true;  // both argmins converged at this step
};

struct FilterRun {
  Model model = Model::sitr;
  int tau = 7;
  std::string region;
  std::vector<FilterStep> steps;
  std::vector<double> target_pred;  // model target (T for SITR, R for SIR)
  std::vector<double> target_obs;
  std::vector<double> rsfe_target;  // per-date |pred - obs|
  CompartmentState final_state;
  AnyParams final_params;
};

namespace detail {

// Candidate state at time t with the latent infected replaced. S absorbs
// the change; the candidate is capped so S stays non-negative.
inline CompartmentState with_infected(const CompartmentState& rest, double i_candidate) {
  CompartmentState x = rest;
  double cap = x.n - x.t - x.r;
  x.i = std::clamp(i_candidate, 0.0, std::max(cap, 0.0));
  x.s = x.n - x.i - x.t - x.r;
  return x;
}

inline double target_of(const CompartmentState& x, Model m) {
  return m == Model::sir ? x.r : x.t;
}

// Window residuals: observed target minus the trajectory simulated from x0
// over steps 1..tau under the given parameters.
inline std::vector<double> window_residuals(const CompartmentState& x0, const AnyParams& params,
                                            std::span<const double> window) {
  std::vector<double> r(window.size());
  CompartmentState x = x0;
  Model m = model_of(params);
  for (std::size_t k = 0; k < window.size(); ++k) {
    x = step(x, params);
    r[k] = window[k] - target_of(x, m);
  }
  return r;
}

}  // namespace detail

/// The window cost
///   J(I) = ||obs - pred(I)||^2_{Q^-1} + ||I - I_pred||^2_{P^-1}
/// where pred simulates forward from the candidate state over the window
/// [t+1, t+tau]. Q weights the observation misfit and P the distance from
/// the background; both enter inverted, so a larger entry means less
/// weight on the corresponding term.
inline double cost_state(double i_candidate, std::span<const double> window, double i_pred,
                         const AnyParams& params, const CompartmentState& state_rest,
                         const CovarianceSpec& cov) {
  if (window.empty()) throw InvalidInputError("cost_state: empty observation window");
  if (!std::isfinite(i_candidate) || !std::isfinite(i_pred))
    throw InvalidInputError("cost_state: non-finite latent state");
  if (cov.q.rows() != window.size())
    throw InvalidInputError("cost_state: Q dimension " + std::to_string(cov.q.rows()) +
                            " does not match window length " + std::to_string(window.size()));

  CompartmentState x0 = detail::with_infected(state_rest, i_candidate);
  std::vector<double> r = detail::window_residuals(x0, params, window);
  double j_obs = mahalanobis_squared(r, cov.q, "observation weight Q");
  std::vector<double> db = {i_candidate - i_pred};
  double j_bg = mahalanobis_squared(db, cov.p, "background weight P");
  return j_obs + j_bg;
}

struct AssimilationResult {
  double value = 0;  // the argmin
  double cost = 0;
  bool converged = true;
  int evals = 0;
};

/// I^DA = argmin_I J(I) over [0, N]. Never returns a point costing more
/// than the background prediction; non-convergence within the evaluation
/// budget returns the best point found, flagged.
inline AssimilationResult assimilate_state(std::span<const double> window, double i_pred,
                                           const AnyParams& params,
                                           const CompartmentState& state_rest,
                                           const CovarianceSpec& cov, const FilterConfig& cfg) {
  auto objective = [&](const std::vector<double>& x) {
    return cost_state(x[0], window, i_pred, params, state_rest, cov);
  };
  MinimizeOptions opt;
  opt.xtol = cfg.tolerance * std::max(1.0, state_rest.n);
  opt.max_evals = cfg.max_evals;
  opt.presearch = 48;
  MinimizeResult res = minimize_bounded(objective, {0.0}, {state_rest.n}, {i_pred}, opt);
  if (!res.converged)
    log_warn("assimilate_state: optimizer budget exhausted (best cost " +
             std::to_string(res.fx) + ")");
  return {res.x[0], res.fx, res.converged, res.evals};
}

struct ParamEstimate {
  AnyParams params;
  double cost = 0;  // observation misfit at the returned parameters
  bool converged = true;
  int evals = 0;
};

/// Second-stage argmin: parameters minimizing the window observation misfit
/// with the latent state held at I^DA. SIR estimates (beta, gamma) jointly;
/// SITR estimates beta_e with alpha and gamma fixed (optionally gamma too).
/// The incumbent parameters seed the search, so the returned misfit never
/// exceeds theirs.
inline ParamEstimate estimate_params(std::span<const double> window, double i_da,
                                     const CompartmentState& state_rest, const AnyParams& incumbent,
                                     const CovarianceSpec& cov, const FilterConfig& cfg) {
  if (window.empty()) throw InvalidInputError("estimate_params: empty observation window");
  CompartmentState x0 = detail::with_infected(state_rest, i_da);

  auto misfit = [&](const AnyParams& p) {
    std::vector<double> r = detail::window_residuals(x0, p, window);
    return mahalanobis_squared(r, cov.q, "observation weight Q");
  };

  MinimizeOptions opt;
  opt.xtol = cfg.tolerance;
  opt.max_evals = cfg.max_evals;

  ParamEstimate out;
  if (model_of(incumbent) == Model::sir) {
    const SirParams& inc = std::get<SirParams>(incumbent);
    auto objective = [&](const std::vector<double>& x) {
      return misfit(SirParams{x[0], x[1]});
    };
    opt.presearch = 12;
    MinimizeResult res =
        minimize_bounded(objective, {cfg.bounds.beta_lo, cfg.bounds.gamma_lo},
                         {cfg.bounds.beta_hi, cfg.bounds.gamma_hi}, {inc.beta, inc.gamma}, opt);
    out.params = SirParams{res.x[0], res.x[1]};
    out.cost = res.fx;
    out.converged = res.converged;
    out.evals = res.evals;
  } else {
    const SitrParams& inc = std::get<SitrParams>(incumbent);
    if (cfg.estimate_gamma) {
      auto objective = [&](const std::vector<double>& x) {
        return misfit(SitrParams{x[0], inc.alpha, x[1]});
      };
      opt.presearch = 12;
      MinimizeResult res =
          minimize_bounded(objective, {cfg.bounds.beta_lo, cfg.bounds.gamma_lo},
                           {cfg.bounds.beta_hi, cfg.bounds.gamma_hi}, {inc.beta_e, inc.gamma}, opt);
      out.params = SitrParams{res.x[0], inc.alpha, res.x[1]};
      out.cost = res.fx;
      out.converged = res.converged;
      out.evals = res.evals;
    } else {
      auto objective = [&](const std::vector<double>& x) {
        return misfit(SitrParams{x[0], inc.alpha, inc.gamma});
      };
      MinimizeResult res = minimize_bounded(objective, {cfg.bounds.beta_lo},
                                            {cfg.bounds.beta_hi}, {inc.beta_e}, opt);
      out.params = SitrParams{res.x[0], inc.alpha, inc.gamma};
      out.cost = res.fx;
      out.converged = res.converged;
      out.evals = res.evals;
    }
  }
  if (!out.converged)
    log_warn("estimate_params: optimizer budget exhausted (best misfit " +
             std::to_string(out.cost) + ")");
  return out;
}

namespace detail {

inline AnyParams initial_params(const FilterConfig& cfg) {
  if (cfg.model == Model::sir) return SirParams{cfg.beta_init, cfg.gamma_init};
  return SitrParams{cfg.beta_init, cfg.fixed_alpha, cfg.fixed_gamma};
}

inline CompartmentState initial_state(const ObservationSeries& series, const FilterConfig& cfg) {
  double first_nonzero = 0;
  for (double c : series.confirmed) {
    if (c > 0) {
      first_nonzero = c;
      break;
    }
  }
  CompartmentState x;
  x.n = series.population;
  x.i = cfg.initial_infected_multiplier * first_nonzero;
  x.t = cfg.model == Model::sitr ? series.treated.front() : 0.0;
  x.r = series.removed.front();
  double cap = x.n - x.t - x.r;
  x.i = std::clamp(x.i, 0.0, std::max(cap, 0.0));
  x.s = x.n - x.i - x.t - x.r;
  if (x.s < 0) throw InvalidInputError("initial observations exceed the population");
  return x;
}

}  // namespace detail

/// Sequential sliding-window filter. At each step t with a full forward
/// window of observations ([t+1, t+tau], starting at t = tau):
///   1. the propagated I is the background prediction,
///   2. assimilate_state re-estimates I from the window,
///   3. estimate_params re-estimates the transmission parameters,
///   4. the state advances one day under the updated values.
/// Warm-up days (t < tau) and tail days (window would overrun the data)
/// propagate without updating. Every date is recorded. SIR mode targets
/// the removed series, SITR the treated series.
inline FilterRun run_filter(const ObservationSeries& series, const FilterConfig& cfg) {
  cfg.check();
  const int len = static_cast<int>(series.size());
  if (len < cfg.tau + 1)
    throw ConfigError("run_filter: series length " + std::to_string(len) +
                      " is shorter than tau + 1 = " + std::to_string(cfg.tau + 1));
  if (!(series.population > 0)) throw ConfigError("run_filter: population must be positive");

  const std::vector<double>& target =
      cfg.model == Model::sir ? series.removed : series.treated;

  FilterRun run;
  run.model = cfg.model;
  run.tau = cfg.tau;
  run.region = series.region;

  CompartmentState x = detail::initial_state(series, cfg);
  AnyParams params = detail::initial_params(cfg);

  for (int t = 0; t < len; ++t) {
    bool active = t >= cfg.tau && t + cfg.tau <= len - 1;
    bool converged = true;
    if (active) {
      std::span<const double> window(target.data() + t + 1, static_cast<std::size_t>(cfg.tau));
      AssimilationResult da =
          assimilate_state(window, x.i, params, x, cfg.covariance, cfg);
      x = detail::with_infected(x, da.value);
      ParamEstimate est = estimate_params(window, x.i, x, params, cfg.covariance, cfg);
      params = est.params;
      converged = da.converged && est.converged;
    }

    FilterStep step;
    step.date = series.dates[t];
    step.s = x.s;
    step.i_da = x.i;
    step.t_pred = x.t;
    step.r_pred = x.r;
    step.t_obs = series.treated[t];
    step.r_obs = series.removed[t];
    step.params = params;
    step.assimilated = active;
    step.converged = converged;
    run.steps.push_back(step);

    double pred = detail::target_of(x, cfg.model);
    run.target_pred.push_back(pred);
    run.target_obs.push_back(target[t]);
    run.rsfe_target.push_back(rsfe(pred, target[t]));

    if (t + 1 < len) x = epifilter::step(x, params);
  }

  run.final_state = x;
  run.final_params = params;
  return run;
}

struct StaticFit {
  SirParams params;
  std::vector<CompartmentState> trajectory;  // aligned with the series dates
};

/// Baseline without re-estimation: least-squares (beta, gamma) on the first
/// window's removed counts, then a fixed-parameter simulation across the
/// whole sample.
inline StaticFit fit_static_sir(const ObservationSeries& series, const FilterConfig& cfg) {
  cfg.check();
  const int len = static_cast<int>(series.size());
  if (len < cfg.tau + 1)
    throw ConfigError("fit_static_sir: need at least tau + 1 = " + std::to_string(cfg.tau + 1) +
                      " observations, got " + std::to_string(len));

  FilterConfig sir_cfg = cfg;
  sir_cfg.model = Model::sir;
  CompartmentState x0 = detail::initial_state(series, sir_cfg);
  std::span<const double> window(series.removed.data() + 1, static_cast<std::size_t>(cfg.tau));

  auto objective = [&](const std::vector<double>& x) {
    std::vector<double> r =
        detail::window_residuals(x0, SirParams{x[0], x[1]}, window);
    double ss = 0;
    for (double v : r) {
      if (!std::isfinite(v)) throw NumericalError("fit_static_sir: non-finite residual");
      ss += v * v;
    }
    return ss;
  };

  MinimizeOptions opt;
  opt.xtol = cfg.tolerance;
  opt.max_evals = cfg.max_evals;
  opt.presearch = 24;
  MinimizeResult res = minimize_bounded(objective, {cfg.bounds.beta_lo, cfg.bounds.gamma_lo},
                                        {cfg.bounds.beta_hi, cfg.bounds.gamma_hi},
                                        {cfg.beta_init, cfg.gamma_init}, opt);

  StaticFit fit;
  fit.params = SirParams{res.x[0], res.x[1]};
  fit.trajectory = simulate(x0, fit.params, len - 1);
  return fit;
}

/// Fixed-parameter continuation from the end of a filter run.
inline std::vector<CompartmentState> forecast(const FilterRun& run, int horizon) {
  if (horizon < 0) throw InvalidInputError("forecast: negative horizon");
  if (run.steps.empty()) throw InvalidInputError("forecast: empty run");
  return simulate(run.final_state, run.final_params, horizon);
}

}  // namespace epifilter
