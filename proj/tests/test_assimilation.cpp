#include <cmath>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "epifilter/assimilation.hpp"
#include "epifilter/rng.hpp"

using namespace epifilter;

namespace {

FilterConfig sitr_config(int tau = 7) {
  FilterConfig cfg;
  cfg.model = Model::sitr;
  cfg.tau = tau;
  cfg.covariance = scalar_spec(1, 1, tau);
  return cfg;
}

FilterConfig sir_config(int tau = 7) {
  FilterConfig cfg;
  cfg.model = Model::sir;
  cfg.tau = tau;
  cfg.covariance = scalar_spec(1, 1, tau);
  return cfg;
}

// Synthetic SITR observations from a known parameter schedule. Confirmed is
// T + R (its daily increment is alpha*I, so it is cumulative), recovered is
// the model's removed compartment, deaths zero.
ObservationSeries sitr_twin(const ParamSchedule<SitrParams>& sched, double n, double i0, double t0,
                            int days) {
  CompartmentState x0{n - i0 - t0, i0, t0, 0, n};
  auto traj = simulate(x0, sched, days - 1);
  ObservationSeries s;
  s.region = "twin";
  s.population = n;
  for (int k = 0; k < days; ++k) {
    s.dates.push_back(Date{2020, 3, 1} + k);
    s.treated.push_back(traj[k].t);
    s.removed.push_back(traj[k].r);
    s.confirmed.push_back(traj[k].t + traj[k].r);
    s.recovered.push_back(traj[k].r);
    s.deaths.push_back(0);
  }
  return s;
}

ObservationSeries sir_twin(const SirParams& p, double n, double i0, int days) {
  CompartmentState x0{n - i0, i0, 0, 0, n};
  auto traj = simulate(x0, p, days - 1);
  ObservationSeries s;
  s.region = "twin";
  s.population = n;
  for (int k = 0; k < days; ++k) {
    s.dates.push_back(Date{2020, 3, 1} + k);
    s.treated.push_back(0);
    s.removed.push_back(traj[k].r);
    s.confirmed.push_back(traj[k].i + traj[k].r);
    s.recovered.push_back(traj[k].r);
    s.deaths.push_back(0);
  }
  return s;
}

}  // namespace

TEST_CASE("cost matches a hand-evaluated scalar case", "[assimilation]") {
  // One observation, Q = P = 1. alpha = gamma = 0 freezes T at 3, so
  // pred = 3 against obs = 5 while the candidate i = 2 sits one unit from
  // i_pred = 1: J = (5-3)^2 + (2-1)^2 = 5.
  CompartmentState rest{990, 0, 3, 7, 1000};
  SitrParams p{0.0, 0.0, 0.0};
  std::vector<double> window = {5.0};
  double j = cost_state(2.0, window, 1.0, p, rest, scalar_spec(1, 1, 1));
  CHECK(j == Catch::Approx(5.0).margin(1e-12));

  // Make the prediction depend on the candidate: alpha = 0.5, T0 = 0 gives
  // pred = 0.5 * i = 1, so J = (5-1)^2 + (2-1)^2 = 17.
  CompartmentState rest2{998, 0, 0, 2, 1000};
  SitrParams p2{0.0, 0.5, 0.0};
  double j2 = cost_state(2.0, window, 1.0, p2, rest2, scalar_spec(1, 1, 1));
  CHECK(j2 == Catch::Approx(17.0).margin(1e-12));
}

TEST_CASE("consistent candidate and background give zero cost", "[assimilation]") {
  CompartmentState rest{9900, 0, 60, 40, 10000};
  SitrParams p{0.25, 0.2, 0.071};
  double i_pred = 55.0;
  CompartmentState x0 = rest;
  x0.i = i_pred;
  x0.s = x0.n - x0.i - x0.t - x0.r;
  auto traj = simulate(x0, p, 4);
  std::vector<double> window;
  for (int k = 1; k <= 4; ++k) window.push_back(traj[k].t);

  double j = cost_state(i_pred, window, i_pred, p, rest, scalar_spec(1, 1, 4));
  CHECK(j == Catch::Approx(0.0).margin(1e-18));
}

TEST_CASE("doubling Q halves the observation term", "[assimilation]") {
  CompartmentState rest{9900, 0, 60, 40, 10000};
  SitrParams p{0.3, 0.2, 0.071};
  std::vector<double> window = {80, 95, 110};
  double i = 70, i_pred = 50;

  double bg = (i - i_pred) * (i - i_pred);  // P = 1
  double j1 = cost_state(i, window, i_pred, p, rest, scalar_spec(1, 1, 3));
  double j2 = cost_state(i, window, i_pred, p, rest, scalar_spec(2, 1, 3));
  CHECK(j2 - bg == Catch::Approx(0.5 * (j1 - bg)).epsilon(1e-12));
}

TEST_CASE("cost input validation", "[assimilation]") {
  CompartmentState rest{990, 0, 3, 7, 1000};
  SitrParams p{0.2, 0.2, 0.071};
  std::vector<double> window = {5.0, 6.0};

  CHECK_THROWS_AS(cost_state(1, {}, 1, p, rest, scalar_spec(1, 1, 1)), InvalidInputError);
  // Q dimension must match the window
  CHECK_THROWS_AS(cost_state(1, window, 1, p, rest, scalar_spec(1, 1, 3)), InvalidInputError);
  // singular covariance reaches the caller as a numerical error
  CovarianceSpec cov = scalar_spec(1, 1, 2);
  cov.q(0, 0) = 0;
  cov.q(1, 1) = 0;
  CHECK_THROWS_AS(cost_state(1, window, 1, p, rest, cov), NumericalError);
}

TEST_CASE("assimilation returns the background for consistent windows", "[assimilation]") {
  FilterConfig cfg = sitr_config(5);
  CompartmentState rest{93000, 0, 4000, 3000, 100000};
  SitrParams p{0.25, 0.2, 0.071};
  double i_pred = 800;
  CompartmentState x0 = rest;
  x0.i = i_pred;
  x0.s = x0.n - x0.i - x0.t - x0.r;
  auto traj = simulate(x0, p, 5);
  std::vector<double> window;
  for (int k = 1; k <= 5; ++k) window.push_back(traj[k].t);

  auto res = assimilate_state(window, i_pred, p, rest, scalar_spec(1, 1, 5), cfg);
  CHECK(res.value == Catch::Approx(i_pred).margin(1e-3 * rest.n));
  CHECK(res.cost <= cost_state(i_pred, window, i_pred, p, rest, scalar_spec(1, 1, 5)) + 1e-15);
}

TEST_CASE("assimilation matches an exhaustive grid search", "[assimilation]") {
  // 20 random windows; the optimizer must land within 1e-3*N of the best
  // point on a 1e5-point scan of the same cost.
  Rng rng(424242);
  const double n = 100000;
  const int grid_points = 100000;
  for (int trial = 0; trial < 20; ++trial) {
    int tau = 3 + static_cast<int>(rng.uniform() * 5);
    bool sir = rng.uniform() < 0.4;
    CompartmentState rest;
    rest.n = n;
    rest.t = sir ? 0.0 : 2000 * rng.uniform();
    rest.r = 3000 * rng.uniform();
    rest.i = 0;
    rest.s = n - rest.t - rest.r;
    AnyParams params;
    if (sir)
      params = SirParams{1.2 * rng.uniform(), 0.5 * rng.uniform()};
    else
      params = SitrParams{0.8 * rng.uniform(), 0.05 + 0.4 * rng.uniform(), 0.2 * rng.uniform()};
    double i_pred = 20000 * rng.uniform();
    std::vector<double> window;
    double base = sir ? rest.r : rest.t;
    for (int k = 0; k < tau; ++k) {
      base += 400 * rng.uniform();
      window.push_back(base);
    }
    CovarianceSpec cov = scalar_spec(0.5 + 2 * rng.uniform(), 0.5 + 2 * rng.uniform(), tau);

    FilterConfig cfg = sir ? sir_config(tau) : sitr_config(tau);
    cfg.covariance = cov;
    auto res = assimilate_state(window, i_pred, params, rest, cov, cfg);

    double best_x = 0, best_f = cost_state(0, window, i_pred, params, rest, cov);
    for (int g = 1; g <= grid_points; ++g) {
      double x = n * g / grid_points;
      double f = cost_state(x, window, i_pred, params, rest, cov);
      if (f < best_f) {
        best_f = f;
        best_x = x;
      }
    }
    INFO("trial " << trial << " model " << (sir ? "sir" : "sitr") << " grid " << best_x
                  << " found " << res.value);
    CHECK(std::abs(res.value - best_x) <= 1e-3 * n);
  }
}

TEST_CASE("background weight controls the pull toward the prior", "[assimilation]") {
  // Window wants I near 20 (T grows by 0.5*I per day from T=0); the prior
  // says 5. Raising Q (down-weighting observations) must move the answer
  // toward the prior, shrinking |I_da - i_pred|.
  CompartmentState rest{980, 0, 0, 0, 1000};
  SitrParams p{0.0, 0.5, 0.0};
  std::vector<double> window = {10.0};
  double i_pred = 5.0;
  FilterConfig cfg = sitr_config(1);

  double prev_gap = 1e30;
  for (double q : {0.01, 1.0, 100.0, 10000.0}) {
    auto res = assimilate_state(window, i_pred, p, rest, scalar_spec(q, 1, 1), cfg);
    double gap = std::abs(res.value - i_pred);
    CHECK(gap <= prev_gap + 1e-9);
    prev_gap = gap;
  }

  // Closed form: argmin of (10 - i/2)^2 + (i-5)^2 is (0.5*10 + 5)/(0.25 + 1) = 8.
  auto res = assimilate_state(window, i_pred, p, rest, scalar_spec(1, 1, 1), cfg);
  CHECK(res.value == Catch::Approx(8.0).margin(1e-4));
}

TEST_CASE("parameter estimation recovers a noise-free SIR window", "[assimilation]") {
  FilterConfig cfg = sir_config(7);
  SirParams truth{0.42, 0.13};
  double n = 1e6;
  CompartmentState x0{n - 5000 - 2000, 5000, 0, 2000, n};
  auto traj = simulate(x0, truth, 7);
  std::vector<double> window;
  for (int k = 1; k <= 7; ++k) window.push_back(traj[k].r);

  CompartmentState rest = x0;
  rest.i = 0;
  auto est = estimate_params(window, 5000, rest, SirParams{0.8, 0.5}, scalar_spec(1, 1, 7), cfg);
  const auto& p = std::get<SirParams>(est.params);
  CHECK(p.beta == Catch::Approx(truth.beta).margin(1e-3));
  CHECK(p.gamma == Catch::Approx(truth.gamma).margin(1e-3));
  CHECK(est.cost <= 1e-6);
}

TEST_CASE("parameter estimation recovers a noise-free SITR window", "[assimilation]") {
  FilterConfig cfg = sitr_config(7);
  SitrParams truth{0.27, cfg.fixed_alpha, cfg.fixed_gamma};
  double n = 1e6;
  CompartmentState x0{n - 8000 - 1000 - 500, 8000, 1000, 500, n};
  auto traj = simulate(x0, truth, 7);
  std::vector<double> window;
  for (int k = 1; k <= 7; ++k) window.push_back(traj[k].t);

  CompartmentState rest = x0;
  auto est = estimate_params(window, 8000, rest,
                             SitrParams{1.5, cfg.fixed_alpha, cfg.fixed_gamma},
                             scalar_spec(1, 1, 7), cfg);
  const auto& p = std::get<SitrParams>(est.params);
  CHECK(p.beta_e == Catch::Approx(truth.beta_e).margin(1e-3));
  CHECK(p.alpha == cfg.fixed_alpha);
  CHECK(p.gamma == cfg.fixed_gamma);
}

TEST_CASE("flat windows drive beta to its lower bound", "[assimilation]") {
  SECTION("SIR: zero growth in removed needs gamma*I = 0; ties resolve low") {
    FilterConfig cfg = sir_config(5);
    CompartmentState rest{90000, 0, 0, 5000, 100000};
    std::vector<double> window(5, 5000.0);  // removed never changes
    auto est = estimate_params(window, 2000, rest, SirParams{0.9, 0.5},
                               scalar_spec(1, 1, 5), cfg);
    CHECK(std::get<SirParams>(est.params).beta <= cfg.bounds.beta_lo + 1e-3);
  }
  SECTION("SITR: with no latent infected the misfit is flat; ties resolve low") {
    FilterConfig cfg = sitr_config(5);
    CompartmentState rest{90000, 0, 5000, 5000, 100000};
    std::vector<double> window(5, 5000.0);
    // i_da = 0 removes every transmission term from the window prediction
    auto est = estimate_params(window, 0, rest,
                               SitrParams{0.9, cfg.fixed_alpha, 0.0},
                               scalar_spec(1, 1, 5), cfg);
    CHECK(std::get<SitrParams>(est.params).beta_e <= cfg.bounds.beta_lo + 1e-3);
  }
}

TEST_CASE("parameter estimation never worsens the incumbent", "[assimilation]") {
  FilterConfig cfg = sir_config(4);
  cfg.max_evals = 25;  // starve the optimizer
  CompartmentState rest{900000, 0, 0, 50000, 1e6};
  std::vector<double> window = {50100, 50500, 50800, 51600};
  SirParams incumbent{0.31, 0.12};

  CompartmentState x0 = detail::with_infected(rest, 30000);
  auto inc_res = detail::window_residuals(x0, incumbent, window);
  double inc_cost = 0;
  for (double r : inc_res) inc_cost += r * r;

  auto est = estimate_params(window, 30000, rest, incumbent, scalar_spec(1, 1, 4), cfg);
  CHECK(est.cost <= inc_cost + 1e-12 * (1 + inc_cost));
}

TEST_CASE("parameter estimation agrees with a 200x200 grid", "[assimilation]") {
  FilterConfig cfg = sir_config(6);
  Rng rng(777);
  for (int trial = 0; trial < 3; ++trial) {
    double n = 1e6;
    CompartmentState rest{0, 0, 0, 40000 + 10000 * rng.uniform(), n};
    rest.s = n - rest.r;
    double i_da = 20000 + 30000 * rng.uniform();
    std::vector<double> window;
    double base = rest.r;
    for (int k = 0; k < 6; ++k) {
      base += 500 + 2500 * rng.uniform();
      window.push_back(base);
    }
    CovarianceSpec cov = scalar_spec(1, 1, 6);
    auto est = estimate_params(window, i_da, rest, SirParams{0.3, 0.1}, cov, cfg);
    const auto& p = std::get<SirParams>(est.params);

    CompartmentState x0 = detail::with_infected(rest, i_da);
    auto misfit = [&](double beta, double gamma) {
      auto r = detail::window_residuals(x0, SirParams{beta, gamma}, window);
      double ss = 0;
      for (double v : r) ss += v * v;
      return ss;
    };

    double best_b = 0, best_g = 0, best_f = misfit(0, 0);
    for (int bi = 0; bi < 200; ++bi) {
      for (int gi = 0; gi < 200; ++gi) {
        double beta = cfg.bounds.beta_lo + (cfg.bounds.beta_hi - cfg.bounds.beta_lo) * bi / 199.0;
        double gamma =
            cfg.bounds.gamma_lo + (cfg.bounds.gamma_hi - cfg.bounds.gamma_lo) * gi / 199.0;
        double f = misfit(beta, gamma);
        if (f < best_f) {
          best_f = f;
          best_b = beta;
          best_g = gamma;
        }
      }
    }

    double res_b = (cfg.bounds.beta_hi - cfg.bounds.beta_lo) / 199.0;
    double res_g = (cfg.bounds.gamma_hi - cfg.bounds.gamma_lo) / 199.0;
    bool within_grid = std::abs(p.beta - best_b) <= res_b + 1e-12 &&
                       std::abs(p.gamma - best_g) <= res_g + 1e-12;
    bool dominates = misfit(p.beta, p.gamma) <= best_f + 1e-12 * (1 + best_f);
    INFO("trial " << trial << ": grid (" << best_b << "," << best_g << ") ours (" << p.beta << ","
                  << p.gamma << ")");
    CHECK((within_grid || dominates));
  }
}

TEST_CASE("filter tracks a piecewise twin and recovers the rate switch", "[assimilation]") {
  ParamSchedule<SitrParams> truth;
  truth.add(0, SitrParams{0.30, 0.2, 0.071});
  truth.add(30, SitrParams{0.15, 0.2, 0.071});
  ObservationSeries series = sitr_twin(truth, 1e6, 1000, 100, 70);

  FilterConfig cfg = sitr_config(7);
  FilterRun run = run_filter(series, cfg);
  REQUIRE(run.steps.size() == 70);

  int checked = 0;
  for (int t = 0; t < 70; ++t) {
    const FilterStep& step = run.steps[t];
    if (!step.assimilated) continue;
    if (t > 30 - cfg.tau && t < 30 + cfg.tau) continue;  // transition lag
    double expect = t < 30 ? 0.30 : 0.15;
    double got = std::get<SitrParams>(step.params).beta_e;
    INFO("day " << t << " expected " << expect << " got " << got);
    CHECK(std::abs(got - expect) <= 0.10 * expect);
    ++checked;
  }
  CHECK(checked > 30);
}

TEST_CASE("filter survives multiplicative observation noise", "[assimilation]") {
  ParamSchedule<SitrParams> truth;
  truth.add(0, SitrParams{0.30, 0.2, 0.071});
  truth.add(30, SitrParams{0.15, 0.2, 0.071});
  ObservationSeries series = sitr_twin(truth, 1e6, 1000, 100, 70);

  // 5% multiplicative noise: each day's count scaled by a factor drawn
  // uniformly within +/-5%.
  Rng rng(20200528);
  for (std::size_t k = 0; k < series.size(); ++k) {
    double f = 1.0 + 0.05 * (2.0 * rng.uniform() - 1.0);
    series.treated[k] = std::max(0.0, series.treated[k] * f);
  }

  FilterConfig cfg = sitr_config(7);
  FilterRun run = run_filter(series, cfg);

  for (int t = 0; t < 70; ++t) {
    const FilterStep& step = run.steps[t];
    if (!step.assimilated) continue;
    if (t > 30 - cfg.tau && t < 30 + cfg.tau) continue;
    double expect = t < 30 ? 0.30 : 0.15;
    double got = std::get<SitrParams>(step.params).beta_e;
    INFO("day " << t << " expected " << expect << " got " << got);
    CHECK(std::abs(got - expect) <= 0.25 * expect);
  }
}

TEST_CASE("constant observations keep beta at the lower bound", "[assimilation]") {
  ObservationSeries s;
  s.region = "flatland";
  s.population = 1e6;
  for (int k = 0; k < 30; ++k) {
    s.dates.push_back(Date{2020, 3, 1} + k);
    s.confirmed.push_back(500);
    s.recovered.push_back(100);
    s.deaths.push_back(10);
    s.treated.push_back(390);
    s.removed.push_back(110);
  }
  FilterConfig cfg = sitr_config(7);
  FilterRun run = run_filter(s, cfg);
  for (const auto& step : run.steps) {
    if (!step.assimilated) continue;
    CHECK(std::get<SitrParams>(step.params).beta_e <= cfg.bounds.beta_lo + 1e-3);
  }
}

TEST_CASE("filter output is deterministic and within bounds", "[assimilation]") {
  ParamSchedule<SitrParams> truth;
  truth.add(0, SitrParams{0.25, 0.2, 0.071});
  ObservationSeries series = sitr_twin(truth, 5e5, 600, 60, 40);
  FilterConfig cfg = sitr_config(7);

  FilterRun a = run_filter(series, cfg);
  FilterRun b = run_filter(series, cfg);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    CHECK(a.steps[k].i_da == b.steps[k].i_da);
    CHECK(std::get<SitrParams>(a.steps[k].params).beta_e ==
          std::get<SitrParams>(b.steps[k].params).beta_e);
    CHECK(a.steps[k].i_da >= 0);
    double be = std::get<SitrParams>(a.steps[k].params).beta_e;
    CHECK(be >= cfg.bounds.beta_lo);
    CHECK(be <= cfg.bounds.beta_hi);
  }
}

TEST_CASE("filter rejects short series", "[assimilation]") {
  ObservationSeries s;
  s.region = "short";
  s.population = 1000;
  for (int k = 0; k < 5; ++k) {
    s.dates.push_back(Date{2020, 3, 1} + k);
    s.confirmed.push_back(k);
    s.recovered.push_back(0);
    s.deaths.push_back(0);
    s.treated.push_back(k);
    s.removed.push_back(0);
  }
  FilterConfig cfg = sitr_config(7);
  CHECK_THROWS_AS(run_filter(s, cfg), ConfigError);
}

TEST_CASE("static fit recovers constant SIR parameters", "[assimilation]") {
  SirParams truth{0.38, 0.09};
  ObservationSeries series = sir_twin(truth, 1e6, 1000, 45);
  // The twin's confirmed column starts at i0 + r0 = 1000, so the filter's
  // initial state matches the truth with the default multiplier... only if
  // confirmed(0)/10 = 100 = i0/10. Set the multiplier so i matches exactly.
  FilterConfig cfg = sir_config(7);
  cfg.initial_infected_multiplier = 1.0;

  StaticFit fit = fit_static_sir(series, cfg);
  CHECK(fit.params.beta == Catch::Approx(truth.beta).margin(2e-3));
  CHECK(fit.params.gamma == Catch::Approx(truth.gamma).margin(2e-3));
  REQUIRE(fit.trajectory.size() == series.size());

  // With the true parameters the fixed simulation reproduces the data.
  for (std::size_t k = 0; k < series.size(); ++k)
    CHECK(fit.trajectory[k].r == Catch::Approx(series.removed[k]).epsilon(0.02).margin(1.0));
}

TEST_CASE("static fit on constant data pins beta near zero", "[assimilation]") {
  ObservationSeries s;
  s.region = "flat";
  s.population = 1e5;
  for (int k = 0; k < 20; ++k) {
    s.dates.push_back(Date{2020, 3, 1} + k);
    s.confirmed.push_back(50);
    s.recovered.push_back(20);
    s.deaths.push_back(0);
    s.treated.push_back(30);
    s.removed.push_back(20);
  }
  FilterConfig cfg = sir_config(7);
  StaticFit fit = fit_static_sir(s, cfg);
  CHECK(fit.params.beta <= cfg.bounds.beta_lo + 1e-2);
}

TEST_CASE("forecast semantics", "[assimilation]") {
  ParamSchedule<SitrParams> truth;
  truth.add(0, SitrParams{0.22, 0.2, 0.071});
  ObservationSeries series = sitr_twin(truth, 1e6, 1000, 100, 45);
  FilterConfig cfg = sitr_config(7);
  FilterRun run = run_filter(series, cfg);

  auto zero = forecast(run, 0);
  REQUIRE(zero.size() == 1);
  CHECK(zero[0].i == run.final_state.i);

  auto two = forecast(run, 2);
  REQUIRE(two.size() == 3);
  CompartmentState manual = step(run.final_state, run.final_params);
  CHECK(two[1].i == manual.i);
  CHECK(two[1].t == manual.t);

  CHECK_THROWS_AS(forecast(run, -1), InvalidInputError);
}

TEST_CASE("forecast of a constant-parameter twin stays accurate", "[assimilation]") {
  SitrParams p{0.22, 0.2, 0.071};
  ParamSchedule<SitrParams> sched(p);
  const int fit_days = 45, horizon = 14;
  ObservationSeries full = sitr_twin(sched, 1e6, 1000, 100, fit_days + horizon);

  ObservationSeries train = full;
  train.dates.resize(fit_days);
  train.confirmed.resize(fit_days);
  train.recovered.resize(fit_days);
  train.deaths.resize(fit_days);
  train.treated.resize(fit_days);
  train.removed.resize(fit_days);

  FilterConfig cfg = sitr_config(7);
  FilterRun run = run_filter(train, cfg);
  auto fc = forecast(run, horizon);

  for (int k = 1; k <= horizon; ++k) {
    double truth = full.treated[fit_days - 1 + k];
    INFO("horizon day " << k << " truth " << truth << " forecast " << fc[k].t);
    CHECK(std::abs(fc[k].t - truth) <= 0.15 * truth);
  }
}
