#pragma once

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "epifilter/assimilation.hpp"
#include "epifilter/config.hpp"

namespace epifilter {

/// Crop a series to [start, end] (either side unbounded when zeroed).
inline ObservationSeries slice_series(const ObservationSeries& s, Date start, Date end) {
  ObservationSeries out;
  out.region = s.region;
  out.population = s.population;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (start.y != 0 && s.dates[k] < start) continue;
    if (end.y != 0 && end < s.dates[k]) continue;
    out.dates.push_back(s.dates[k]);
    out.confirmed.push_back(s.confirmed[k]);
    out.recovered.push_back(s.recovered[k]);
    out.deaths.push_back(s.deaths[k]);
    out.treated.push_back(s.treated[k]);
    out.removed.push_back(s.removed[k]);
  }
  if (out.dates.empty())
    throw ConfigError("no observations between " + (start.y ? start.iso() : "<open>") + " and " +
                      (end.y ? end.iso() : "<open>"));
  return out;
}

/// Load the region's observations from either the normalized series file
/// or the three raw cumulative tables, repair them, and crop to the
/// configured date range.
inline ObservationSeries load_observations(const RunConfig& cfg, ValidationReport* report) {
  ObservationSeries s;
  if (!cfg.data.series.empty()) {
    s = read_series_csv_file(cfg.data.series, cfg.region, cfg.population);
    ValidationReport rep = validate_series(s, true);
    if (report) *report = std::move(rep);
  } else {
    RawSeriesTable confirmed = parse_jhu_csv_file(cfg.data.confirmed);
    RawSeriesTable deaths = parse_jhu_csv_file(cfg.data.deaths);
    RawSeriesTable recovered = parse_jhu_csv_file(cfg.data.recovered);
    s = assemble_observations(confirmed, deaths, recovered, cfg.region, cfg.population, report);
  }
  return slice_series(s, cfg.start_date, cfg.end_date);
}

inline void enforce_strict(const RunConfig& cfg, const ValidationReport& report) {
  for (const std::string& w : report.warnings) log_warn("ingest: " + w);
  if (cfg.strict && !report.warnings.empty()) {
    std::string all;
    for (const std::string& w : report.warnings) all += (all.empty() ? "" : "; ") + w;
    throw InvalidInputError("strict mode: " + all);
  }
}

/// Turn the configured covariance mode into concrete weights for the run.
///  - fixed:    q * I(tau), p * I(1)
///  - residual: diff-variance(target) * I(tau), p * I(1)
///  - hybrid:   scalar summary of the ensemble covariance of a pilot
///              simulation for the window weight, diff-variance for the
///              background weight
inline CovarianceSpec resolve_covariance(const RunConfig& cfg, const ObservationSeries& series,
                                         ResolvedInfo* info) {
  const CovarianceConfig& cc = cfg.covariance;
  const std::vector<double>& target = cfg.model == Model::sir ? series.removed : series.treated;
  CovarianceSpec spec;
  ResolvedInfo out;
  out.covariance_provenance = cc.mode;

  if (cc.mode == "fixed") {
    spec = scalar_spec(cc.q, cc.p, cfg.tau);
    out.q_effective = cc.q;
    out.p_effective = cc.p;
  } else if (cc.mode == "residual") {
    spec.q = observation_covariance(target, cfg.tau);
    spec.p = Matrix::scaled_identity(1, cc.p);
    spec.provenance = Provenance::residual;
    out.q_effective = spec.q(0, 0);
    out.p_effective = cc.p;
  } else {  // hybrid
    FilterConfig pilot = cfg.filter_config(scalar_spec(1, 1, cfg.tau));
    CompartmentState x0 = detail::initial_state(series, pilot);
    AnyParams theta = detail::initial_params(pilot);
    std::vector<CompartmentState> traj =
        simulate(x0, theta, static_cast<int>(series.size()) - 1);
    Matrix history(4, traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
      history(0, k) = traj[k].s;
      history(1, k) = traj[k].i;
      history(2, k) = traj[k].t;
      history(3, k) = traj[k].r;
    }
    EnsembleSpec es{history, cc.ensemble_size, cc.seed_set ? cc.seed : cfg.seed};
    Matrix qstar = background_covariance(build_ensemble(es));
    spec.q = scalar_summary(qstar, cfg.tau);
    spec.p = observation_covariance(target, 1);
    spec.provenance = Provenance::ensemble;
    out.q_effective = spec.q(0, 0);
    out.p_effective = spec.p(0, 0);
    out.q_reduction = "trace/4 of the 4x4 pilot ensemble covariance, applied as a scaled identity";
  }
  if (info) *info = std::move(out);
  return spec;
}

namespace detail {

/// Staging directory that only replaces the real output dir on success.
class OutputStage {
 public:
  explicit OutputStage(const std::string& out_dir)
      : final_dir_(out_dir), tmp_dir_(out_dir + ".tmp") {
    if (out_dir.empty()) throw ConfigError("output directory is empty");
    std::filesystem::remove_all(tmp_dir_);
    std::filesystem::create_directories(tmp_dir_);
  }

  OutputStage(const OutputStage&) = delete;
  OutputStage& operator=(const OutputStage&) = delete;

  ~OutputStage() {
    std::error_code ec;
    std::filesystem::remove_all(tmp_dir_, ec);  // no-op after promote()
  }

  void write(const std::string& name, const std::string& content) {
    std::filesystem::path p = tmp_dir_ / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot create '" + p.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + p.string() + "'");
  }

  void promote() {
    std::filesystem::remove_all(final_dir_);
    if (final_dir_.has_parent_path()) std::filesystem::create_directories(final_dir_.parent_path());
    std::filesystem::rename(tmp_dir_, final_dir_);
  }

 private:
  std::filesystem::path final_dir_;
  std::filesystem::path tmp_dir_;
};

inline void param_triplet(const AnyParams& p, double* beta, double* gamma, double* alpha) {
  if (const auto* sp = std::get_if<SirParams>(&p)) {
    *beta = sp->beta;
    *gamma = sp->gamma;
    *alpha = 0;
  } else {
    const auto& tp = std::get<SitrParams>(p);
    *beta = tp.beta_e;
    *gamma = tp.gamma;
    *alpha = tp.alpha;
  }
}

}  // namespace detail

inline std::string states_csv(const FilterRun& run) {
  std::ostringstream out;
  out << "date,S,I_da,T_pred,T_obs,R_pred,R_obs\n";
  for (const FilterStep& st : run.steps) {
    out << st.date.iso() << ',' << detail::format_number(st.s) << ','
        << detail::format_number(st.i_da) << ',' << detail::format_number(st.t_pred) << ','
        << detail::format_number(st.t_obs) << ',' << detail::format_number(st.r_pred) << ','
        << detail::format_number(st.r_obs) << "\n";
  }
  return out.str();
}

inline std::string params_csv(const FilterRun& run) {
  std::ostringstream out;
  out << (run.model == Model::sir ? "date,beta,gamma,alpha\n" : "date,beta_e,gamma,alpha\n");
  for (const FilterStep& st : run.steps) {
    double b, g, a;
    detail::param_triplet(st.params, &b, &g, &a);
    out << st.date.iso() << ',' << detail::format_number(b) << ',' << detail::format_number(g)
        << ',' << detail::format_number(a) << "\n";
  }
  return out.str();
}

inline std::string params_weekly_csv(const FilterRun& run) {
  std::vector<double> beta, gamma, alpha;
  for (const FilterStep& st : run.steps) {
    double b, g, a;
    detail::param_triplet(st.params, &b, &g, &a);
    beta.push_back(b);
    gamma.push_back(g);
    alpha.push_back(a);
  }
  std::vector<double> wb = weekly_average(beta);
  std::vector<double> wg = weekly_average(gamma);
  std::vector<double> wa = weekly_average(alpha);
  std::ostringstream out;
  out << (run.model == Model::sir ? "week_start,beta,gamma,alpha\n"
                                  : "week_start,beta_e,gamma,alpha\n");
  for (std::size_t w = 0; w < wb.size(); ++w) {
    out << run.steps[w * 7].date.iso() << ',' << detail::format_number(wb[w]) << ','
        << detail::format_number(wg[w]) << ',' << detail::format_number(wa[w]) << "\n";
  }
  return out.str();
}

/// One-step-ahead forecast error report over the run's recorded states:
/// model T and R against the observed series (R only for SIR).
inline ErrorReport run_errors(const FilterRun& run) {
  std::vector<std::vector<double>> pred, obs;
  std::vector<std::string> names;
  std::vector<double> tp, to, rp, ro;
  for (const FilterStep& st : run.steps) {
    tp.push_back(st.t_pred);
    to.push_back(st.t_obs);
    rp.push_back(st.r_pred);
    ro.push_back(st.r_obs);
  }
  if (run.model == Model::sitr) {
    names = {"T", "R"};
    pred = {tp, rp};
    obs = {to, ro};
  } else {
    names = {"R"};
    pred = {rp};
    obs = {ro};
  }
  return mrsfe(pred, obs, names);
}

inline std::string errors_csv(const ErrorReport& rep) {
  std::ostringstream out;
  out << "variable,mrsfe\n";
  for (std::size_t v = 0; v < rep.variables.size(); ++v)
    out << rep.variables[v] << ',' << detail::format_number(rep.mrsfe[v]) << "\n";
  out << "total," << detail::format_number(rep.total) << "\n";
  return out.str();
}

inline std::string rsfe_csv(const FilterRun& run, const ErrorReport& rep) {
  std::ostringstream out;
  out << "date";
  for (const std::string& v : rep.variables) out << ",rsfe_" << v;
  out << "\n";
  for (std::size_t k = 0; k < run.steps.size(); ++k) {
    out << run.steps[k].date.iso();
    for (const std::vector<double>& series : rep.rsfe)
      out << ',' << detail::format_number(series[k]);
    out << "\n";
  }
  return out.str();
}

inline std::string forecast_csv(const FilterRun& run,
                                const std::vector<CompartmentState>& traj) {
  std::ostringstream out;
  out << "date,S,I,T,R\n";
  Date last = run.steps.back().date;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    out << (last + static_cast<int>(k)).iso() << ',' << detail::format_number(traj[k].s) << ','
        << detail::format_number(traj[k].i) << ',' << detail::format_number(traj[k].t) << ','
        << detail::format_number(traj[k].r) << "\n";
  }
  return out.str();
}

inline std::string resolved_config_text(const RunConfig& cfg, const ResolvedInfo* info) {
  std::ostringstream ss;
  write_config(cfg, ss, info);
  return ss.str();
}

/// Normalize the configured raw tables into the series CSV plus a
/// validation report. Artifacts: series.csv, validation.txt,
/// config_resolved.cfg.
inline void cmd_ingest(const RunConfig& cfg) {
  ValidationReport report;
  ObservationSeries series = load_observations(cfg, &report);
  enforce_strict(cfg, report);

  std::ostringstream validation;
  validation << "region: " << series.region << "\n";
  validation << "rows: " << series.size() << " (" << series.dates.front().iso() << ".."
             << series.dates.back().iso() << ")\n";
  for (const Repair& r : report.repairs)
    validation << "repair: " << r.series << " " << r.date.iso() << " "
               << detail::format_number(r.before) << " -> " << detail::format_number(r.after)
               << " (" << r.kind << ")\n";
  for (const std::string& w : report.warnings) validation << "warning: " << w << "\n";
  validation << "repairs: " << report.repairs.size() << "\n";
  validation << "warnings: " << report.warnings.size() << "\n";

  std::ostringstream series_text;
  write_series_csv(series, series_text);

  detail::OutputStage out(cfg.out_dir);
  out.write("series.csv", series_text.str());
  out.write("validation.txt", validation.str());
  out.write("config_resolved.cfg", resolved_config_text(cfg, nullptr));
  out.promote();
}

/// Full pipeline: load, resolve weights, filter, forecast, report.
/// Artifacts: states.csv, params.csv, params_weekly.csv, errors.csv,
/// rsfe.csv, forecast.csv, config_resolved.cfg.
inline FilterRun cmd_run(const RunConfig& cfg) {
  ValidationReport report;
  ObservationSeries series = load_observations(cfg, &report);
  enforce_strict(cfg, report);

  ResolvedInfo info;
  CovarianceSpec cov = resolve_covariance(cfg, series, &info);
  FilterConfig fcfg = cfg.filter_config(std::move(cov));
  FilterRun run = run_filter(series, fcfg);
  std::vector<CompartmentState> fc = forecast(run, cfg.forecast_horizon);
  ErrorReport errors = run_errors(run);

  detail::OutputStage out(cfg.out_dir);
  out.write("states.csv", states_csv(run));
  out.write("params.csv", params_csv(run));
  out.write("params_weekly.csv", params_weekly_csv(run));
  out.write("errors.csv", errors_csv(errors));
  out.write("rsfe.csv", rsfe_csv(run, errors));
  out.write("forecast.csv", forecast_csv(run, fc));
  out.write("config_resolved.cfg", resolved_config_text(cfg, &info));
  out.promote();
  return run;
}

struct SensitivityCell {
  double q = 0, p = 0;
  double final_i = 0, final_t = 0;
  double mrsfe_t = 0, mrsfe_r = 0;
  bool unit = false;
};

/// Filter once per (q, p) scalar-weight pair. Artifacts: sensitivity.csv
/// (one row per cell, the unit cell marked), config_resolved.cfg.
inline std::vector<SensitivityCell> cmd_sensitivity(const RunConfig& cfg) {
  ValidationReport report;
  ObservationSeries series = load_observations(cfg, &report);
  enforce_strict(cfg, report);

  std::vector<SensitivityCell> cells;
  for (double q : cfg.q_values) {
    for (double p : cfg.p_values) {
      FilterConfig fcfg = cfg.filter_config(scalar_spec(q, p, cfg.tau));
      FilterRun run = run_filter(series, fcfg);
      ErrorReport er = run_errors(run);
      SensitivityCell cell;
      cell.q = q;
      cell.p = p;
      cell.final_i = run.steps.back().i_da;
      cell.final_t = run.steps.back().t_pred;
      if (cfg.model == Model::sitr) {
        cell.mrsfe_t = er.mrsfe[0];
        cell.mrsfe_r = er.mrsfe[1];
      } else {
        cell.mrsfe_t = 0;
        cell.mrsfe_r = er.mrsfe[0];
      }
      cell.unit = q == 1.0 && p == 1.0;
      cells.push_back(cell);
    }
  }

  std::ostringstream table;
  table << "q,p,final_I,final_T,mrsfe_T,mrsfe_R,unit\n";
  for (const SensitivityCell& c : cells) {
    table << detail::format_number(c.q) << ',' << detail::format_number(c.p) << ','
          << detail::format_number(c.final_i) << ',' << detail::format_number(c.final_t) << ','
          << detail::format_number(c.mrsfe_t) << ',' << detail::format_number(c.mrsfe_r) << ','
          << (c.unit ? 1 : 0) << "\n";
  }

  detail::OutputStage out(cfg.out_dir);
  out.write("sensitivity.csv", table.str());
  out.write("config_resolved.cfg", resolved_config_text(cfg, nullptr));
  out.promote();
  return cells;
}

struct StaticComparison {
  std::vector<Date> dates;
  std::vector<double> i_static;
  std::vector<double> i_dynamic;
  std::vector<double> ratio;
};

/// Fixed-parameter SIR baseline against the re-estimating SIR filter on
/// the same series, both extended by the forecast horizon. Artifacts:
/// compare_static.csv, config_resolved.cfg.
inline StaticComparison cmd_compare_static(RunConfig cfg) {
  cfg.model = Model::sir;  // the baseline is an SIR fit, compare like with like
  ValidationReport report;
  ObservationSeries series = load_observations(cfg, &report);
  enforce_strict(cfg, report);

  ResolvedInfo info;
  CovarianceSpec cov = resolve_covariance(cfg, series, &info);
  FilterConfig fcfg = cfg.filter_config(std::move(cov));
  StaticFit fit = fit_static_sir(series, fcfg);
  FilterRun run = run_filter(series, fcfg);

  StaticComparison cmp;
  for (std::size_t k = 0; k < run.steps.size(); ++k) {
    cmp.dates.push_back(run.steps[k].date);
    cmp.i_static.push_back(fit.trajectory[k].i);
    cmp.i_dynamic.push_back(run.steps[k].i_da);
  }
  if (cfg.forecast_horizon > 0) {
    std::vector<CompartmentState> st =
        simulate(fit.trajectory.back(), fit.params, cfg.forecast_horizon);
    std::vector<CompartmentState> dy = forecast(run, cfg.forecast_horizon);
    Date last = run.steps.back().date;
    for (int k = 1; k <= cfg.forecast_horizon; ++k) {
      cmp.dates.push_back(last + k);
      cmp.i_static.push_back(st[static_cast<std::size_t>(k)].i);
      cmp.i_dynamic.push_back(dy[static_cast<std::size_t>(k)].i);
    }
  }
  for (std::size_t k = 0; k < cmp.dates.size(); ++k) {
    double s = cmp.i_static[k], d = cmp.i_dynamic[k];
    cmp.ratio.push_back(d != 0 ? s / d : (s == 0 ? 1.0 : std::numeric_limits<double>::infinity()));
  }

  std::ostringstream table;
  table << "date,I_static,I_dynamic,ratio\n";
  for (std::size_t k = 0; k < cmp.dates.size(); ++k) {
    table << cmp.dates[k].iso() << ',' << detail::format_number(cmp.i_static[k]) << ','
          << detail::format_number(cmp.i_dynamic[k]) << ','
          << detail::format_number(cmp.ratio[k]) << "\n";
  }

  detail::OutputStage out(cfg.out_dir);
  out.write("compare_static.csv", table.str());
  out.write("config_resolved.cfg", resolved_config_text(cfg, &info));
  out.promote();
  return cmp;
}

}  // namespace epifilter
