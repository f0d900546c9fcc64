#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "epifilter/errors.hpp"

namespace epifilter {

/// Forecast-error summary: one MRSFE per variable plus their sum, and the
/// underlying per-date RSFE series for each variable.
struct ErrorReport {
  std::vector<std::string> variables;
  std::vector<double> mrsfe;              // per variable, >= 0
  std::vector<std::vector<double>> rsfe;  // per variable, full-length series
  double total = 0;                       // summed over variables
  int h = 1;
  int tau0 = 1;
};

/// Root squared forecast error of a single prediction: |pred - obs|.
inline double rsfe(double pred, double obs) {
  if (!std::isfinite(pred) || !std::isfinite(obs))
    throw InvalidInputError("rsfe: non-finite input");
  return std::abs(pred - obs);
}

/// Mean RSFE per variable over the evaluation times tau0..T-h (1-based),
/// divided by the count T - h - tau0 + 1. Series are aligned by date:
/// pred[k] is the forecast for the date of obs[k].
inline ErrorReport mrsfe(const std::vector<std::vector<double>>& pred,
                         const std::vector<std::vector<double>>& obs,
                         std::vector<std::string> variables, int h = 1, int tau0 = 1) {
  if (pred.size() != obs.size() || pred.empty())
    throw InvalidInputError("mrsfe: need matching non-empty variable lists");
  if (variables.size() != pred.size())
    throw InvalidInputError("mrsfe: variable name count mismatch");
  const int len = static_cast<int>(pred[0].size());
  for (std::size_t v = 0; v < pred.size(); ++v) {
    if (static_cast<int>(pred[v].size()) != len || static_cast<int>(obs[v].size()) != len)
      throw InvalidInputError("mrsfe: series lengths differ");
  }
  const int count = len - h - tau0 + 1;
  if (count < 1)
    throw ConfigError("mrsfe: empty evaluation range (length " + std::to_string(len) +
                      ", h=" + std::to_string(h) + ", tau0=" + std::to_string(tau0) + ")");

  ErrorReport report;
  report.variables = std::move(variables);
  report.h = h;
  report.tau0 = tau0;
  for (std::size_t v = 0; v < pred.size(); ++v) {
    std::vector<double> series(static_cast<std::size_t>(len));
    for (int k = 0; k < len; ++k) series[k] = rsfe(pred[v][k], obs[v][k]);
    double sum = 0;
    for (int tau = tau0; tau <= len - h; ++tau) sum += series[tau - 1];
    report.mrsfe.push_back(sum / count);
    report.total += sum / count;
    report.rsfe.push_back(std::move(series));
  }
  return report;
}

/// Non-overlapping 7-day arithmetic means; a trailing partial week is
/// averaged over its actual length.
inline std::vector<double> weekly_average(std::span<const double> daily) {
  if (daily.empty()) throw InvalidInputError("weekly_average: empty input");
  std::vector<double> out;
  std::size_t k = 0;
  while (k < daily.size()) {
    std::size_t end = std::min(k + 7, daily.size());
    double sum = 0;
    for (std::size_t j = k; j < end; ++j) {
      if (!std::isfinite(daily[j])) throw InvalidInputError("weekly_average: non-finite value");
      sum += daily[j];
    }
    out.push_back(sum / static_cast<double>(end - k));
    k = end;
  }
  return out;
}

}  // namespace epifilter
