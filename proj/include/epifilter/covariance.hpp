#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "epifilter/errors.hpp"
#include "epifilter/linalg.hpp"
#include "epifilter/rng.hpp"

namespace epifilter {

enum class Provenance { fixed, ensemble, residual };

inline std::string provenance_name(Provenance p) {
  switch (p) {
    case Provenance::fixed: return "fixed";
    case Provenance::ensemble: return "ensemble";
    default: return "residual";
  }
}

/// Weight pair for the assimilation cost: q penalizes the observation
/// misfit over the window, p the distance from the background state.
struct CovarianceSpec {
  Matrix q;  // tau x tau, symmetric PSD
  Matrix p;  // 1 x 1 (the latent state is scalar)
  Provenance provenance = Provenance::fixed;
};

/// Inputs for the static ensemble construction: a history of background
/// state vectors (one column per day), the ensemble size, and the seed.
struct EnsembleSpec {
  Matrix history;  // n_rows state variables x L days
  int n_groups = 0;
  std::uint64_t seed = 0;
};

/// Mean-removed ensemble member matrix scaled by 1/sqrt(N-1).
struct PerturbationMatrix {
  Matrix v_ens;  // n_rows x n_groups
};

/// Split the background history into N groups (earlier groups take the
/// extra columns when the length is not divisible), draw one member per
/// group from the per-row Normal(mean, std^2) of that group, then remove
/// the ensemble mean per row and scale by 1/sqrt(N-1).
inline PerturbationMatrix build_ensemble(const EnsembleSpec& spec) {
  const int n_rows = static_cast<int>(spec.history.rows());
  const int len = static_cast<int>(spec.history.cols());
  const int n = spec.n_groups;
  if (n < 2) throw ConfigError("build_ensemble: ensemble size must be at least 2");
  if (len < n)
    throw ConfigError("build_ensemble: history length " + std::to_string(len) +
                      " shorter than ensemble size " + std::to_string(n));
  if (!spec.history.finite()) throw InvalidInputError("build_ensemble: non-finite history");

  Matrix members(static_cast<std::size_t>(n_rows), static_cast<std::size_t>(n));
  const int base = len / n;
  const int extra = len % n;
  int start = 0;
  for (int g = 0; g < n; ++g) {
    const int size = base + (g < extra ? 1 : 0);
    Rng rng = Rng::substream(spec.seed, static_cast<std::uint64_t>(g));
    for (int row = 0; row < n_rows; ++row) {
      double mean = 0;
      for (int k = 0; k < size; ++k) mean += spec.history(row, start + k);
      mean /= size;
      double var = 0;
      for (int k = 0; k < size; ++k) {
        double d = spec.history(row, start + k) - mean;
        var += d * d;
      }
      var /= size;
      members(row, g) = mean + std::sqrt(var) * rng.gaussian();
    }
    start += size;
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(n - 1));
  for (int row = 0; row < n_rows; ++row) {
    double mean = 0;
    for (int g = 0; g < n; ++g) mean += members(row, g);
    mean /= n;
    for (int g = 0; g < n; ++g) members(row, g) = (members(row, g) - mean) * scale;
  }
  return PerturbationMatrix{std::move(members)};
}

/// Q* = v v^T: the n x n outer-product background error covariance,
/// symmetric PSD with rank at most N-1.
inline Matrix background_covariance(const PerturbationMatrix& v) {
  if (!v.v_ens.finite()) throw InvalidInputError("background_covariance: non-finite input");
  return v.v_ens.times_transpose();
}

/// Sample variance of the first differences of a cumulative target series,
/// floored at eps = 1e-6 * (series scale)^2 so the weight stays invertible
/// on flat data.
inline double residual_variance(std::span<const double> target) {
  if (target.size() < 3)
    throw ConfigError("residual_variance: need at least 3 observations, got " +
                      std::to_string(target.size()));
  std::vector<double> diffs(target.size() - 1);
  double scale = 0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    if (!std::isfinite(target[k])) throw InvalidInputError("residual_variance: non-finite value");
    scale = std::max(scale, std::abs(target[k]));
  }
  double mean = 0;
  for (std::size_t k = 0; k + 1 < target.size(); ++k) {
    diffs[k] = target[k + 1] - target[k];
    mean += diffs[k];
  }
  mean /= static_cast<double>(diffs.size());
  double var = 0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  var /= static_cast<double>(diffs.size() - 1);

  double eps = 1e-6 * scale * scale;
  if (!(eps > 0)) eps = 1e-12;
  return std::max(var, eps);
}

/// variance(first differences of target) * identity(dim).
inline Matrix observation_covariance(std::span<const double> target, int dim) {
  if (dim < 1) throw InvalidInputError("observation_covariance: dimension must be positive");
  return Matrix::scaled_identity(static_cast<std::size_t>(dim), residual_variance(target));
}

/// Collapse the full n x n ensemble covariance to the window weight
/// (trace(qstar)/n) * identity(tau), with the same positivity floor.
inline Matrix scalar_summary(const Matrix& qstar, int tau) {
  if (qstar.rows() != qstar.cols() || qstar.rows() == 0)
    throw InvalidInputError("scalar_summary: square non-empty matrix required");
  if (tau < 1) throw InvalidInputError("scalar_summary: tau must be positive");
  double mean_diag = qstar.trace() / static_cast<double>(qstar.rows());
  double eps = 1e-6 * qstar.max_abs();
  if (!(eps > 0)) eps = 1e-12;
  return Matrix::scaled_identity(static_cast<std::size_t>(tau), std::max(mean_diag, eps));
}

/// Fixed scalar weights q_val*I(tau), p_val*I(1) for sensitivity studies.
inline CovarianceSpec scalar_spec(double q_val, double p_val, int tau) {
  if (!(q_val > 0) || !(p_val > 0))
    throw InvalidInputError("scalar_spec: weights must be strictly positive");
  if (tau < 1) throw InvalidInputError("scalar_spec: tau must be positive");
  return CovarianceSpec{Matrix::scaled_identity(static_cast<std::size_t>(tau), q_val),
                        Matrix::scaled_identity(1, p_val), Provenance::fixed};
}

}  // namespace epifilter
