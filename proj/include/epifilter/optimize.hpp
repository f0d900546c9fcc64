#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "epifilter/errors.hpp"

namespace epifilter {

struct MinimizeResult {
  std::vector<double> x;
  double fx = 0;
  int evals = 0;
  bool converged = false;
};

struct MinimizeOptions {
  double xtol = 1e-9;     // absolute tolerance on the argument
  double ftol = 1e-12;    // relative tolerance on the value (simplex only)
  int max_evals = 20000;  // hard budget on objective evaluations
  int presearch = 0;      // coarse grid points per axis before local refinement
};

namespace detail {

struct Box {
  std::vector<double> lo, hi;
  void project(std::vector<double>& x) const {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::clamp(x[k], lo[k], hi[k]);
  }
};

// Golden-section search over [a, b]. Ties break toward the smaller abscissa
// so results are deterministic on plateaus.
template <class F>
MinimizeResult golden_section(F&& f, double a, double b, const MinimizeOptions& opt) {
  static const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  MinimizeResult res;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  res.evals = 2;
  while (b - a > opt.xtol && res.evals < opt.max_evals) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
    ++res.evals;
  }
  double xm = 0.5 * (a + b);
  double fm = f(xm);
  ++res.evals;
  res.x = {xm};
  res.fx = fm;
  if (fc < res.fx) res.x = {c}, res.fx = fc;
  if (fd < res.fx) res.x = {d}, res.fx = fd;
  res.converged = b - a <= opt.xtol;
  return res;
}

// Nelder-Mead with candidates projected into the box before evaluation.
// Plain downhill simplex is enough here: the objectives are cheap, smooth
// away from the clipping boundary, and two-dimensional.
template <class F>
MinimizeResult nelder_mead(F&& f, std::vector<double> x0, const Box& box,
                           const MinimizeOptions& opt) {
  const std::size_t n = x0.size();
  box.project(x0);

  struct Vertex {
    std::vector<double> x;
    double fx;
  };
  std::vector<Vertex> simplex;
  MinimizeResult res;

  auto eval = [&](std::vector<double> x) {
    box.project(x);
    double fx = f(x);
    ++res.evals;
    return Vertex{std::move(x), fx};
  };

  simplex.push_back(eval(x0));
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> x = x0;
    double span = box.hi[k] - box.lo[k];
    double h = 0.05 * span;
    if (h == 0) h = 1e-6;
    x[k] = x[k] + h <= box.hi[k] ? x[k] + h : x[k] - h;
    simplex.push_back(eval(x));
  }

  auto order = [&] {
    std::stable_sort(simplex.begin(), simplex.end(),
                     [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; });
  };
  order();

  while (res.evals < opt.max_evals) {
    const Vertex& best = simplex.front();
    const Vertex& worst = simplex.back();

    double fspread = std::abs(worst.fx - best.fx);
    double xspread = 0;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t v = 1; v < simplex.size(); ++v)
        xspread = std::max(xspread, std::abs(simplex[v].x[k] - simplex[0].x[k]));
    if (xspread <= opt.xtol && fspread <= opt.ftol * (1.0 + std::abs(best.fx))) {
      res.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t v = 0; v + 1 < simplex.size(); ++v)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[v].x[k];
    for (double& c : centroid) c /= static_cast<double>(n);

    auto along = [&](double coef) {
      std::vector<double> x(n);
      for (std::size_t k = 0; k < n; ++k) x[k] = centroid[k] + coef * (centroid[k] - worst.x[k]);
      return eval(std::move(x));
    };

    Vertex refl = along(1.0);
    if (refl.fx < best.fx) {
      Vertex exp = along(2.0);
      simplex.back() = exp.fx < refl.fx ? std::move(exp) : std::move(refl);
    } else if (refl.fx < simplex[simplex.size() - 2].fx) {
      simplex.back() = std::move(refl);
    } else {
      Vertex contr = along(refl.fx < worst.fx ? 0.5 : -0.5);
      if (contr.fx < std::min(refl.fx, worst.fx)) {
        simplex.back() = std::move(contr);
      } else {
        for (std::size_t v = 1; v < simplex.size(); ++v) {
          for (std::size_t k = 0; k < n; ++k)
            simplex[v].x[k] = simplex[0].x[k] + 0.5 * (simplex[v].x[k] - simplex[0].x[k]);
          simplex[v] = eval(simplex[v].x);
        }
      }
    }
    order();
  }

  order();
  res.x = simplex.front().x;
  res.fx = simplex.front().fx;
  return res;
}

}  // namespace detail

/// Minimize f over the axis-aligned box [lo, hi]. One dimension uses
/// golden-section search; higher dimensions use a projected Nelder-Mead
/// simplex, optionally seeded from the best point of a coarse grid scan
/// (opt.presearch points per axis) to sidestep distant local minima.
template <class F>
MinimizeResult minimize_bounded(F&& f, std::vector<double> lo, std::vector<double> hi,
                                std::vector<double> x0, MinimizeOptions opt = {}) {
  const std::size_t n = lo.size();
  if (n == 0 || hi.size() != n || x0.size() != n)
    throw InvalidInputError("minimize_bounded: dimension mismatch");
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(lo[k]) || !std::isfinite(hi[k]) || lo[k] > hi[k])
      throw InvalidInputError("minimize_bounded: invalid bounds");
  }

  auto fe = [&](const std::vector<double>& x) {
    double v = f(x);
    if (std::isnan(v)) throw NumericalError("minimize_bounded: objective returned NaN");
    return v;
  };

  if (n == 1) {
    auto f1 = [&](double x) { return fe({x}); };
    double best_x = std::clamp(x0[0], lo[0], hi[0]);
    double best_f = f1(best_x);
    int extra_evals = 1;
    double a = lo[0], b = hi[0];
    if (opt.presearch > 1) {
      const int g = opt.presearch;
      int kbest = -1;
      for (int k = 0; k < g; ++k) {
        double x = lo[0] + (hi[0] - lo[0]) * k / (g - 1);
        double v = f1(x);
        ++extra_evals;
        if (v < best_f) {
          best_f = v;
          best_x = x;
          kbest = k;
        }
      }
      if (kbest >= 0) {
        a = lo[0] + (hi[0] - lo[0]) * std::max(0, kbest - 1) / (g - 1);
        b = lo[0] + (hi[0] - lo[0]) * std::min(g - 1, kbest + 1) / (g - 1);
      }
    }
    MinimizeResult res = detail::golden_section(f1, a, b, opt);
    res.evals += extra_evals;
    if (best_f < res.fx) {
      res.x = {best_x};
      res.fx = best_f;
    }
    return res;
  }

  detail::Box box{lo, hi};
  box.project(x0);
  MinimizeResult seed_res;
  std::vector<double> seed = x0;
  if (opt.presearch > 1) {
    double best = fe(seed);
    std::vector<double> x(n);
    std::vector<int> idx(n, 0);
    const int g = opt.presearch;
    long total = 1;
    for (std::size_t k = 0; k < n; ++k) total *= g;
    for (long cell = 0; cell < total; ++cell) {
      long rem = cell;
      for (std::size_t k = 0; k < n; ++k) {
        idx[k] = static_cast<int>(rem % g);
        rem /= g;
        x[k] = lo[k] + (hi[k] - lo[k]) * idx[k] / (g - 1);
      }
      double v = fe(x);
      ++seed_res.evals;
      if (v < best) {
        best = v;
        seed = x;
      }
    }
  }

  MinimizeResult res = detail::nelder_mead(fe, seed, box, opt);
  res.evals += seed_res.evals;

  // Never report worse than the caller's own starting point.
  std::vector<double> xc = x0;
  box.project(xc);
  double f0 = fe(xc);
  ++res.evals;
  if (f0 < res.fx) {
    res.x = xc;
    res.fx = f0;
  }
  return res;
}

}  // namespace epifilter
