#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "epifilter/errors.hpp"

namespace epifilter {

enum class Model { sir, sitr };

inline std::string model_name(Model m) { return m == Model::sir ? "sir" : "sitr"; }

inline Model parse_model(const std::string& s) {
  if (s == "sir") return Model::sir;
  if (s == "sitr") return Model::sitr;
  throw ConfigError("unknown model '" + s + "' (expected sir or sitr)");
}

/// Population state vector [S, I, T, R] with total N. In SIR mode the
/// treatment compartment stays at zero. Values are real (the window costs
/// are minimized over a continuum), non-negative, and sum to n.
struct CompartmentState {
  double s = 0;  // susceptible
  double i = 0;  // latent infected
  double t = 0;  // under treatment (0 in SIR mode)
  double r = 0;  // removed (recovered + deceased)
  double n = 0;  // total population

  double sum() const { return s + i + t + r; }

  bool finite() const {
    return std::isfinite(s) && std::isfinite(i) && std::isfinite(t) && std::isfinite(r) &&
           std::isfinite(n);
  }
};

struct SirParams {
  double beta = 0;   // transmission rate, 1/day
  double gamma = 0;  // removal rate, 1/day
  bool finite() const { return std::isfinite(beta) && std::isfinite(gamma); }
};

struct SitrParams {
  double beta_e = 0;  // effective transmission rate (susceptible fraction folded in), 1/day
  double alpha = 0;   // infected -> treatment transition rate, 1/day
  double gamma = 0;   // treatment -> removed recovery rate, 1/day
  bool finite() const {
    return std::isfinite(beta_e) && std::isfinite(alpha) && std::isfinite(gamma);
  }
};

using AnyParams = std::variant<SirParams, SitrParams>;

inline Model model_of(const AnyParams& p) {
  return std::holds_alternative<SirParams>(p) ? Model::sir : Model::sitr;
}

/// beta scaled by the susceptible fraction s/n.
inline double effective_beta(double beta, double s, double n) {
  if (!(n > 0) || !(s >= 0) || !(s <= n) || !std::isfinite(beta))
    throw InvalidInputError("effective_beta requires finite beta and 0 <= s <= n, n > 0");
  return beta * s / n;
}

namespace detail {

// Clip negatives and rebalance so the components sum to n again. The
// susceptible compartment absorbs the residual; if that would drive it
// negative the infected compartments are rescaled instead. Explicit Euler
// can overshoot for large rates, this keeps every trajectory physical.
inline void clip_and_rebalance(CompartmentState& x) {
  if (x.i < 0) x.i = 0;
  if (x.t < 0) x.t = 0;
  if (x.r < 0) x.r = 0;
  x.s = x.n - x.i - x.t - x.r;
  if (x.s < 0) {
    double mass = x.i + x.t + x.r;
    double scale = mass > 0 ? x.n / mass : 0.0;
    x.i *= scale;
    x.t *= scale;
    x.r *= scale;
    x.s = 0;
  }
}

}  // namespace detail

/// One day of the discretized SIR dynamics:
///   S' = S - beta*I*S/N,  I' = I + beta*I*S/N - gamma*I,  R' = R + gamma*I.
inline CompartmentState sir_step(const CompartmentState& x, const SirParams& p) {
  if (!x.finite() || !p.finite()) throw InvalidInputError("sir_step: non-finite state or params");
  if (!(x.n > 0)) throw InvalidInputError("sir_step: population must be positive");
  double infections = p.beta * x.i * x.s / x.n;
  double removals = p.gamma * x.i;
  CompartmentState out = x;
  out.s = x.s - infections;
  out.i = x.i + infections - removals;
  out.r = x.r + removals;
  if (out.s < 0 || out.i < 0 || out.r < 0) detail::clip_and_rebalance(out);
  return out;
}

/// One day of the discretized SITR dynamics:
///   S' = S - be*I,  I' = I + be*I - a*I,  T' = T + a*I - g*T,  R' = R + g*T.
inline CompartmentState sitr_step(const CompartmentState& x, const SitrParams& p) {
  if (!x.finite() || !p.finite()) throw InvalidInputError("sitr_step: non-finite state or params");
  if (!(x.n > 0)) throw InvalidInputError("sitr_step: population must be positive");
  double infections = p.beta_e * x.i;
  double admissions = p.alpha * x.i;
  double recoveries = p.gamma * x.t;
  CompartmentState out = x;
  out.s = x.s - infections;
  out.i = x.i + infections - admissions;
  out.t = x.t + admissions - recoveries;
  out.r = x.r + recoveries;
  if (out.s < 0 || out.i < 0 || out.t < 0 || out.r < 0) detail::clip_and_rebalance(out);
  return out;
}

inline CompartmentState step(const CompartmentState& x, const AnyParams& p) {
  if (auto* sp = std::get_if<SirParams>(&p)) return sir_step(x, *sp);
  return sitr_step(x, std::get<SitrParams>(p));
}

/// Piecewise-constant parameter schedule: entry (t_k, p_k) is in force from
/// step t_k until the next entry. Lookups before the first entry clamp to it.
template <class P>
class ParamSchedule {
 public:
  ParamSchedule() = default;
  explicit ParamSchedule(P constant) { entries_.emplace_back(0, std::move(constant)); }

  void add(int time, P params) {
    if (!entries_.empty() && time <= entries_.back().first)
      throw ConfigError("schedule times must be strictly increasing");
    entries_.emplace_back(time, std::move(params));
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  const P& at(int time) const {
    if (entries_.empty()) throw ConfigError("empty parameter schedule");
    const P* best = &entries_.front().second;
    for (const auto& [t, p] : entries_) {
      if (t > time) break;
      best = &p;
    }
    return *best;
  }

 private:
  std::vector<std::pair<int, P>> entries_;
};

/// Trajectory of horizon+1 states starting at x0; element k+1 is one step of
/// element k under the schedule's parameters for step k.
template <class P>
std::vector<CompartmentState> simulate(const CompartmentState& x0, const ParamSchedule<P>& sched,
                                       int horizon) {
  if (sched.empty()) throw ConfigError("simulate: empty parameter schedule");
  if (horizon < 0) throw InvalidInputError("simulate: negative horizon");
  std::vector<CompartmentState> out;
  out.reserve(static_cast<std::size_t>(horizon) + 1);
  out.push_back(x0);
  for (int k = 0; k < horizon; ++k) {
    if constexpr (std::is_same_v<P, SirParams>)
      out.push_back(sir_step(out.back(), sched.at(k)));
    else
      out.push_back(sitr_step(out.back(), sched.at(k)));
  }
  return out;
}

template <class P>
std::vector<CompartmentState> simulate(const CompartmentState& x0, const P& constant_params,
                                       int horizon) {
  return simulate(x0, ParamSchedule<P>(constant_params), horizon);
}

inline std::vector<CompartmentState> simulate(const CompartmentState& x0, const AnyParams& p,
                                              int horizon) {
  if (auto* sp = std::get_if<SirParams>(&p)) return simulate(x0, *sp, horizon);
  return simulate(x0, std::get<SitrParams>(p), horizon);
}

}  // namespace epifilter
