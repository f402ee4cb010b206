#pragma once

// Offline throughput-optimal scheduling under the feedback harvest model.
//
// Stationarity of the Lagrangian with the terminal constraint E_r(N+1) = 0
// gives, for consecutive epochs,
//
//   1 + p_{m+1} = (1 + p_m) * (1 + X_m),   X_m = dE_h/dE_r at E_r(m),
//
// so every power is a function of the first residual E_r(1). Propagating the
// recursion turns the problem into the scalar equation J(E_r(1)) = 0, where
// J is the energy left at the deadline. All roots are KKT candidates; the
// feasible one with the largest throughput wins.
//
// The recursion is written in SNR units (snr_per_watt * p), which makes it
// valid for any RateModel; with the normalized model it is literally the
// relation above.
//
// Shooting on E_r(1) is ill conditioned when packets are long and the
// horizon is long (errors grow geometrically across arrivals). When no root
// reaches the tolerance the solver falls back to solving the same
// stationarity system for all residuals simultaneously (residual_newton.hpp).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rfeh/charge_model.hpp"
#include "rfeh/errors.hpp"
#include "rfeh/residual_newton.hpp"
#include "rfeh/root_finding.hpp"
#include "rfeh/scenario.hpp"

namespace rfeh {

struct Propagation {
  TransmissionSchedule schedule;
  HarvestTrace trace;
  std::vector<double> sensitivities;  // X_m for every epoch that received a packet
  std::vector<double> levels;         // 1 + snr_per_watt * p before any power floor
  bool negative_power = false;
  // Set when a residual left (0, e_max] before the last packet; the schedule
  // and trace stop at that epoch.
  std::optional<std::size_t> infeasible_from;
  double terminal_residual = 0.0;  // E_r(N+1); -inf on depletion, +inf on overfill

  bool complete() const { return !infeasible_from.has_value(); }
};

namespace detail {

// Core recursion. `first_power` is the epoch-1 power; `first_level` the SNR
// level it descends from (they differ only when the floor is active).
inline Propagation propagate_from(double first_power, double first_level, bool floor_powers,
                                  const EnergyScenario& scenario, const ChargeCircuit& circuit,
                                  const RateModel& rate) {
  const std::size_t n = scenario.packet_count();
  const double g = rate.snr_per_watt;
  Propagation out;
  out.schedule.epoch_bounds = scenario.epoch_bounds();
  out.trace.initial_energy = scenario.initial_energy;

  double power = first_power;
  double level = first_level;
  double stored = scenario.initial_energy;
  for (std::size_t k = 0;; ++k) {
    const double l = scenario.epoch_length(k);
    if (power < 0.0) out.negative_power = true;
    const double residual = stored - power * l;
    out.schedule.powers.push_back(power);
    out.levels.push_back(level);
    EpochRecord rec{scenario.epoch_start(k), scenario.epoch_end(k), power, power * l, residual, 0.0, false};
    if (k == n) {
      out.trace.epochs.push_back(rec);
      out.terminal_residual = residual;
      break;
    }
    if (!(residual > 0.0) || residual > circuit.e_max()) {
      out.trace.epochs.push_back(rec);
      out.infeasible_from = k;
      out.terminal_residual = residual > 0.0 ? std::numeric_limits<double>::infinity()
                                              : -std::numeric_limits<double>::infinity();
      break;
    }
    const double te = scenario.packets[k].length;
    rec.harvested = harvested_energy(residual, te, circuit);
    const double x = harvest_sensitivity(residual, te, circuit);
    out.trace.epochs.push_back(rec);
    out.sensitivities.push_back(x);
    stored = residual + rec.harvested;
    level *= 1.0 + x;
    power = (level - 1.0) / g;
    if (floor_powers && power < 0.0) power = 0.0;
  }
  return out;
}

}  // namespace detail

/// Algorithm 1 forward pass: p_1 = (e_0 - E_r(1)) / l_1, then the
/// stationarity recursion across every arrival. Negative powers are kept and
/// flagged.
inline Propagation propagate(double first_residual, const EnergyScenario& scenario, const ChargeCircuit& circuit,
                             const RateModel& rate = RateModel::normalized()) {
  const double p1 = (scenario.initial_energy - first_residual) / scenario.epoch_length(0);
  return detail::propagate_from(p1, 1.0 + rate.snr_per_watt * p1, false, scenario, circuit, rate);
}

/// Same recursion with the power constraint p >= 0 made explicit: powers are
/// max(0, (level - 1) / snr_per_watt) while the SNR level keeps following the
/// stationarity product. A first level <= 1 means the first epoch is idle.
inline Propagation propagate_level(double first_level, const EnergyScenario& scenario, const ChargeCircuit& circuit,
                                   const RateModel& rate = RateModel::normalized()) {
  const double p1 = std::max(0.0, (first_level - 1.0) / rate.snr_per_watt);
  return detail::propagate_from(p1, first_level, true, scenario, circuit, rate);
}

/// J(E_r(1)): energy left at the deadline.
inline double terminal_residual(double first_residual, const EnergyScenario& scenario, const ChargeCircuit& circuit,
                                const RateModel& rate = RateModel::normalized()) {
  return propagate(first_residual, scenario, circuit, rate).terminal_residual;
}

/// Feedback evaluation of a fixed schedule with no clamping: residuals may go
/// negative, in which case no packet is harvested at that arrival.
inline HarvestTrace trace_schedule(const TransmissionSchedule& schedule, const EnergyScenario& scenario,
                                   const ChargeCircuit& circuit) {
  HarvestTrace trace;
  trace.initial_energy = scenario.initial_energy;
  double stored = scenario.initial_energy;
  for (std::size_t k = 0; k < scenario.epoch_count(); ++k) {
    const double l = scenario.epoch_length(k);
    const double p = schedule.powers.at(k);
    EpochRecord rec{scenario.epoch_start(k), scenario.epoch_end(k), p, p * l, stored - p * l, 0.0, false};
    if (k < scenario.packet_count() && rec.residual >= 0.0 && rec.residual <= circuit.e_max()) {
      rec.harvested = harvested_energy(rec.residual, scenario.packets[k].length, circuit);
    }
    stored = rec.residual + rec.harvested;
    trace.epochs.push_back(rec);
  }
  return trace;
}

enum class Constraint { none, negative_power, causality, capacity };

inline const char* to_string(Constraint c) {
  switch (c) {
    case Constraint::none: return "none";
    case Constraint::negative_power: return "negative_power";
    case Constraint::causality: return "C1";
    case Constraint::capacity: return "C2";
  }
  return "?";
}

struct FeasibilityVerdict {
  bool ok = true;
  Constraint violated = Constraint::none;
  std::size_t epoch = 0;  // 1-based epoch of the first violation
};

/// C1 (never spend energy not yet stored) and C2 (never exceed e_max) at
/// every epoch boundary, with slack 1e-9 * e_max.
inline FeasibilityVerdict check_feasibility(const TransmissionSchedule& schedule, const HarvestTrace& trace,
                                            const ChargeCircuit& circuit) {
  const double slack = 1e-9 * circuit.e_max();
  for (std::size_t k = 0; k < trace.epochs.size(); ++k) {
    const auto& e = trace.epochs[k];
    if (k < schedule.powers.size() && schedule.powers[k] < 0.0) return {false, Constraint::negative_power, k + 1};
    if (e.residual < -slack) return {false, Constraint::causality, k + 1};
    if (e.residual + e.harvested > circuit.e_max() + slack) return {false, Constraint::capacity, k + 1};
  }
  return {};
}

enum class CandidateBranch { interior, power_floor, boundary, idle, simultaneous };

inline const char* to_string(CandidateBranch b) {
  switch (b) {
    case CandidateBranch::interior: return "interior";
    case CandidateBranch::power_floor: return "power_floor";
    case CandidateBranch::boundary: return "boundary";
    case CandidateBranch::idle: return "idle";
    case CandidateBranch::simultaneous: return "simultaneous";
  }
  return "?";
}

struct SolveOptions {
  std::size_t scan_samples = 2000;
  double tolerance = 1e-10;       // accepted |J| at a root, joules
  double bisection_width = 1e-12;  // times e_max
  int newton_steps = 10;
  bool power_floor_branch = true;
  // Energy the schedule is told to leave unspent at the deadline. Only ever
  // non-zero in validation tests that need a deliberately wrong solver.
  double terminal_reserve = 0.0;
  RateModel rate = RateModel::normalized();
};

struct SolveReport {
  TransmissionSchedule schedule;
  HarvestTrace trace;
  double throughput = 0.0;  // under options.rate
  std::size_t candidates_examined = 0;
  double terminal_residual_error = 0.0;
  double first_residual = 0.0;
  CandidateBranch branch = CandidateBranch::interior;
  std::vector<double> sensitivities;
  std::vector<double> levels;
  // Leading epochs forced idle because the capacitor started empty.
  std::size_t idle_prefix = 0;
};

namespace detail {

struct Candidate {
  double first_residual;
  CandidateBranch branch;
  Propagation prop;
};

inline double level_from_param(double s) { return std::pow(10.0, -12.0 * (1.0 - s)); }

// Propagation-shaped view of a simultaneous solution. Levels of idle epochs
// are the virtual SNR levels implied by the stationarity product.
inline Propagation propagation_from(const ResidualSolution& sol, const EnergyScenario& scenario,
                                    const RateModel& rate) {
  const std::size_t n = scenario.packet_count();
  const auto& pt = sol.point;
  Propagation out;
  out.schedule.epoch_bounds = scenario.epoch_bounds();
  out.schedule.powers = pt.powers;
  out.trace.initial_energy = scenario.initial_energy;
  out.sensitivities = pt.x_sens;
  for (std::size_t k = 0; k <= n; ++k) {
    const double l = scenario.epoch_length(k);
    const double residual = k < n ? sol.x[static_cast<Eigen::Index>(k)] : pt.terminal;
    out.trace.epochs.push_back({scenario.epoch_start(k), scenario.epoch_end(k), pt.powers[k], pt.powers[k] * l,
                                residual, k < n ? pt.harvested[k] : 0.0, false});
  }
  out.terminal_residual = pt.terminal;
  out.levels.assign(n + 1, 1.0);
  std::size_t first = n + 1;
  for (std::size_t k = 0; k <= n; ++k) {
    if (!sol.active[k]) {
      first = k;
      break;
    }
  }
  if (first > n) return out;
  out.levels[first] = 1.0 + rate.snr_per_watt * pt.powers[first];
  for (std::size_t k = first; k-- > 0;) out.levels[k] = out.levels[k + 1] / (1.0 + pt.x_sens[k]);
  for (std::size_t k = first + 1; k <= n; ++k) {
    out.levels[k] = sol.active[k] ? out.levels[k - 1] * (1.0 + pt.x_sens[k - 1])
                                  : 1.0 + rate.snr_per_watt * pt.powers[k];
  }
  return out;
}

}  // namespace detail

/// Roots of J over (0, e_0]: scan, bisection on every sign change, Newton
/// polish. Roots with |J| above tolerance are dropped.
inline std::vector<double> find_candidates(const EnergyScenario& scenario, const ChargeCircuit& circuit,
                                           double tolerance, const SolveOptions& options = {}) {
  if (!(tolerance > 0.0)) throw domain_error("find_candidates: tolerance must be > 0");
  const double e0 = scenario.initial_energy;
  if (!(e0 > 0.0)) return {};
  auto j = [&](double r) { return terminal_residual(r, scenario, circuit, options.rate) - options.terminal_reserve; };
  // Uniform grid plus geometric points below its first sample: with long
  // packets the root can sit very close to an empty capacitor, where X blows up.
  std::vector<double> xs;
  const double first = e0 / static_cast<double>(options.scan_samples);
  for (double r = 1e-12 * circuit.e_max(); r < first; r *= 2.0) xs.push_back(r);
  for (std::size_t i = 0; i < options.scan_samples; ++i) {
    xs.push_back(e0 * static_cast<double>(i + 1) / static_cast<double>(options.scan_samples));
  }
  std::vector<double> roots_found;
  roots::RefineOptions ro{options.bisection_width * circuit.e_max(), options.newton_steps};
  for (const auto& b : roots::scan_brackets(j, xs)) {
    const auto r = roots::refine(j, b, ro);
    if (!(std::abs(r.f) <= tolerance)) continue;
    if (!roots_found.empty() && std::abs(roots_found.back() - r.x) <= ro.width) continue;
    roots_found.push_back(r.x);
  }
  return roots_found;
}

namespace detail {

inline SolveReport solve_charged(const EnergyScenario& scenario, const ChargeCircuit& circuit,
                                 const SolveOptions& opt) {
  const double e0 = scenario.initial_energy;
  const double emax = circuit.e_max();
  std::vector<Candidate> cands;

  // No packets: J is the identity, so the root is the reserve itself.
  if (scenario.packet_count() == 0 && e0 >= opt.terminal_reserve) {
    cands.push_back({opt.terminal_reserve, CandidateBranch::interior,
                     propagate(opt.terminal_reserve, scenario, circuit, opt.rate)});
  }
  for (double r : find_candidates(scenario, circuit, opt.tolerance, opt)) {
    cands.push_back({r, CandidateBranch::interior, propagate(r, scenario, circuit, opt.rate)});
  }
  const double eps = 1e-12 * emax;
  if (e0 > 2.0 * eps) {
    for (double r : {eps, e0 - eps}) {
      cands.push_back({r, CandidateBranch::boundary, propagate(r, scenario, circuit, opt.rate)});
    }
  }

  // s in [0, 1]: idle first epoch with SNR level 10^(-12 (1 - s));
  // s in (1, 2): first residual e_0 (2 - s).
  auto by_param = [&](double s) {
    if (s <= 1.0) return propagate_level(level_from_param(s), scenario, circuit, opt.rate);
    return propagate_level(1.0 + opt.rate.snr_per_watt * (e0 - e0 * (2.0 - s)) / scenario.epoch_length(0),
                           scenario, circuit, opt.rate);
  };
  // The problem is concave in the residuals, so a feasible interior root is
  // the unique optimum and the floor branch has nothing to add.
  const bool have_interior = std::any_of(cands.begin(), cands.end(), [&](const Candidate& c) {
    return c.branch == CandidateBranch::interior && c.prop.complete() && !c.prop.negative_power &&
           check_feasibility(c.prop.schedule, c.prop.trace, circuit).ok;
  });
  std::vector<roots::Sample> samples;
  if (opt.power_floor_branch && !have_interior) {
    auto j = [&](double s) { return by_param(s).terminal_residual - opt.terminal_reserve; };
    std::vector<double> xs(opt.scan_samples);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      xs[i] = 2.0 * static_cast<double>(i) / static_cast<double>(xs.size());
    }
    roots::RefineOptions ro{opt.bisection_width, opt.newton_steps};
    for (const auto& b : roots::scan_brackets(j, xs, &samples)) {
      const auto r = roots::refine(j, b, ro);
      if (!(std::abs(r.f) <= opt.tolerance)) continue;
      auto prop = by_param(r.x);
      const double first = prop.trace.epochs.front().residual;
      // Without an idle epoch this is an interior root found a second way.
      const bool floored = std::any_of(prop.levels.begin(), prop.levels.end(), [](double w) { return w <= 1.0; });
      cands.push_back({first, floored ? CandidateBranch::power_floor : CandidateBranch::interior, std::move(prop)});
    }
  }

  // Boundary candidates are not roots; they may end below the reserve.
  auto usable = [&](const Candidate& c) {
    return c.prop.complete() && !c.prop.negative_power && c.prop.terminal_residual >= opt.terminal_reserve - opt.tolerance &&
           check_feasibility(c.prop.schedule, c.prop.trace, circuit).ok;
  };
  auto stationary = [&](const Candidate& c) {
    return usable(c) && c.branch != CandidateBranch::boundary &&
           std::abs(c.prop.terminal_residual - opt.terminal_reserve) <= opt.tolerance;
  };
  if (std::none_of(cands.begin(), cands.end(), stationary)) {
    if (auto sol = residual_newton(scenario, circuit, opt.rate, opt.terminal_reserve)) {
      auto prop = propagation_from(*sol, scenario, opt.rate);
      if (std::abs(prop.terminal_residual - opt.terminal_reserve) <= opt.tolerance) {
        const double first = prop.trace.epochs.front().residual;
        cands.push_back({first, CandidateBranch::simultaneous, std::move(prop)});
      }
    }
  }

  const Candidate* best = nullptr;
  double best_tp = -std::numeric_limits<double>::infinity();
  for (const auto& c : cands) {
    if (!usable(c)) continue;
    const double tp = throughput(c.prop.schedule, opt.rate);
    const double margin = 1e-12 * std::max(1.0, std::abs(best_tp));
    if (best == nullptr || tp > best_tp + margin ||
        (std::abs(tp - best_tp) <= margin && c.first_residual < best->first_residual - 1e-12 * emax)) {
      best = &c;
      best_tp = tp;
    }
  }
  if (best == nullptr) {
    std::ostringstream msg;
    msg << "solve: no feasible KKT candidate among " << cands.size() << " (e0=" << e0
        << ", epochs=" << scenario.epoch_count() << ")";
    if (!samples.empty()) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const auto& s : samples) {
        lo = std::min(lo, s.f);
        hi = std::max(hi, s.f);
      }
      msg << "; J range on grid [" << lo << ", " << hi << "]";
    }
    throw solver_failure(msg.str());
  }
  SolveReport rep;
  rep.schedule = best->prop.schedule;
  rep.trace = best->prop.trace;
  rep.throughput = best_tp;
  rep.candidates_examined = cands.size();
  rep.terminal_residual_error = std::abs(best->prop.terminal_residual - opt.terminal_reserve);
  rep.first_residual = best->first_residual;
  rep.branch = best->branch;
  rep.sensitivities = best->prop.sensitivities;
  rep.levels = best->prop.levels;
  return rep;
}

}  // namespace detail

/// Throughput-maximising offline schedule.
///
/// Throws solver_failure when no candidate survives the feasibility filter.
/// An empty capacitor at t = 0 forces idle epochs until the first packet has
/// been harvested; the recursion then starts from that arrival.
inline SolveReport solve(const EnergyScenario& scenario, const ChargeCircuit& circuit, const SolveOptions& opt = {}) {
  validate(scenario, circuit);
  // Leading idle epochs while nothing is stored.
  std::size_t idle = 0;
  double stored = scenario.initial_energy;
  HarvestTrace prefix;
  prefix.initial_energy = scenario.initial_energy;
  while (stored == 0.0 && idle < scenario.packet_count()) {
    const double h = harvested_energy(0.0, scenario.packets[idle].length, circuit);
    prefix.epochs.push_back({scenario.epoch_start(idle), scenario.epoch_end(idle), 0.0, 0.0, 0.0, h, false});
    stored = h;
    ++idle;
  }
  if (stored == 0.0) {
    SolveReport rep;
    rep.schedule.epoch_bounds = scenario.epoch_bounds();
    rep.schedule.powers.assign(scenario.epoch_count(), 0.0);
    rep.trace = trace_schedule(rep.schedule, scenario, circuit);
    rep.branch = CandidateBranch::idle;
    rep.idle_prefix = scenario.epoch_count();
    rep.candidates_examined = 1;
    return rep;
  }
  if (idle == 0) return detail::solve_charged(scenario, circuit, opt);

  const double shift = scenario.epoch_start(idle);
  EnergyScenario rest;
  rest.initial_energy = stored;
  rest.deadline = scenario.deadline - shift;
  for (std::size_t k = idle; k < scenario.packet_count(); ++k) {
    rest.packets.push_back({scenario.packets[k].arrival - shift, scenario.packets[k].length});
  }
  SolveReport rep = detail::solve_charged(rest, circuit, opt);
  rep.schedule.powers.insert(rep.schedule.powers.begin(), idle, 0.0);
  rep.schedule.epoch_bounds = scenario.epoch_bounds();
  for (auto& e : rep.trace.epochs) {
    e.t_start += shift;
    e.t_end += shift;
  }
  rep.trace.epochs.insert(rep.trace.epochs.begin(), prefix.epochs.begin(), prefix.epochs.end());
  rep.trace.initial_energy = scenario.initial_energy;
  rep.levels.insert(rep.levels.begin(), idle, 1.0);
  rep.idle_prefix = idle;
  rep.first_residual = 0.0;
  rep.throughput = throughput(rep.schedule, opt.rate);
  return rep;
}

}  // namespace rfeh
