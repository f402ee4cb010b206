#pragma once

// Scenario generation, strategy evaluation and Monte Carlo sweeps.
//
// Scenarios are built in reverse order so that the classic tight-string
// plan is exactly realisable: draw classic per-packet energies and epoch
// lengths, run the tight string in the resulting fixed tunnel, then solve for
// the packet durations that make the feedback model deliver those energies
// from the residuals the tight string leaves behind.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "rfeh/charge_model.hpp"
#include "rfeh/errors.hpp"
#include "rfeh/offline_scheduler.hpp"
#include "rfeh/random.hpp"
#include "rfeh/replay.hpp"
#include "rfeh/scenario.hpp"
#include "rfeh/strategies.hpp"
#include "rfeh/tight_string.hpp"

namespace rfeh {

struct ExperimentConfig {
  double resistance = 4000.0;  // ohms
  double capacitance = 0.05;   // farads
  double v_max = 2.5;          // volts
  // Mean packet length (seconds). Sweeps override it.
  double mean_packet_length = 2.0;
  // Mean packet length over mean epoch length. Holding it fixed keeps the
  // arrived energy per second constant while packets get longer and rarer.
  double duty_cycle = 0.1;
  std::size_t packets = 20;
  double initial_fraction = 0.5;  // e_0 / e_max
  double spread = 0.2;            // standard deviation / mean of every draw
  std::size_t runs = 30;
  std::uint64_t seed = 1;
  std::size_t max_retries = 200;
  std::size_t threads = 0;  // 0: hardware concurrency

  ChargeCircuit circuit() const { return {resistance, capacitance, v_max}; }
  double mean_epoch_length() const { return mean_packet_length / duty_cycle; }
  /// Mean classic packet energy: the best harvest a mean-length packet can give.
  double mean_packet_energy() const {
    const auto c = circuit();
    return harvested_energy(optimal_residual(mean_packet_length, c), mean_packet_length, c);
  }
  PredictorPriors priors() const { return {mean_packet_length, mean_epoch_length()}; }

  void check() const {
    (void)circuit();
    if (runs < 1) throw domain_error("experiment: runs must be >= 1");
    if (!(mean_packet_length > 0.0) || !(duty_cycle > 0.0)) {
      throw domain_error("experiment: mean packet length and duty cycle must be > 0");
    }
    if (!(spread >= 0.0) || spread * std::sqrt(3.0) >= 1.0) {
      throw domain_error("experiment: spread must keep uniform supports positive (spread < 1/sqrt(3))");
    }
    if (!(initial_fraction >= 0.0) || initial_fraction > kClassicFullFraction) {
      throw domain_error("experiment: initial fraction must lie in [0, 0.99]");
    }
  }

  bool operator==(const ExperimentConfig&) const = default;
};

struct GeneratedScenario {
  EnergyScenario scenario;
  std::vector<double> classic_amounts;    // (E_h)' per packet
  std::vector<double> classic_residuals;  // (E_r)' before each packet under the tight string
  TransmissionSchedule classic_schedule;  // the tight string itself
  std::size_t attempts = 1;
};

/// Reverse-order construction of one scenario from `rng`.
inline GeneratedScenario generate_scenario(const ExperimentConfig& cfg, Rng& rng) {
  cfg.check();
  const ChargeCircuit circuit = cfg.circuit();
  const double cap = kClassicFullFraction * circuit.e_max();
  const double e0 = cfg.initial_fraction * circuit.e_max();
  const double mean_epoch = cfg.mean_epoch_length();
  const double mean_energy = cfg.mean_packet_energy();
  const std::size_t n = cfg.packets;

  for (std::size_t attempt = 1; attempt <= cfg.max_retries; ++attempt) {
    std::vector<double> arrivals;
    std::vector<double> amounts;
    double t = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      t += rng.uniform_mean_std(mean_epoch, cfg.spread * mean_epoch);
      arrivals.push_back(t);
    }
    const double deadline = t + rng.uniform_mean_std(mean_epoch, cfg.spread * mean_epoch);
    for (std::size_t k = 0; k < n; ++k) {
      amounts.push_back(rng.uniform_mean_std(mean_energy, cfg.spread * mean_energy));
    }
    const ClassicTunnel tunnel = make_classic_tunnel(e0, arrivals, amounts, deadline, cap);
    bool ok = true;
    for (std::size_t k = 0; k < n && ok; ++k) ok = tunnel.lower[k] <= tunnel.upper[k];
    if (!ok) continue;

    GeneratedScenario g;
    g.classic_schedule = tight_string_schedule(tunnel);
    const auto d = cumulative_consumption(g.classic_schedule);
    g.scenario.initial_energy = e0;
    g.scenario.deadline = deadline;
    g.classic_amounts = amounts;
    for (std::size_t k = 0; k < n && ok; ++k) {
      const double residual = std::max(0.0, tunnel.upper[k] - d[k + 1]);
      g.classic_residuals.push_back(residual);
      try {
        g.scenario.packets.push_back({arrivals[k], packet_length_for(residual, amounts[k], circuit)});
      } catch (const infeasible_error&) {
        ok = false;
      }
    }
    if (!ok) continue;
    // Stretch time so that packets cover exactly duty_cycle of the horizon:
    // the arrived-energy density then stays fixed along a packet-length
    // sweep. A uniform time scaling leaves the taut string's arrival
    // residuals (and so the packet lengths) unchanged.
    double charging = 0.0;
    for (const auto& p : g.scenario.packets) charging += p.length;
    const double stretch = charging > 0.0 ? charging / (cfg.duty_cycle * deadline) : 1.0;
    for (auto& p : g.scenario.packets) p.arrival *= stretch;
    g.scenario.deadline *= stretch;
    for (auto& t : g.classic_schedule.epoch_bounds) t *= stretch;
    for (auto& p : g.classic_schedule.powers) p /= stretch;
    // Re-derive the lengths from the residuals a replay of the stretched
    // string actually sees. Where the string empties the capacitor, a
    // roundoff residual of 1e-17 J would otherwise move the harvest by ~1e-9 J
    // (the harvest has a square-root singularity at zero).
    double stored = e0;
    for (std::size_t k = 0; k < n && ok; ++k) {
      const double r = stored - g.classic_schedule.powers[k] * g.scenario.epoch_length(k);
      const double rc = std::clamp(r, 0.0, circuit.e_max());
      try {
        g.scenario.packets[k].length = packet_length_for(rc, amounts[k], circuit);
      } catch (const infeasible_error&) {
        ok = false;
        break;
      }
      g.classic_residuals[k] = rc;
      stored = r + harvested_energy(rc, g.scenario.packets[k].length, circuit);
    }
    if (!ok) continue;
    g.attempts = attempt;
    return g;
  }
  throw generation_error("generate_scenario: no feasible draw after " + std::to_string(cfg.max_retries) +
                         " attempts (mean packet energy " + std::to_string(mean_energy) + " J, e_max " +
                         std::to_string(circuit.e_max()) + " J)");
}

enum class Strategy { optimal, max_harvest, tight_string, online, zero };

inline constexpr Strategy kAllStrategies[] = {Strategy::optimal, Strategy::max_harvest, Strategy::tight_string,
                                              Strategy::online, Strategy::zero};

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::optimal: return "optimal";
    case Strategy::max_harvest: return "max_harvest";
    case Strategy::tight_string: return "tight_string";
    case Strategy::online: return "online";
    case Strategy::zero: return "zero";
  }
  return "?";
}

inline std::optional<Strategy> parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

/// Replay one strategy on a generated scenario.
inline ReplayResult evaluate(Strategy strategy, const GeneratedScenario& g, const ChargeCircuit& circuit,
                             const RateModel& rate, const PredictorPriors& priors) {
  switch (strategy) {
    case Strategy::optimal: {
      SolveOptions opt;
      opt.rate = rate;
      return replay(fixed_schedule_policy(solve(g.scenario, circuit, opt).schedule), g.scenario, circuit, rate);
    }
    case Strategy::max_harvest: return replay(max_harvest_policy(circuit), g.scenario, circuit, rate);
    case Strategy::tight_string:
      return replay(fixed_schedule_policy(g.classic_schedule), g.scenario, circuit, rate);
    case Strategy::online: return replay(online_policy(circuit, priors), g.scenario, circuit, rate);
    case Strategy::zero: return replay(zero_policy(), g.scenario, circuit, rate);
  }
  throw domain_error("evaluate: unknown strategy");
}

/// One point of a sweep: the experiment as configured with the packet
/// length and capacitance replaced.
struct SweepPoint {
  double value = 0.0;  // the swept quantity as reported
  double mean_packet_length = 0.0;
  double capacitance = 0.0;
};

struct ResultRow {
  double sweep_value = 0.0;
  double capacitance = 0.0;
  double mean_packet_length = 0.0;
  Strategy strategy = Strategy::optimal;
  std::size_t runs = 0;
  double mean_throughput = 0.0;
  double std_throughput = 0.0;
  double mean_throughput_rate = 0.0;  // throughput / deadline
  double mean_harvested = 0.0;
  double std_harvested = 0.0;
  double mean_te_over_tau = 0.0;  // realised mean packet length over tau
  std::uint64_t seed = 0;
};

namespace detail {

struct RunOutcome {
  std::vector<double> throughput;
  std::vector<double> rate;
  std::vector<double> harvested;
  double te_over_tau = 0.0;
};

// Run `fn(i)` for i in [0, count) on up to `threads` workers. The first
// exception (by index) is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::vector<std::exception_ptr> errors(count);
  auto work = [&](std::size_t worker) {
    for (std::size_t i = worker; i < count; i += threads) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
}

}  // namespace detail

/// Average every strategy over `cfg.runs` scenarios per sweep point. Run r
/// of every point draws from stream r of cfg.seed, so points share their
/// random numbers and differ only through the swept parameters.
inline std::vector<ResultRow> monte_carlo(const ExperimentConfig& cfg, const std::vector<SweepPoint>& points,
                                          const std::vector<Strategy>& strategies, const RateModel& rate) {
  cfg.check();
  std::vector<ResultRow> rows;
  for (const SweepPoint& pt : points) {
    ExperimentConfig c = cfg;
    c.mean_packet_length = pt.mean_packet_length;
    c.capacitance = pt.capacitance;
    const ChargeCircuit circuit = c.circuit();
    std::vector<detail::RunOutcome> outcomes(c.runs);
    detail::parallel_for(c.runs, c.threads, [&](std::size_t r) {
      Rng rng(c.seed, r);
      GeneratedScenario g;
      try {
        g = generate_scenario(c, rng);
      } catch (const generation_error& e) {
        throw generation_error(std::string(e.what()) + " [seed " + std::to_string(c.seed) + ", run " +
                               std::to_string(r) + "]");
      }
      auto& o = outcomes[r];
      double te = 0.0;
      for (const auto& p : g.scenario.packets) te += p.length;
      o.te_over_tau = g.scenario.packets.empty() ? 0.0 : te / static_cast<double>(g.scenario.packets.size()) / circuit.tau();
      for (Strategy s : strategies) {
        const ReplayResult res = evaluate(s, g, circuit, rate, c.priors());
        o.throughput.push_back(res.throughput);
        o.rate.push_back(res.throughput / g.scenario.deadline);
        o.harvested.push_back(res.trace.total_harvested());
      }
    });
    double te_mean = 0.0;
    for (const auto& o : outcomes) te_mean += o.te_over_tau;
    te_mean /= static_cast<double>(outcomes.size());
    for (std::size_t si = 0; si < strategies.size(); ++si) {
      std::vector<double> tp, rt, hv;
      for (const auto& o : outcomes) {
        tp.push_back(o.throughput[si]);
        rt.push_back(o.rate[si]);
        hv.push_back(o.harvested[si]);
      }
      ResultRow row;
      row.sweep_value = pt.value;
      row.capacitance = pt.capacitance;
      row.mean_packet_length = pt.mean_packet_length;
      row.strategy = strategies[si];
      row.runs = c.runs;
      detail::mean_std(tp, row.mean_throughput, row.std_throughput);
      double unused = 0.0;
      detail::mean_std(rt, row.mean_throughput_rate, unused);
      detail::mean_std(hv, row.mean_harvested, row.std_harvested);
      row.mean_te_over_tau = te_mean;
      row.seed = c.seed;
      rows.push_back(row);
    }
  }
  return rows;
}

/// Copy of `scenario` with epoch `epoch` stretched by `delta_length` and
/// the packet closing it lengthened by `delta_packet` (if there is one).
inline EnergyScenario perturb_epoch(const EnergyScenario& scenario, std::size_t epoch, double delta_length,
                                    double delta_packet) {
  if (epoch >= scenario.epoch_count()) throw domain_error("perturb_epoch: epoch out of range");
  EnergyScenario s = scenario;
  for (std::size_t k = epoch; k < s.packets.size(); ++k) s.packets[k].arrival += delta_length;
  s.deadline += delta_length;
  if (epoch < s.packets.size()) {
    s.packets[epoch].length += delta_packet;
  } else if (delta_packet != 0.0) {
    throw domain_error("perturb_epoch: the last epoch has no packet to perturb");
  }
  if (!(s.epoch_length(epoch) > 0.0)) throw domain_error("perturb_epoch: epoch length would become non-positive");
  if (epoch < s.packets.size() && !(s.packets[epoch].length >= 0.0)) {
    throw domain_error("perturb_epoch: packet length would become negative");
  }
  return s;
}

struct FutureImpact {
  double power_before = 0.0;
  double power_after = 0.0;
  double relative_change = 0.0;
};

/// Relative change of the optimal power in epoch `current` when the epoch
/// `d` epochs later (and its packet) is perturbed.
inline FutureImpact future_impact_probe(const EnergyScenario& scenario, const ChargeCircuit& circuit, std::size_t d,
                                        double delta_length, double delta_packet, const SolveOptions& opt = {},
                                        std::size_t current = 0) {
  if (d < 1 || current + d > scenario.packet_count()) {
    throw domain_error("future_impact_probe: need 1 <= d and current + d <= N");
  }
  const EnergyScenario perturbed = perturb_epoch(scenario, current + d, delta_length, delta_packet);
  validate(perturbed, circuit);
  FutureImpact out;
  out.power_before = solve(scenario, circuit, opt).schedule.powers.at(current);
  out.power_after = solve(perturbed, circuit, opt).schedule.powers.at(current);
  if (!(out.power_before > 0.0)) throw domain_error("future_impact_probe: current power is zero");
  out.relative_change = std::abs(out.power_after - out.power_before) / out.power_before;
  return out;
}

}  // namespace rfeh
