#pragma once

// Scenario fixtures and KKT checks shared by the tests and the acceptance
// binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "rfeh/offline_scheduler.hpp"
#include "rfeh/simulator.hpp"

namespace rfeh::test {

// Measurement circuit: R = 750 ohm, C = 0.68 F, v_max = 2.5 V.
inline ChargeCircuit fig4_circuit() { return {750.0, 0.68, 2.5}; }

inline EnergyScenario two_packet_scenario() { return {0.5, {{10.0, 5.0}, {20.0, 5.0}}, 30.0}; }
inline EnergyScenario one_packet_scenario() { return {0.5, {{10.0, 5.0}}, 20.0}; }

/// Generated scenario on the default circuit with mean packet length
/// te_over_tau * tau.
inline GeneratedScenario generated(std::size_t packets, double te_over_tau, std::uint64_t seed, std::uint64_t stream,
                                   ExperimentConfig cfg = {}) {
  cfg.packets = packets;
  cfg.seed = seed;
  cfg.mean_packet_length = te_over_tau * cfg.circuit().tau();
  Rng rng(seed, stream);
  return generate_scenario(cfg, rng);
}

struct KktReport {
  double stationarity = 0.0;   // max relative mismatch of the level recursion
  double min_residual = 0.0;   // min E_r(i), i <= N
  double terminal = 0.0;       // |E_r(N+1) - reserve|
  double capacity_margin = 0.0;  // min e_max - (E_r + E_h)
  double conservation = 0.0;   // max link-by-link energy balance error
  bool nonnegative = true;
};

inline KktReport kkt_report(const SolveReport& rep, const EnergyScenario& sc, const ChargeCircuit& c,
                            double reserve = 0.0) {
  KktReport k;
  const std::size_t n = sc.packet_count();
  const auto& ep = rep.trace.epochs;
  k.min_residual = std::numeric_limits<double>::infinity();
  k.capacity_margin = std::numeric_limits<double>::infinity();
  // Only the epochs after an idle prefix carry the recursion.
  for (std::size_t m = rep.idle_prefix; m < n; ++m) {
    const std::size_t j = m - rep.idle_prefix;
    if (j >= rep.sensitivities.size()) break;
    const double lhs = rep.levels[m + 1];
    const double rhs = rep.levels[m] * (1.0 + rep.sensitivities[j]);
    k.stationarity = std::max(k.stationarity, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  double stored = sc.initial_energy;
  for (std::size_t i = 0; i <= n; ++i) {
    const double expect = stored - rep.schedule.powers[i] * sc.epoch_length(i);
    k.conservation = std::max(k.conservation, std::abs(ep[i].residual - expect));
    if (i < n && i >= rep.idle_prefix) k.min_residual = std::min(k.min_residual, ep[i].residual);
    k.capacity_margin = std::min(k.capacity_margin, c.e_max() - (ep[i].residual + ep[i].harvested));
    if (rep.schedule.powers[i] < 0.0) k.nonnegative = false;
    stored = ep[i].residual + ep[i].harvested;
  }
  k.terminal = std::abs(ep.back().residual - reserve);
  return k;
}

}  // namespace rfeh::test
