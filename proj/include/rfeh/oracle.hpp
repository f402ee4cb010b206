#pragma once

// Brute-force validation optimiser for small instances.
//
// Powers of epochs 1..N are enumerated on the grid {0, h, ..., (n-1) h},
// h = p_ub / n; the last epoch always drains what is left (spending more can
// only help). Every tuple is replayed through the feedback harvest model and
// tuples that overspend are dropped.
//
// Error bound: rounding each optimal power down to the grid spends less, and
// since E + E_h(E) is increasing in E, every later residual (and the final
// drain) is at least as large as the optimum's. The loss is therefore at
// most sum_k l_k * max|d rate/dp| * h over the enumerated epochs. Grids with
// resolutions n and 2n are nested.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "rfeh/charge_model.hpp"
#include "rfeh/errors.hpp"
#include "rfeh/scenario.hpp"

namespace rfeh {

struct GridSpec {
  std::size_t resolution = 60;  // points per epoch
  std::optional<double> power_upper_bound;  // default: 2 * total energy / shortest epoch
  std::size_t epoch_limit = 3;              // largest N accepted
  std::size_t evaluation_budget = 60 * 60 * 60;
};

struct OracleResult {
  TransmissionSchedule schedule;
  double throughput = 0.0;
  double error_bound = 0.0;
  double first_residual = 0.0;  // E_r(1) of the winner
  double grid_step = 0.0;
  std::size_t evaluations = 0;
};

/// e_0 plus the largest harvest each packet could possibly deliver.
inline double total_energy_bound(const EnergyScenario& scenario, const ChargeCircuit& circuit) {
  double total = scenario.initial_energy;
  for (const auto& p : scenario.packets) {
    total += harvested_energy(optimal_residual(p.length, circuit), p.length, circuit);
  }
  return total;
}

inline OracleResult brute_force_optimize(const EnergyScenario& scenario, const ChargeCircuit& circuit,
                                         const GridSpec& grid = {}, const RateModel& rate = RateModel::normalized()) {
  validate(scenario, circuit);
  const std::size_t n = scenario.packet_count();
  if (n > grid.epoch_limit) throw domain_error("brute_force_optimize: too many packets for the oracle");
  if (grid.resolution < 2) throw domain_error("brute_force_optimize: resolution must be >= 2");
  double evals = 1.0;
  for (std::size_t k = 0; k < n; ++k) evals *= static_cast<double>(grid.resolution);
  if (evals > static_cast<double>(grid.evaluation_budget)) {
    throw resource_error("brute_force_optimize: grid exceeds evaluation budget");
  }
  double l_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < scenario.epoch_count(); ++k) l_min = std::min(l_min, scenario.epoch_length(k));
  const double p_ub = grid.power_upper_bound.value_or(2.0 * total_energy_bound(scenario, circuit) / l_min);
  if (!(p_ub > 0.0)) {
    // Nothing to spend: the all-zero schedule is the only choice.
    OracleResult r;
    r.schedule.epoch_bounds = scenario.epoch_bounds();
    r.schedule.powers.assign(scenario.epoch_count(), 0.0);
    r.first_residual = scenario.initial_energy;
    r.evaluations = 1;
    return r;
  }
  const double h = p_ub / static_cast<double>(grid.resolution);

  OracleResult best;
  best.throughput = -std::numeric_limits<double>::infinity();
  best.schedule.epoch_bounds = scenario.epoch_bounds();
  best.grid_step = h;
  std::vector<double> powers(scenario.epoch_count(), 0.0);

  // Depth-first enumeration in lexicographic order; strict improvement keeps
  // the smallest tuple among ties.
  auto dfs = [&](auto&& self, std::size_t k, double stored, double partial) -> void {
    const double l = scenario.epoch_length(k);
    if (k == n) {
      powers[k] = stored / l;
      const double tp = partial + l * rate.rate(powers[k]);
      ++best.evaluations;
      if (tp > best.throughput) {
        best.throughput = tp;
        best.schedule.powers = powers;
      }
      return;
    }
    for (std::size_t i = 0; i < grid.resolution; ++i) {
      const double p = static_cast<double>(i) * h;
      const double residual = stored - p * l;
      if (residual < 0.0) break;
      powers[k] = p;
      const double harvested = harvested_energy(std::min(residual, circuit.e_max()), scenario.packets[k].length, circuit);
      self(self, k + 1, residual + harvested, partial + l * rate.rate(p));
    }
  };
  dfs(dfs, 0, scenario.initial_energy, 0.0);

  double lipschitz_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) lipschitz_sum += scenario.epoch_length(k);
  best.error_bound = rate.factor * rate.snr_per_watt / std::numbers::ln2 * h * lipschitz_sum;
  best.first_residual = scenario.initial_energy - best.schedule.powers[0] * scenario.epoch_length(0);
  return best;
}

}  // namespace rfeh
