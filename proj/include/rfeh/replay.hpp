#pragma once

// Feedback-accurate replay of a transmission policy.
//
// The policy is asked for a power at the start of every epoch. Consumption is
// cut to the stored energy if the policy overspends (flagged in the trace),
// and each packet is harvested atomically at its arrival instant from
// whatever residual the policy left behind.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "rfeh/charge_model.hpp"
#include "rfeh/scenario.hpp"

namespace rfeh {

struct EpochContext {
  std::size_t epoch = 0;  // zero based
  double now = 0.0;       // epoch start
  double stored = 0.0;    // energy available at `now`
  const EnergyScenario* scenario = nullptr;
  std::span<const EnergyPacket> history;  // packets that already arrived

  bool last_epoch() const { return epoch + 1 == scenario->epoch_count(); }
};

using Policy = std::function<double(const EpochContext&)>;

struct ReplayResult {
  TransmissionSchedule schedule;  // powers actually applied
  HarvestTrace trace;
  double throughput = 0.0;
};

inline Policy fixed_schedule_policy(TransmissionSchedule schedule) {
  return [s = std::move(schedule)](const EpochContext& ctx) { return s.powers.at(ctx.epoch); };
}

inline Policy zero_policy() {
  return [](const EpochContext&) { return 0.0; };
}

inline ReplayResult replay(const Policy& policy, const EnergyScenario& scenario, const ChargeCircuit& circuit,
                           const RateModel& rate = RateModel::normalized()) {
  validate(scenario, circuit);
  const double slack = 1e-9 * circuit.e_max();
  ReplayResult out;
  out.schedule.epoch_bounds = scenario.epoch_bounds();
  out.trace.initial_energy = scenario.initial_energy;
  double stored = scenario.initial_energy;
  for (std::size_t k = 0; k < scenario.epoch_count(); ++k) {
    const double l = scenario.epoch_length(k);
    EpochContext ctx{k, scenario.epoch_start(k), stored, &scenario,
                     std::span<const EnergyPacket>(scenario.packets.data(), k)};
    double p = std::max(0.0, policy(ctx));
    EpochRecord rec{scenario.epoch_start(k), scenario.epoch_end(k), p, p * l, stored - p * l, 0.0, false};
    if (rec.residual < -slack) {
      rec.clamped = true;
      rec.power = p = stored / l;
      rec.consumed = stored;
      rec.residual = 0.0;
    }
    if (k < scenario.packet_count()) {
      const double r = std::clamp(rec.residual, 0.0, circuit.e_max());
      rec.harvested = harvested_energy(r, scenario.packets[k].length, circuit);
    }
    stored = rec.residual + rec.harvested;
    out.schedule.powers.push_back(p);
    out.throughput += l * rate.rate(p);
    out.trace.epochs.push_back(rec);
  }
  return out;
}

}  // namespace rfeh
