#pragma once

// Value types shared by the scheduler, the strategies and the simulator.
//
// Indexing is zero based throughout: epoch k spans [t_k, t_{k+1}) with
// t_0 = 0 and t_{N+1} = deadline, and packet k arrives at t_{k+1}, i.e. at
// the end of epoch k. The last epoch (k = N) ends at the deadline with no
// packet.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "rfeh/charge_model.hpp"
#include "rfeh/errors.hpp"

namespace rfeh {

struct EnergyPacket {
  double arrival = 0.0;  // seconds
  double length = 0.0;   // charge duration, seconds

  bool operator==(const EnergyPacket&) const = default;
};

struct EnergyScenario {
  double initial_energy = 0.0;  // joules stored at t = 0
  std::vector<EnergyPacket> packets;
  double deadline = 0.0;

  std::size_t packet_count() const { return packets.size(); }
  std::size_t epoch_count() const { return packets.size() + 1; }

  double epoch_start(std::size_t k) const { return k == 0 ? 0.0 : packets[k - 1].arrival; }
  double epoch_end(std::size_t k) const { return k < packets.size() ? packets[k].arrival : deadline; }
  double epoch_length(std::size_t k) const { return epoch_end(k) - epoch_start(k); }

  /// t_0 .. t_{N+1}
  std::vector<double> epoch_bounds() const {
    std::vector<double> t;
    t.reserve(packets.size() + 2);
    t.push_back(0.0);
    for (const auto& p : packets) t.push_back(p.arrival);
    t.push_back(deadline);
    return t;
  }

  bool operator==(const EnergyScenario&) const = default;
};

/// Throws domain_error when the scenario cannot be paired with the circuit.
inline void validate(const EnergyScenario& scenario, const ChargeCircuit& circuit) {
  if (!(scenario.initial_energy >= 0.0) || scenario.initial_energy > circuit.e_max()) {
    throw domain_error("scenario: initial energy outside [0, e_max]");
  }
  if (!std::isfinite(scenario.deadline)) {
    throw domain_error("scenario: deadline must be finite");
  }
  for (const auto& p : scenario.packets) {
    if (!(p.length >= 0.0) || !std::isfinite(p.length)) {
      throw domain_error("scenario: packet lengths must be finite and >= 0");
    }
  }
  for (std::size_t k = 0; k < scenario.epoch_count(); ++k) {
    if (!(scenario.epoch_length(k) > 0.0)) {
      throw domain_error("scenario: epoch " + std::to_string(k + 1) + " has non-positive length");
    }
  }
}

/// Piecewise-constant transmission power, one level per epoch (watts).
struct TransmissionSchedule {
  std::vector<double> powers;
  std::vector<double> epoch_bounds;  // t_0 .. t_{N+1}

  std::size_t epoch_count() const { return powers.size(); }
  double epoch_length(std::size_t k) const { return epoch_bounds[k + 1] - epoch_bounds[k]; }
};

struct EpochRecord {
  double t_start = 0.0;
  double t_end = 0.0;
  double power = 0.0;
  double consumed = 0.0;   // power * length, joules
  double residual = 0.0;   // stored energy at t_end before the packet lands
  double harvested = 0.0;  // energy gained from the packet at t_end (0 in the last epoch)
  bool clamped = false;    // replay had to cut consumption to the stored energy
};

struct HarvestTrace {
  double initial_energy = 0.0;
  std::vector<EpochRecord> epochs;

  double total_harvested() const {
    double sum = 0.0;
    for (const auto& e : epochs) sum += e.harvested;
    return sum;
  }
  double total_consumed() const {
    double sum = 0.0;
    for (const auto& e : epochs) sum += e.consumed;
    return sum;
  }
  bool any_clamped() const {
    for (const auto& e : epochs) {
      if (e.clamped) return true;
    }
    return false;
  }
};

// Maps power to rate: rate = factor * log2(1 + snr_per_watt * p) per second.
// The normalized model (snr_per_watt = 1, factor = 1/2) is the objective the
// offline scheduler optimises; the link-budget model plugs in the channel
// gain of an AWGN link and reports bits/Hz.
struct RateModel {
  double snr_per_watt = 1.0;
  double factor = 0.5;

  static RateModel normalized() { return {}; }

  double rate(double power) const { return factor * std::log2(1.0 + snr_per_watt * power); }
  double rate_slope(double power) const {
    return factor * snr_per_watt / ((1.0 + snr_per_watt * power) * std::numbers::ln2);
  }
  double rate_curvature(double power) const {
    const double w = 1.0 + snr_per_watt * power;
    return -factor * snr_per_watt * snr_per_watt / (w * w * std::numbers::ln2);
  }

  bool operator==(const RateModel&) const = default;
};

inline double throughput(std::span<const double> powers, std::span<const double> epoch_lengths,
                         const RateModel& model = RateModel::normalized()) {
  double sum = 0.0;
  for (std::size_t k = 0; k < powers.size(); ++k) {
    if (powers[k] < 0.0) {
      throw domain_error("throughput: negative power in epoch " + std::to_string(k + 1));
    }
    sum += epoch_lengths[k] * model.rate(powers[k]);
  }
  return sum;
}

/// Sum over epochs of (l_k / 2) log2(1 + p_k) under the normalized model.
inline double throughput(const TransmissionSchedule& schedule,
                         const RateModel& model = RateModel::normalized()) {
  std::vector<double> lengths(schedule.epoch_count());
  for (std::size_t k = 0; k < lengths.size(); ++k) lengths[k] = schedule.epoch_length(k);
  return throughput(schedule.powers, lengths, model);
}

}  // namespace rfeh
