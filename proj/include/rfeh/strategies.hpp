#pragma once

// Baseline and online policies.
//
//  * maximal harvesting: before every arrival, shed energy down to the
//    residual that maximises the next packet's harvest; drain at the end.
//  * tight string: the classic fixed-tunnel optimum (see tight_string.hpp),
//    replayed under feedback harvesting.
//  * online: same target residual, but the next packet's length and arrival
//    are predicted from the running means of past packets.

#include <cstddef>
#include <span>
#include <vector>

#include "rfeh/charge_model.hpp"
#include "rfeh/errors.hpp"
#include "rfeh/replay.hpp"
#include "rfeh/scenario.hpp"
#include "rfeh/tight_string.hpp"

namespace rfeh {

/// Power that lands on `target` after `horizon` seconds, or 0 if the stored
/// energy is already at or below it.
inline double shed_power(double stored, double target, double horizon) {
  if (!(horizon > 0.0)) throw domain_error("shed_power: horizon must be > 0");
  return stored > target ? (stored - target) / horizon : 0.0;
}

inline Policy max_harvest_policy(const ChargeCircuit& circuit) {
  return [circuit](const EpochContext& ctx) {
    const auto& sc = *ctx.scenario;
    const double l = sc.epoch_length(ctx.epoch);
    if (ctx.last_epoch()) return ctx.stored / l;
    return shed_power(ctx.stored, optimal_residual(sc.packets[ctx.epoch].length, circuit), l);
  };
}

/// Schedule of the maximal-harvesting strategy, computed on the feedback
/// trace.
inline TransmissionSchedule max_harvest_schedule(const EnergyScenario& scenario, const ChargeCircuit& circuit) {
  return replay(max_harvest_policy(circuit), scenario, circuit).schedule;
}

/// Tight-string schedule for the classic tunnel built from fixed per-packet
/// amounts on the scenario's arrival grid.
inline TransmissionSchedule tight_string_schedule(const EnergyScenario& scenario, const std::vector<double>& amounts,
                                                  const ChargeCircuit& circuit) {
  return tight_string_schedule(classic_tunnel(scenario, amounts, circuit));
}

struct PacketPrediction {
  double predicted_length = 0.0;
  double predicted_arrival = 0.0;
};

/// Cold-start values used before any packet (or any inter-arrival gap) has
/// been observed.
struct PredictorPriors {
  double mean_length = 0.0;
  double mean_gap = 1.0;
};

/// Running-mean predictor: mean of past lengths, mean of past inter-arrival
/// gaps (counting the one from t = 0) added to `now`.
inline PacketPrediction predict_next(std::span<const EnergyPacket> history, double now,
                                     const PredictorPriors& priors) {
  PacketPrediction p{priors.mean_length, now + priors.mean_gap};
  if (!history.empty()) {
    double sum = 0.0;
    for (const auto& h : history) sum += h.length;
    p.predicted_length = sum / static_cast<double>(history.size());
  }
  // The first epoch starts at t = 0, so k packets close k gaps.
  if (!history.empty()) p.predicted_arrival = now + history.back().arrival / static_cast<double>(history.size());
  return p;
}

/// Power for the current epoch given a prediction of the next packet.
inline double online_step(double stored, const PacketPrediction& prediction, double now,
                          const ChargeCircuit& circuit) {
  if (!(prediction.predicted_arrival > now)) {
    throw domain_error("online_step: predicted arrival must be after now");
  }
  const double target = optimal_residual(prediction.predicted_length, circuit);
  return shed_power(stored, target, prediction.predicted_arrival - now);
}

/// Online policy: re-plans once per arrival. It knows the deadline and that
/// the session ends after the last packet, so the final epoch drains.
inline Policy online_policy(const ChargeCircuit& circuit, PredictorPriors priors) {
  return [circuit, priors](const EpochContext& ctx) {
    const auto& sc = *ctx.scenario;
    if (ctx.last_epoch()) return ctx.stored / sc.epoch_length(ctx.epoch);
    const auto pred = predict_next(ctx.history, ctx.now, priors);
    if (pred.predicted_arrival >= sc.deadline) return ctx.stored / (sc.deadline - ctx.now);
    return online_step(ctx.stored, pred, ctx.now, circuit);
  };
}

}  // namespace rfeh
