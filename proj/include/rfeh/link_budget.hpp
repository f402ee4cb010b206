#pragma once

// AWGN link budget with free-space path loss.

#include <cmath>

#include "rfeh/errors.hpp"
#include "rfeh/scenario.hpp"

namespace rfeh {

inline constexpr double kMetersPerFoot = 0.3048;

struct ChannelLink {
  double frequency = 2.4e9;            // Hz
  double distance = 10.0 * kMetersPerFoot;  // m
  double bandwidth = 10e6;             // Hz
  double noise_density = -174.0;       // dBm/Hz

  bool operator==(const ChannelLink&) const = default;
};

struct LinkBudget {
  double path_loss_db = 0.0;
  double noise_floor_dbm = 0.0;
};

inline LinkBudget link_budget(const ChannelLink& link) {
  if (!(link.frequency > 0.0) || !(link.distance > 0.0) || !(link.bandwidth > 0.0)) {
    throw domain_error("link_budget: frequency, distance and bandwidth must be > 0");
  }
  return {20.0 * std::log10(link.distance) + 20.0 * std::log10(link.frequency) - 147.55,
          link.noise_density + 10.0 * std::log10(link.bandwidth)};
}

/// Spectral efficiency (bits/s/Hz) at a transmit power given in dBm.
inline double rate(double power_dbm, const ChannelLink& link) {
  const LinkBudget b = link_budget(link);
  const double snr_db = power_dbm - b.path_loss_db - b.noise_floor_dbm;
  return std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

/// Linear SNR produced by one watt of transmit power.
inline double snr_per_watt(const ChannelLink& link) {
  const LinkBudget b = link_budget(link);
  return std::pow(10.0, (30.0 - b.path_loss_db - b.noise_floor_dbm) / 10.0);
}

/// RateModel for the link: log2(1 + snr_per_watt * p) bits/s/Hz.
inline RateModel link_rate_model(const ChannelLink& link) { return {snr_per_watt(link), 1.0}; }

inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

}  // namespace rfeh
