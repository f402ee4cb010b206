#pragma once

// Nonlinear charge physics of an ideal RC harvesting circuit.
//
// A capacitor charged through R towards the open-circuit voltage v_max for
// packet_length seconds gains
//
//   E_h(E_r, T) = a1*a2^2 + a1*a3*sqrt(E_r) + a1*a4*E_r
//
// joules, where E_r is the energy already stored. E_h is concave in E_r and
// vanishes at E_r = e_max, so the stored energy feeds back into how much a
// packet can deliver.

#include <cmath>
#include <string>

#include "rfeh/errors.hpp"

namespace rfeh {

class ChargeCircuit {
 public:
  ChargeCircuit(double resistance, double capacitance, double v_max)
      : resistance_(resistance), capacitance_(capacitance), v_max_(v_max) {
    if (!(resistance > 0.0) || !(capacitance > 0.0) || !(v_max > 0.0) ||
        !std::isfinite(resistance) || !std::isfinite(capacitance) || !std::isfinite(v_max)) {
      throw domain_error("ChargeCircuit: R, C and v_max must be positive and finite");
    }
  }

  double resistance() const { return resistance_; }
  double capacitance() const { return capacitance_; }
  double v_max() const { return v_max_; }
  /// RC time constant in seconds.
  double tau() const { return resistance_ * capacitance_; }
  /// Energy stored at v_max, in joules.
  double e_max() const { return 0.5 * capacitance_ * v_max_ * v_max_; }

  bool operator==(const ChargeCircuit&) const = default;

 private:
  double resistance_;
  double capacitance_;
  double v_max_;
};

struct HarvestCoefficients {
  double a1 = 0.5;
  double a2 = 0.0;
  double a3 = 0.0;
  double a4 = 0.0;
};

namespace detail {

inline void require_packet_length(double packet_length, const char* who) {
  if (!(packet_length >= 0.0)) {
    throw domain_error(std::string(who) + ": packet length must be >= 0");
  }
}

inline void require_residual(double residual, const ChargeCircuit& circuit, const char* who) {
  if (!(residual >= 0.0) || residual > circuit.e_max()) {
    throw domain_error(std::string(who) + ": residual energy outside [0, e_max]");
  }
}

// 1 - exp(-T/tau), accurate for short packets.
inline double charge_fraction(double packet_length, const ChargeCircuit& circuit) {
  return -std::expm1(-packet_length / circuit.tau());
}

}  // namespace detail

inline HarvestCoefficients harvest_coefficients(double packet_length, const ChargeCircuit& circuit) {
  detail::require_packet_length(packet_length, "harvest_coefficients");
  const double x = packet_length / circuit.tau();
  HarvestCoefficients c;
  c.a1 = 0.5 * std::exp(-2.0 * x);
  c.a2 = std::sqrt(2.0 * circuit.e_max()) * std::expm1(x);
  c.a3 = std::pow(2.0, 1.5) * c.a2;
  c.a4 = -2.0 * std::expm1(2.0 * x);
  return c;
}

/// Energy stored from one packet of `packet_length` seconds when the
/// capacitor already holds `residual` joules.
inline double harvested_energy(double residual, double packet_length, const ChargeCircuit& circuit) {
  detail::require_residual(residual, circuit, "harvested_energy");
  detail::require_packet_length(packet_length, "harvested_energy");
  // Factored form of the coefficient polynomial; exact zero at e_max and no
  // cancellation for short packets.
  const double q = detail::charge_fraction(packet_length, circuit);
  const double y = 1.0 - q;
  const double se = std::sqrt(circuit.e_max());
  const double sr = std::sqrt(residual);
  return q * (se - sr) * (se * q + (1.0 + y) * sr);
}

/// Residual energy that maximises the harvest of a packet of the given length.
inline double optimal_residual(double packet_length, const ChargeCircuit& circuit) {
  detail::require_packet_length(packet_length, "optimal_residual");
  const double g = 1.0 + std::exp(packet_length / circuit.tau());
  return circuit.e_max() / (g * g);
}

/// dE_h/dE_r. Singular at an empty capacitor, so residual must be > 0.
inline double harvest_sensitivity(double residual, double packet_length, const ChargeCircuit& circuit) {
  if (!(residual > 0.0)) {
    throw domain_error("harvest_sensitivity: residual must be > 0");
  }
  detail::require_residual(residual, circuit, "harvest_sensitivity");
  detail::require_packet_length(packet_length, "harvest_sensitivity");
  const double q = detail::charge_fraction(packet_length, circuit);
  const double y = 1.0 - q;
  return q * (y * std::sqrt(circuit.e_max() / residual) - (1.0 + y));
}

/// d^2 E_h / dE_r^2, the slope of harvest_sensitivity. Always negative.
inline double harvest_curvature(double residual, double packet_length, const ChargeCircuit& circuit) {
  if (!(residual > 0.0)) {
    throw domain_error("harvest_curvature: residual must be > 0");
  }
  const double q = detail::charge_fraction(packet_length, circuit);
  return -0.5 * q * (1.0 - q) * std::sqrt(circuit.e_max()) / (residual * std::sqrt(residual));
}

/// Longest packet packet_length_for will report, in time constants.
inline constexpr double kMaxPacketTaus = 50.0;

/// Charging time needed to add `harvested` joules on top of `residual_before`.
inline double packet_length_for(double residual_before, double harvested, const ChargeCircuit& circuit) {
  if (!(residual_before >= 0.0) || !(harvested >= 0.0)) {
    throw domain_error("packet_length_for: energies must be >= 0");
  }
  const double target = residual_before + harvested;
  if (target >= circuit.e_max()) {
    throw infeasible_error("packet_length_for: cannot charge to e_max in finite time");
  }
  if (harvested == 0.0) {
    return 0.0;
  }
  const double s0 = std::sqrt(residual_before);
  const double s1 = std::sqrt(target);
  const double headroom = std::sqrt(circuit.e_max()) - s1;
  // ln((sqrt(e_max) - s0) / (sqrt(e_max) - s1)) with s1 - s0 = h / (s0 + s1)
  const double length = circuit.tau() * std::log1p(harvested / ((s0 + s1) * headroom));
  if (!(length <= kMaxPacketTaus * circuit.tau())) {
    throw infeasible_error("packet_length_for: required packet exceeds 50 time constants");
  }
  return length;
}

}  // namespace rfeh
