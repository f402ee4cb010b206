#pragma once

// Classic fixed-tunnel scheduling: the taut string through the energy tunnel.
//
// In the classic model every packet delivers a fixed amount e_i regardless of
// what is stored, so cumulative consumption D(t) must stay below the energy
// that has arrived (causality) and above arrivals minus the battery size
// (no overflow). Both bounds are step functions that only change at arrival
// instants, so it is enough to constrain D at each arrival t_i:
//
//   L_i = e_0 + sum_{j<=i} e_j - cap  <=  D(t_i)  <=  U_i = e_0 + sum_{j<i} e_j
//
// The shortest path from (0, 0) to (deadline, total) through these vertical
// windows maximises any concave rate and is found by string pulling.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "rfeh/errors.hpp"
#include "rfeh/scenario.hpp"

namespace rfeh {

/// Fraction of e_max treated as "full" in the classic model; the charge
/// curve never actually reaches e_max.
inline constexpr double kClassicFullFraction = 0.99;

struct ClassicTunnel {
  std::vector<double> arrivals;  // t_1 .. t_N
  std::vector<double> upper;     // U_i, cumulative energy available before packet i lands
  std::vector<double> lower;     // L_i, least cumulative consumption that avoids overflow at t_i
  double deadline = 0.0;
  double total = 0.0;            // e_0 + sum e_i, the end point of the string
};

/// Build the tunnel for initial energy e_0, packet amounts e_i arriving at
/// `arrivals`, and a battery of `capacity` joules (already capped).
inline ClassicTunnel make_classic_tunnel(double initial_energy, const std::vector<double>& arrivals,
                                         const std::vector<double>& amounts, double deadline, double capacity) {
  if (arrivals.size() != amounts.size()) throw domain_error("classic tunnel: arrivals/amounts size mismatch");
  if (!(capacity > 0.0)) throw domain_error("classic tunnel: capacity must be > 0");
  if (initial_energy > capacity) throw domain_error("classic tunnel: initial energy exceeds capacity");
  ClassicTunnel t;
  t.arrivals = arrivals;
  t.deadline = deadline;
  double cum = initial_energy;
  double prev = 0.0;
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    if (!(arrivals[i] > prev)) throw domain_error("classic tunnel: arrivals must increase from 0");
    if (!(amounts[i] >= 0.0)) throw domain_error("classic tunnel: negative packet energy");
    prev = arrivals[i];
    t.upper.push_back(cum);
    cum += amounts[i];
    t.lower.push_back(std::max(0.0, cum - capacity));
  }
  if (!(deadline > prev)) throw domain_error("classic tunnel: deadline must follow the last arrival");
  t.total = cum;
  return t;
}

inline ClassicTunnel classic_tunnel(const EnergyScenario& scenario, const std::vector<double>& amounts,
                                    const ChargeCircuit& circuit, double full_fraction = kClassicFullFraction) {
  std::vector<double> arrivals;
  for (const auto& p : scenario.packets) arrivals.push_back(p.arrival);
  return make_classic_tunnel(scenario.initial_energy, arrivals, amounts, scenario.deadline,
                             full_fraction * circuit.e_max());
}

/// Vertices of the taut string (including both end points).
struct StringPath {
  std::vector<double> t;
  std::vector<double> d;
};

inline StringPath taut_string(const ClassicTunnel& tunnel) {
  const std::size_t n = tunnel.arrivals.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (tunnel.lower[i] > tunnel.upper[i]) {
      throw domain_error("tight_string: empty tunnel at arrival " + std::to_string(i + 1));
    }
  }
  if (n > 0 ? !(tunnel.deadline > tunnel.arrivals.back()) : !(tunnel.deadline > 0.0)) {
    throw domain_error("tight_string: deadline precedes the tunnel");
  }
  // Gate k < n is the window at arrival k; gate n is the end point.
  auto gx = [&](std::size_t k) { return k < n ? tunnel.arrivals[k] : tunnel.deadline; };
  auto glo = [&](std::size_t k) { return k < n ? tunnel.lower[k] : tunnel.total; };
  auto ghi = [&](std::size_t k) { return k < n ? tunnel.upper[k] : tunnel.total; };

  StringPath path;
  path.t.push_back(0.0);
  path.d.push_back(0.0);
  std::size_t start = 0;
  double ax = 0.0;
  double ay = 0.0;
  while (start <= n) {
    double smin = -std::numeric_limits<double>::infinity();
    double smax = std::numeric_limits<double>::infinity();
    std::size_t kmin = start;
    std::size_t kmax = start;
    bool bent = false;
    for (std::size_t k = start; k <= n; ++k) {
      const double dx = gx(k) - ax;
      const double lo = (glo(k) - ay) / dx;
      const double hi = (ghi(k) - ay) / dx;
      if (lo > smax) {
        // Window lies above the funnel: the string wraps the upper bound at kmax.
        ax = gx(kmax);
        ay = ghi(kmax);
        start = kmax + 1;
        bent = true;
        break;
      }
      if (hi < smin) {
        // Window lies below: wrap the lower bound at kmin.
        ax = gx(kmin);
        ay = glo(kmin);
        start = kmin + 1;
        bent = true;
        break;
      }
      if (lo >= smin) {
        smin = lo;
        kmin = k;
      }
      if (hi < smax) {
        smax = hi;
        kmax = k;
      }
    }
    if (!bent) {
      path.t.push_back(tunnel.deadline);
      path.d.push_back(tunnel.total);
      break;
    }
    path.t.push_back(ax);
    path.d.push_back(ay);
  }
  return path;
}

/// Per-epoch powers of the taut string; epochs are delimited by the tunnel's
/// arrivals and deadline.
inline TransmissionSchedule tight_string_schedule(const ClassicTunnel& tunnel) {
  const StringPath path = taut_string(tunnel);
  TransmissionSchedule s;
  s.epoch_bounds.push_back(0.0);
  for (double a : tunnel.arrivals) s.epoch_bounds.push_back(a);
  s.epoch_bounds.push_back(tunnel.deadline);
  std::size_t seg = 0;
  for (std::size_t k = 0; k + 1 < s.epoch_bounds.size(); ++k) {
    const double mid = 0.5 * (s.epoch_bounds[k] + s.epoch_bounds[k + 1]);
    while (seg + 2 < path.t.size() && path.t[seg + 1] <= mid) ++seg;
    const double slope = (path.d[seg + 1] - path.d[seg]) / (path.t[seg + 1] - path.t[seg]);
    s.powers.push_back(std::max(0.0, slope));
  }
  return s;
}

/// Cumulative consumption D(t_k) at each epoch bound for a schedule.
inline std::vector<double> cumulative_consumption(const TransmissionSchedule& s) {
  std::vector<double> d{0.0};
  for (std::size_t k = 0; k < s.epoch_count(); ++k) d.push_back(d.back() + s.powers[k] * s.epoch_length(k));
  return d;
}

}  // namespace rfeh
