#pragma once

// Simultaneous solution of the stationarity system in residual coordinates.
//
// With the residuals x_k = E_r(k+1) as unknowns every power is explicit,
//
//   p_0 = (e_0 - x_0) / l_0,   p_k = (x_{k-1} + E_h(x_{k-1}) - x_k) / l_k,
//
// and p_N drains down to the terminal target. Each p_k is concave in x and
// the rate is concave and non-decreasing, so the throughput is a concave
// function of x on a convex set: the KKT point is unique and it is the
// optimum. Its gradient vanishes exactly where
//   (1 + g p_{k+1}) = (1 + g p_k)(1 + X_k),
// i.e. the same relation the forward recursion shoots on. Shooting from
// E_r(1) amplifies errors by roughly (1 + l p |dX/dE|) per arrival, which
// exhausts double precision on long horizons with long packets; solving for
// all residuals at once does not.
//
// Phase 1 is a log-barrier Newton method (tridiagonal Hessian, sparse
// factorisation so long horizons stay linear in N); phase 2
// fixes the epochs whose power hit zero and solves the exact KKT system
// with multipliers for them.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "rfeh/charge_model.hpp"
#include "rfeh/scenario.hpp"

namespace rfeh::detail {

struct ResidualPoint {
  std::vector<double> powers;     // N + 1
  std::vector<double> stored;     // x_k + E_h(x_k), N
  std::vector<double> harvested;  // N
  std::vector<double> x_sens;     // X_k
  std::vector<double> x_curv;     // dX_k / dx_k
  double terminal = 0.0;
};

class ResidualProblem {
 public:
  ResidualProblem(const EnergyScenario& sc, const ChargeCircuit& c, const RateModel& rate, double reserve)
      : sc_(sc), c_(c), rate_(rate), reserve_(reserve), n_(sc.packet_count()) {
    for (std::size_t k = 0; k <= n_; ++k) lengths_.push_back(sc.epoch_length(k));
  }

  std::size_t size() const { return n_; }
  double length(std::size_t k) const { return lengths_[k]; }

  // Strictly inside the domain: every residual in (0, e_max) before a packet.
  bool interior(const Eigen::VectorXd& x) const {
    for (std::size_t k = 0; k < n_; ++k) {
      if (!(x[k] > 0.0) || !(x[k] < c_.e_max())) return false;
    }
    return true;
  }

  ResidualPoint eval(const Eigen::VectorXd& x) const {
    ResidualPoint pt;
    pt.powers.resize(n_ + 1);
    double prev = sc_.initial_energy;
    for (std::size_t k = 0; k < n_; ++k) {
      const double te = sc_.packets[k].length;
      pt.powers[k] = (prev - x[k]) / lengths_[k];
      pt.harvested.push_back(harvested_energy(x[k], te, c_));
      pt.x_sens.push_back(harvest_sensitivity(x[k], te, c_));
      pt.x_curv.push_back(harvest_curvature(x[k], te, c_));
      prev = x[k] + pt.harvested.back();
      pt.stored.push_back(prev);
    }
    pt.powers[n_] = (prev - reserve_) / lengths_[n_];
    pt.terminal = prev - pt.powers[n_] * lengths_[n_];
    return pt;
  }

  // Gradient and tridiagonal Hessian (diagonal, superdiagonal) of
  // sum_k [l_k r(p_k) + a_k(p_k)], where the extra term contributes slope
  // da[k] and curvature db[k] (barrier or multiplier).
  void derivatives(const ResidualPoint& pt, const std::vector<double>& da, const std::vector<double>& db,
                   Eigen::VectorXd& grad, Eigen::VectorXd& diag, Eigen::VectorXd& off) const {
    std::vector<double> u1(n_ + 1), u2(n_ + 1);
    for (std::size_t k = 0; k <= n_; ++k) {
      u1[k] = lengths_[k] * rate_.rate_slope(pt.powers[k]) + da[k];
      u2[k] = lengths_[k] * rate_.rate_curvature(pt.powers[k]) + db[k];
    }
    const auto nx = static_cast<Eigen::Index>(n_);
    grad.setZero(nx);
    diag.setZero(nx);
    off.setZero(std::max<Eigen::Index>(nx - 1, 0));
    for (std::size_t k = 0; k < n_; ++k) {
      const double l0 = lengths_[k];
      const double l1 = lengths_[k + 1];
      const double m = 1.0 + pt.x_sens[k];
      const auto i = static_cast<Eigen::Index>(k);
      grad[i] = -u1[k] / l0 + u1[k + 1] * m / l1;
      diag[i] = u2[k] / (l0 * l0) + u2[k + 1] * m * m / (l1 * l1) + u1[k + 1] * pt.x_curv[k] / l1;
      if (k + 1 < n_) off[i] = -u2[k + 1] * m / (l1 * l1);
    }
  }

  // Nonzeros of d p_j / d x as (index, value) pairs.
  std::vector<std::pair<Eigen::Index, double>> power_gradient(const ResidualPoint& pt, std::size_t j) const {
    std::vector<std::pair<Eigen::Index, double>> g;
    if (j > 0) g.emplace_back(static_cast<Eigen::Index>(j - 1), (1.0 + pt.x_sens[j - 1]) / lengths_[j]);
    if (j < n_) g.emplace_back(static_cast<Eigen::Index>(j), -1.0 / lengths_[j]);
    return g;
  }

  double objective(const ResidualPoint& pt) const {
    double f = 0.0;
    for (std::size_t k = 0; k <= n_; ++k) f += lengths_[k] * rate_.rate(pt.powers[k]);
    return f;
  }

  const EnergyScenario& scenario() const { return sc_; }
  const ChargeCircuit& circuit() const { return c_; }
  const RateModel& rate() const { return rate_; }
  double reserve() const { return reserve_; }

 private:
  const EnergyScenario& sc_;
  const ChargeCircuit& c_;
  RateModel rate_;
  double reserve_;
  std::size_t n_;
  std::vector<double> lengths_;
};

struct ResidualSolution {
  Eigen::VectorXd x;
  ResidualPoint point;
  std::vector<bool> active;  // power fixed at zero
};

// Feasible start: spend at most half the stored energy per epoch.
inline std::optional<Eigen::VectorXd> residual_start(const ResidualProblem& pb) {
  const auto& sc = pb.scenario();
  const std::size_t n = pb.size();
  double budget = sc.initial_energy;
  for (const auto& p : sc.packets) {
    budget += harvested_energy(optimal_residual(p.length, pb.circuit()), p.length, pb.circuit());
  }
  const double pbar = 0.5 * budget / sc.deadline;
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  double stored = sc.initial_energy;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = std::min(pbar, 0.5 * stored / pb.length(k));
    x[static_cast<Eigen::Index>(k)] = stored - p * pb.length(k);
    if (!(x[static_cast<Eigen::Index>(k)] > 0.0)) return std::nullopt;
    stored = x[static_cast<Eigen::Index>(k)] +
             harvested_energy(x[static_cast<Eigen::Index>(k)], sc.packets[k].length, pb.circuit());
  }
  if (!(stored > pb.reserve())) return std::nullopt;
  return x;
}

inline double barrier_value(const ResidualProblem& pb, const ResidualPoint& pt, const Eigen::VectorXd& x,
                            double mu) {
  double f = pb.objective(pt);
  for (double p : pt.powers) f += mu * std::log(p);
  for (Eigen::Index i = 0; i < x.size(); ++i) f += mu * std::log(x[i]);
  return f;
}

inline bool barrier_feasible(const ResidualProblem& pb, const Eigen::VectorXd& x) {
  if (!pb.interior(x)) return false;
  const auto pt = pb.eval(x);
  return std::all_of(pt.powers.begin(), pt.powers.end(), [](double p) { return p > 0.0; });
}

// Newton iterations at fixed mu. `floor` is the Newton decrement below which
// rounding in the objective makes further steps meaningless.
inline void barrier_phase(const ResidualProblem& pb, Eigen::VectorXd& x, double mu, double floor) {
  const std::size_t n = pb.size();
  for (int it = 0; it < 100; ++it) {
    const auto pt = pb.eval(x);
    std::vector<double> da(n + 1), db(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      da[k] = mu / pt.powers[k];
      db[k] = -mu / (pt.powers[k] * pt.powers[k]);
    }
    Eigen::VectorXd grad, diag, off;
    pb.derivatives(pt, da, db, grad, diag, off);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t k = 0; k < n; ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      grad[i] += mu / x[i];
      trip.emplace_back(i, i, -(diag[i] - mu / (x[i] * x[i])));
      if (k + 1 < n) {
        trip.emplace_back(i, i + 1, -off[i]);
        trip.emplace_back(i + 1, i, -off[i]);
      }
    }
    Eigen::SparseMatrix<double> neg(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    neg.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(neg);
    if (ldlt.info() != Eigen::Success) return;
    const Eigen::VectorXd dx = ldlt.solve(grad);
    const double decrement = grad.dot(dx);
    if (!std::isfinite(decrement) || decrement <= std::max(1e-3 * mu, floor)) return;
    const double f0 = barrier_value(pb, pt, x, mu);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const Eigen::VectorXd trial = x + t * dx;
      if (!barrier_feasible(pb, trial)) continue;
      if (barrier_value(pb, pb.eval(trial), trial, mu) >= f0 + 1e-4 * t * decrement) {
        x = trial;
        moved = true;
        break;
      }
    }
    if (!moved) return;
  }
}

// Newton on the exact KKT system with p_j = 0 enforced for active j.
inline bool polish_active(const ResidualProblem& pb, Eigen::VectorXd& x, const std::vector<bool>& active,
                          std::vector<double>& multipliers) {
  const std::size_t n = pb.size();
  std::vector<std::size_t> act;
  for (std::size_t j = 0; j <= n; ++j) {
    if (active[j]) act.push_back(j);
  }
  const auto na = static_cast<Eigen::Index>(act.size());
  const auto nx = static_cast<Eigen::Index>(n);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(na);
  for (Eigen::Index a = 0; a < na; ++a) nu[a] = multipliers[act[static_cast<std::size_t>(a)]];
  double last = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 60; ++it) {
    if (!pb.interior(x)) return false;
    const auto pt = pb.eval(x);
    std::vector<double> da(n + 1, 0.0), db(n + 1, 0.0);
    for (Eigen::Index a = 0; a < na; ++a) da[act[static_cast<std::size_t>(a)]] = nu[a];
    Eigen::VectorXd grad, diag, off;
    pb.derivatives(pt, da, db, grad, diag, off);
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index i = 0; i < nx; ++i) {
      trip.emplace_back(i, i, diag[i]);
      if (i + 1 < nx) {
        trip.emplace_back(i, i + 1, off[i]);
        trip.emplace_back(i + 1, i, off[i]);
      }
    }
    Eigen::VectorXd rhs(nx + na);
    rhs.head(nx) = -grad;
    for (Eigen::Index a = 0; a < na; ++a) {
      const std::size_t j = act[static_cast<std::size_t>(a)];
      for (const auto& [i, v] : pb.power_gradient(pt, j)) {
        trip.emplace_back(i, nx + a, v);
        trip.emplace_back(nx + a, i, v);
      }
      rhs[nx + a] = -pt.powers[j];
    }
    Eigen::SparseMatrix<double> kkt(nx + na, nx + na);
    kkt.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(kkt);
    lu.factorize(kkt);
    if (lu.info() != Eigen::Success) return false;
    const Eigen::VectorXd step = lu.solve(rhs);
    if (!step.allFinite()) return false;
    x += step.head(nx);
    nu += step.tail(na);
    const double size = step.head(nx).cwiseAbs().maxCoeff() / pb.circuit().e_max();
    if (size <= 1e-16 || (size >= last && size <= 1e-12)) break;
    last = size;
  }
  for (Eigen::Index a = 0; a < na; ++a) multipliers[act[static_cast<std::size_t>(a)]] = nu[a];
  return pb.interior(x);
}

/// Optimal residuals by the simultaneous method, or nullopt when no
/// strictly feasible start exists.
inline std::optional<ResidualSolution> residual_newton(const EnergyScenario& scenario, const ChargeCircuit& circuit,
                                                       const RateModel& rate, double reserve) {
  const std::size_t n = scenario.packet_count();
  if (n == 0) return std::nullopt;
  const ResidualProblem pb(scenario, circuit, rate, reserve);
  auto start = residual_start(pb);
  if (!start) return std::nullopt;
  Eigen::VectorXd x = *start;

  double scale = 0.0;
  for (std::size_t k = 0; k <= n; ++k) scale += pb.length(k);
  scale *= rate.factor;
  const double mu_end = 1e-11 * scale;
  for (double mu = 1e-2 * scale; mu >= 0.99 * mu_end; mu *= 0.1) barrier_phase(pb, x, mu, 1e-14 * scale);

  // Barrier-dominated epochs are the ones pinned at zero power.
  auto pt = pb.eval(x);
  std::vector<bool> active(n + 1, false);
  std::vector<double> nu(n + 1, 0.0);
  for (std::size_t k = 0; k <= n; ++k) {
    const double barrier = mu_end / pt.powers[k];
    if (barrier > 1e-2 * pb.length(k) * rate.rate_slope(pt.powers[k])) {
      active[k] = true;
      nu[k] = barrier;
    }
  }
  const Eigen::VectorXd barrier_x = x;
  for (std::size_t round = 0; round <= n + 1; ++round) {
    x = barrier_x;
    if (!polish_active(pb, x, active, nu)) return std::nullopt;
    pt = pb.eval(x);
    bool changed = false;
    for (std::size_t k = 0; k <= n; ++k) {
      if (active[k] && nu[k] < 0.0) {
        active[k] = false;
        nu[k] = 0.0;
        changed = true;
      } else if (!active[k] && pt.powers[k] < 0.0) {
        active[k] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  for (std::size_t k = 0; k <= n; ++k) {
    if (active[k]) pt.powers[k] = 0.0;
  }
  return ResidualSolution{x, pt, active};
}

}  // namespace rfeh::detail
