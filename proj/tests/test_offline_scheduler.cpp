#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "rfeh/link_budget.hpp"
#include "rfeh/offline_scheduler.hpp"
#include "rfeh/oracle.hpp"

using namespace rfeh;
using test::fig4_circuit;

TEST(Throughput, Examples) {
  const std::vector<double> zero{0.0, 0.0}, lz{1.0, 2.0};
  EXPECT_EQ(throughput(zero, lz), 0.0);
  EXPECT_DOUBLE_EQ(throughput(std::vector<double>{1.0}, std::vector<double>{10.0}), 5.0);
  EXPECT_DOUBLE_EQ(throughput(std::vector<double>{3.0}, std::vector<double>{4.0}), 4.0);
  EXPECT_THROW(throughput(std::vector<double>{-0.1}, std::vector<double>{1.0}), domain_error);
}

TEST(Propagate, SingleEpoch) {
  const ChargeCircuit c = fig4_circuit();
  const EnergyScenario sc{1.0, {}, 10.0};
  const auto p = propagate(0.0, sc, c);
  ASSERT_EQ(p.schedule.powers.size(), 1u);
  EXPECT_DOUBLE_EQ(p.schedule.powers[0], 0.1);
  for (double r : {0.0, 0.25, 0.7}) EXPECT_NEAR(terminal_residual(r, sc, c), r, 1e-15);
  EXPECT_DOUBLE_EQ(terminal_residual(1.0, sc, c), 1.0);
}

TEST(Propagate, PowerHeldAtArgmax) {
  // Landing exactly on the maximal-harvest residual gives X = 0, so the
  // power carries over unchanged.
  const ChargeCircuit c = fig4_circuit();
  const EnergyScenario sc{1.0, {{10.0, 15.0}}, 20.0};
  const double r = optimal_residual(15.0, c);
  const auto p = propagate(r, sc, c);
  EXPECT_NEAR(p.schedule.powers[1], p.schedule.powers[0], 1e-12);
}

TEST(Propagate, RecursionStep) {
  // p_1 = 1 and X_1 = harvest_sensitivity(0.1 e_max, 15 s) = 0.0319 -> p_2 = 1.0638.
  const ChargeCircuit c = fig4_circuit();
  const double r = 0.1 * c.e_max();
  const EnergyScenario sc{r + 10.0, {{10.0, 15.0}}, 20.0};
  const auto p = propagate(r, sc, c);
  EXPECT_DOUBLE_EQ(p.schedule.powers[0], 1.0);
  EXPECT_NEAR(p.schedule.powers[1], 1.0638, 1e-4);
  EXPECT_NEAR(p.schedule.powers[1], 2.0 * (1.0 + harvest_sensitivity(r, 15.0, c)) - 1.0, 1e-14);
}

TEST(Propagate, DepletionIsFlaggedNotThrown) {
  const ChargeCircuit c = fig4_circuit();
  const auto sc = test::two_packet_scenario();
  const auto p = propagate(1e-14, sc, c);
  EXPECT_TRUE(p.infeasible_from.has_value() || p.terminal_residual < 0.0);
  EXPECT_EQ(terminal_residual(-1.0, sc, c), -std::numeric_limits<double>::infinity());
}

TEST(Candidates, TwoPacketSignChangeBracketsOracle) {
  const ChargeCircuit c = fig4_circuit();
  const auto sc = test::two_packet_scenario();
  std::vector<double> grid, j;
  for (int i = 1; i <= 1000; ++i) {
    grid.push_back(sc.initial_energy * i / 1000.0);
    j.push_back(terminal_residual(grid.back(), sc, c));
  }
  const auto orc = brute_force_optimize(sc, c);
  bool bracketed = false;
  int changes = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if ((j[i - 1] < 0.0) != (j[i] < 0.0)) {
      ++changes;
      // Grid step of the oracle bounds how far its optimum can sit from the root.
      const double slack = orc.grid_step * sc.epoch_length(0);
      if (orc.first_residual >= grid[i - 1] - slack && orc.first_residual <= grid[i] + slack) bracketed = true;
    }
  }
  EXPECT_GE(changes, 1);
  EXPECT_TRUE(bracketed);

  const auto roots = find_candidates(sc, c, 1e-10);
  ASSERT_FALSE(roots.empty());
  for (double r : roots) EXPECT_LE(std::abs(terminal_residual(r, sc, c)), 1e-10);
}

TEST(Candidates, NoPacketsHasNoInteriorRoot) {
  // J(r) = r on (0, e_0]; the single root sits at 0, which solve() handles
  // through the boundary candidate.
  const EnergyScenario sc{1.0, {}, 10.0};
  EXPECT_TRUE(find_candidates(sc, fig4_circuit(), 1e-10).empty());
  EXPECT_THROW(find_candidates(sc, fig4_circuit(), 0.0), domain_error);
}

TEST(Feasibility, Examples) {
  const ChargeCircuit c = fig4_circuit();
  const auto sc = test::two_packet_scenario();
  TransmissionSchedule zero{{0.0, 0.0, 0.0}, sc.epoch_bounds()};
  EXPECT_TRUE(check_feasibility(zero, trace_schedule(zero, sc, c), c).ok);

  TransmissionSchedule greedy{{sc.initial_energy / 10.0 * 1.5, 0.0, 0.0}, sc.epoch_bounds()};
  const auto v = check_feasibility(greedy, trace_schedule(greedy, sc, c), c);
  EXPECT_FALSE(v.ok);
  EXPECT_EQ(v.violated, Constraint::causality);
  EXPECT_EQ(v.epoch, 1u);

  // Nearly full capacitor with no consumption overflows C2 on the first packet.
  const EnergyScenario full{c.e_max(), {{10.0, 5.0}}, 20.0};
  TransmissionSchedule idle{{0.0, 0.0}, full.epoch_bounds()};
  EXPECT_TRUE(check_feasibility(idle, trace_schedule(idle, full, c), c).ok);
}

TEST(Solve, SingleEpoch) {
  const EnergyScenario sc{1.0, {}, 10.0};
  const auto rep = solve(sc, fig4_circuit());
  ASSERT_EQ(rep.schedule.powers.size(), 1u);
  EXPECT_NEAR(rep.schedule.powers[0], 0.1, 1e-12);
  EXPECT_NEAR(rep.throughput, 5.0 * std::log2(1.1), 1e-12);
}

TEST(Solve, OnePacketMatchesOracle) {
  const ChargeCircuit c = fig4_circuit();
  const auto sc = test::one_packet_scenario();
  const auto rep = solve(sc, c);
  const auto orc = brute_force_optimize(sc, c);
  EXPECT_GE(rep.throughput, orc.throughput - orc.error_bound);
  EXPECT_LE(rep.throughput, orc.throughput + orc.error_bound);
}

TEST(Solve, ThreePacketsDominateOracle) {
  GridSpec grid;
  grid.resolution = 40;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto g = test::generated(3, 0.1, 7, s);
    const ChargeCircuit c = ExperimentConfig{}.circuit();
    const auto rep = solve(g.scenario, c);
    const auto orc = brute_force_optimize(g.scenario, c, grid);
    EXPECT_GE(rep.throughput, orc.throughput - orc.error_bound) << s;
  }
}

TEST(Solve, EmptyCapacitorIdlesUntilFirstPacket) {
  const ChargeCircuit c = fig4_circuit();
  const EnergyScenario sc{0.0, {{10.0, 50.0}, {20.0, 50.0}}, 30.0};
  const auto rep = solve(sc, c);
  EXPECT_EQ(rep.idle_prefix, 1u);
  EXPECT_EQ(rep.schedule.powers[0], 0.0);
  EXPECT_LE(test::kkt_report(rep, sc, c).terminal, 1e-10);
  const auto orc = brute_force_optimize(sc, c);
  EXPECT_GE(rep.throughput, orc.throughput - orc.error_bound);

  const EnergyScenario nothing{0.0, {{10.0, 0.0}}, 20.0};
  const auto none = solve(nothing, c);
  EXPECT_EQ(none.branch, CandidateBranch::idle);
  EXPECT_EQ(none.throughput, 0.0);
}

TEST(Solve, Deterministic) {
  const auto g = test::generated(30, 0.3, 3, 1);
  const ChargeCircuit c = ExperimentConfig{}.circuit();
  const auto a = solve(g.scenario, c);
  const auto b = solve(g.scenario, c);
  EXPECT_EQ(a.schedule.powers, b.schedule.powers);
  EXPECT_EQ(a.throughput, b.throughput);
}

TEST(Solve, InvalidScenarioRejected) {
  const ChargeCircuit c = fig4_circuit();
  EXPECT_THROW(solve({0.5, {{10.0, 1.0}, {10.0, 1.0}}, 30.0}, c), domain_error);
  EXPECT_THROW(solve({3.0, {}, 30.0}, c), domain_error);
}

// New Properties 1-2, stationarity, conservation and feasibility over
// random scenarios in both rate models.
class SolveProperties : public ::testing::TestWithParam<bool> {};

TEST_P(SolveProperties, KktStructure) {
  const bool link = GetParam();
  Rng meta(42, link ? 1 : 0);
  const ChargeCircuit c = ExperimentConfig{}.circuit();
  SolveOptions opt;
  if (link) opt.rate = link_rate_model({});
  for (int i = 0; i < 100; ++i) {
    const auto n = 1 + static_cast<std::size_t>(meta.uniform(0.0, 25.0));
    const double te = std::pow(10.0, meta.uniform(-3.0, 0.0));
    const auto g = test::generated(n, te, 42, static_cast<std::uint64_t>(i));
    const auto rep = solve(g.scenario, c, opt);
    const auto k = test::kkt_report(rep, g.scenario, c);
    SCOPED_TRACE("scenario " + std::to_string(i) + " branch " + to_string(rep.branch));
    EXPECT_LE(k.stationarity, 1e-12);
    EXPECT_GT(k.min_residual, 0.0);
    EXPECT_LE(k.terminal, 1e-10);
    EXPECT_GT(k.capacity_margin, 0.0);
    EXPECT_LE(k.conservation, 1e-12);
    EXPECT_TRUE(k.nonnegative);
    EXPECT_TRUE(check_feasibility(rep.schedule, rep.trace, c).ok);
    EXPECT_LE(rep.terminal_residual_error, opt.tolerance);
    EXPECT_NEAR(rep.throughput, throughput(rep.schedule, opt.rate), 1e-12 * std::max(1.0, rep.throughput));
  }
}

INSTANTIATE_TEST_SUITE_P(RateModels, SolveProperties, ::testing::Values(false, true),
                         [](const auto& info) { return info.param ? "link_budget" : "normalized"; });

TEST(Simultaneous, AgreesWithShooting) {
  // Where shooting converges, the residual-coordinate Newton solve lands on
  // the same optimum.
  const ChargeCircuit c = ExperimentConfig{}.circuit();
  int compared = 0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto g = test::generated(8, 0.003, 5, s);
    const auto rep = solve(g.scenario, c);
    if (rep.branch != CandidateBranch::interior) continue;
    const auto sol = detail::residual_newton(g.scenario, c, RateModel::normalized(), 0.0);
    ASSERT_TRUE(sol.has_value());
    const double tp = throughput(sol->point.powers, [&] {
      std::vector<double> l;
      for (std::size_t k = 0; k < g.scenario.epoch_count(); ++k) l.push_back(g.scenario.epoch_length(k));
      return l;
    }());
    EXPECT_NEAR(tp, rep.throughput, 1e-9 * rep.throughput) << s;
    for (std::size_t k = 0; k < rep.schedule.powers.size(); ++k) {
      EXPECT_NEAR(sol->point.powers[k], rep.schedule.powers[k], 1e-7 * (1.0 + rep.schedule.powers[k])) << s;
    }
    ++compared;
  }
  EXPECT_GT(compared, 10);
}

TEST(Simultaneous, RescuesLongHorizonLongPackets) {
  // Link-budget gain with packets of one time constant: shooting cannot
  // resolve J, the simultaneous solve must still meet every KKT condition.
  const ChargeCircuit c = ExperimentConfig{}.circuit();
  SolveOptions opt;
  opt.rate = link_rate_model({});
  const auto g = test::generated(200, 1.0, 1, 0);
  const auto rep = solve(g.scenario, c, opt);
  EXPECT_EQ(rep.branch, CandidateBranch::simultaneous);
  const auto k = test::kkt_report(rep, g.scenario, c);
  EXPECT_LE(k.stationarity, 1e-12);
  EXPECT_LE(k.terminal, 1e-10);
  EXPECT_GT(k.min_residual, 0.0);
}

TEST(Solve, TerminalReserveHonoured) {
  const ChargeCircuit c = fig4_circuit();
  SolveOptions opt;
  opt.terminal_reserve = 0.05;
  const auto sc = test::two_packet_scenario();
  const auto rep = solve(sc, c, opt);
  EXPECT_NEAR(rep.trace.epochs.back().residual, 0.05, 1e-10);
  EXPECT_LT(rep.throughput, solve(sc, c).throughput);
}
