#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "rfeh/oracle.hpp"

using namespace rfeh;
using test::fig4_circuit;

TEST(Oracle, SingleEpochDrains) {
  const EnergyScenario sc{1.0, {}, 10.0};
  const auto r = brute_force_optimize(sc, fig4_circuit());
  EXPECT_DOUBLE_EQ(r.schedule.powers[0], 0.1);
  EXPECT_DOUBLE_EQ(r.throughput, 5.0 * std::log2(1.1));
}

TEST(Oracle, NoEnergyNoThroughput) {
  const EnergyScenario sc{0.0, {{10.0, 0.0}}, 20.0};
  const auto r = brute_force_optimize(sc, fig4_circuit());
  EXPECT_EQ(r.throughput, 0.0);
  for (double p : r.schedule.powers) EXPECT_EQ(p, 0.0);
}

TEST(Oracle, Limits) {
  const ChargeCircuit c = fig4_circuit();
  const EnergyScenario four{0.5, {{1, 1}, {2, 1}, {3, 1}, {4, 1}}, 5.0};
  EXPECT_THROW(brute_force_optimize(four, c), domain_error);
  GridSpec tiny;
  tiny.evaluation_budget = 100;
  EXPECT_THROW(brute_force_optimize(test::two_packet_scenario(), c, tiny), resource_error);
  GridSpec coarse;
  coarse.resolution = 1;
  EXPECT_THROW(brute_force_optimize(test::two_packet_scenario(), c, coarse), domain_error);
}

TEST(Oracle, TwoPacketAgreesWithSolver) {
  const ChargeCircuit c = fig4_circuit();
  const auto sc = test::two_packet_scenario();
  const auto orc = brute_force_optimize(sc, c);
  const auto rep = solve(sc, c);
  EXPECT_LE(orc.throughput, rep.throughput + orc.error_bound);
  EXPECT_GE(rep.throughput, orc.throughput - orc.error_bound);
  // The oracle's first residual lies within one grid cell of a candidate root.
  const double cell = orc.grid_step * sc.epoch_length(0);
  bool near = false;
  for (double r : find_candidates(sc, c, 1e-10)) near = near || std::abs(r - orc.first_residual) <= cell;
  EXPECT_TRUE(near);
}

TEST(Oracle, WinnersRespectCapacity) {
  const ChargeCircuit c = ExperimentConfig{}.circuit();
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto g = test::generated(3, 0.3, 31, s);
    GridSpec grid;
    grid.resolution = 30;
    const auto orc = brute_force_optimize(g.scenario, c, grid);
    const auto tr = trace_schedule(orc.schedule, g.scenario, c);
    for (const auto& e : tr.epochs) {
      EXPECT_GE(e.residual, -1e-12);
      EXPECT_LT(e.residual + e.harvested, c.e_max());
    }
  }
}

TEST(Oracle, RefinementConverges) {
  const ChargeCircuit c = ExperimentConfig{}.circuit();
  for (std::size_t n = 1; n <= 3; ++n) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto g = test::generated(n, 0.1, 77, s);
      const double opt = solve(g.scenario, c).throughput;
      double prev_tp = -1.0, prev_gap = std::numeric_limits<double>::infinity();
      for (std::size_t res : {15u, 30u, 60u}) {
        GridSpec grid;
        grid.resolution = res;
        const auto orc = brute_force_optimize(g.scenario, c, grid);
        EXPECT_GE(orc.throughput, prev_tp) << n << " " << s << " " << res;
        const double gap = opt - orc.throughput;
        EXPECT_LE(gap, prev_gap + 1e-12) << n << " " << s << " " << res;
        EXPECT_GE(gap, -1e-12) << n << " " << s << " " << res;
        EXPECT_LE(gap, orc.error_bound) << n << " " << s << " " << res;
        prev_tp = orc.throughput;
        prev_gap = gap;
      }
    }
  }
}
