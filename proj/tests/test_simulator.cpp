#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "rfeh/link_budget.hpp"
#include "rfeh/simulator.hpp"

using namespace rfeh;
using test::fig4_circuit;

TEST(LinkBudget, SpotValues) {
  const ChannelLink link;
  EXPECT_DOUBLE_EQ(link.distance, 3.048);
  const auto b = link_budget(link);
  EXPECT_NEAR(b.path_loss_db, 49.73, 0.01);
  EXPECT_DOUBLE_EQ(b.noise_floor_dbm, -104.0);
  const auto unit = link_budget({1.0, 1.0, 10e6, -174.0});
  EXPECT_DOUBLE_EQ(unit.path_loss_db, -147.55);
}

TEST(LinkBudget, Rate) {
  const ChannelLink link;
  const auto b = link_budget(link);
  // Transmit power that lands exactly at 0 dB SNR.
  EXPECT_DOUBLE_EQ(rate(b.path_loss_db + b.noise_floor_dbm, link), 1.0);
  EXPECT_NEAR(rate(0.0, link), 18.03, 0.01);
  EXPECT_NEAR(rate(-400.0, link), 0.0, 1e-20);
  EXPECT_THROW(link_budget({2.4e9, 0.0, 10e6, -174.0}), domain_error);
  // The RateModel view agrees with the dB arithmetic.
  const RateModel m = link_rate_model(link);
  for (double w : {1e-6, 1e-3, 0.5}) EXPECT_NEAR(m.rate(w), rate(watts_to_dbm(w), link), 1e-12);
}

TEST(Replay, ZeroPolicyHarvestsDirectly) {
  const ChargeCircuit c = fig4_circuit();
  const auto sc = test::two_packet_scenario();
  const auto res = replay(zero_policy(), sc, c);
  EXPECT_EQ(res.throughput, 0.0);
  double stored = sc.initial_energy;
  for (std::size_t k = 0; k < sc.packet_count(); ++k) {
    const auto& e = res.trace.epochs[k];
    EXPECT_EQ(e.residual, stored);
    EXPECT_EQ(e.harvested, harvested_energy(stored, sc.packets[k].length, c));
    stored += e.harvested;
  }
}

TEST(Replay, SolverScheduleReproducesSolverTrace) {
  const ChargeCircuit c = ExperimentConfig{}.circuit();
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto g = test::generated(12, 0.02, 4, s);
    const auto rep = solve(g.scenario, c);
    const auto res = replay(fixed_schedule_policy(rep.schedule), g.scenario, c);
    EXPECT_FALSE(res.trace.any_clamped());
    for (std::size_t k = 0; k < rep.trace.epochs.size(); ++k) {
      EXPECT_NEAR(res.trace.epochs[k].residual, rep.trace.epochs[k].residual, 1e-12);
      EXPECT_NEAR(res.trace.epochs[k].harvested, rep.trace.epochs[k].harvested, 1e-12);
    }
    EXPECT_NEAR(res.throughput, rep.throughput, 1e-12 * rep.throughput);
  }
}

TEST(Replay, ConservationAndClamping) {
  const ChargeCircuit c = ExperimentConfig{}.circuit();
  Rng rng(8, 0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto g = test::generated(10, 0.1, 8, s);
    // Random, often overspending schedule.
    TransmissionSchedule sched{{}, g.scenario.epoch_bounds()};
    for (std::size_t k = 0; k < g.scenario.epoch_count(); ++k) sched.powers.push_back(rng.uniform(0.0, 4e-4));
    const auto res = replay(fixed_schedule_policy(sched), g.scenario, c);
    const double slack = 1e-9 * c.e_max();
    double stored = g.scenario.initial_energy;
    for (std::size_t k = 0; k < res.trace.epochs.size(); ++k) {
      const auto& e = res.trace.epochs[k];
      const double l = e.t_end - e.t_start;
      EXPECT_EQ(e.residual, stored - e.consumed);
      EXPECT_GE(e.residual, -slack);
      EXPECT_GE(e.harvested, 0.0);
      EXPECT_LE(e.harvested, c.e_max() - std::max(0.0, e.residual));
      // Clamped exactly when the requested power would overspend.
      EXPECT_EQ(e.clamped, sched.powers[k] * l > stored + slack);
      if (e.clamped) EXPECT_EQ(e.consumed, stored);
      stored = e.residual + e.harvested;
    }
  }
}

TEST(Replay, Deterministic) {
  const ChargeCircuit c = ExperimentConfig{}.circuit();
  const auto g = test::generated(30, 0.3, 2, 0);
  const auto a = replay(online_policy(c, ExperimentConfig{}.priors()), g.scenario, c);
  const auto b = replay(online_policy(c, ExperimentConfig{}.priors()), g.scenario, c);
  EXPECT_EQ(a.schedule.powers, b.schedule.powers);
  EXPECT_EQ(a.throughput, b.throughput);
}

TEST(Generate, TightStringRoundTrip) {
  const ChargeCircuit c = ExperimentConfig{}.circuit();
  for (double te : {1e-4, 1e-2, 0.3, 1.0}) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto g = test::generated(25, te, 12, s);
      const auto res = replay(fixed_schedule_policy(g.classic_schedule), g.scenario, c);
      for (std::size_t k = 0; k < g.scenario.packet_count(); ++k) {
        EXPECT_NEAR(res.trace.epochs[k].harvested, g.classic_amounts[k], 1e-9) << te << " " << s << " " << k;
      }
    }
  }
}

TEST(Generate, DutyCycleAndDeterminism) {
  ExperimentConfig cfg;
  cfg.packets = 50;
  Rng a(3, 7), b(3, 7);
  const auto ga = generate_scenario(cfg, a);
  const auto gb = generate_scenario(cfg, b);
  EXPECT_EQ(ga.scenario, gb.scenario);
  double charging = 0.0;
  for (const auto& p : ga.scenario.packets) charging += p.length;
  EXPECT_NEAR(charging / ga.scenario.deadline, cfg.duty_cycle, 1e-9 * cfg.duty_cycle);
  EXPECT_EQ(ga.scenario.initial_energy, cfg.initial_fraction * cfg.circuit().e_max());
}

TEST(Generate, ZeroAmountsGiveZeroLengths) {
  // Zero energy to deliver: every packet has zero length.
  const ChargeCircuit c = ExperimentConfig{}.circuit();
  for (double f : {0.0, 0.1, 0.5}) EXPECT_EQ(packet_length_for(f * c.e_max(), 0.0, c), 0.0);
}

TEST(Generate, RetryBudgetExhausted) {
  ExperimentConfig cfg;
  cfg.initial_fraction = 0.99;
  cfg.mean_packet_length = 40.0 * cfg.circuit().tau();  // every packet nearly fills the capacitor
  cfg.max_retries = 3;
  Rng rng(1, 0);
  EXPECT_THROW(generate_scenario(cfg, rng), generation_error);
}

TEST(MonteCarlo, SingleRunEqualsSingleReplay) {
  ExperimentConfig cfg;
  cfg.runs = 1;
  cfg.packets = 15;
  const ChargeCircuit c = cfg.circuit();
  const std::vector<Strategy> all(std::begin(kAllStrategies), std::end(kAllStrategies));
  const auto rows = monte_carlo(cfg, {{0.01, 0.01 * c.tau(), cfg.capacitance}}, all, RateModel::normalized());
  ExperimentConfig one = cfg;
  one.mean_packet_length = 0.01 * c.tau();
  Rng rng(cfg.seed, 0);
  const auto g = generate_scenario(one, rng);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto res = evaluate(all[i], g, c, RateModel::normalized(), one.priors());
    EXPECT_EQ(rows[i].mean_throughput, res.throughput);
    EXPECT_EQ(rows[i].mean_harvested, res.trace.total_harvested());
    EXPECT_EQ(rows[i].std_throughput, 0.0);
  }
}

TEST(MonteCarlo, BitIdenticalAcrossThreadCounts) {
  ExperimentConfig cfg;
  cfg.runs = 6;
  cfg.packets = 10;
  const double tau = cfg.circuit().tau();
  const std::vector<SweepPoint> pts{{1e-3, 1e-3 * tau, 0.05}, {0.1, 0.1 * tau, 0.05}};
  const std::vector<Strategy> st{Strategy::optimal, Strategy::max_harvest};
  cfg.threads = 1;
  const auto a = monte_carlo(cfg, pts, st, RateModel::normalized());
  cfg.threads = 3;
  const auto b = monte_carlo(cfg, pts, st, RateModel::normalized());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mean_throughput, b[i].mean_throughput);
    EXPECT_EQ(a[i].std_throughput, b[i].std_throughput);
    EXPECT_EQ(a[i].mean_harvested, b[i].mean_harvested);
  }
}

TEST(MonteCarlo, HarvestOrderingShortSweep) {
  // Max harvest collects the most energy at each point of a small sweep.
  ExperimentConfig cfg;
  cfg.runs = 5;
  cfg.packets = 30;
  const double tau = cfg.circuit().tau();
  std::vector<SweepPoint> pts;
  for (double v : {1e-3, 1e-2, 1e-1, 1.0}) pts.push_back({v, v * tau, cfg.capacitance});
  const auto rows = monte_carlo(cfg, pts, {Strategy::optimal, Strategy::max_harvest, Strategy::tight_string},
                                RateModel::normalized());
  for (std::size_t p = 0; p < pts.size(); ++p) {
    const double mh = rows[3 * p + 1].mean_harvested;
    EXPECT_GE(mh, rows[3 * p].mean_harvested) << p;
    EXPECT_GE(mh, rows[3 * p + 2].mean_harvested) << p;
  }
}

TEST(FutureImpact, Examples) {
  ExperimentConfig cfg;
  cfg.packets = 20;
  const ChargeCircuit c = cfg.circuit();
  const auto g = test::generated(20, 0.1, 1, 0);
  const double dl = 0.2 * g.scenario.deadline / 21.0, dt = 0.2 * 0.1 * c.tau();
  EXPECT_EQ(future_impact_probe(g.scenario, c, 3, 0.0, 0.0, {}, 1).relative_change, 0.0);
  const auto d1 = future_impact_probe(g.scenario, c, 1, dl, dt, {}, 1);
  const auto d5 = future_impact_probe(g.scenario, c, 5, dl, dt, {}, 1);
  EXPECT_GT(d1.relative_change, d5.relative_change);
  EXPECT_LT(d5.relative_change, 0.02);
  EXPECT_THROW(future_impact_probe(g.scenario, c, 0, dl, dt), domain_error);
  EXPECT_THROW(future_impact_probe(g.scenario, c, 20, dl, dt, {}, 1), domain_error);
  EXPECT_THROW(perturb_epoch(g.scenario, 2, -1e9, 0.0), domain_error);
}
