#pragma once

// Command-line front end: optimize, simulate, sweep, oracle-check.
//
// Exit codes: 0 ok, 2 config/usage error, 3 solver failure, 4 validation
// failure, 1 anything unexpected.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rfeh/config.hpp"
#include "rfeh/csv.hpp"
#include "rfeh/offline_scheduler.hpp"
#include "rfeh/oracle.hpp"
#include "rfeh/simulator.hpp"

namespace rfeh::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kConfigError = 2, kSolverFailure = 3, kValidationFailure = 4 };

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string rate_model;  // empty: take the config's
  double terminal_reserve = 0.0;  // test hook: energy the solver must leave at the deadline
};

namespace detail {

inline Config load(const GlobalOptions& g) {
  std::ifstream in(g.config_path);
  if (!in) throw config_error("cannot read config '" + g.config_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Config c = parse_config(ss.str());
  if (g.seed) c.experiment.seed = *g.seed;
  if (!g.rate_model.empty()) {
    auto k = parse_rate_kind(g.rate_model);
    if (!k) throw config_error("--rate-model must be 'normalized' or 'link-budget'");
    c.rate_model = *k;
  }
  return c;
}

inline RunManifest manifest(const std::string& command, const GlobalOptions& g, const Config& c,
                            const std::filesystem::path& output) {
  RunManifest m;
  m.command = command;
  m.config_path = g.config_path;
  m.config_hash = fnv1a_hex(serialize(c));
  m.seed = c.experiment.seed;
  m.rate_model = to_string(c.rate_model);
  m.timestamp = manifest_timestamp();
  m.outputs.push_back(output.generic_string());
  return m;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw config_error("cannot write '" + path.generic_string() + "'");
  return os;
}

// Scenario for optimize/simulate: the explicit one, else stream 0 of the seed.
inline EnergyScenario scenario_for(const Config& c, std::optional<GeneratedScenario>* generated = nullptr) {
  if (c.scenario) return *c.scenario;
  Rng rng(c.experiment.seed, 0);
  GeneratedScenario g = generate_scenario(c.experiment, rng);
  EnergyScenario s = g.scenario;
  if (generated) *generated = std::move(g);
  return s;
}

inline std::string num(double v) { return format_number(v); }

}  // namespace detail

inline int cmd_optimize(const GlobalOptions& g, std::ostream& out) {
  const Config c = detail::load(g);
  const EnergyScenario sc = detail::scenario_for(c);
  SolveOptions so = c.solve_options();
  so.terminal_reserve = g.terminal_reserve;
  const SolveReport rep = solve(sc, c.circuit(), so);
  const auto path = std::filesystem::path(g.out_dir) / "schedule.csv";
  auto os = detail::open_output(path);
  RunManifest m = detail::manifest("optimize", g, c, path);
  m.extra.emplace_back("solver_branch", to_string(rep.branch));
  m.extra.emplace_back("candidates_examined", std::to_string(rep.candidates_examined));
  if (g.terminal_reserve != 0.0) m.extra.emplace_back("test_terminal_reserve", detail::num(g.terminal_reserve));
  write_manifest(os, m);
  write_row(os, {"epoch", "t_start", "t_end", "power", "residual", "harvested", "consumed", "throughput",
                 "terminal_residual_error"});
  using detail::num;
  for (std::size_t k = 0; k < rep.trace.epochs.size(); ++k) {
    const auto& e = rep.trace.epochs[k];
    write_row(os, {std::to_string(k + 1), num(e.t_start), num(e.t_end), num(rep.schedule.powers[k]), num(e.residual),
                   num(e.harvested), num(e.consumed), "", ""});
  }
  write_row(os, {"summary", "", "", "", "", "", "", num(rep.throughput), num(rep.terminal_residual_error)});
  out << "throughput " << num(rep.throughput) << " (" << to_string(rep.branch) << "), wrote " << path.generic_string()
      << '\n';
  return kOk;
}

inline int cmd_simulate(const GlobalOptions& g, const std::string& strategy_name, std::ostream& out) {
  const Config c = detail::load(g);
  const auto strategy = parse_strategy(strategy_name);
  if (!strategy) throw config_error("unknown strategy '" + strategy_name + "'");
  std::optional<GeneratedScenario> gen;
  const EnergyScenario sc = detail::scenario_for(c, &gen);
  const ChargeCircuit circuit = c.circuit();
  if (!gen) {
    // Explicit scenario: tight_string needs classic amounts, which only a
    // generated scenario carries.
    if (*strategy == Strategy::tight_string) {
      throw config_error("simulate: tight_string needs a generated scenario (remove the scenario section)");
    }
    GeneratedScenario tmp;
    tmp.scenario = sc;
    gen = tmp;
  }
  SolveOptions so = c.solve_options();
  ReplayResult res;
  if (*strategy == Strategy::optimal) {
    res = replay(fixed_schedule_policy(solve(sc, circuit, so).schedule), sc, circuit, so.rate);
  } else {
    res = evaluate(*strategy, *gen, circuit, so.rate, c.experiment.priors());
  }
  const auto path = std::filesystem::path(g.out_dir) / ("trace_" + strategy_name + ".csv");
  auto os = detail::open_output(path);
  RunManifest m = detail::manifest("simulate", g, c, path);
  m.extra.emplace_back("strategy", strategy_name);
  write_manifest(os, m);
  write_row(os, {"epoch", "t_start", "t_end", "power", "residual", "harvested", "consumed", "clamped", "throughput",
                 "total_harvested"});
  using detail::num;
  for (std::size_t k = 0; k < res.trace.epochs.size(); ++k) {
    const auto& e = res.trace.epochs[k];
    write_row(os, {std::to_string(k + 1), num(e.t_start), num(e.t_end), num(e.power), num(e.residual),
                   num(e.harvested), num(e.consumed), e.clamped ? "1" : "0", "", ""});
  }
  write_row(os, {"summary", "", "", "", "", "", "", res.trace.any_clamped() ? "1" : "0", num(res.throughput),
                 num(res.trace.total_harvested())});
  out << strategy_name << " throughput " << num(res.throughput) << ", wrote " << path.generic_string() << '\n';
  return kOk;
}

inline int cmd_sweep(const GlobalOptions& g, const std::string& figure_override, std::ostream& out) {
  Config c = detail::load(g);
  if (!figure_override.empty()) {
    c.sweep.figure = figure_override;
    validate(c);
  }
  const auto& sw = c.sweep;
  const std::string fig = sw.figure;
  const auto path = std::filesystem::path(g.out_dir) / ("sweep_" + fig + ".csv");
  using detail::num;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header;

  if (fig == "fig8") {
    header = {"figure", "scenario", "current_epoch", "distance", "delta_length", "delta_packet", "power_before",
              "power_after", "relative_change"};
    const ChargeCircuit circuit = c.circuit();
    const double dl = sw.delta_length * c.experiment.mean_epoch_length();
    const double dt = sw.delta_packet * c.experiment.mean_packet_length;
    for (std::size_t s = 0; s < sw.scenarios; ++s) {
      Rng rng(c.experiment.seed, s);
      const GeneratedScenario gsc = generate_scenario(c.experiment, rng);
      for (std::size_t d : sw.distances) {
        FutureImpact fi;
        try {
          fi = future_impact_probe(gsc.scenario, circuit, d, dl, dt, c.solve_options(), sw.current_epoch);
        } catch (const domain_error& e) {
          throw config_error(std::string("fig8: ") + e.what());
        }
        rows.push_back({fig, std::to_string(s), std::to_string(sw.current_epoch), std::to_string(d), num(dl), num(dt),
                        num(fi.power_before), num(fi.power_after), num(fi.relative_change)});
      }
    }
  } else {
    header = {"figure", "te_over_tau", "capacitance", "mean_packet_length", "strategy", "runs", "seed",
              "mean_throughput", "std_throughput", "mean_throughput_per_s", "mean_harvested", "std_harvested",
              "realised_te_over_tau"};
    const double tau0 = c.circuit().tau();
    std::vector<SweepPoint> points;
    const std::vector<double> caps =
        fig == "fig5" ? sw.capacitances : std::vector<double>{c.experiment.capacitance};
    for (double cap : caps) {
      for (double v : sw.te_over_tau) points.push_back({v, v * tau0, cap});
    }
    std::vector<Strategy> strategies;
    for (const auto& s : sw.strategies) strategies.push_back(*parse_strategy(s));
    std::vector<ResultRow> res;
    try {
      res = monte_carlo(c.experiment, points, strategies, c.rate());
    } catch (const generation_error& e) {
      throw config_error(e.what());
    }
    for (const auto& r : res) {
      rows.push_back({fig, num(r.sweep_value), num(r.capacitance), num(r.mean_packet_length),
                      std::string(to_string(r.strategy)), std::to_string(r.runs), std::to_string(r.seed),
                      num(r.mean_throughput), num(r.std_throughput), num(r.mean_throughput_rate),
                      num(r.mean_harvested), num(r.std_harvested), num(r.mean_te_over_tau)});
    }
  }
  auto os = detail::open_output(path);
  write_manifest(os, detail::manifest("sweep " + fig, g, c, path));
  write_row(os, header);
  for (const auto& r : rows) write_row(os, r);
  out << fig << ": " << rows.size() << " rows, wrote " << path.generic_string() << '\n';
  return kOk;
}

inline int cmd_oracle_check(const GlobalOptions& g, std::ostream& out) {
  const Config c = detail::load(g);
  GridSpec grid;
  grid.resolution = c.oracle.resolution;
  grid.epoch_limit = 3;
  grid.evaluation_budget = c.oracle.resolution * c.oracle.resolution * c.oracle.resolution;
  if (c.oracle.packets > grid.epoch_limit) {
    throw config_error("oracle-check: oracle.packets must be <= 3 (got " + std::to_string(c.oracle.packets) + ")");
  }
  if (c.scenario && c.scenario->packet_count() > grid.epoch_limit) {
    throw config_error("oracle-check: the explicit scenario has more than 3 packets");
  }
  ExperimentConfig ex = c.experiment;
  ex.packets = c.oracle.packets;
  SolveOptions so = c.solve_options();
  so.terminal_reserve = g.terminal_reserve;
  const ChargeCircuit circuit = c.circuit();

  const auto path = std::filesystem::path(g.out_dir) / "oracle_check.csv";
  std::vector<std::vector<std::string>> rows;
  using detail::num;
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_at = 0;
  std::size_t failures = 0;
  const std::size_t count = c.scenario ? 1 : c.oracle.instances;
  for (std::size_t i = 0; i < count; ++i) {
    EnergyScenario sc;
    if (c.scenario) {
      sc = *c.scenario;
    } else {
      Rng rng(ex.seed, i);
      sc = generate_scenario(ex, rng).scenario;
    }
    const SolveReport rep = solve(sc, circuit, so);
    const OracleResult orc = brute_force_optimize(sc, circuit, grid, so.rate);
    // Positive gap: the oracle beat the solver by more than its grid bound.
    const double gap = orc.throughput - orc.error_bound - rep.throughput;
    const bool ok = gap <= 0.0;
    if (!ok) ++failures;
    if (gap > worst) {
      worst = gap;
      worst_at = i;
    }
    rows.push_back({std::to_string(i), std::to_string(sc.packet_count()), num(rep.throughput), num(orc.throughput),
                    num(orc.error_bound), num(gap), ok ? "1" : "0"});
  }
  auto os = detail::open_output(path);
  RunManifest m = detail::manifest("oracle-check", g, c, path);
  if (g.terminal_reserve != 0.0) m.extra.emplace_back("test_terminal_reserve", num(g.terminal_reserve));
  write_manifest(os, m);
  write_row(os, {"instance", "packets", "solve_throughput", "oracle_throughput", "grid_error_bound", "gap", "ok"});
  for (const auto& r : rows) write_row(os, r);
  out << "oracle-check: " << count - failures << "/" << count << " instances pass; worst gap " << num(worst)
      << " (instance " << worst_at << "; gap = oracle - bound - solve, must be <= 0)\n";
  return failures == 0 ? kOk : kValidationFailure;
}

/// Parse argv and dispatch. Never throws.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Throughput-optimal transmission scheduling for RF energy harvesting devices", "rfeh"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "YAML configuration file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "Override the configured RNG seed");
  app.add_option("--out", g.out_dir, "Output directory (default: current directory)");
  app.add_option("--rate-model", g.rate_model, "normalized | link-budget (default: from config)")
      ->check(CLI::IsMember({"normalized", "link-budget"}));

  auto* optimize = app.add_subcommand("optimize", "Offline optimal schedule for one scenario");
  auto* simulate = app.add_subcommand("simulate", "Replay one strategy on one scenario");
  std::string strategy = "optimal";
  simulate->add_option("--strategy", strategy, "optimal | max_harvest | tight_string | online | zero");
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep for one figure");
  std::string figure;
  sweep->add_option("--figure", figure, "fig5 | fig6 | fig7 | fig8 (default: from config)");
  auto* oracle = app.add_subcommand("oracle-check", "Compare the solver with the brute-force oracle");
  // Hidden test hook: corrupts the solver's terminal condition.
  app.add_option("--test-terminal-reserve", g.terminal_reserve)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (optimize->parsed()) return cmd_optimize(g, out);
    if (simulate->parsed()) return cmd_simulate(g, strategy, out);
    if (sweep->parsed()) return cmd_sweep(g, figure, out);
    if (oracle->parsed()) return cmd_oracle_check(g, out);
  } catch (const config_error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const domain_error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const generation_error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const solver_failure& e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}

}  // namespace rfeh::cli
