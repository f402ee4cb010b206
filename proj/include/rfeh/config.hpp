#pragma once

// YAML run configuration for the command-line tool.
//
// Every section is optional and falls back to the defaults below. Unknown
// keys are rejected so a typo cannot silently leave a default in place.
// serialize() writes every field at round-trip precision, so
// parse(serialize(c)) == c.

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rfeh/errors.hpp"
#include "rfeh/link_budget.hpp"
#include "rfeh/scenario.hpp"
#include "rfeh/simulator.hpp"

namespace rfeh {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RateKind { normalized, link_budget };

inline const char* to_string(RateKind k) { return k == RateKind::normalized ? "normalized" : "link-budget"; }

inline std::optional<RateKind> parse_rate_kind(const std::string& s) {
  if (s == "normalized") return RateKind::normalized;
  if (s == "link-budget") return RateKind::link_budget;
  return std::nullopt;
}

struct LinkConfig {
  double frequency = 2.4e9;       // Hz
  double distance_ft = 10.0;      // feet, converted to metres for the path loss
  double bandwidth = 10e6;        // Hz
  double noise_density = -174.0;  // dBm/Hz

  ChannelLink channel() const { return {frequency, distance_ft * kMetersPerFoot, bandwidth, noise_density}; }
  bool operator==(const LinkConfig&) const = default;
};

struct SweepConfig {
  std::string figure = "fig6";  // fig5 | fig6 | fig7 | fig8
  // Mean packet length over tau of the configured circuit.
  std::vector<double> te_over_tau{1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0};
  // fig5 only: capacitances (F) crossed with te_over_tau.
  std::vector<double> capacitances{0.0125, 0.025, 0.05, 0.1, 0.2, 0.4};
  std::vector<std::string> strategies{"optimal", "max_harvest", "tight_string", "online"};
  // fig8 only.
  std::vector<std::size_t> distances{1, 2, 3, 4, 5};
  std::size_t current_epoch = 1;
  double delta_length = 0.2;  // times the mean epoch length
  double delta_packet = 0.2;  // times the mean packet length
  std::size_t scenarios = 10;

  bool operator==(const SweepConfig&) const = default;
};

struct OracleConfig {
  std::size_t instances = 20;
  std::size_t packets = 2;
  std::size_t resolution = 60;

  bool operator==(const OracleConfig&) const = default;
};

struct SolverConfig {
  std::size_t scan_samples = 2000;
  double tolerance = 1e-10;

  bool operator==(const SolverConfig&) const = default;
};

struct Config {
  ExperimentConfig experiment;  // circuit, seed and generator settings
  LinkConfig link;
  RateKind rate_model = RateKind::normalized;
  std::optional<EnergyScenario> scenario;  // explicit scenario for optimize / simulate
  SweepConfig sweep;
  OracleConfig oracle;
  SolverConfig solver;

  ChargeCircuit circuit() const { return experiment.circuit(); }
  RateModel rate() const {
    return rate_model == RateKind::normalized ? RateModel::normalized() : link_rate_model(link.channel());
  }
  SolveOptions solve_options() const {
    SolveOptions o;
    o.scan_samples = solver.scan_samples;
    o.tolerance = solver.tolerance;
    o.rate = rate();
    return o;
  }

  bool operator==(const Config&) const = default;
};

namespace detail {

inline void require_map(const YAML::Node& n, const std::string& where) {
  if (!n.IsMap()) throw config_error(where + ": expected a mapping");
}

inline void check_keys(const YAML::Node& n, const std::string& where, const std::set<std::string>& allowed) {
  require_map(n, where);
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw config_error(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const YAML::Node& n, const char* key, T& out, const std::string& where) {
  const YAML::Node v = n[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw config_error(where + "." + key + ": wrong type");
  }
}

}  // namespace detail

inline void validate(const Config& c) {
  try {
    c.experiment.check();
    (void)c.rate();
    if (c.scenario) validate(*c.scenario, c.circuit());
  } catch (const domain_error& e) {
    throw config_error(e.what());
  }
  if (c.solver.scan_samples < 2) throw config_error("solver.scan_samples must be >= 2");
  if (!(c.solver.tolerance > 0.0)) throw config_error("solver.tolerance must be > 0");
  if (c.oracle.instances < 1) throw config_error("oracle.instances must be >= 1");
  if (c.oracle.resolution < 2) throw config_error("oracle.resolution must be >= 2");
  for (const auto& s : c.sweep.strategies) {
    if (!parse_strategy(s)) throw config_error("sweep.strategies: unknown strategy '" + s + "'");
  }
  const auto& f = c.sweep.figure;
  if (f != "fig5" && f != "fig6" && f != "fig7" && f != "fig8") {
    throw config_error("sweep.figure must be one of fig5, fig6, fig7, fig8");
  }
  for (double v : c.sweep.te_over_tau) {
    if (!(v > 0.0)) throw config_error("sweep.te_over_tau values must be > 0");
  }
  for (double v : c.sweep.capacitances) {
    if (!(v > 0.0)) throw config_error("sweep.capacitances values must be > 0");
  }
  for (auto d : c.sweep.distances) {
    if (d < 1) throw config_error("sweep.distances must be >= 1");
  }
}

inline Config parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  Config c;
  if (root.IsNull()) return c;
  using detail::read;
  detail::check_keys(root, "config",
                     {"seed", "rate_model", "circuit", "link", "experiment", "scenario", "sweep", "oracle", "solver"});
  auto& ex = c.experiment;
  read(root, "seed", ex.seed, "config");
  if (root["rate_model"]) {
    std::string s;
    read(root, "rate_model", s, "config");
    auto k = parse_rate_kind(s);
    if (!k) throw config_error("config.rate_model must be 'normalized' or 'link-budget'");
    c.rate_model = *k;
  }
  if (const auto n = root["circuit"]) {
    detail::check_keys(n, "circuit", {"resistance", "capacitance", "v_max"});
    read(n, "resistance", ex.resistance, "circuit");
    read(n, "capacitance", ex.capacitance, "circuit");
    read(n, "v_max", ex.v_max, "circuit");
  }
  if (const auto n = root["link"]) {
    detail::check_keys(n, "link", {"frequency", "distance_ft", "bandwidth", "noise_density"});
    read(n, "frequency", c.link.frequency, "link");
    read(n, "distance_ft", c.link.distance_ft, "link");
    read(n, "bandwidth", c.link.bandwidth, "link");
    read(n, "noise_density", c.link.noise_density, "link");
  }
  if (const auto n = root["experiment"]) {
    detail::check_keys(n, "experiment", {"mean_packet_length", "duty_cycle", "packets", "initial_fraction", "spread",
                                         "runs", "max_retries", "threads"});
    read(n, "mean_packet_length", ex.mean_packet_length, "experiment");
    read(n, "duty_cycle", ex.duty_cycle, "experiment");
    read(n, "packets", ex.packets, "experiment");
    read(n, "initial_fraction", ex.initial_fraction, "experiment");
    read(n, "spread", ex.spread, "experiment");
    read(n, "runs", ex.runs, "experiment");
    read(n, "max_retries", ex.max_retries, "experiment");
    read(n, "threads", ex.threads, "experiment");
  }
  if (const auto n = root["scenario"]) {
    detail::check_keys(n, "scenario", {"initial_energy", "deadline", "packets"});
    EnergyScenario s;
    read(n, "initial_energy", s.initial_energy, "scenario");
    read(n, "deadline", s.deadline, "scenario");
    if (const auto ps = n["packets"]) {
      if (!ps.IsSequence()) throw config_error("scenario.packets: expected a list");
      for (const auto& p : ps) {
        detail::check_keys(p, "scenario.packets[]", {"arrival", "length"});
        if (!p["arrival"] || !p["length"]) throw config_error("scenario.packets[]: need arrival and length");
        EnergyPacket e;
        read(p, "arrival", e.arrival, "scenario.packets[]");
        read(p, "length", e.length, "scenario.packets[]");
        s.packets.push_back(e);
      }
    }
    if (!n["deadline"]) throw config_error("scenario.deadline is required");
    c.scenario = s;
  }
  if (const auto n = root["sweep"]) {
    detail::check_keys(n, "sweep", {"figure", "te_over_tau", "capacitances", "strategies", "distances",
                                    "current_epoch", "delta_length", "delta_packet", "scenarios"});
    auto& s = c.sweep;
    read(n, "figure", s.figure, "sweep");
    read(n, "te_over_tau", s.te_over_tau, "sweep");
    read(n, "capacitances", s.capacitances, "sweep");
    read(n, "strategies", s.strategies, "sweep");
    read(n, "distances", s.distances, "sweep");
    read(n, "current_epoch", s.current_epoch, "sweep");
    read(n, "delta_length", s.delta_length, "sweep");
    read(n, "delta_packet", s.delta_packet, "sweep");
    read(n, "scenarios", s.scenarios, "sweep");
  }
  if (const auto n = root["oracle"]) {
    detail::check_keys(n, "oracle", {"instances", "packets", "resolution"});
    read(n, "instances", c.oracle.instances, "oracle");
    read(n, "packets", c.oracle.packets, "oracle");
    read(n, "resolution", c.oracle.resolution, "oracle");
  }
  if (const auto n = root["solver"]) {
    detail::check_keys(n, "solver", {"scan_samples", "tolerance"});
    read(n, "scan_samples", c.solver.scan_samples, "solver");
    read(n, "tolerance", c.solver.tolerance, "solver");
  }
  validate(c);
  return c;
}

inline std::string serialize(const Config& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  const auto& ex = c.experiment;
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << ex.seed;
  out << YAML::Key << "rate_model" << YAML::Value << to_string(c.rate_model);
  out << YAML::Key << "circuit" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "resistance" << YAML::Value << ex.resistance;
  out << YAML::Key << "capacitance" << YAML::Value << ex.capacitance;
  out << YAML::Key << "v_max" << YAML::Value << ex.v_max;
  out << YAML::EndMap;
  out << YAML::Key << "link" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "frequency" << YAML::Value << c.link.frequency;
  out << YAML::Key << "distance_ft" << YAML::Value << c.link.distance_ft;
  out << YAML::Key << "bandwidth" << YAML::Value << c.link.bandwidth;
  out << YAML::Key << "noise_density" << YAML::Value << c.link.noise_density;
  out << YAML::EndMap;
  out << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mean_packet_length" << YAML::Value << ex.mean_packet_length;
  out << YAML::Key << "duty_cycle" << YAML::Value << ex.duty_cycle;
  out << YAML::Key << "packets" << YAML::Value << ex.packets;
  out << YAML::Key << "initial_fraction" << YAML::Value << ex.initial_fraction;
  out << YAML::Key << "spread" << YAML::Value << ex.spread;
  out << YAML::Key << "runs" << YAML::Value << ex.runs;
  out << YAML::Key << "max_retries" << YAML::Value << ex.max_retries;
  out << YAML::Key << "threads" << YAML::Value << ex.threads;
  out << YAML::EndMap;
  if (c.scenario) {
    out << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "initial_energy" << YAML::Value << c.scenario->initial_energy;
    out << YAML::Key << "deadline" << YAML::Value << c.scenario->deadline;
    out << YAML::Key << "packets" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : c.scenario->packets) {
      out << YAML::Flow << YAML::BeginMap << YAML::Key << "arrival" << YAML::Value << p.arrival << YAML::Key
          << "length" << YAML::Value << p.length << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
  }
  const auto& s = c.sweep;
  out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "figure" << YAML::Value << s.figure;
  out << YAML::Key << "te_over_tau" << YAML::Value << YAML::Flow << s.te_over_tau;
  out << YAML::Key << "capacitances" << YAML::Value << YAML::Flow << s.capacitances;
  out << YAML::Key << "strategies" << YAML::Value << YAML::Flow << s.strategies;
  out << YAML::Key << "distances" << YAML::Value << YAML::Flow << s.distances;
  out << YAML::Key << "current_epoch" << YAML::Value << s.current_epoch;
  out << YAML::Key << "delta_length" << YAML::Value << s.delta_length;
  out << YAML::Key << "delta_packet" << YAML::Value << s.delta_packet;
  out << YAML::Key << "scenarios" << YAML::Value << s.scenarios;
  out << YAML::EndMap;
  out << YAML::Key << "oracle" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "instances" << YAML::Value << c.oracle.instances;
  out << YAML::Key << "packets" << YAML::Value << c.oracle.packets;
  out << YAML::Key << "resolution" << YAML::Value << c.oracle.resolution;
  out << YAML::EndMap;
  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "scan_samples" << YAML::Value << c.solver.scan_samples;
  out << YAML::Key << "tolerance" << YAML::Value << c.solver.tolerance;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace rfeh
