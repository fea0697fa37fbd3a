#pragma once

#include "smoguard/simulation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace smoguard {

struct OutputSpec {
  std::string dir = "out";
  std::string prefix;  // empty: scenario name
};

struct SweepSpec {
  std::vector<double> eta_scale;     // scales eta_bar, zeta1_bar and the noise
  std::vector<double> r_tau;
  std::vector<double> attack_scale;  // scales every attack term
  unsigned threads = 0;
  bool empty() const { return eta_scale.empty() && r_tau.empty() && attack_scale.empty(); }
};

// Generator block that expands into a stealthy attack at load time.
struct StealthGenerator {
  Waveform profile;
  std::string tau = "true";  // "true", "model" or a number
  StealthSigns signs;
};

struct RunConfig {
  Scenario scenario = table1_scenario();
  SimConfig sim;
  OutputSpec output;
  SweepSpec sweep;
};

RunConfig preset(const std::string& name);  // "table1"

// JSON with // and /* */ comments. Duplicate and unknown keys are errors.
// Throws ConfigError listing every problem with its JSON pointer.
RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");
RunConfig load_config(const std::string& path);

std::string serialize_config(const RunConfig& cfg);

// Scenario tweaks used by the sweep and by tests.
Scenario scale_attack(const Scenario& sc, double k);
Scenario scale_uncertainty(const Scenario& sc, double k);

struct SweepPoint {
  double eta_scale = 1, r_tau = 0, attack_scale = 1;
  RunMetrics metrics;
  std::string error;  // non-empty when the run aborted
};
std::vector<SweepPoint> run_sweep(const RunConfig& cfg);

}  // namespace smoguard
