#pragma once

#include "smoguard/attack.hpp"
#include "smoguard/detection.hpp"
#include "smoguard/estimation.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace smoguard {

enum class Integrator { euler, rk4 };

struct SimConfig {
  double dt = 1e-3;
  double horizon = 60.0;
  std::uint64_t seed = 1;
  Integrator integrator = Integrator::euler;
  bool noiseless = false;
  int log_every = 1;          // keep every k-th sample in the trajectory
  bool stop_on_crash = true;
  double dwell_steps = 2.0;   // minimum sign dwell, in steps
  double steady_fraction = 0.2;  // tail used for steady-state metrics

  void validate() const;
};

// Everything a closed-loop run needs besides the step settings.
struct Scenario {
  std::string name = "healthy";
  PlatoonParams platoon;
  PlatoonState initial = table1_initial_state();
  OutputPartition design;
  double filter_pole = -5.0;
  ObserverParams observer = ObserverParams::defaults();
  BoundSpec bounds;           // eta_bar, zeta1_bar, initial x1 error
  Vec e2_init;                // initial x2 estimation error, empty = 0
  AttackBounds attack_bounds;
  NoiseSpec noise;            // seed is overridden by SimConfig::seed
  Signal leader_input;
  AttackScenario attack;
  bool strict_poles = false;
  double marginal_tol = 1e-6;

  void validate() const;
};

// Reference parameter set with the relative-velocity design and no attack.
Scenario table1_scenario();

// Attack-free run in which the leader really executes the communicated
// input (u_lead + du): the healthy counterpart of a stealthy attack.
Scenario stealth_reference(const Scenario& sc);

// Matrices, estimator and detector quantities derived once per scenario.
struct Design {
  PartitionedSystem sys;
  DesignReport report;
  Estimator estimator;
  ErrorBounds bounds;
  Vec rho_bound;
};

// Throws DesignError when the configured design fails its checks.
Design prepare_design(const Scenario& sc);

// Row-major table of named columns sharing one time grid.
struct Trajectory {
  std::vector<std::string> columns;
  std::vector<double> data;

  std::size_t rows() const { return columns.empty() ? 0 : data.size() / columns.size(); }
  int index(const std::string& name) const;  // -1 if absent
  double at(std::size_t row, int col) const { return data[row * columns.size() + col]; }
  std::vector<double> column(const std::string& name) const;
};

struct RunMetrics {
  bool crashed = false;
  double crash_time = std::numeric_limits<double>::quiet_NaN();
  double rel_vel_at_crash = std::numeric_limits<double>::quiet_NaN();  // v_fol - v_lead
  double min_distance = std::numeric_limits<double>::infinity();
  std::vector<std::optional<double>> first_detection;  // per channel
  Vec steady_estimation_error;  // max |est - true| over the steady tail, NaN if never reached
  double max_threshold_margin = -std::numeric_limits<double>::infinity();  // max(|nu_fil| - thr)
  double max_threshold_excess = -std::numeric_limits<double>::infinity();  // max(thr - rho)
  double tol_stealth = 0;
  double end_time = 0;
  std::size_t steps = 0;

  bool detected() const;
};

struct RunResult {
  Trajectory traj;
  RunMetrics metrics;
  std::vector<DetectionEvent> detections;
  Vec ratio, t_bar;  // threshold recursion constants
};

RunResult run(const Scenario& sc, const Design& design, const SimConfig& cfg);
RunResult run(const Scenario& sc, const SimConfig& cfg);

// 50 eps + 10 dt ||A_e||_inf
double stealth_tolerance(const Scenario& sc, const Design& d, const SimConfig& cfg);

struct RunDifference {
  double outputs = 0;  // attacked measurements
  double e_y = 0;
  double nu_fil = 0;
  double positions = 0;
  std::size_t rows = 0;
};

// Sup-norm differences on the common prefix of two runs; throws on grid
// mismatch.
RunDifference compare_runs(const Trajectory& a, const Trajectory& b);

// True gap (noise- and attack-free) at or below zero.
bool crash_check(double true_gap);

// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

}  // namespace smoguard
