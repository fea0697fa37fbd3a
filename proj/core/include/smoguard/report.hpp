#pragma once

#include "smoguard/config.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace smoguard {

void write_trajectory_csv(std::ostream& os, const Trajectory& tr);
void write_detections_csv(std::ostream& os, const std::vector<DetectionEvent>& ev);
// t, est_*, lo_*, hi_*, true_*
void write_estimates_csv(std::ostream& os, const Trajectory& tr, const Estimator& est);

// Parses a trajectory CSV back (header + numeric rows).
Trajectory read_trajectory_csv(std::istream& is);

std::string metrics_json(const Scenario& sc, const Design& d, const RunResult& r,
                         const SimConfig& cfg);

// Human-readable table plus one JSON record per line.
std::string design_table(const std::vector<DesignReport>& reps, bool strict);
std::string design_records(const std::vector<DesignReport>& reps, bool strict);

std::string sweep_csv(const std::vector<SweepPoint>& pts);

// Standalone matplotlib script for the three-panel figure of one run.
std::string plot_script(const std::string& prefix);

// Writes <dir>/<prefix>_{trajectory,detections,estimates}.csv,
// <prefix>_metrics.json and plot_<prefix>.py. Returns the file list.
std::vector<std::string> write_run_outputs(const std::string& dir, const std::string& prefix,
                                           const Scenario& sc, const Design& d,
                                           const RunResult& r, const SimConfig& cfg);

}  // namespace smoguard
