#include "smoguard/report.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace smoguard {

using json = nlohmann::json;

namespace {

// Shortest round-trip formatting keeps CSV output byte-stable.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json opt_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

std::string poles_json_string(const PoleReport& r) { return format_poles(r); }

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  for (std::size_t c = 0; c < tr.columns.size(); ++c)
    os << (c ? "," : "") << tr.columns[c];
  os << "\n";
  const auto nc = tr.columns.size();
  for (std::size_t r = 0; r < tr.rows(); ++r) {
    for (std::size_t c = 0; c < nc; ++c) os << (c ? "," : "") << num(tr.data[r * nc + c]);
    os << "\n";
  }
}

void write_detections_csv(std::ostream& os, const std::vector<DetectionEvent>& ev) {
  os << "t,channel,nu_fil,threshold\n";
  for (const auto& e : ev)
    os << num(e.t) << "," << e.channel + 1 << "," << num(e.nu_fil) << "," << num(e.threshold)
       << "\n";
}

void write_estimates_csv(std::ostream& os, const Trajectory& tr, const Estimator& est) {
  std::vector<int> ecols, tcols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < tr.columns.size(); ++c) {
    if (tr.columns[c].rfind("est_", 0) == 0) {
      ecols.push_back(int(c));
      names.push_back(tr.columns[c].substr(4));
    } else if (tr.columns[c].rfind("true_", 0) == 0) {
      tcols.push_back(int(c));
    }
  }
  os << "t";
  for (const auto& n : names) os << ",est_" << n;
  for (const auto& n : names) os << ",lo_" << n;
  for (const auto& n : names) os << ",hi_" << n;
  for (const auto& n : names) os << ",true_" << n;
  os << "\n";
  const int t = tr.index("t");
  for (std::size_t r = 0; r < tr.rows(); ++r) {
    os << num(tr.at(r, t));
    for (int c : ecols) os << "," << num(tr.at(r, c));
    for (std::size_t k = 0; k < ecols.size(); ++k) os << "," << num(tr.at(r, ecols[k]) - est.delta(k));
    for (std::size_t k = 0; k < ecols.size(); ++k) os << "," << num(tr.at(r, ecols[k]) + est.delta(k));
    for (int c : tcols) os << "," << num(tr.at(r, c));
    os << "\n";
  }
}

Trajectory read_trajectory_csv(std::istream& is) {
  Trajectory tr;
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("trajectory CSV is empty");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) tr.columns.push_back(cell);
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t n = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        tr.data.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("trajectory CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      ++n;
    }
    if (n != tr.columns.size())
      throw ConfigError("trajectory CSV line " + std::to_string(lineno) + ": expected " +
                        std::to_string(tr.columns.size()) + " fields");
  }
  return tr;
}

std::string metrics_json(const Scenario& sc, const Design& d, const RunResult& r,
                         const SimConfig& cfg) {
  const auto& m = r.metrics;
  json j;
  j["scenario"] = sc.name;
  j["design"] = sc.design.label();
  j["seed"] = cfg.seed;
  j["dt"] = cfg.dt;
  j["horizon"] = cfg.horizon;
  j["integrator"] = cfg.integrator == Integrator::euler ? "euler" : "rk4";
  j["noiseless"] = cfg.noiseless;
  j["epsilon"] = sc.observer.epsilon;
  j["crashed"] = m.crashed;
  j["crash_time"] = opt_json(m.crash_time);
  j["relative_velocity_at_crash"] = opt_json(m.rel_vel_at_crash);
  j["min_distance"] = m.min_distance;
  j["end_time"] = m.end_time;
  json fd = json::array();
  for (const auto& o : m.first_detection) fd.push_back(o ? json(*o) : json(nullptr));
  j["first_detection_time"] = fd;
  j["detected"] = m.detected();
  j["steady_state_estimation_error"] = to_std(m.steady_estimation_error);
  j["max_threshold_margin"] = m.max_threshold_margin;
  j["max_threshold_excess"] = m.max_threshold_excess;
  j["tol_stealth"] = m.tol_stealth;
  j["estimator_halfwidth"] = to_std(d.estimator.delta);
  j["rho"] = to_std(sc.observer.rho);
  j["rho_lower_bound"] = to_std(d.rho_bound);
  j["rho_admissible"] = (sc.observer.rho.array() > d.rho_bound.array()).all();
  j["threshold_slope_ratio"] = to_std(r.ratio);
  j["threshold_t_bar"] = to_std(r.t_bar);
  j["poles_E"] = poles_json_string(d.report.poles_E);
  j["poles_F"] = poles_json_string(d.report.poles_F);
  j["rank_M"] = d.report.rank.rank_M;
  return j.dump(2) + "\n";
}

std::string design_table(const std::vector<DesignReport>& reps, bool strict) {
  std::ostringstream os;
  os << std::left << std::setw(44) << "partition" << std::setw(9) << "rv_in_y1"
     << std::setw(24) << "poles(A11,E1)" << std::setw(24) << "poles(A11,F1)"
     << std::setw(8) << "rank" << std::setw(6) << "dims" << "result\n";
  for (const auto& r : reps) {
    os << std::left << std::setw(44) << r.part.label() << std::setw(9)
       << (r.rel_vel_in_y1() ? "yes" : "no");
    if (!r.constructed) {
      os << "not constructed: " << r.diagnosis << "\n";
      continue;
    }
    os << std::setw(24) << format_poles(r.poles_E) << std::setw(24) << format_poles(r.poles_F)
       << std::setw(8) << (std::to_string(r.rank.rank_M) + "/" + std::to_string(r.rank.required))
       << std::setw(6) << (r.rank.dims_ok ? "ok" : "fail")
       << (r.passes(strict) ? "PASS" : "FAIL") << "\n";
  }
  return os.str();
}

std::string design_records(const std::vector<DesignReport>& reps, bool strict) {
  std::ostringstream os;
  for (const auto& r : reps) {
    std::vector<int> order;
    for (int k : r.part.order) order.push_back(k + 1);
    json j = {{"order", order}, {"h", r.part.h}, {"label", r.part.label()},
              {"rel_vel_in_y1", r.rel_vel_in_y1()}, {"constructed", r.constructed},
              {"diagnosis", r.diagnosis}};
    if (r.constructed) {
      j["poles_E"] = format_poles(r.poles_E);
      j["poles_F"] = format_poles(r.poles_F);
      j["pole_admissible_strict"] = r.pole_admissible(true);
      j["pole_admissible"] = r.pole_admissible(false);
      j["rank_M"] = r.rank.rank_M;
      j["rank_F"] = r.rank.rank_F;
      j["required_rank"] = r.rank.required;
      j["dims_ok"] = r.rank.dims_ok;
      j["pass"] = r.passes(strict);
    }
    os << j.dump() << "\n";
  }
  return os.str();
}

std::string sweep_csv(const std::vector<SweepPoint>& pts) {
  std::ostringstream os;
  os << "eta_scale,r_tau,attack_scale,detected,first_detection,crashed,crash_time,"
        "rel_vel_at_crash,min_distance,max_threshold_margin,error\n";
  for (const auto& p : pts) {
    double first = std::numeric_limits<double>::quiet_NaN();
    for (const auto& o : p.metrics.first_detection)
      if (o && !(first <= *o)) first = *o;
    os << num(p.eta_scale) << "," << num(p.r_tau) << "," << num(p.attack_scale) << ","
       << (p.metrics.detected() ? 1 : 0) << "," << num(first) << ","
       << (p.metrics.crashed ? 1 : 0) << "," << num(p.metrics.crash_time) << ","
       << num(p.metrics.rel_vel_at_crash) << "," << num(p.metrics.min_distance) << ","
       << num(p.metrics.max_threshold_margin) << "," << p.error << "\n";
  }
  return os.str();
}

std::string plot_script(const std::string& prefix) {
  std::ostringstream os;
  os << R"(#!/usr/bin/env python3
"""Three panels for one run: attack vs estimate, EOI vs threshold, vehicle response."""
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
prefix = ")" << prefix << R"("
tr = pd.read_csv(os.path.join(here, prefix + "_trajectory.csv"))
est = pd.read_csv(os.path.join(here, prefix + "_estimates.csv"))

fig, ax = plt.subplots(3, 1, figsize=(7, 9), sharex=True)
names = [c[len("est_"):] for c in est.columns if c.startswith("est_")]
for i, n in enumerate(names):
    line, = ax[0].plot(est.t, est["true_" + n], label="attack " + n)
    ax[0].plot(est.t, est["est_" + n], "--", color=line.get_color(), label="estimate " + n)
    ax[0].fill_between(est.t, est["lo_" + n], est["hi_" + n], color=line.get_color(), alpha=0.15)
ax[0].set_ylabel("attack")
ax[0].legend(fontsize=7, ncol=2)

k = 1
while "nufil%d" % k in tr.columns:
    line, = ax[1].plot(tr.t, tr["nufil%d" % k], label="EOI %d" % k)
    ax[1].plot(tr.t, tr["thr%d" % k], ":", color=line.get_color())
    ax[1].plot(tr.t, -tr["thr%d" % k], ":", color=line.get_color())
    k += 1
ax[1].set_ylabel("filtered injection")
ax[1].legend(fontsize=7, ncol=2)

ax[2].plot(tr.t, tr.gap_true, label="true gap [m]")
ax[2].plot(tr.t, tr.v_lead, label="v lead [m/s]")
ax[2].plot(tr.t, tr.v_fol, label="v follower [m/s]")
ax[2].axhline(0, color="k", lw=0.5)
ax[2].set_xlabel("t [s]")
ax[2].legend(fontsize=7)

fig.tight_layout()
out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, prefix + ".png")
fig.savefig(out, dpi=120)
print(out)
)";
  return os.str();
}

std::vector<std::string> write_run_outputs(const std::string& dir, const std::string& prefix,
                                           const Scenario& sc, const Design& d,
                                           const RunResult& r, const SimConfig& cfg) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("E_IO", "cannot create output directory " + dir + ": " + ec.message());
  std::vector<std::string> files;
  auto open = [&](const std::string& name) {
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("E_IO", "cannot write " + path);
    files.push_back(path);
    return f;
  };
  {
    auto f = open(prefix + "_trajectory.csv");
    write_trajectory_csv(f, r.traj);
  }
  {
    auto f = open(prefix + "_detections.csv");
    write_detections_csv(f, r.detections);
  }
  {
    auto f = open(prefix + "_estimates.csv");
    write_estimates_csv(f, r.traj, d.estimator);
  }
  {
    auto f = open(prefix + "_metrics.json");
    f << metrics_json(sc, d, r, cfg);
  }
  {
    auto f = open("plot_" + prefix + ".py");
    f << plot_script(prefix);
  }
  return files;
}

}  // namespace smoguard
