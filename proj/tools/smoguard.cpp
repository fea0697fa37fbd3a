// smoguard: simulate, classify and check sliding-mode attack detectors for a
// two-car CACC platoon.
#include <smoguard/report.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

using namespace smoguard;

namespace {

struct Common {
  std::string config;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool strict = false;
  bool noiseless = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config,-c", c.config, "run configuration (JSON with comments)");
  app->add_option("--preset", c.preset_name, "named preset, e.g. table1");
  app->add_option("--seed", c.seed, "noise seed");
  app->add_option("--out-dir,-o", c.out_dir, "output directory");
  app->add_flag("--strict-poles", c.strict, "reject marginal reachable poles");
  app->add_flag("--noiseless", c.noiseless, "disable measurement noise");
}

RunConfig load(const Common& c) {
  if (!c.config.empty() && !c.preset_name.empty())
    throw Error("E_USAGE", "use either --config or --preset");
  RunConfig cfg = c.config.empty() ? preset(c.preset_name.empty() ? "table1" : c.preset_name)
                                   : load_config(c.config);
  if (c.seed) cfg.sim.seed = *c.seed;
  if (!c.out_dir.empty()) cfg.output.dir = c.out_dir;
  if (c.strict) cfg.scenario.strict_poles = true;
  if (c.noiseless) cfg.sim.noiseless = true;
  return cfg;
}

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

std::string vec_str(const Vec& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v(i));
  return s + ")";
}

int cmd_simulate(const Common& c) {
  const RunConfig cfg = load(c);
  const Design d = prepare_design(cfg.scenario);
  const RunResult r = run(cfg.scenario, d, cfg.sim);
  const std::string prefix = cfg.output.prefix.empty() ? cfg.scenario.name : cfg.output.prefix;
  const auto files = write_run_outputs(cfg.output.dir, prefix, cfg.scenario, d, r, cfg.sim);
  const auto& m = r.metrics;
  std::cout << "scenario " << cfg.scenario.name << " (" << cfg.scenario.design.label()
            << ", seed " << cfg.sim.seed << ")\n";
  if (m.crashed)
    std::cout << "  crash at t=" << fmt(m.crash_time) << " s, follower closing speed "
              << fmt(m.rel_vel_at_crash) << " m/s\n";
  else
    std::cout << "  no crash, min gap " << fmt(m.min_distance) << " m\n";
  if (r.detections.empty()) {
    std::cout << "  no detection\n";
  } else {
    for (const auto& e : r.detections)
      std::cout << "  detection on channel " << e.channel + 1 << " at t=" << fmt(e.t)
                << " s (|nu_fil|=" << fmt(std::abs(e.nu_fil)) << " > " << fmt(e.threshold)
                << ")\n";
  }
  std::cout << "  steady-state estimation error " << vec_str(m.steady_estimation_error) << "\n";
  if ((cfg.scenario.observer.rho.array() <= d.rho_bound.array()).any())
    std::cout << "  warning: rho " << vec_str(cfg.scenario.observer.rho)
              << " is below the admissibility bound " << vec_str(d.rho_bound) << "\n";
  for (const auto& f : files) std::cout << "  wrote " << f << "\n";
  return 0;
}

int cmd_classify(const Common& c, const std::string& tau_choice) {
  const RunConfig cfg = load(c);
  const auto& sc = cfg.scenario;
  const double tau = tau_choice == "model" ? sc.platoon.tau_hat() : sc.platoon.tau_lead;
  const Classification cl = classify(sc.attack, sc.design, tau, cfg.sim.horizon);
  std::cout << "class: " << attack_class_name(cl.cls) << "\n";
  std::cout << "reason: " << cl.reason << "\n";
  return 0;
}

int cmd_design_check(const Common& c, bool as_json) {
  const RunConfig cfg = load(c);
  const auto& sc = cfg.scenario;
  const auto reps = enumerate_designs(sc.platoon, sc.filter_pole, sc.marginal_tol);
  std::cout << (as_json ? design_records(reps, sc.strict_poles)
                        : design_table(reps, sc.strict_poles));
  const DesignReport mine = check_design(sc.platoon, sc.design, sc.filter_pole, sc.marginal_tol);
  const bool ok = mine.passes(sc.strict_poles);
  std::cout << "\nconfigured design " << sc.design.label() << ": " << (ok ? "PASS" : "FAIL")
            << " (" << (sc.strict_poles ? "strict" : "non-strict") << " pole policy)";
  if (!mine.diagnosis.empty()) std::cout << " " << mine.diagnosis;
  std::cout << "\n";
  if (ok) {
    const Design d = prepare_design(sc);
    std::cout << "rho " << vec_str(sc.observer.rho) << " vs lower bound "
              << vec_str(d.rho_bound)
              << ((sc.observer.rho.array() > d.rho_bound.array()).all() ? " (admissible)\n"
                                                                       : " (NOT admissible)\n");
  }
  return ok ? 0 : 1;
}

int cmd_estimate(const Common& c, const std::string& input, const std::string& output) {
  const RunConfig cfg = load(c);
  const Design d = prepare_design(cfg.scenario);
  std::ifstream in(input);
  if (!in) throw Error("E_IO", "cannot open " + input);
  const Trajectory tr = read_trajectory_csv(in);
  const int t = tr.index("t");
  if (t < 0) throw ConfigError(input + ": missing column t");
  std::vector<int> cols;
  for (int k = 1; k <= d.sys.p; ++k) {
    const int i = tr.index("nufil" + std::to_string(k));
    if (i < 0) throw ConfigError(input + ": missing column nufil" + std::to_string(k));
    cols.push_back(i);
  }
  std::ofstream fout;
  std::ostream* os = &std::cout;
  if (!output.empty()) {
    fout.open(output);
    if (!fout) throw Error("E_IO", "cannot write " + output);
    os = &fout;
  }
  const int q = d.sys.p - d.sys.h;
  std::vector<std::string> names{"du"};
  for (int k = 0; k < d.sys.h; ++k) names.push_back(channel_name(cfg.scenario.design.order[q + k]));
  *os << "t";
  for (const auto& n : names) *os << ",est_" << n;
  for (const auto& n : names) *os << ",halfwidth_" << n;
  *os << "\n";
  Vec nf(d.sys.p);
  for (std::size_t r = 0; r < tr.rows(); ++r) {
    for (int k = 0; k < d.sys.p; ++k) nf(k) = tr.at(r, cols[k]);
    const Estimate e = estimate(nf, d.estimator);
    *os << tr.at(r, t);
    for (Eigen::Index k = 0; k < e.center.size(); ++k) *os << "," << e.center(k);
    for (Eigen::Index k = 0; k < e.halfwidth.size(); ++k) *os << "," << e.halfwidth(k);
    *os << "\n";
  }
  return 0;
}

int cmd_sweep(const Common& c) {
  const RunConfig cfg = load(c);
  if (cfg.sweep.empty()) {
    std::cout << "empty sweep grid, nothing to do\n";
    return 0;
  }
  prepare_design(cfg.scenario);
  const auto pts = run_sweep(cfg);
  const std::string csv = sweep_csv(pts);
  std::filesystem::create_directories(cfg.output.dir);
  const std::string prefix = cfg.output.prefix.empty() ? cfg.scenario.name : cfg.output.prefix;
  const auto path = (std::filesystem::path(cfg.output.dir) / (prefix + "_sweep.csv")).string();
  std::ofstream f(path);
  if (!f) throw Error("E_IO", "cannot write " + path);
  f << csv;
  std::cout << csv << "wrote " << path << "\n";
  return 0;
}

int cmd_show_config(const Common& c) {
  std::cout << serialize_config(load(c));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliding-mode attack detection for a two-car CACC platoon"};
  app.require_subcommand(1);
  Common common;

  auto* sim = app.add_subcommand("simulate", "run one closed-loop scenario and write CSV, metrics and a plot script");
  add_common(sim, common);

  std::string tau_choice = "true";
  auto* cls = app.add_subcommand("classify", "classify the configured attack");
  add_common(cls, common);
  cls->add_option("--tau", tau_choice, "lag used in the stealth relation")
      ->check(CLI::IsMember({"true", "model"}));

  bool as_json = false;
  auto* dc = app.add_subcommand("design-check", "enumerate output splits and check the configured one");
  add_common(dc, common);
  dc->add_flag("--json", as_json, "one JSON record per design");

  std::string input, output;
  auto* est = app.add_subcommand("estimate", "attack estimates from a trajectory CSV");
  add_common(est, common);
  est->add_option("--input,-i", input, "trajectory CSV with nufil columns")->required();
  est->add_option("--output", output, "output CSV (default stdout)");

  auto* sw = app.add_subcommand("sweep", "grid over uncertainty, lag ratio and attack scale");
  add_common(sw, common);

  auto* show = app.add_subcommand("show-config", "print the normalized configuration");
  add_common(show, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[E_USAGE]: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(common);
    if (*cls) return cmd_classify(common, tau_choice);
    if (*dc) return cmd_design_check(common, as_json);
    if (*est) return cmd_estimate(common, input, output);
    if (*sw) return cmd_sweep(common);
    if (*show) return cmd_show_config(common);
  } catch (const Error& e) {
    std::string msg = e.what();
    for (auto& ch : msg)
      if (ch == '\n') ch = ' ';
    std::cerr << "error[" << e.code() << "]: " << msg << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[E_INTERNAL]: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
