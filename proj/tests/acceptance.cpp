// End-to-end acceptance checks. One PASS/FAIL line per criterion, followed by
// indented detail lines. Exit status is non-zero when any criterion fails.
#include <smoguard/config.hpp>

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#ifndef SMOGUARD_SCENARIO_DIR
#define SMOGUARD_SCENARIO_DIR "scenarios"
#endif

using namespace smoguard;

namespace {

constexpr double kThinEps = 2e-3;
constexpr double kThinDt = 1e-4;

std::vector<std::string> details;

void note(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  details.emplace_back(buf);
}

std::string vs(const Vec& v) {
  std::string s = "(";
  char b[32];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(b, sizeof b, "%s%.4g", i ? ", " : "", v(i));
    s += b;
  }
  return s + ")";
}

Scenario scenario_file(const std::string& name) {
  return load_config(std::string(SMOGUARD_SCENARIO_DIR) + "/" + name).scenario;
}

Scenario with_steps(Scenario sc, const Vec& d, double onset) {
  sc.attack = AttackScenario{};
  sc.attack.name = "steps";
  if (d(0) != 0) sc.attack.du = Signal::of(Waveform::step(d(0), onset));
  const int q = sc.design.y1_size();
  for (int k = 0; k < sc.design.h; ++k)
    if (d(1 + k) != 0)
      sc.attack.dy[sc.design.order[q + k]] = Signal::of(Waveform::step(d(1 + k), onset));
  return sc;
}

Scenario noiseless_exact(Scenario sc) {
  sc.platoon.r_tau = 1.0;  // tau_hat = tau, so the model uncertainty term vanishes
  sc.bounds.eta_bar.setZero();
  sc.bounds.zeta1_bar.setZero();
  sc.noise.bound.setZero();
  // The boundary layer biases the sliding value of nu by about eps/rho
  // relative; a thin layer integrated at a matching step removes it.
  sc.observer.epsilon = kThinEps;
  return sc;
}

SimConfig exact_config(double horizon) {
  SimConfig c;
  c.horizon = horizon;
  c.noiseless = true;
  c.dt = kThinDt;
  c.log_every = 1000;
  return c;
}

Vec tail_mean(const Trajectory& tr, const std::string& prefix, int n, double from) {
  Vec acc = Vec::Zero(n);
  int rows = 0;
  const int t = tr.index("t");
  std::vector<int> cols;
  for (int k = 1; k <= n; ++k) cols.push_back(tr.index(prefix + std::to_string(k)));
  for (std::size_t r = 0; r < tr.rows(); ++r) {
    if (tr.at(r, t) < from) continue;
    for (int k = 0; k < n; ++k) acc(k) += tr.at(r, cols[k]);
    ++rows;
  }
  return rows ? Vec(acc / rows) : Vec::Constant(n, NAN);
}

// ---------------------------------------------------------------------------

bool criterion1() {
  const Scenario sc = table1_scenario();
  const Design d = prepare_design(sc);
  SimConfig cfg;
  cfg.log_every = 100000;
  const int runs = 100;
  std::vector<RunMetrics> m(runs);
  parallel_for(runs, [&](std::size_t i) {
    SimConfig c = cfg;
    c.seed = 1000 + i;
    m[i] = run(sc, d, c).metrics;
  });
  int detections = 0, crashes = 0;
  double excess = -INFINITY, margin = -INFINITY;
  for (const auto& r : m) {
    detections += r.detected();
    crashes += r.crashed;
    excess = std::max(excess, r.max_threshold_excess);
    margin = std::max(margin, r.max_threshold_margin);
  }
  note("%d seeded 60 s runs: %d with detections, %d crashes", runs, detections, crashes);
  note("max(threshold - rho) = %.3g, max(|nu_fil| - threshold) = %.4g", excess, margin);
  return detections == 0 && excess <= 1e-9;
}

bool criterion2() {
  Scenario sc = table1_scenario();
  SimConfig cfg;
  cfg.noiseless = true;
  cfg.horizon = 20;
  bool ok = true;
  const double eps = sc.observer.epsilon;
  for (int variant = 0; variant < 2; ++variant) {
    if (variant == 1) sc.e2_init = (Vec(4) << 0.5, -0.8, 1.0, -0.6).finished();
    const RunResult r = run(sc, cfg);
    const auto& tr = r.traj;
    const int t = tr.index("t");
    const int e0 = tr.index("ey1");
    double reach = NAN, worst_after = 0;
    int v_viol = 0, v_checked = 0;
    double prev_v = NAN;
    for (std::size_t i = 0; i < tr.rows(); ++i) {
      double inf = 0, v = 0;
      for (int k = 0; k < 4; ++k) {
        const double e = tr.at(i, e0 + k);
        inf = std::max(inf, std::abs(e));
        v += 0.5 * e * e;
      }
      if (std::isnan(reach) && inf <= eps) reach = tr.at(i, t);
      if (!std::isnan(reach)) worst_after = std::max(worst_after, inf);
      if (!std::isnan(prev_v) && std::sqrt(2 * prev_v) > 10 * eps) {
        ++v_checked;
        if (!(v < prev_v)) ++v_viol;
      }
      prev_v = v;
    }
    const bool pass = !std::isnan(reach) && reach <= 2.0 && worst_after <= eps && v_viol == 0;
    note("%s: |e_y|inf <= eps=%.3g from t=%.3f s, max afterwards %.3g, V increases %d of %d samples outside 10 eps -> %s",
         variant ? "initial output error (0.5,-0.8,1,-0.6)" : "exact initial estimate", eps, reach,
         worst_after, v_viol, v_checked, pass ? "ok" : "FAIL");
    ok &= pass;
  }
  return ok;
}

struct StepCase {
  const char* family;
  Vec d;
};

std::vector<StepCase> step_cases() {
  std::vector<StepCase> c;
  auto v = [](double a, double b, double cc, double dd) { return (Vec(4) << a, b, cc, dd).finished(); };
  c.push_back({"inside sliding region", v(0, 0.4, -0.3, -0.2)});
  c.push_back({"inside sliding region", v(0, -1.0, 0.5, 0.8)});
  c.push_back({"inside sliding region", v(0, 1.5, 1.5, -1.5)});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 4; ++i) c.push_back({"inside sliding region", v(0, u(rng), u(rng), u(rng))});
  c.push_back({"beyond rho/|F2|", v(0, 5, 5, 2)});
  c.push_back({"input step", v(-1, 0, 0, 0)});
  c.push_back({"input step", v(0.5, 0, 0, 0)});
  return c;
}

bool criterion3() {
  SimConfig cfg;
  cfg.horizon = 30;
  cfg.log_every = 100000;
  note("exact runs use eps=%.3g at dt=%.3g", kThinEps, kThinDt);
  bool ok = true;
  for (const auto& c : step_cases()) {
    const Scenario noisy = with_steps(table1_scenario(), c.d, 1.0);
    const Design dn = prepare_design(noisy);
    const RunResult rn = run(noisy, dn, cfg);
    const double slack = 0.05 * c.d.norm();
    const Vec err = rn.metrics.steady_estimation_error;
    bool pass_noisy = err.allFinite();
    for (Eigen::Index k = 0; k < err.size() && pass_noisy; ++k)
      pass_noisy = err(k) <= dn.estimator.delta(k) + slack;

    const Scenario exact = noiseless_exact(with_steps(table1_scenario(), c.d, 1.0));
    const RunResult re = run(exact, exact_config(cfg.horizon));
    const Vec erre = re.metrics.steady_estimation_error;
    const bool pass_exact = erre.allFinite() && erre.maxCoeff() <= 1e-3;
    note("%-22s delta=%s: noisy err %s vs halfwidth+slack %.3g.. -> %s; exact err %s -> %s",
         c.family, vs(c.d).c_str(), vs(err).c_str(), dn.estimator.delta.minCoeff() + slack,
         pass_noisy ? "ok" : "FAIL", vs(erre).c_str(), pass_exact ? "ok" : "FAIL");
    ok &= pass_noisy && pass_exact;
  }
  return ok;
}

bool criterion4() {
  const SimConfig cfg = exact_config(30);
  bool ok = true;
  note("noiseless, eps=%.3g at dt=%.3g, limit taken as the mean over the last 20%% of 30 s", kThinEps,
       kThinDt);
  int corrected_ok = 0, n = 0;
  for (const auto& c : step_cases()) {
    if (std::string(c.family) == "beyond rho/|F2|") continue;
    const Scenario sc = noiseless_exact(with_steps(table1_scenario(), c.d, 1.0));
    const auto sys = build_partitioned(build_extended(sc.platoon, sc.design, sc.filter_pole));
    // oracle through an independent pseudo-inverse path
    const Mat A11p = sys.A11.completeOrthogonalDecomposition().pseudoInverse();
    const Vec oracle = (sys.A21 * A11p * sys.F1 - sys.F2) * c.d;
    const RunResult r = run(sc, cfg);
    const Vec lim = tail_mean(r.traj, "nufil", 4, 0.8 * cfg.horizon);
    const double rel = (lim - oracle).norm() / oracle.norm();
    const double rel_neg = (lim + oracle).norm() / oracle.norm();
    const bool pass = rel <= 1e-3;
    corrected_ok += rel_neg <= 1e-3;
    ++n;
    note("delta=%s: lim nu_fil=%s, M*delta=%s, rel err %.3g (%s); vs -M*delta rel err %.3g",
         vs(c.d).c_str(), vs(lim).c_str(), vs(oracle).c_str(), rel, pass ? "ok" : "FAIL", rel_neg);
    ok &= pass;
  }
  note("%d of %d cases match -M*delta to 1e-3 (sign-corrected limit)", corrected_ok, n);
  return ok;
}

bool criterion5() {
  const Scenario st = scenario_file("stealthy.json");
  SimConfig cfg;
  cfg.horizon = 60;
  bool ok = true;
  for (int noisy = 0; noisy < 2; ++noisy) {
    SimConfig c = cfg;
    c.noiseless = !noisy;
    c.seed = 42;
    const RunResult a = run(st, c);
    const RunResult h = run(stealth_reference(st), c);
    const RunDifference d = compare_runs(a.traj, h.traj);
    const double tol = a.metrics.tol_stealth;
    const bool pass = d.outputs <= tol && d.nu_fil <= tol;
    note("%s: over %.2f s, output diff %.3g, nu_fil diff %.3g, e_y diff %.3g, position diff %.3g, tol_stealth %.3g -> %s",
         noisy ? "noisy" : "noiseless", a.metrics.end_time, d.outputs, d.nu_fil, d.e_y, d.positions,
         tol, pass ? "ok" : "FAIL");
    ok &= pass;
  }

  // Sign resolution: regenerate the attack with each sign pair.
  const Waveform prof = Waveform::filtered_ramp(0.5, 2.0, 5.0);
  int passing_integral = 0;
  for (int si : {+1, -1}) {
    for (int sg : {+1, -1}) {
      Scenario sc = table1_scenario();
      sc.attack = make_stealthy(prof, sc.platoon.tau_lead, {si, sg});
      SimConfig c = cfg;
      c.horizon = 11.0;  // before the crash of the matching attack
      c.seed = 42;
      std::string verdict;
      bool pass = false;
      try {
        const RunResult a = run(sc, c);
        const RunResult h = run(stealth_reference(sc), c);
        const RunDifference d = compare_runs(a.traj, h.traj);
        pass = d.outputs <= a.metrics.tol_stealth && d.nu_fil <= a.metrics.tol_stealth;
        char b[128];
        std::snprintf(b, sizeof b, "output diff %.3g, nu_fil diff %.3g", d.outputs, d.nu_fil);
        verdict = b;
      } catch (const Error& e) {
        verdict = std::string("aborted: ") + e.what();
      }
      if (si == +1 && pass) ++passing_integral;
      note("signs (input %+d, gap integral %+d): %s -> %s", si, sg, verdict.c_str(),
           pass ? "stealthy" : "not stealthy");
    }
  }
  note("with the model-consistent input sign, %d gap-integral sign(s) pass", passing_integral);
  return ok && passing_integral == 1;
}

bool criterion6() {
  SimConfig cfg;
  cfg.log_every = 1000;
  bool ok = true;
  {
    const RunResult r = run(scenario_file("quantifiable.json"), cfg);
    const bool pass = r.metrics.crashed && std::abs(r.metrics.rel_vel_at_crash) < 1.0;
    note("quantifiable: crashed=%d at t=%.2f s, closing speed %.3f m/s (need < 1), detected=%d -> %s",
         r.metrics.crashed, r.metrics.crash_time, r.metrics.rel_vel_at_crash, r.metrics.detected(),
         pass ? "ok" : "FAIL");
    ok &= pass;
  }
  {
    const RunResult r = run(scenario_file("stealthy.json"), cfg);
    const bool pass = r.metrics.crashed && std::abs(r.metrics.rel_vel_at_crash) > 2.0;
    note("stealthy: crashed=%d at t=%.2f s, closing speed %.3f m/s (need > 2), detected=%d -> %s",
         r.metrics.crashed, r.metrics.crash_time, r.metrics.rel_vel_at_crash, r.metrics.detected(),
         pass ? "ok" : "FAIL");
    ok &= pass;
  }
  {
    const RunResult r = run(scenario_file("nonstealthy.json"), cfg);
    const bool pass = !r.metrics.crashed && !r.metrics.detected();
    note("non-stealthy: crashed=%d, min gap %.3f m, detected=%d -> %s", r.metrics.crashed,
         r.metrics.min_distance, r.metrics.detected(), pass ? "ok" : "FAIL");
    ok &= pass;
  }
  return ok;
}

bool criterion7() {
  const PlatoonParams p;
  const auto reps = enumerate_designs(p);
  int rv_out_admissible[2] = {0, 0}, rv_in_admissible[2] = {0, 0}, rv_out = 0;
  bool h4_dims_fail = true;
  int h4 = 0;
  bool chosen_pass[2] = {false, false};
  int full_rv_out = 0;
  for (const auto& r : reps) {
    full_rv_out += !r.rel_vel_in_y1() && r.passes(false);
    for (int strict = 0; strict < 2; ++strict) {
      if (r.pole_admissible(strict)) (r.rel_vel_in_y1() ? rv_in_admissible : rv_out_admissible)[strict]++;
    }
    if (!r.rel_vel_in_y1()) ++rv_out;
    if (r.part.h == 4) {
      ++h4;
      h4_dims_fail &= r.constructed && !r.rank.dims_ok;
    }
    if (r.part.h == 3 && r.part.order[0] == kRelVel)
      for (int strict = 0; strict < 2; ++strict) chosen_pass[strict] |= r.passes(strict);
  }
  note("%zu candidates enumerated", reps.size());
  for (int strict = 0; strict < 2; ++strict)
    note("%s poles: %d of %d designs with rel_vel in y2 are pole-admissible, %d with rel_vel in y1; chosen design passes=%d",
         strict ? "strict" : "non-strict", rv_out_admissible[strict], rv_out, rv_in_admissible[strict],
         chosen_pass[strict]);
  note("h=4: %d designs, all fail the dimension check=%d", h4, h4_dims_fail);
  note("poles and rank together: %d designs with rel_vel in y2 pass", full_rv_out);
  const bool gate = rv_out_admissible[0] == 0;
  note("gate under the documented non-strict policy: %s", gate ? "holds" : "violated");
  return reps.size() == 120 && gate && chosen_pass[0] && h4_dims_fail;
}

Mat rk4_expm(const Mat& a, double t, int steps) {
  Mat x = Mat::Identity(a.rows(), a.cols());
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const Mat k1 = a * x;
    const Mat k2 = a * (x + 0.5 * h * k1);
    const Mat k3 = a * (x + 0.5 * h * k2);
    const Mat k4 = a * (x + h * k3);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

std::vector<double> terminal_state(const SimConfig& c, const Scenario& sc) {
  const RunResult r = run(sc, c);
  const auto& a = r.traj;
  const std::size_t ra = a.rows() - 1;
  std::vector<double> x;
  for (const char* n : {"p_lead", "v_lead", "a_lead", "p_fol", "v_fol", "a_fol", "u_fol"})
    x.push_back(a.at(ra, a.index(n)));
  for (int k = 1; k <= 5; ++k) x.push_back(a.at(ra, a.index("xhat1_" + std::to_string(k))));
  for (int k = 1; k <= 4; ++k) x.push_back(a.at(ra, a.index("xhat2_" + std::to_string(k))));
  for (int k = 1; k <= 4; ++k) x.push_back(a.at(ra, a.index("nufil" + std::to_string(k))));
  return x;
}

bool criterion8() {
  bool ok = true;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  double worst_exp = 0;
  for (int i = 0; i < 24; ++i) {
    const int n = 2 + i % 8;
    Mat b(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) b(r, c) = g(rng);
    Eigen::EigenSolver<Mat> es(b, false);
    const double shift = es.eigenvalues().real().maxCoeff() + 0.5;
    const Mat a = b - shift * Mat::Identity(n, n);
    for (double t : {0.5, 1.0, 2.0}) {
      const Mat e = matrix_exponential(a, t);
      const Mat o = rk4_expm(a, t, static_cast<int>(4000 * t));
      worst_exp = std::max(worst_exp, (e - o).norm() / o.norm());
    }
  }
  const bool exp_ok = worst_exp <= 1e-8;
  note("matrix exponential vs RK4 oracle, 24 random stable matrices x 3 times: worst rel err %.3g -> %s",
       worst_exp, exp_ok ? "ok" : "FAIL");
  ok &= exp_ok;

  double worst_pen = 0;
  const int shapes[][2] = {{5, 5}, {4, 5}, {5, 4}, {4, 4}, {9, 9}, {4, 9}};
  for (auto [m, n] : shapes) {
    for (int i = 0; i < 100; ++i) {
      const int rank = (i % 2) ? std::min(m, n) : std::max(1, std::min(m, n) - 1 - i % 3);
      Mat l(m, rank), r(rank, n);
      for (int a = 0; a < m; ++a)
        for (int c = 0; c < rank; ++c) l(a, c) = g(rng);
      for (int a = 0; a < rank; ++a)
        for (int c = 0; c < n; ++c) r(a, c) = g(rng);
      const Mat A = l * r;
      const Mat X = pseudo_inverse(A);
      const double na = A.norm(), nx = X.norm();
      worst_pen = std::max({worst_pen, (A * X * A - A).norm() / na, (X * A * X - X).norm() / nx,
                            ((A * X).transpose() - A * X).norm(),
                            ((X * A).transpose() - X * A).norm()});
    }
  }
  const bool pen_ok = worst_pen <= 1e-9;
  note("pseudo-inverse Penrose identities, 600 matrices incl. rank-deficient: worst residual %.3g -> %s",
       worst_pen, pen_ok ? "ok" : "FAIL");
  ok &= pen_ok;

  // Grid refinement on a smooth interval: noiseless, observer inside the
  // boundary layer, leader following a gentle sinusoidal input.
  Scenario sc = table1_scenario();
  sc.leader_input = Signal::of(Waveform::sinusoid(0.5, 0.2, 0.0, 0.0));
  for (Integrator integ : {Integrator::euler, Integrator::rk4}) {
    std::vector<std::vector<double>> xs;
    for (double dt : {1e-3, 5e-4, 2.5e-4}) {
      SimConfig c;
      c.dt = dt;
      c.horizon = 4.0;
      c.noiseless = true;
      c.integrator = integ;
      c.log_every = 1000000;
      xs.push_back(terminal_state(c, sc));
    }
    double e1 = 0, e2 = 0;
    for (std::size_t k = 0; k < xs[0].size(); ++k) {
      e1 = std::max(e1, std::abs(xs[0][k] - xs[1][k]));
      e2 = std::max(e2, std::abs(xs[1][k] - xs[2][k]));
    }
    const double order = std::log2(e1 / e2);
    // The switching injection is held over each step, so both schemes are
    // first order in the coupled system.
    const bool conv = e2 < e1 && order >= 1.0 - 0.3;
    note("%s: successive terminal differences %.3g, %.3g, observed order %.2f (documented 1) -> %s",
         integ == Integrator::euler ? "euler" : "rk4", e1, e2, order, conv ? "ok" : "FAIL");
    ok &= conv;
  }
  return ok;
}

}  // namespace

int main() {
  struct Item {
    int id;
    const char* title;
    std::function<bool()> fn;
  };
  const std::vector<Item> items{
      {1, "no false alarms on healthy runs", criterion1},
      {2, "sliding convergence of the output error", criterion2},
      {3, "quantifiable attack estimation", criterion3},
      {4, "final value of the filtered injection", criterion4},
      {5, "stealth equivalence", criterion5},
      {6, "scenario reproduction", criterion6},
      {7, "design gate", criterion7},
      {8, "numerical hygiene", criterion8},
  };
  int failed = 0;
  for (const auto& it : items) {
    details.clear();
    bool pass = false;
    try {
      pass = it.fn();
    } catch (const std::exception& e) {
      note("aborted: %s", e.what());
    }
    std::printf("[criterion %d] %s: %s\n", it.id, pass ? "PASS" : "FAIL", it.title);
    for (const auto& d : details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    failed += !pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(items.size()) - failed, items.size());
  return failed ? 1 : 0;
}
