#include "smoguard/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <mutex>
#include <thread>

namespace smoguard {

void SimConfig::validate() const {
  if (!(dt > 0) || !std::isfinite(dt)) throw ConfigError("sim.dt must be positive");
  if (!(horizon >= dt)) throw ConfigError("sim.horizon must be >= dt");
  if (log_every < 1) throw ConfigError("sim.log_every must be >= 1");
  if (!(dwell_steps >= 0)) throw ConfigError("sim.dwell_steps must be >= 0");
  if (!(steady_fraction > 0 && steady_fraction <= 1))
    throw ConfigError("sim.steady_fraction must be in (0, 1]");
}

void Scenario::validate() const {
  platoon.validate();
  design.validate();
  if (!(filter_pole < 0)) throw ConfigError("design.filter_pole must be negative");
  observer.validate(design.p());
  const int h = design.h, q = design.p() - h;
  if (bounds.eta_bar.size() != 1 + h) throw ConfigError("bounds.eta_bar must have 1+h entries");
  if (bounds.zeta1_bar.size() != q) throw ConfigError("bounds.zeta1_bar must have 4-h entries");
  if ((bounds.eta_bar.array() < 0).any() || (bounds.zeta1_bar.array() < 0).any())
    throw ConfigError("noise bounds must be non-negative");
  if (attack_bounds.delta_bar.size() != 1 + h)
    throw ConfigError("bounds.delta_bar must have 1+h entries");
  if (e2_init.size() != 0 && e2_init.size() != design.p())
    throw ConfigError("observer.initial_error_x2 must have 4 entries");
  leader_input.validate();
  attack.validate();
}

Scenario table1_scenario() {
  Scenario sc;
  sc.bounds.eta_bar = (Vec(4) << 1.0, 0.15, 0.03, 0.15).finished();
  sc.bounds.zeta1_bar = (Vec(1) << 0.3).finished();
  sc.attack_bounds.delta_bar = Vec::Constant(4, 10.0);
  sc.noise.bound << 0.15, 0.3, 0.03, 0.15;
  return sc;
}

Scenario stealth_reference(const Scenario& sc) {
  Scenario ref = sc;
  ref.name = sc.name + "_reference";
  for (const auto& t : sc.attack.du.terms) ref.leader_input.terms.push_back(t);
  ref.attack = AttackScenario{};
  return ref;
}

Design prepare_design(const Scenario& sc) {
  sc.validate();
  Design d;
  d.report = check_design(sc.platoon, sc.design, sc.filter_pole, sc.marginal_tol);
  if (!d.report.constructed) throw DesignError(d.report.diagnosis);
  if (!d.report.pole_admissible(sc.strict_poles)) {
    std::ostringstream os;
    os << "design " << sc.design.label() << " fails the "
       << (sc.strict_poles ? "strict" : "non-strict")
       << " pole check: E poles " << format_poles(d.report.poles_E) << ", F poles "
       << format_poles(d.report.poles_F);
    throw DesignError(os.str());
  }
  d.sys = build_partitioned(build_extended(sc.platoon, sc.design, sc.filter_pole));
  d.estimator = build_estimator(d.sys, sc.bounds.eta_bar);
  d.bounds = detector_error_bounds(d.sys, sc.bounds, sc.observer);
  d.rho_bound = rho_lower_bound(d.sys, d.bounds, sc.bounds,
                                RhoBoundInputs{sc.attack_bounds.delta_bar, false, {}, {}});
  return d;
}

int Trajectory::index(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

std::vector<double> Trajectory::column(const std::string& name) const {
  const int c = index(name);
  if (c < 0) throw ConfigError("no trajectory column named " + name);
  std::vector<double> v(rows());
  for (std::size_t r = 0; r < v.size(); ++r) v[r] = at(r, c);
  return v;
}

bool RunMetrics::detected() const {
  return std::any_of(first_detection.begin(), first_detection.end(),
                     [](const auto& o) { return o.has_value(); });
}

bool crash_check(double true_gap) { return true_gap <= 0.0; }

double stealth_tolerance(const Scenario& sc, const Design& d, const SimConfig& cfg) {
  const double scale = d.sys.ext.A.cwiseAbs().rowwise().sum().maxCoeff();
  return 50 * sc.observer.epsilon + 10 * cfg.dt * scale;
}

namespace {

// Layout of the stacked ODE state.
struct Layout {
  int n_plant = 7, h, m, p;
  int z0() const { return n_plant; }
  int x1() const { return n_plant + h; }
  int x2() const { return x1() + m; }
  int nf() const { return x2() + p; }
  int size() const { return nf() + p; }
};

struct Sample {
  Eigen::Vector4d y, ya;
  AttackSample atk;
  double u_lead = 0, u_a = 0;
  Vec y_obs, u_obs;
};

class Loop {
 public:
  Loop(const Scenario& sc, const Design& d) : sc_(sc), d_(d) {
    lay_.h = d.sys.h;
    lay_.m = d.sys.m();
    lay_.p = d.sys.p;
  }

  const Layout& layout() const { return lay_; }

  PlatoonState plant(const Vec& x) const {
    return PlatoonState::from_vec(x.head<7>());
  }

  Sample sample(const Vec& x, double t, const Eigen::Vector4d& w) const {
    Sample s;
    const PlatoonState ps = plant(x);
    s.y = measure(ps, sc_.platoon.length, w);
    s.atk = sc_.attack.eval(t);
    s.u_lead = sc_.leader_input.eval(t);
    const Injected inj = inject(s.u_lead, s.y, s.atk);
    s.ya = inj.y_a;
    s.u_a = inj.u_a;
    const int q = lay_.p - lay_.h;
    s.y_obs.resize(lay_.p);
    for (int k = 0; k < q; ++k) s.y_obs(k) = s.ya(sc_.design.order[k]);
    s.y_obs.tail(lay_.h) = x.segment(lay_.z0(), lay_.h);
    s.u_obs.resize(2 + lay_.h);
    s.u_obs(0) = s.u_a;
    s.u_obs(1) = ps.u_fol;
    s.u_obs.tail(lay_.h) = d_.sys.ext.c2;
    return s;
  }

  Vec derivative(const Vec& x, double t, const Eigen::Vector4d& w, const Vec& nu) const {
    const Sample s = sample(x, t, w);
    const PlatoonState ps = plant(x);
    Vec dx(lay_.size());
    const Car dl = car_derivative({ps.p_lead, ps.v_lead, ps.a_lead}, s.u_lead,
                                  sc_.platoon.tau_lead);
    const Car df = car_derivative({ps.p_fol, ps.v_fol, ps.a_fol}, ps.u_fol,
                                  sc_.platoon.tau_fol);
    const SpacingError err =
        spacing_error(s.ya, sc_.platoon.standstill, sc_.platoon.h_ref);
    dx.head<7>() << dl[0], dl[1], dl[2], df[0], df[1], df[2],
        controller_derivative(ps.u_fol, err, s.u_a, sc_.platoon);

    const int q = lay_.p - lay_.h;
    Vec y2(lay_.h);
    for (int k = 0; k < lay_.h; ++k) y2(k) = s.ya(sc_.design.order[q + k]);
    dx.segment(lay_.z0(), lay_.h) =
        output_filter_derivative(x.segment(lay_.z0(), lay_.h), y2, d_.sys.ext.A_f);

    ObserverState obs{x.segment(lay_.x1(), lay_.m), x.segment(lay_.x2(), lay_.p),
                      x.segment(lay_.nf(), lay_.p)};
    const auto od = observer_derivative(obs, s.u_obs, s.y_obs, d_.sys, sc_.observer, nu);
    dx.segment(lay_.x1(), lay_.m) = od.dxhat1;
    dx.segment(lay_.x2(), lay_.p) = od.dxhat2;
    dx.segment(lay_.nf(), lay_.p) = eoi_derivative(obs.nu_fil, nu, sc_.observer.A_nu);
    return dx;
  }

 private:
  const Scenario& sc_;
  const Design& d_;
  Layout lay_;
};

std::vector<std::string> make_columns(const Scenario& sc, const Layout& L) {
  std::vector<std::string> c{"t", "p_lead", "v_lead", "a_lead", "p_fol", "v_fol",
                             "a_fol", "u_fol", "gap_true"};
  for (int k = 0; k < 4; ++k) c.push_back(std::string("y_") + channel_name(k));
  for (int k = 0; k < 4; ++k) c.push_back(std::string("ya_") + channel_name(k));
  c.insert(c.end(), {"u_lead", "u_a", "du"});
  for (int k = 0; k < 4; ++k) c.push_back(std::string("dy_") + channel_name(k));
  for (int k = 0; k < L.h; ++k) c.push_back("z" + std::to_string(k + 1));
  for (int k = 0; k < L.m; ++k) c.push_back("xhat1_" + std::to_string(k + 1));
  for (int k = 0; k < L.p; ++k) c.push_back("xhat2_" + std::to_string(k + 1));
  for (int k = 0; k < L.p; ++k) c.push_back("ey" + std::to_string(k + 1));
  for (int k = 0; k < L.p; ++k) c.push_back("nu" + std::to_string(k + 1));
  for (int k = 0; k < L.p; ++k) c.push_back("nufil" + std::to_string(k + 1));
  for (int k = 0; k < L.p; ++k) c.push_back("thr" + std::to_string(k + 1));
  const int q = L.p - L.h;
  std::vector<std::string> names{"du"};
  for (int k = 0; k < L.h; ++k) names.push_back(channel_name(sc.design.order[q + k]));
  for (const auto& n : names) c.push_back("est_" + n);
  for (const auto& n : names) c.push_back("true_" + n);
  return c;
}

}  // namespace

RunResult run(const Scenario& sc, const SimConfig& cfg) {
  const Design d = prepare_design(sc);
  return run(sc, d, cfg);
}

RunResult run(const Scenario& sc, const Design& d, const SimConfig& cfg) {
  cfg.validate();
  sc.validate();
  Loop loop(sc, d);
  const Layout L = loop.layout();
  const auto& sys = d.sys;

  NoiseSpec ns = sc.noise;
  ns.seed = cfg.seed;
  NoiseSampler noise(ns);

  ThresholdTracker tracker(sc.observer.rho, sc.observer.A_nu, d.bounds,
                           cfg.dwell_steps * cfg.dt);

  // initial condition
  Vec x = Vec::Zero(L.size());
  x.head<7>() = sc.initial.to_vec();
  {
    const AttackSample a0 = sc.attack.eval(0.0);
    const Eigen::Vector4d y0 =
        measure(sc.initial, sc.platoon.length, Eigen::Vector4d::Zero()) + a0.dy;
    const int q = L.p - L.h;
    for (int k = 0; k < L.h; ++k) x(L.z0() + k) = y0(sc.design.order[q + k]);
    Vec xe(sys.n);
    xe.head(6) = sc.initial.to_vec().head(6);
    xe.tail(L.h) = x.segment(L.z0(), L.h);
    Vec xh = sys.T * xe;
    if (sc.bounds.e1_init.size()) xh.head(L.m) += sc.bounds.e1_init;
    if (sc.e2_init.size()) xh.tail(L.p) += sc.e2_init;
    x.segment(L.x1(), L.m + L.p) = xh;
  }

  RunResult res;
  res.ratio = tracker.ratio();
  res.t_bar = tracker.t_bar();
  res.traj.columns = make_columns(sc, L);
  auto& M = res.metrics;
  M.first_detection.assign(L.p, std::nullopt);
  M.steady_estimation_error = Vec::Constant(1 + L.h, std::numeric_limits<double>::quiet_NaN());
  M.tol_stealth = stealth_tolerance(sc, d, cfg);

  const auto nsteps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
  const double steady_from = cfg.horizon * (1 - cfg.steady_fraction);
  std::vector<double> row(res.traj.columns.size());

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const Eigen::Vector4d w =
        cfg.noiseless ? Eigen::Vector4d::Zero().eval() : noise.sample();
    const Sample s = loop.sample(x, t, w);
    if (sc.attack_bounds.delta_bar.size())
      check_attack_bounds(s.atk, sc.design, sc.attack_bounds, t);
    const Vec e_y = innovation(x.segment(L.x2(), L.p), s.y_obs, sys.c);
    const Vec nu = switching_injection(e_y, sc.observer.rho, sc.observer.epsilon);
    const Vec nu_fil = x.segment(L.nf(), L.p);

    tracker.track(nu, t);
    for (const auto& ev : tracker.detect(nu_fil, t)) {
      res.detections.push_back(ev);
      M.first_detection[ev.channel] = ev.t;
    }
    const Vec thr = tracker.thresholds();
    M.max_threshold_excess =
        std::max(M.max_threshold_excess, (thr - sc.observer.rho).maxCoeff());
    M.max_threshold_margin =
        std::max(M.max_threshold_margin, (nu_fil.cwiseAbs() - thr).maxCoeff());

    const Estimate est = estimate(nu_fil, d.estimator);
    const Vec truth = stacked_attack(s.atk, sc.design);
    if (t >= steady_from - 1e-12) {
      const Vec err = (est.center - truth).cwiseAbs();
      auto& acc = M.steady_estimation_error;
      for (Eigen::Index j = 0; j < acc.size(); ++j)
        acc(j) = std::isnan(acc(j)) ? err(j) : std::max(acc(j), err(j));
    }

    const PlatoonState ps = PlatoonState::from_vec(x.head<7>());
    const double gap = ps.p_lead - ps.p_fol - sc.platoon.length;
    M.min_distance = std::min(M.min_distance, gap);
    const bool crashed = crash_check(gap);
    const bool last = k == nsteps || (crashed && cfg.stop_on_crash);

    if (k % cfg.log_every == 0 || last) {
      std::size_t i = 0;
      auto put = [&](double v) { row[i++] = v; };
      put(t);
      for (int j = 0; j < 7; ++j) put(x(j));
      put(gap);
      for (int j = 0; j < 4; ++j) put(s.y(j));
      for (int j = 0; j < 4; ++j) put(s.ya(j));
      put(s.u_lead);
      put(s.u_a);
      put(s.atk.du);
      for (int j = 0; j < 4; ++j) put(s.atk.dy(j));
      for (int j = 0; j < L.h; ++j) put(x(L.z0() + j));
      for (int j = 0; j < L.m; ++j) put(x(L.x1() + j));
      for (int j = 0; j < L.p; ++j) put(x(L.x2() + j));
      for (int j = 0; j < L.p; ++j) put(e_y(j));
      for (int j = 0; j < L.p; ++j) put(nu(j));
      for (int j = 0; j < L.p; ++j) put(nu_fil(j));
      for (int j = 0; j < L.p; ++j) put(thr(j));
      for (int j = 0; j < 1 + L.h; ++j) put(est.center(j));
      for (int j = 0; j < 1 + L.h; ++j) put(truth(j));
      res.traj.data.insert(res.traj.data.end(), row.begin(), row.end());
    }

    if (crashed && !M.crashed) {
      M.crashed = true;
      M.crash_time = t;
      M.rel_vel_at_crash = ps.v_fol - ps.v_lead;
    }
    M.end_time = t;
    M.steps = k;
    if (last) break;

    if (cfg.integrator == Integrator::euler) {
      x += cfg.dt * loop.derivative(x, t, w, nu);
    } else {
      const double h = cfg.dt;
      const Vec k1 = loop.derivative(x, t, w, nu);
      const Vec k2 = loop.derivative(x + 0.5 * h * k1, t + 0.5 * h, w, nu);
      const Vec k3 = loop.derivative(x + 0.5 * h * k2, t + 0.5 * h, w, nu);
      const Vec k4 = loop.derivative(x + h * k3, t + h, w, nu);
      x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    if (!x.allFinite()) {
      std::ostringstream os;
      os << "state became non-finite at t=" << t + cfg.dt;
      throw NumericError(os.str());
    }
  }
  return res;
}

RunDifference compare_runs(const Trajectory& a, const Trajectory& b) {
  if (a.columns != b.columns) throw ConfigError("compare_runs: column layouts differ");
  RunDifference d;
  d.rows = std::min(a.rows(), b.rows());
  const int t = a.index("t");
  std::vector<int> out, ey, nf, pos{a.index("p_lead"), a.index("p_fol")};
  for (int c = 0; c < static_cast<int>(a.columns.size()); ++c) {
    const auto& n = a.columns[c];
    if (n.rfind("ya_", 0) == 0) out.push_back(c);
    else if (n.rfind("ey", 0) == 0) ey.push_back(c);
    else if (n.rfind("nufil", 0) == 0) nf.push_back(c);
  }
  auto sup = [&](const std::vector<int>& cols, std::size_t r) {
    double m = 0;
    for (int c : cols) m = std::max(m, std::abs(a.at(r, c) - b.at(r, c)));
    return m;
  };
  for (std::size_t r = 0; r < d.rows; ++r) {
    if (std::abs(a.at(r, t) - b.at(r, t)) > 1e-9)
      throw ConfigError("compare_runs: time grids differ");
    d.outputs = std::max(d.outputs, sup(out, r));
    d.e_y = std::max(d.e_y, sup(ey, r));
    d.nu_fil = std::max(d.nu_fil, sup(nf, r));
    d.positions = std::max(d.positions, sup(pos, r));
  }
  return d;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; !failed && (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!err) err = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace smoguard
