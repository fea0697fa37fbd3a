#include "smoguard/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace smoguard {

using json = nlohmann::json;

namespace {

// Walks a JSON object, records unknown keys and type errors by pointer.
class Reader {
 public:
  Reader(const json& j, std::string path, std::vector<std::string>& errs)
      : j_(j), path_(std::move(path)), errs_(errs) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }
  ~Reader() = default;

  bool has(const std::string& k) {
    used_.insert(k);
    return j_.is_object() && j_.contains(k);
  }
  const json& raw(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }
  std::string at(const std::string& k) const { return path_ + "/" + k; }

  void num(const std::string& k, double& out) {
    if (!has(k)) return;
    const auto& v = j_.at(k);
    if (!v.is_number()) return fail(at(k), "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) fail(at(k), "must be finite");
  }
  void positive(const std::string& k, double& out) {
    const double before = out;
    num(k, out);
    if (has(k) && !(out > 0)) {
      fail(at(k), "must be > 0");
      out = before;
    }
  }
  void boolean(const std::string& k, bool& out) {
    if (!has(k)) return;
    const auto& v = j_.at(k);
    if (!v.is_boolean()) return fail(at(k), "expected true or false");
    out = v.get<bool>();
  }
  void str(const std::string& k, std::string& out) {
    if (!has(k)) return;
    const auto& v = j_.at(k);
    if (!v.is_string()) return fail(at(k), "expected a string");
    out = v.get<std::string>();
  }
  void integer(const std::string& k, long long& out) {
    if (!has(k)) return;
    const auto& v = j_.at(k);
    if (!v.is_number_integer()) return fail(at(k), "expected an integer");
    out = v.get<long long>();
  }
  void numbers(const std::string& k, std::vector<double>& out) {
    if (!has(k)) return;
    const auto& v = j_.at(k);
    if (!v.is_array()) return fail(at(k), "expected an array of numbers");
    std::vector<double> tmp;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) return fail(at(k) + "/" + std::to_string(i), "expected a number");
      tmp.push_back(v[i].get<double>());
    }
    out = tmp;
  }
  void vec(const std::string& k, Vec& out) {
    if (!has(k)) return;
    std::vector<double> tmp;
    const auto n = errs_.size();
    numbers(k, tmp);
    if (errs_.size() != n) return;
    out = Eigen::Map<const Vec>(tmp.data(), static_cast<Eigen::Index>(tmp.size()));
  }
  // Square matrix: either a diagonal list or nested rows.
  void mat(const std::string& k, Mat& out) {
    if (!has(k)) return;
    const auto& v = j_.at(k);
    if (!v.is_array() || v.empty()) return fail(at(k), "expected a list or a square matrix");
    if (v[0].is_number()) {
      Vec d;
      vec(k, d);
      if (d.size()) out = d.asDiagonal();
      return;
    }
    const auto n = v.size();
    Mat m(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      if (!v[r].is_array() || v[r].size() != n)
        return fail(at(k) + "/" + std::to_string(r), "expected a row of length " + std::to_string(n));
      for (std::size_t c = 0; c < n; ++c) {
        if (!v[r][c].is_number())
          return fail(at(k) + "/" + std::to_string(r) + "/" + std::to_string(c), "expected a number");
        m(r, c) = v[r][c].get<double>();
      }
    }
    out = m;
  }

  void finish() {
    if (!j_.is_object()) return;
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) fail(path_ + "/" + k, "unknown key");
  }
  void fail(const std::string& where, const std::string& what) {
    errs_.push_back((where.empty() ? "/" : where) + ": " + what);
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& errs_;
  std::set<std::string> used_;
};

const char* kChannelKeys[4] = {"gap", "rel_vel", "v_fol", "a_fol"};

WaveKind wave_kind(const std::string& s, bool& ok) {
  ok = true;
  if (s == "zero") return WaveKind::zero;
  if (s == "step") return WaveKind::step;
  if (s == "ramp") return WaveKind::ramp;
  if (s == "sinusoid") return WaveKind::sinusoid;
  if (s == "filtered_ramp") return WaveKind::filtered_ramp;
  if (s == "sampled") return WaveKind::sampled;
  ok = false;
  return WaveKind::zero;
}

void read_wave_fields(Reader& r, Waveform& w) {
  std::string kind = wave_kind_name(w.kind);
  r.str("kind", kind);
  bool ok;
  w.kind = wave_kind(kind, ok);
  if (!ok) r.fail(r.at("kind"), "unknown signal kind '" + kind + "'");
  r.num("amplitude", w.amplitude);
  r.num("slope", w.slope);
  r.num("frequency", w.frequency);
  r.num("phase", w.phase);
  r.num("rate", w.rate);
  r.num("onset", w.onset);
  r.numbers("times", w.times);
  r.numbers("values", w.values);
}

Waveform read_wave(const json& j, const std::string& path, std::vector<std::string>& errs) {
  Waveform w;
  Reader r(j, path, errs);
  read_wave_fields(r, w);
  r.finish();
  return w;
}

Term read_term(const json& j, const std::string& path, std::vector<std::string>& errs) {
  Term t;
  Reader r(j, path, errs);
  r.num("coef", t.coef);
  long long order = 0;
  r.integer("order", order);
  if (order < -1 || order > 2) r.fail(r.at("order"), "must be -1, 0, 1 or 2");
  t.order = static_cast<int>(order);
  read_wave_fields(r, t.wave);
  r.finish();
  return t;
}

Signal read_signal(const json& j, const std::string& path, std::vector<std::string>& errs) {
  Signal s;
  if (j.is_object()) {
    s.terms.push_back(read_term(j, path, errs));
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      s.terms.push_back(read_term(j[i], path + "/" + std::to_string(i), errs));
  } else if (!j.is_null()) {
    errs.push_back(path + ": expected a signal object or a list of terms");
  }
  return s;
}

void apply(const json& root, RunConfig& cfg, std::vector<std::string>& errs) {
  Reader top(root, "", errs);
  if (!root.is_object()) return;
  std::string preset_name;
  top.str("preset", preset_name);
  if (!preset_name.empty() && preset_name != "table1")
    top.fail("/preset", "unknown preset '" + preset_name + "'");
  const bool base = !preset_name.empty();
  for (const char* k : {"platoon", "observer", "bounds", "noise"})
    if (!base && !root.contains(k))
      top.fail(std::string("/") + k, "missing required section (or set \"preset\": \"table1\")");

  Scenario& sc = cfg.scenario;
  top.str("name", sc.name);

  if (top.has("platoon")) {
    Reader r(top.raw("platoon"), "/platoon", errs);
    auto& p = sc.platoon;
    r.positive("tau_lead", p.tau_lead);
    r.positive("tau_fol", p.tau_fol);
    r.num("length", p.length);
    r.positive("r_tau", p.r_tau);
    std::vector<double> rb;
    r.numbers("r_tau_bounds", rb);
    if (r.has("r_tau_bounds")) {
      if (rb.size() != 2 || !(rb[0] <= rb[1])) r.fail(r.at("r_tau_bounds"), "expected [lo, hi] with lo <= hi");
      else { p.r_tau_lo = rb[0]; p.r_tau_hi = rb[1]; }
    }
    r.positive("h_ref", p.h_ref);
    r.num("standstill", p.standstill);
    r.num("k_p", p.k_p);
    r.num("k_d", p.k_d);
    r.finish();
    if (!(p.r_tau_lo <= p.r_tau && p.r_tau <= p.r_tau_hi))
      r.fail("/platoon/r_tau", "outside r_tau_bounds");
  }
  if (top.has("initial_state")) {
    Reader r(top.raw("initial_state"), "/initial_state", errs);
    auto& s = sc.initial;
    r.num("p_lead", s.p_lead);
    r.num("v_lead", s.v_lead);
    r.num("a_lead", s.a_lead);
    r.num("p_fol", s.p_fol);
    r.num("v_fol", s.v_fol);
    r.num("a_fol", s.a_fol);
    r.num("u_fol", s.u_fol);
    r.finish();
  }
  if (top.has("design")) {
    Reader r(top.raw("design"), "/design", errs);
    std::vector<double> order;
    r.numbers("order", order);
    if (r.has("order")) {
      std::set<int> seen;
      bool ok = order.size() == 4;
      for (double v : order) ok &= v == std::floor(v) && v >= 1 && v <= 4 && seen.insert(int(v)).second;
      if (!ok) r.fail(r.at("order"), "expected a permutation of [1, 2, 3, 4]");
      else for (int k = 0; k < 4; ++k) sc.design.order[k] = int(order[k]) - 1;
    }
    long long h = sc.design.h;
    r.integer("h", h);
    if (h < 0 || h > 4) r.fail(r.at("h"), "must be between 0 and 4");
    else sc.design.h = int(h);
    r.num("filter_pole", sc.filter_pole);
    if (!(sc.filter_pole < 0)) r.fail(r.at("filter_pole"), "must be < 0");
    r.boolean("strict_poles", sc.strict_poles);
    r.positive("marginal_tol", sc.marginal_tol);
    r.finish();
  }
  if (top.has("observer")) {
    Reader r(top.raw("observer"), "/observer", errs);
    auto& o = sc.observer;
    r.vec("rho", o.rho);
    r.mat("a22s", o.A22_s);
    r.mat("a_nu", o.A_nu);
    r.num("epsilon", o.epsilon);
    if (!(o.epsilon >= 0)) r.fail(r.at("epsilon"), "must be >= 0");
    r.vec("initial_error_x1", sc.bounds.e1_init);
    r.vec("initial_error_x2", sc.e2_init);
    r.finish();
  }
  if (top.has("bounds")) {
    Reader r(top.raw("bounds"), "/bounds", errs);
    r.vec("eta_bar", sc.bounds.eta_bar);
    r.vec("zeta1_bar", sc.bounds.zeta1_bar);
    r.vec("delta_bar", sc.attack_bounds.delta_bar);
    r.num("y1_bar", sc.attack_bounds.y1_bar);
    r.finish();
  }
  if (top.has("noise")) {
    Reader r(top.raw("noise"), "/noise", errs);
    Vec b;
    r.vec("bounds", b);
    if (r.has("bounds")) {
      if (b.size() != 4 || (b.array() < 0).any()) r.fail(r.at("bounds"), "expected 4 non-negative numbers");
      else sc.noise.bound = b;
    }
    std::string dist = sc.noise.kind == NoiseKind::uniform ? "uniform" : "truncated_gaussian";
    r.str("distribution", dist);
    if (dist == "uniform") sc.noise.kind = NoiseKind::uniform;
    else if (dist == "truncated_gaussian") sc.noise.kind = NoiseKind::truncated_gaussian;
    else r.fail(r.at("distribution"), "expected uniform or truncated_gaussian");
    r.finish();
  }
  if (top.has("leader_input"))
    sc.leader_input = read_signal(top.raw("leader_input"), "/leader_input", errs);
  if (top.has("attack")) {
    Reader r(top.raw("attack"), "/attack", errs);
    AttackScenario a;
    a.name = sc.name;
    if (r.has("du")) a.du = read_signal(r.raw("du"), "/attack/du", errs);
    if (r.has("dy")) {
      Reader d(r.raw("dy"), "/attack/dy", errs);
      for (int k = 0; k < 4; ++k)
        if (d.has(kChannelKeys[k]))
          a.dy[k] = read_signal(d.raw(kChannelKeys[k]), std::string("/attack/dy/") + kChannelKeys[k], errs);
      d.finish();
    }
    if (r.has("stealthy")) {
      if (r.has("du") || !a.dy[kGap].terms.empty() || !a.dy[kRelVel].terms.empty())
        r.fail("/attack/stealthy", "cannot be combined with explicit du, gap or rel_vel attacks");
      Reader g(r.raw("stealthy"), "/attack/stealthy", errs);
      Waveform prof;
      if (g.has("profile")) prof = read_wave(g.raw("profile"), "/attack/stealthy/profile", errs);
      else g.fail("/attack/stealthy/profile", "missing required key");
      double tau = sc.platoon.tau_lead;
      if (g.has("tau")) {
        const auto& tv = g.raw("tau");
        if (tv.is_number()) tau = tv.get<double>();
        else if (tv == "model") tau = sc.platoon.tau_hat();
        else if (tv != "true") g.fail("/attack/stealthy/tau", "expected \"true\", \"model\" or a number");
      }
      long long si = 1, sg = 1;
      g.integer("input_sign", si);
      g.integer("integral_sign", sg);
      if ((si != 1 && si != -1) || (sg != 1 && sg != -1))
        g.fail("/attack/stealthy", "signs must be +1 or -1");
      g.finish();
      const AttackScenario st = make_stealthy(prof, tau, {int(si), int(sg)});
      a.du = st.du;
      a.dy[kGap] = st.dy[kGap];
      a.dy[kRelVel] = st.dy[kRelVel];
    }
    r.finish();
    sc.attack = a;
  }
  if (top.has("sim")) {
    Reader r(top.raw("sim"), "/sim", errs);
    auto& s = cfg.sim;
    r.positive("dt", s.dt);
    r.positive("horizon", s.horizon);
    long long seed = static_cast<long long>(s.seed);
    r.integer("seed", seed);
    if (seed < 0) r.fail(r.at("seed"), "must be >= 0");
    s.seed = static_cast<std::uint64_t>(seed);
    std::string integ = s.integrator == Integrator::euler ? "euler" : "rk4";
    r.str("integrator", integ);
    if (integ == "euler") s.integrator = Integrator::euler;
    else if (integ == "rk4") s.integrator = Integrator::rk4;
    else r.fail(r.at("integrator"), "expected euler or rk4");
    r.boolean("noiseless", s.noiseless);
    long long le = s.log_every;
    r.integer("log_every", le);
    if (le < 1) r.fail(r.at("log_every"), "must be >= 1");
    else s.log_every = int(le);
    r.boolean("stop_on_crash", s.stop_on_crash);
    r.num("dwell_steps", s.dwell_steps);
    r.num("steady_fraction", s.steady_fraction);
    r.finish();
  }
  if (top.has("output")) {
    Reader r(top.raw("output"), "/output", errs);
    r.str("dir", cfg.output.dir);
    r.str("prefix", cfg.output.prefix);
    r.finish();
  }
  if (top.has("sweep")) {
    Reader r(top.raw("sweep"), "/sweep", errs);
    r.numbers("eta_scale", cfg.sweep.eta_scale);
    r.numbers("r_tau", cfg.sweep.r_tau);
    r.numbers("attack_scale", cfg.sweep.attack_scale);
    long long th = 0;
    r.integer("threads", th);
    cfg.sweep.threads = static_cast<unsigned>(std::max(0LL, th));
    r.finish();
  }
  top.finish();
  sc.attack.name = sc.name;
}

json wave_json(const Waveform& w, json j = json::object()) {
  j["kind"] = wave_kind_name(w.kind);
  switch (w.kind) {
    case WaveKind::zero: break;
    case WaveKind::step: j["amplitude"] = w.amplitude; j["onset"] = w.onset; break;
    case WaveKind::ramp: j["slope"] = w.slope; j["onset"] = w.onset; break;
    case WaveKind::sinusoid:
      j["amplitude"] = w.amplitude; j["frequency"] = w.frequency;
      j["phase"] = w.phase; j["onset"] = w.onset; break;
    case WaveKind::filtered_ramp:
      j["slope"] = w.slope; j["rate"] = w.rate; j["onset"] = w.onset; break;
    case WaveKind::sampled: j["times"] = w.times; j["values"] = w.values; break;
  }
  return j;
}

json signal_json(const Signal& s) {
  json arr = json::array();
  for (const auto& t : s.terms) {
    json j = json::object();
    j["coef"] = t.coef;
    j["order"] = t.order;
    arr.push_back(wave_json(t.wave, j));
  }
  return arr;
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

json mat_json(const Mat& m) {
  if (m.isDiagonal(0.0)) return to_std(m.diagonal());
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_std(m.row(r).transpose()));
  return rows;
}

}  // namespace

RunConfig preset(const std::string& name) {
  if (name != "table1") throw ConfigError("unknown preset '" + name + "'");
  RunConfig c;
  c.scenario = table1_scenario();
  c.scenario.name = "table1";
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  // Duplicate keys are caught while parsing; nlohmann would silently keep the last.
  std::vector<std::string> errs;
  std::vector<std::pair<std::set<std::string>, std::string>> stack;
  std::string last_key;
  auto cb = [&](int, json::parse_event_t ev, json& parsed) {
    switch (ev) {
      case json::parse_event_t::object_start:
        stack.push_back({{}, (stack.empty() ? "" : stack.back().second + "/" + last_key)});
        break;
      case json::parse_event_t::object_end:
        if (!stack.empty()) stack.pop_back();
        break;
      case json::parse_event_t::key: {
        last_key = parsed.get<std::string>();
        if (!stack.empty() && !stack.back().first.insert(last_key).second)
          errs.push_back(stack.back().second + "/" + last_key + ": duplicate key");
        break;
      }
      default: break;
    }
    return true;
  };
  json root;
  try {
    root = json::parse(text, cb, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    std::string w = e.what();
    throw ConfigError(origin + ": " + w);
  }
  if (root.is_null() || (root.is_object() && root.empty() && text.find('{') == std::string::npos))
    throw ConfigError(origin + ": empty configuration");
  RunConfig cfg = preset("table1");
  if (root.is_object() && !root.contains("preset")) cfg.scenario.name = "run";
  if (errs.empty()) apply(root, cfg, errs);
  if (errs.empty()) {
    try {
      cfg.scenario.validate();
      cfg.sim.validate();
    } catch (const ConfigError& e) {
      errs.push_back(e.what());
    }
  }
  if (!errs.empty()) {
    std::ostringstream os;
    os << origin << ": " << errs.size() << " error(s): ";
    for (std::size_t i = 0; i < errs.size(); ++i) os << (i ? "; " : "") << errs[i];
    throw ConfigError(os.str());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("E_IO", "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string serialize_config(const RunConfig& cfg) {
  const Scenario& sc = cfg.scenario;
  json j;
  j["name"] = sc.name;
  const auto& p = sc.platoon;
  j["platoon"] = {{"tau_lead", p.tau_lead}, {"tau_fol", p.tau_fol}, {"length", p.length},
                  {"r_tau", p.r_tau}, {"r_tau_bounds", {p.r_tau_lo, p.r_tau_hi}},
                  {"h_ref", p.h_ref}, {"standstill", p.standstill}, {"k_p", p.k_p},
                  {"k_d", p.k_d}};
  const auto& s = sc.initial;
  j["initial_state"] = {{"p_lead", s.p_lead}, {"v_lead", s.v_lead}, {"a_lead", s.a_lead},
                        {"p_fol", s.p_fol}, {"v_fol", s.v_fol}, {"a_fol", s.a_fol},
                        {"u_fol", s.u_fol}};
  std::vector<int> order;
  for (int k : sc.design.order) order.push_back(k + 1);
  j["design"] = {{"order", order}, {"h", sc.design.h}, {"filter_pole", sc.filter_pole},
                 {"strict_poles", sc.strict_poles}, {"marginal_tol", sc.marginal_tol}};
  json obs = {{"rho", to_std(sc.observer.rho)}, {"a22s", mat_json(sc.observer.A22_s)},
              {"a_nu", mat_json(sc.observer.A_nu)}, {"epsilon", sc.observer.epsilon}};
  if (sc.bounds.e1_init.size()) obs["initial_error_x1"] = to_std(sc.bounds.e1_init);
  if (sc.e2_init.size()) obs["initial_error_x2"] = to_std(sc.e2_init);
  j["observer"] = obs;
  json b = {{"eta_bar", to_std(sc.bounds.eta_bar)}, {"zeta1_bar", to_std(sc.bounds.zeta1_bar)},
            {"delta_bar", to_std(sc.attack_bounds.delta_bar)}};
  if (std::isfinite(sc.attack_bounds.y1_bar)) b["y1_bar"] = sc.attack_bounds.y1_bar;
  j["bounds"] = b;
  j["noise"] = {{"bounds", to_std(sc.noise.bound)},
                {"distribution", sc.noise.kind == NoiseKind::uniform ? "uniform" : "truncated_gaussian"}};
  if (!sc.leader_input.terms.empty()) j["leader_input"] = signal_json(sc.leader_input);
  json atk = json::object();
  if (!sc.attack.du.terms.empty()) atk["du"] = signal_json(sc.attack.du);
  json dy = json::object();
  for (int k = 0; k < 4; ++k)
    if (!sc.attack.dy[k].terms.empty()) dy[kChannelKeys[k]] = signal_json(sc.attack.dy[k]);
  if (!dy.empty()) atk["dy"] = dy;
  if (!atk.empty()) j["attack"] = atk;
  const auto& m = cfg.sim;
  j["sim"] = {{"dt", m.dt}, {"horizon", m.horizon}, {"seed", m.seed},
              {"integrator", m.integrator == Integrator::euler ? "euler" : "rk4"},
              {"noiseless", m.noiseless}, {"log_every", m.log_every},
              {"stop_on_crash", m.stop_on_crash}, {"dwell_steps", m.dwell_steps},
              {"steady_fraction", m.steady_fraction}};
  j["output"] = {{"dir", cfg.output.dir}, {"prefix", cfg.output.prefix}};
  if (!cfg.sweep.empty() || cfg.sweep.threads)
    j["sweep"] = {{"eta_scale", cfg.sweep.eta_scale}, {"r_tau", cfg.sweep.r_tau},
                  {"attack_scale", cfg.sweep.attack_scale}, {"threads", cfg.sweep.threads}};
  return j.dump(2) + "\n";
}

Scenario scale_attack(const Scenario& sc, double k) {
  Scenario out = sc;
  for (auto& t : out.attack.du.terms) t.coef *= k;
  for (auto& ch : out.attack.dy)
    for (auto& t : ch.terms) t.coef *= k;
  return out;
}

Scenario scale_uncertainty(const Scenario& sc, double k) {
  Scenario out = sc;
  out.bounds.eta_bar *= k;
  out.bounds.zeta1_bar *= k;
  out.noise.bound *= k;
  return out;
}

std::vector<SweepPoint> run_sweep(const RunConfig& cfg) {
  std::vector<SweepPoint> pts;
  if (cfg.sweep.empty()) return pts;
  auto or_one = [](const std::vector<double>& v, double d) {
    return v.empty() ? std::vector<double>{d} : v;
  };
  for (double e : or_one(cfg.sweep.eta_scale, 1.0))
    for (double r : or_one(cfg.sweep.r_tau, cfg.scenario.platoon.r_tau))
      for (double a : or_one(cfg.sweep.attack_scale, 1.0)) {
        SweepPoint p;
        p.eta_scale = e;
        p.r_tau = r;
        p.attack_scale = a;
        pts.push_back(p);
      }
  parallel_for(pts.size(), [&](std::size_t i) {
    auto& p = pts[i];
    try {
      Scenario sc = scale_uncertainty(scale_attack(cfg.scenario, p.attack_scale), p.eta_scale);
      sc.platoon.r_tau = p.r_tau;
      sc.platoon.r_tau_lo = std::min(sc.platoon.r_tau_lo, p.r_tau);
      sc.platoon.r_tau_hi = std::max(sc.platoon.r_tau_hi, p.r_tau);
      SimConfig sim = cfg.sim;
      sim.log_every = std::max(sim.log_every, 1000);
      p.metrics = run(sc, sim).metrics;
    } catch (const Error& e) {
      p.error = e.code() + ": " + e.what();
    }
  }, cfg.sweep.threads);
  return pts;
}

}  // namespace smoguard
