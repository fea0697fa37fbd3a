#include "smoguard/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace smoguard {

const char* wave_kind_name(WaveKind k) {
  switch (k) {
    case WaveKind::zero: return "zero";
    case WaveKind::step: return "step";
    case WaveKind::ramp: return "ramp";
    case WaveKind::sinusoid: return "sinusoid";
    case WaveKind::filtered_ramp: return "filtered_ramp";
    case WaveKind::sampled: return "sampled";
  }
  return "?";
}

namespace {

double sampled_eval(const Waveform& w, double t, int order) {
  const auto& ts = w.times;
  const auto& vs = w.values;
  if (t < ts.front() - 1e-12 || t > ts.back() + 1e-12) {
    std::ostringstream os;
    os << "sampled attack evaluated at t=" << t << " outside [" << ts.front()
       << ", " << ts.back() << "]";
    throw ConfigError(os.str());
  }
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  std::size_t k = std::clamp<std::size_t>(it - ts.begin(), 1, ts.size() - 1) - 1;
  if (ts.size() == 1) {
    return order == 0 ? vs[0] : order == -1 ? vs[0] * (t - ts[0]) : 0.0;
  }
  const double dt = ts[k + 1] - ts[k];
  const double slope = (vs[k + 1] - vs[k]) / dt;
  const double s = t - ts[k];
  switch (order) {
    case 0: return vs[k] + slope * s;
    case 1: return slope;
    case -1: {
      double acc = 0;
      for (std::size_t j = 0; j < k; ++j)
        acc += 0.5 * (vs[j] + vs[j + 1]) * (ts[j + 1] - ts[j]);
      return acc + vs[k] * s + 0.5 * slope * s * s;
    }
    default: return 0.0;
  }
}

}  // namespace

double Waveform::eval(double t, int order) const {
  if (kind == WaveKind::zero) return 0.0;
  if (kind == WaveKind::sampled) return sampled_eval(*this, t, order);
  if (t < onset) return 0.0;
  const double s = t - onset;
  switch (kind) {
    case WaveKind::step:
      return order == -1 ? amplitude * s : order == 0 ? amplitude : 0.0;
    case WaveKind::ramp:
      switch (order) {
        case -1: return 0.5 * slope * s * s;
        case 0: return slope * s;
        case 1: return slope;
        default: return 0.0;
      }
    case WaveKind::sinusoid: {
      const double w = 2 * std::numbers::pi * frequency;
      const double th = w * s + phase;
      switch (order) {
        case -1: return w == 0 ? amplitude * std::sin(phase) * s
                               : amplitude / w * (std::cos(phase) - std::cos(th));
        case 0: return amplitude * std::sin(th);
        case 1: return amplitude * w * std::cos(th);
        case 2: return -amplitude * w * w * std::sin(th);
        case 3: return -amplitude * w * w * w * std::cos(th);
        default: break;
      }
      break;
    }
    case WaveKind::filtered_ramp: {
      const double a = rate;
      const double e = std::exp(-a * s);
      // 1 - e and s - (1 - e)/a lose digits near onset; expm1 keeps them
      const double one_minus_e = -std::expm1(-a * s);
      switch (order) {
        case -1: return slope * (0.5 * s * s - s / a + one_minus_e / (a * a));
        case 0: return slope * (s - one_minus_e / a);
        case 1: return slope * one_minus_e;
        case 2: return slope * a * e;
        case 3: return -slope * a * a * e;
        default: break;
      }
      break;
    }
    default: break;
  }
  throw ConfigError("unsupported derivative order for attack waveform");
}

bool Waveform::structurally_zero() const {
  switch (kind) {
    case WaveKind::zero: return true;
    case WaveKind::step:
    case WaveKind::sinusoid: return amplitude == 0;
    case WaveKind::ramp:
    case WaveKind::filtered_ramp: return slope == 0;
    case WaveKind::sampled:
      return std::all_of(values.begin(), values.end(),
                         [](double v) { return v == 0; });
  }
  return false;
}

void Waveform::validate() const {
  auto fin = [](double v) { return std::isfinite(v); };
  if (!fin(amplitude) || !fin(slope) || !fin(frequency) || !fin(phase) ||
      !fin(onset) || !fin(rate))
    throw ConfigError("attack waveform parameters must be finite");
  if (onset < 0) throw ConfigError("attack onset must be >= 0");
  if (kind == WaveKind::filtered_ramp && !(rate > 0))
    throw ConfigError("filtered_ramp rate must be positive");
  if (kind == WaveKind::sinusoid && frequency < 0)
    throw ConfigError("sinusoid frequency must be >= 0");
  if (kind == WaveKind::sampled) {
    if (times.empty() || times.size() != values.size())
      throw ConfigError("sampled attack needs equally sized, non-empty times and values");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw ConfigError("sampled attack times must be strictly increasing");
  }
}

Waveform Waveform::step(double amplitude, double onset) {
  Waveform w;
  w.kind = WaveKind::step;
  w.amplitude = amplitude;
  w.onset = onset;
  return w;
}

Waveform Waveform::ramp(double slope, double onset) {
  Waveform w;
  w.kind = WaveKind::ramp;
  w.slope = slope;
  w.onset = onset;
  return w;
}

Waveform Waveform::sinusoid(double amplitude, double freq_hz, double phase,
                            double onset) {
  Waveform w;
  w.kind = WaveKind::sinusoid;
  w.amplitude = amplitude;
  w.frequency = freq_hz;
  w.phase = phase;
  w.onset = onset;
  return w;
}

Waveform Waveform::filtered_ramp(double slope, double rate, double onset) {
  Waveform w;
  w.kind = WaveKind::filtered_ramp;
  w.slope = slope;
  w.rate = rate;
  w.onset = onset;
  return w;
}

double Signal::eval(double t, int d) const {
  double acc = 0;
  for (const auto& term : terms) {
    if (term.coef == 0) continue;
    acc += term.coef * term.wave.eval(t, term.order + d);
  }
  return acc;
}

bool Signal::is_zero() const {
  return std::all_of(terms.begin(), terms.end(), [](const Term& t) {
    return t.coef == 0 || t.wave.structurally_zero();
  });
}

void Signal::validate() const {
  for (const auto& t : terms) {
    if (t.order < -1 || t.order > 2)
      throw ConfigError("attack term order must be -1, 0, 1 or 2");
    if (!std::isfinite(t.coef)) throw ConfigError("attack coefficient must be finite");
    t.wave.validate();
  }
}

AttackSample AttackScenario::eval(double t) const {
  AttackSample a;
  a.du = du.eval(t);
  for (int k = 0; k < 4; ++k) a.dy(k) = dy[k].eval(t);
  return a;
}

bool AttackScenario::is_zero() const {
  return du.is_zero() &&
         std::all_of(dy.begin(), dy.end(), [](const Signal& s) { return s.is_zero(); });
}

void AttackScenario::validate() const {
  du.validate();
  for (const auto& s : dy) s.validate();
}

Injected inject(double u_lead, const Eigen::Vector4d& y, const AttackSample& a) {
  return {u_lead + a.du, y + a.dy};
}

Vec stacked_attack(const AttackSample& a, const OutputPartition& part) {
  Vec d(1 + part.h);
  d(0) = a.du;
  for (int k = 0; k < part.h; ++k) d(1 + k) = a.dy(part.order[part.y1_size() + k]);
  return d;
}

void check_attack_bounds(const AttackSample& a, const OutputPartition& part,
                         const AttackBounds& b, double t) {
  const Vec d = stacked_attack(a, part);
  if (b.delta_bar.size() != d.size())
    throw ConfigError("delta_bar must have 1+h entries");
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (std::abs(d(k)) > b.delta_bar(k)) {
      std::ostringstream os;
      os << "attack component " << (k == 0 ? std::string("du")
                                           : std::string("dy(") +
                                                 channel_name(part.order[part.y1_size() + k - 1]) + ")")
         << " = " << d(k) << " exceeds bound " << b.delta_bar(k) << " at t=" << t;
      throw BoundError(os.str());
    }
  }
  for (int k = 0; k < part.y1_size(); ++k) {
    const double v = a.dy(part.order[k]);
    if (std::abs(v) > b.y1_bar) {
      std::ostringstream os;
      os << "attack on " << channel_name(part.order[k]) << " = " << v
         << " exceeds bound " << b.y1_bar << " at t=" << t;
      throw BoundError(os.str());
    }
  }
}

AttackScenario make_stealthy(const Waveform& profile, double tau,
                             StealthSigns signs) {
  AttackScenario sc;
  sc.name = "stealthy";
  sc.du.terms = {Term{signs.input * tau, 2, profile},
                 Term{static_cast<double>(signs.input), 1, profile}};
  sc.dy[kRelVel] = Signal::of(profile);
  sc.dy[kGap] = Signal::of(profile, signs.integral, -1);
  return sc;
}

const char* attack_class_name(AttackClass c) {
  switch (c) {
    case AttackClass::healthy: return "healthy";
    case AttackClass::quantifiable: return "quantifiable";
    case AttackClass::stealthy: return "stealthy";
    case AttackClass::non_stealthy: return "non-stealthy";
  }
  return "?";
}

Classification classify(const AttackScenario& sc, const OutputPartition& part,
                        double tau, double horizon, StealthSigns signs,
                        double tol) {
  Classification c;
  if (sc.is_zero()) {
    c.cls = AttackClass::healthy;
    c.reason = "no attack channel is active";
    return c;
  }
  bool y1_zero = true;
  for (int k = 0; k < part.y1_size(); ++k)
    y1_zero &= sc.dy[part.order[k]].is_zero();
  if (y1_zero) {
    c.cls = AttackClass::quantifiable;
    c.reason = "unfiltered outputs are attack-free";
    return c;
  }
  c.cls = AttackClass::non_stealthy;
  if (part.y1_size() != 1 || part.order[0] != kRelVel || part.in_y1(kGap)) {
    c.reason = "stealth relations are defined for y1 = {rel_vel} with gap filtered";
    return c;
  }
  if (!sc.dy[kVelFol].is_zero() || !sc.dy[kAccFol].is_zero()) {
    c.reason = "v_fol or a_fol is attacked";
    return c;
  }
  const Signal& y = sc.dy[kRelVel];
  const Signal& g = sc.dy[kGap];

  std::vector<double> grid;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) grid.push_back(horizon * i / n);
  auto add_onsets = [&](const Signal& s) {
    for (const auto& t : s.terms) {
      if (t.wave.kind == WaveKind::sampled) {
        for (double tk : t.wave.times)
          if (tk >= 0 && tk <= horizon) grid.push_back(tk);
      } else if (t.wave.onset <= horizon) {
        grid.push_back(t.wave.onset);
        grid.push_back(std::min(horizon, t.wave.onset + 1e-6));
      }
    }
  };
  add_onsets(sc.du);
  add_onsets(y);
  add_onsets(g);

  double scale = 1.0;
  for (double t : grid) {
    c.input_residual = std::max(
        c.input_residual,
        std::abs(sc.du.eval(t) - signs.input * (tau * y.eval(t, 2) + y.eval(t, 1))));
    c.integral_residual =
        std::max(c.integral_residual, std::abs(g.eval(t, 1) - signs.integral * y.eval(t)));
    scale = std::max({scale, std::abs(sc.du.eval(t)), std::abs(y.eval(t)),
                      std::abs(g.eval(t))});
  }
  c.integral_residual = std::max(c.integral_residual, std::abs(g.eval(0.0)));
  const double lim = tol * scale;
  std::ostringstream os;
  if (c.input_residual <= lim && c.integral_residual <= lim) {
    c.cls = AttackClass::stealthy;
    os << "input and gap attacks match the relative-velocity attack (residuals "
       << c.input_residual << ", " << c.integral_residual << ")";
  } else {
    os << "relative-velocity attack without matching ";
    if (c.input_residual > lim) os << "input attack (residual " << c.input_residual << ")";
    if (c.input_residual > lim && c.integral_residual > lim) os << " and ";
    if (c.integral_residual > lim) os << "gap attack (residual " << c.integral_residual << ")";
  }
  c.reason = os.str();
  return c;
}

}  // namespace smoguard
