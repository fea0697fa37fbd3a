#include "smoguard/platoon.hpp"

#include <cmath>
#include <string>

namespace smoguard {

const char* channel_name(int ch) {
  switch (ch) {
    case kGap: return "gap";
    case kRelVel: return "rel_vel";
    case kVelFol: return "v_fol";
    case kAccFol: return "a_fol";
    default: return "?";
  }
}

void PlatoonParams::validate() const {
  auto pos = [](double v, const char* name) {
    if (!(std::isfinite(v) && v > 0))
      throw ConfigError(std::string(name) + " must be positive and finite");
  };
  pos(tau_lead, "tau_lead");
  pos(tau_fol, "tau_fol");
  pos(h_ref, "h_ref");
  pos(r_tau, "r_tau");
  if (!(std::isfinite(length) && length >= 0))
    throw ConfigError("length must be non-negative");
  if (!(r_tau_lo <= r_tau && r_tau <= r_tau_hi))
    throw ConfigError("r_tau outside [r_tau_lo, r_tau_hi]");
  if (!std::isfinite(k_p) || !std::isfinite(k_d) || !std::isfinite(standstill))
    throw ConfigError("controller gains must be finite");
}

Eigen::Matrix<double, 7, 1> PlatoonState::to_vec() const {
  Eigen::Matrix<double, 7, 1> v;
  v << p_lead, v_lead, a_lead, p_fol, v_fol, a_fol, u_fol;
  return v;
}

PlatoonState PlatoonState::from_vec(const Eigen::Matrix<double, 7, 1>& v) {
  return {v(0), v(1), v(2), v(3), v(4), v(5), v(6)};
}

PlatoonState table1_initial_state(const PlatoonParams& p) {
  PlatoonState s;
  s.v_lead = s.v_fol = 8.0;
  s.p_lead = 0.0;
  s.p_fol = -(7.45 + p.length);
  return s;
}

Car car_derivative(const Car& x, double u, double tau) {
  if (!(tau > 0)) throw NumericError("car_derivative: tau must be positive");
  if (!std::isfinite(x[0]) || !std::isfinite(x[1]) || !std::isfinite(x[2]) ||
      !std::isfinite(u))
    throw NumericError("car_derivative: non-finite state or input");
  return {x[1], x[2], (u - x[2]) / tau};
}

SpacingError spacing_error(const Eigen::Vector4d& y, double r, double h) {
  return {y(kGap) - r - h * y(kVelFol), y(kRelVel) - h * y(kAccFol)};
}

double controller_derivative(double u_fol, const SpacingError& err,
                             double u_lead, const PlatoonParams& p) {
  return -u_fol / p.h_ref + p.k_p * err.e + p.k_d * err.e_dot +
         u_lead / p.h_ref;
}

Eigen::Vector4d measure(const PlatoonState& s, double length,
                        const Eigen::Vector4d& noise) {
  Eigen::Vector4d y;
  y << s.p_lead - s.p_fol - length, s.v_lead - s.v_fol, s.v_fol, s.a_fol;
  return y + noise;
}

PlatoonModel platoon_model(const PlatoonParams& p) {
  p.validate();
  const double th = p.tau_hat();
  PlatoonModel m;
  m.A = Mat::Zero(6, 6);
  m.A(0, 1) = 1;
  m.A(1, 2) = 1;
  m.A(2, 2) = -1 / th;
  m.A(3, 4) = 1;
  m.A(4, 5) = 1;
  m.A(5, 5) = -1 / p.tau_fol;
  m.B = Mat::Zero(6, 2);
  m.B(2, 0) = 1 / th;
  m.B(5, 1) = 1 / p.tau_fol;
  m.E = Mat::Zero(6, 1);
  m.E(2, 0) = 1 / th;
  m.F = -m.E;
  m.C = Mat::Zero(4, 6);
  m.C(kGap, 0) = 1;
  m.C(kGap, 3) = -1;
  m.C(kRelVel, 1) = 1;
  m.C(kRelVel, 4) = -1;
  m.C(kVelFol, 4) = 1;
  m.C(kAccFol, 5) = 1;
  m.c_tilde = Vec::Zero(4);
  m.c_tilde(kGap) = -p.length;
  return m;
}

NoiseSampler::NoiseSampler(const NoiseSpec& spec) : spec_(spec), rng_(spec.seed) {
  if ((spec.bound.array() < 0).any() || !spec.bound.allFinite())
    throw ConfigError("noise bounds must be finite and non-negative");
}

Eigen::Vector4d NoiseSampler::sample() {
  Eigen::Vector4d w;
  for (int i = 0; i < 4; ++i) {
    double s;
    if (spec_.kind == NoiseKind::uniform) {
      s = uni_(rng_);
    } else {
      // N(0, (b/3)^2) rejected outside [-b, b]
      do { s = gauss_(rng_) / 3.0; } while (std::abs(s) > 1.0);
    }
    w(i) = spec_.bound(i) * s;
  }
  return w;
}

}  // namespace smoguard
