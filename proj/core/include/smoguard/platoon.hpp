#pragma once

#include "smoguard/linalg.hpp"

#include <array>
#include <cstdint>
#include <random>

namespace smoguard {

// Output channels of a two-car platoon, in this order:
//   gap = p_lead - p_fol - L, rel_vel = v_lead - v_fol, v_fol, a_fol.
enum Channel : int { kGap = 0, kRelVel = 1, kVelFol = 2, kAccFol = 3 };
inline constexpr int kNumChannels = 4;

const char* channel_name(int ch);

struct PlatoonParams {
  double tau_lead = 0.1;  // true engine lag of the leader
  double tau_fol = 0.1;
  double length = 4.0;    // follower length used in the gap measurement
  double r_tau = 1.1;     // tau_hat = r_tau * tau_lead
  double r_tau_lo = 1.0;
  double r_tau_hi = 1.2;
  double h_ref = 0.7;     // time headway
  double standstill = 1.5;
  double k_p = 0.2;
  double k_d = 0.7;

  double tau_hat() const { return r_tau * tau_lead; }
  void validate() const;  // throws ConfigError
};

struct PlatoonState {
  double p_lead = 0, v_lead = 0, a_lead = 0;
  double p_fol = 0, v_fol = 0, a_fol = 0;
  double u_fol = 0;  // controller state

  Eigen::Matrix<double, 7, 1> to_vec() const;
  static PlatoonState from_vec(const Eigen::Matrix<double, 7, 1>& v);
};

// Both cars at 8 m/s, gap 7.45 m.
PlatoonState table1_initial_state(const PlatoonParams& p = {});

using Car = std::array<double, 3>;  // p, v, a

// p' = v, v' = a, a' = (u - a) / tau.
Car car_derivative(const Car& x, double u, double tau);

struct SpacingError {
  double e;
  double e_dot;
};
SpacingError spacing_error(const Eigen::Vector4d& y, double r, double h);

// u_fol' = -u_fol/h + k_p e + k_d e' + u_lead/h
double controller_derivative(double u_fol, const SpacingError& err,
                             double u_lead, const PlatoonParams& p);

Eigen::Vector4d measure(const PlatoonState& s, double length,
                        const Eigen::Vector4d& noise);

// Linear model around the leader lag estimate tau_hat.
// State (p_l, v_l, a_l, p_f, v_f, a_f), inputs (u_lead, u_fol).
struct PlatoonModel {
  Mat A;       // 6x6
  Mat B;       // 6x2
  Mat E;       // 6x1 uncertainty direction
  Mat F;       // 6x1 input attack direction, F = -E
  Mat C;       // 4x6
  Vec c_tilde; // output offset (-L, 0, 0, 0)
};
PlatoonModel platoon_model(const PlatoonParams& p);

enum class NoiseKind { uniform, truncated_gaussian };

struct NoiseSpec {
  Eigen::Vector4d bound = Eigen::Vector4d::Zero();
  NoiseKind kind = NoiseKind::uniform;
  std::uint64_t seed = 1;
};

class NoiseSampler {
 public:
  explicit NoiseSampler(const NoiseSpec& spec);
  Eigen::Vector4d sample();

 private:
  NoiseSpec spec_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> uni_{-1.0, 1.0};
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

}  // namespace smoguard
