#pragma once

#include "smoguard/extended_system.hpp"

#include <array>
#include <limits>
#include <string>
#include <vector>

namespace smoguard {

enum class WaveKind { zero, step, ramp, sinusoid, filtered_ramp, sampled };

const char* wave_kind_name(WaveKind k);

// Primitive time signal, zero before onset.
//  step:          amplitude
//  ramp:          slope * (t - onset)
//  sinusoid:      amplitude * sin(2 pi frequency (t - onset) + phase)
//  filtered_ramp: slope * (s - (1 - exp(-rate s)) / rate), s = t - onset;
//                 a ramp passed through rate / (d/dt + rate), so it starts
//                 with zero value and zero slope
//  sampled:       linear interpolation of (times, values); evaluation outside
//                 the table throws
struct Waveform {
  WaveKind kind = WaveKind::zero;
  double amplitude = 0;
  double slope = 0;
  double frequency = 0;  // Hz
  double phase = 0;
  double rate = 1;       // filtered_ramp only, > 0
  double onset = 0;
  std::vector<double> times, values;

  // order -1 is the integral from onset, 0 the value, 1..3 derivatives.
  double eval(double t, int order = 0) const;
  bool structurally_zero() const;
  void validate() const;  // throws ConfigError

  static Waveform step(double amplitude, double onset);
  static Waveform ramp(double slope, double onset);
  static Waveform sinusoid(double amplitude, double freq_hz, double phase,
                           double onset);
  static Waveform filtered_ramp(double slope, double rate, double onset);
};

struct Term {
  double coef = 1;
  int order = 0;  // -1 integral, 0 value, 1 or 2 derivative
  Waveform wave;
};

// Sum of terms. eval(t, d) differentiates every term d more times.
struct Signal {
  std::vector<Term> terms;

  double eval(double t, int d = 0) const;
  bool is_zero() const;
  void validate() const;
  static Signal of(const Waveform& w, double coef = 1, int order = 0) {
    return Signal{{Term{coef, order, w}}};
  }
};

struct AttackSample {
  double du = 0;
  Eigen::Vector4d dy = Eigen::Vector4d::Zero();
};

struct AttackScenario {
  std::string name = "healthy";
  Signal du;                   // added to the communicated leader input
  std::array<Signal, 4> dy;    // added to each measured channel

  AttackSample eval(double t) const;
  bool is_zero() const;
  void validate() const;
};

struct Injected {
  double u_a;
  Eigen::Vector4d y_a;
};
Injected inject(double u_lead, const Eigen::Vector4d& y, const AttackSample& a);

// Stacked attack vector (du, dy2) in the order of the partition's y2 block.
Vec stacked_attack(const AttackSample& a, const OutputPartition& part);

struct AttackBounds {
  Vec delta_bar;  // bound on |(du, dy2)|, size 1+h
  double y1_bar = std::numeric_limits<double>::infinity();
};

// Throws BoundError naming the component, time and value.
void check_attack_bounds(const AttackSample& a, const OutputPartition& part,
                         const AttackBounds& b, double t);

// Signs of the two stealth relations
//   du     = input    * (tau d2y + dy)
//   d/dt g = integral * y
// where y is the relative-velocity attack and g the gap attack. With the
// output convention used here (+1, +1) reproduces a fake leader whose speed
// is v_lead + y.
struct StealthSigns {
  int input = +1;
  int integral = +1;
};

AttackScenario make_stealthy(const Waveform& profile, double tau,
                             StealthSigns signs = {});

enum class AttackClass { healthy, quantifiable, stealthy, non_stealthy };
const char* attack_class_name(AttackClass c);

struct Classification {
  AttackClass cls = AttackClass::healthy;
  std::string reason;
  double input_residual = 0;
  double integral_residual = 0;
};

Classification classify(const AttackScenario& sc, const OutputPartition& part,
                        double tau, double horizon, StealthSigns signs = {},
                        double tol = 1e-9);

}  // namespace smoguard
