#pragma once

#include "smoguard/observer.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace smoguard {

struct BoundSpec {
  Vec eta_bar;    // bound on (eta, zeta2), size 1+h
  Vec zeta1_bar;  // bound on y1 noise, size p-h
  Vec e1_init;    // initial x1 estimation error, size n-p (zero if empty)
};

// Healthy observer error envelopes. e2_abs0 is D*zeta1_bar padded to p.
struct ErrorBounds {
  Vec e1_upper, e1_lower, e1_abs;
  Vec e2_abs0;
  Vec e2dot_upper0, e2dot_lower0;
};

// Envelopes at time t. t = +inf gives the time-invariant envelope used by
// the detector: steady pseudo-inverse term plus the initial-error term at
// t = 0, so it stays finite when A11 has integrator modes.
ErrorBounds healthy_error_bounds(double t, const PartitionedSystem& sys,
                                 const BoundSpec& b, const ObserverParams& obs);

inline ErrorBounds detector_error_bounds(const PartitionedSystem& sys,
                                         const BoundSpec& b,
                                         const ObserverParams& obs) {
  return healthy_error_bounds(std::numeric_limits<double>::infinity(), sys, b, obs);
}

struct RhoBoundInputs {
  Vec delta_bar;             // size 1+h
  bool attack_aware = false;
  Vec dy1_bar, dy1dot_bar;   // size p-h, used only when attack_aware
};

// |A21| e1_abs + |A22| D zeta1 + |E2| eta + |F2| delta  (+ |H| dy1dot + |A22 H| dy1)
Vec rho_lower_bound(const PartitionedSystem& sys, const ErrorBounds& eb,
                    const BoundSpec& b, const RhoBoundInputs& in);

// One step of the threshold recursion for a scalar channel. a < 0 is the
// EOI filter pole, ratio = upper/lower e2 slope bound.
double threshold_update(double prev, double t_minus, double ratio, double t_bar,
                        double a, double rho);

struct DetectionEvent {
  double t;
  int channel;
  double nu_fil;
  double threshold;
};

struct ChannelTrack {
  int sign = 0;           // confirmed sign of nu
  int pending = 0;        // candidate sign waiting for dwell
  double pending_since = 0;
  std::vector<double> events;  // confirmed sign-change times
  double last_neg = std::numeric_limits<double>::quiet_NaN();  // last +->- time
  double threshold = 0;
  int updates = 0;
  bool alarmed = false;
};

// Event-driven threshold on the filtered injection, one track per channel.
class ThresholdTracker {
 public:
  ThresholdTracker(const Vec& rho, const Mat& A_nu, const ErrorBounds& eb,
                   double dwell_min);

  // Feed the raw injection sample at time t (monotone).
  void track(const Vec& nu, double t);
  // First crossing per channel only.
  std::vector<DetectionEvent> detect(const Vec& nu_fil, double t);

  Vec thresholds() const;
  const ChannelTrack& channel(int j) const { return ch_[j]; }
  const Vec& ratio() const { return ratio_; }
  const Vec& t_bar() const { return t_bar_; }

 private:
  Vec rho_, a_, ratio_, t_bar_;
  double dwell_;
  std::vector<ChannelTrack> ch_;
};

}  // namespace smoguard
