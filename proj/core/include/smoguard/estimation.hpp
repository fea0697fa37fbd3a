#pragma once

#include "smoguard/extended_system.hpp"

#include <vector>

namespace smoguard {

// Attack reconstruction from the filtered injection.
// In sliding mode nu_fil -> -(A21 A11^+ F1 - F2) Delta up to the
// uncertainty term, so Delta_hat = -G nu_fil with G = M^+.
struct Estimator {
  Mat M;      // A21 A11^+ F1 - F2
  Mat G;      // M^+
  Vec delta;  // half-width |G| (|A21 A11^+| |E1| + |E2|) eta_bar
};

// Throws DesignError when the rank condition fails.
Estimator build_estimator(const PartitionedSystem& sys, const Vec& eta_bar);

struct Estimate {
  Vec center;
  Vec halfwidth;
};
Estimate estimate(const Vec& nu_fil, const Estimator& est);

// Steady-state value of nu_fil predicted for a constant stacked attack.
Vec predicted_nu_fil(const Estimator& est, const Vec& stacked_delta);

// Per component: |center - truth| <= halfwidth + slack
std::vector<bool> containment(const Estimate& e, const Vec& truth, double slack);

}  // namespace smoguard
