#include "smoguard/estimation.hpp"

#include <cmath>
#include <sstream>

namespace smoguard {

Estimator build_estimator(const PartitionedSystem& sys, const Vec& eta_bar) {
  const RankReport rr = check_rank_condition(sys);
  if (!rr.pass()) {
    std::ostringstream os;
    os << "attack reconstruction needs rank " << rr.required << ", got rank(M)="
       << rr.rank_M << " rank(F_e)=" << rr.rank_F;
    throw DesignError(os.str());
  }
  if (eta_bar.size() != 1 + sys.h) throw ConfigError("eta_bar must have 1+h entries");
  Estimator e;
  const Mat A21A11p = sys.A21 * pseudo_inverse(sys.A11);
  e.M = A21A11p * sys.F1 - sys.F2;
  e.G = pseudo_inverse(e.M);
  e.delta = e.G.cwiseAbs() *
            (A21A11p.cwiseAbs() * sys.E1.cwiseAbs() + sys.E2.cwiseAbs()) * eta_bar;
  return e;
}

Estimate estimate(const Vec& nu_fil, const Estimator& est) {
  return {-est.G * nu_fil, est.delta};
}

Vec predicted_nu_fil(const Estimator& est, const Vec& stacked_delta) {
  return -est.M * stacked_delta;
}

std::vector<bool> containment(const Estimate& e, const Vec& truth, double slack) {
  std::vector<bool> ok(truth.size());
  for (Eigen::Index k = 0; k < truth.size(); ++k)
    ok[k] = std::abs(e.center(k) - truth(k)) <= e.halfwidth(k) + slack;
  return ok;
}

}  // namespace smoguard
