#include "smoguard/detection.hpp"

#include <cmath>
#include <sstream>

namespace smoguard {

namespace {

Vec padded_zeta(const PartitionedSystem& sys, const Vec& zeta1_bar) {
  return sys.D * zeta1_bar;
}

void check_sizes(const PartitionedSystem& sys, const BoundSpec& b) {
  if (b.eta_bar.size() != 1 + sys.h)
    throw ConfigError("eta_bar must have 1+h entries");
  if (b.zeta1_bar.size() != sys.p - sys.h)
    throw ConfigError("zeta1_bar must have p-h entries");
  if (b.e1_init.size() != 0 && b.e1_init.size() != sys.m())
    throw ConfigError("initial x1 error must have n-p entries");
}

}  // namespace

ErrorBounds healthy_error_bounds(double t, const PartitionedSystem& sys,
                                 const BoundSpec& b, const ObserverParams& obs) {
  check_sizes(sys, b);
  if (obs.rho.size() != sys.p) throw ConfigError("rho not configured for p channels");
  const int m = sys.m();
  const Vec e0 = b.e1_init.size() ? b.e1_init : Vec::Zero(m);
  const Vec dz = padded_zeta(sys, b.zeta1_bar);
  const Vec drive = sys.A12.cwiseAbs() * dz + sys.E1.cwiseAbs() * b.eta_bar;
  ErrorBounds eb;
  if (std::isinf(t)) {
    const Vec steady = pseudo_inverse(sys.A11) * drive;
    eb.e1_upper = e0 - steady;
    eb.e1_lower = e0 + steady;
  } else {
    // exp([[A11, b], [0, 0]] t) carries both e^{A11 t} and the integral of
    // e^{A11 s} b, which stays exact when A11 is singular
    Mat aug = Mat::Zero(m + 1, m + 1);
    aug.topLeftCorner(m, m) = sys.A11;
    aug.topRightCorner(m, 1) = drive;
    const Mat big = matrix_exponential(aug, t);
    const Mat ex = big.topLeftCorner(m, m);
    const Vec forced = -big.topRightCorner(m, 1);
    eb.e1_upper = ex * e0 - forced;
    eb.e1_lower = ex * e0 + forced;
  }
  eb.e1_abs = eb.e1_upper.cwiseAbs().cwiseMax(eb.e1_lower.cwiseAbs());
  eb.e2_abs0 = dz;
  const Mat A22ms = sys.A22 - obs.A22_s;
  const Vec noise = (A22ms.cwiseAbs() + obs.A22_s.cwiseAbs()) * dz +
                    sys.E2.cwiseAbs() * b.eta_bar;
  eb.e2dot_upper0 = sys.A21.cwiseAbs() * eb.e1_upper + noise + obs.rho;
  eb.e2dot_lower0 = sys.A21.cwiseAbs() * eb.e1_lower - noise + obs.rho;
  return eb;
}

Vec rho_lower_bound(const PartitionedSystem& sys, const ErrorBounds& eb,
                    const BoundSpec& b, const RhoBoundInputs& in) {
  check_sizes(sys, b);
  if (in.delta_bar.size() != 1 + sys.h)
    throw ConfigError("delta_bar must have 1+h entries");
  Vec r = sys.A21.cwiseAbs() * eb.e1_abs +
          sys.A22.cwiseAbs() * padded_zeta(sys, b.zeta1_bar) +
          sys.E2.cwiseAbs() * b.eta_bar + sys.F2.cwiseAbs() * in.delta_bar;
  if (in.attack_aware) {
    if (in.dy1_bar.size() != sys.p - sys.h || in.dy1dot_bar.size() != sys.p - sys.h)
      throw ConfigError("dy1 bounds must have p-h entries");
    r += sys.H.cwiseAbs() * in.dy1dot_bar + (sys.A22 * sys.H).cwiseAbs() * in.dy1_bar;
  }
  return r;
}

double threshold_update(double prev, double t_minus, double ratio, double t_bar,
                        double a, double rho) {
  const double t_plus = ratio * t_minus;
  const double t_tilde = t_minus + t_plus;
  const double nu0 = std::exp(a * t_tilde) * prev +
                     (1 - 2 * std::exp(a * t_plus) + std::exp(a * t_tilde)) * rho;
  const double eb = std::exp(a * t_bar);
  return eb * nu0 + (1 - eb) * rho;
}

ThresholdTracker::ThresholdTracker(const Vec& rho, const Mat& A_nu,
                                   const ErrorBounds& eb, double dwell_min)
    : rho_(rho), dwell_(dwell_min) {
  const auto p = rho.size();
  if (A_nu.rows() != p || A_nu.cols() != p)
    throw ConfigError("A_nu must be p x p");
  if (!A_nu.isDiagonal(1e-14))
    throw ConfigError("threshold recursion needs a diagonal A_nu");
  a_ = A_nu.diagonal();
  ratio_.resize(p);
  t_bar_.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(eb.e2dot_lower0(j) > 0)) {
      std::ostringstream os;
      os << "lower e2 slope bound on channel " << j + 1 << " is "
         << eb.e2dot_lower0(j) << " <= 0: rho too small for the noise bounds";
      throw DesignError(os.str());
    }
    ratio_(j) = eb.e2dot_upper0(j) / eb.e2dot_lower0(j);
    t_bar_(j) = 2 * eb.e2_abs0(j) / eb.e2dot_upper0(j);
  }
  ch_.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) ch_[j].threshold = rho(j);
}

void ThresholdTracker::track(const Vec& nu, double t) {
  for (std::size_t j = 0; j < ch_.size(); ++j) {
    auto& c = ch_[j];
    const int s = (nu(j) > 0) - (nu(j) < 0);
    if (s == 0) continue;
    if (c.sign == 0) {
      c.sign = s;
      continue;
    }
    if (s == c.sign) {
      c.pending = 0;
      continue;
    }
    if (c.pending != s) {
      c.pending = s;
      c.pending_since = t;
    }
    if (t - c.pending_since + 1e-12 < dwell_) continue;
    const double te = c.pending_since;
    c.sign = s;
    c.pending = 0;
    c.events.push_back(te);
    if (s < 0) {
      c.last_neg = te;
    } else if (!std::isnan(c.last_neg)) {
      c.threshold = threshold_update(c.threshold, te - c.last_neg, ratio_(j),
                                     t_bar_(j), a_(j), rho_(j));
      ++c.updates;
    }
  }
}

std::vector<DetectionEvent> ThresholdTracker::detect(const Vec& nu_fil, double t) {
  std::vector<DetectionEvent> out;
  for (std::size_t j = 0; j < ch_.size(); ++j) {
    auto& c = ch_[j];
    if (c.alarmed) continue;
    if (std::abs(nu_fil(j)) > c.threshold) {
      c.alarmed = true;
      out.push_back({t, static_cast<int>(j), nu_fil(j), c.threshold});
    }
  }
  return out;
}

Vec ThresholdTracker::thresholds() const {
  Vec v(ch_.size());
  for (std::size_t j = 0; j < ch_.size(); ++j) v(j) = ch_[j].threshold;
  return v;
}

}  // namespace smoguard
