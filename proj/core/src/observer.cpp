#include "smoguard/observer.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace smoguard {

ObserverParams ObserverParams::defaults(int p) {
  ObserverParams o;
  o.rho = Vec::Constant(p, 11.0);
  o.rho(0) = 11.5;
  o.A22_s = -Mat::Identity(p, p);
  o.A_nu = -Mat::Identity(p, p);
  return o;
}

namespace {

bool hurwitz(const Mat& a) {
  Eigen::EigenSolver<Mat> es(a, false);
  return (es.eigenvalues().real().array() < 0).all();
}

}  // namespace

void ObserverParams::validate(int p) const {
  if (rho.size() != p) throw ConfigError("observer.rho must have p entries");
  if (!rho.allFinite() || (rho.array() <= 0).any())
    throw ConfigError("observer.rho entries must be positive");
  if (A22_s.rows() != p || A22_s.cols() != p || !A22_s.allFinite())
    throw ConfigError("observer.a22s must be p x p");
  if (A_nu.rows() != p || A_nu.cols() != p || !A_nu.allFinite())
    throw ConfigError("observer.a_nu must be p x p");
  if (!hurwitz(A22_s)) throw ConfigError("observer.a22s must be Hurwitz");
  if (!hurwitz(A_nu)) throw ConfigError("observer.a_nu must be Hurwitz");
  if (!(epsilon >= 0) || !std::isfinite(epsilon))
    throw ConfigError("observer.epsilon must be >= 0");
}

Vec output_filter_derivative(const Vec& z, const Vec& y2, const Mat& A_f) {
  return A_f * (z - y2);
}

Vec innovation(const Vec& xhat2, const Vec& y, const Vec& c) {
  return xhat2 + c - y;
}

Vec switching_injection(const Vec& e_y, const Vec& rho, double epsilon) {
  Vec nu(e_y.size());
  for (Eigen::Index i = 0; i < e_y.size(); ++i) {
    double s;
    if (epsilon > 0) {
      s = std::clamp(e_y(i) / epsilon, -1.0, 1.0);
    } else {
      s = (e_y(i) > 0) - (e_y(i) < 0);
    }
    nu(i) = -rho(i) * s;
  }
  return nu;
}

ObserverDerivative observer_derivative(const ObserverState& obs, const Vec& u,
                                       const Vec& y, const PartitionedSystem& sys,
                                       const ObserverParams& params) {
  const Vec e_y = innovation(obs.xhat2, y, sys.c);
  return observer_derivative(obs, u, y, sys, params,
                             switching_injection(e_y, params.rho, params.epsilon));
}

ObserverDerivative observer_derivative(const ObserverState& obs, const Vec& u,
                                       const Vec& y, const PartitionedSystem& sys,
                                       const ObserverParams& params, const Vec& nu) {
  ObserverDerivative d;
  d.e_y = innovation(obs.xhat2, y, sys.c);
  d.nu = nu;
  d.dxhat1 = sys.A11 * obs.xhat1 + sys.A12 * obs.xhat2 + sys.B1 * u - sys.A12 * d.e_y;
  d.dxhat2 = sys.A21 * obs.xhat1 + sys.A22 * obs.xhat2 + sys.B2 * u -
             (sys.A22 - params.A22_s) * d.e_y + nu;
  return d;
}

Vec eoi_derivative(const Vec& nu_fil, const Vec& nu, const Mat& A_nu) {
  return A_nu * (nu_fil - nu);
}

}  // namespace smoguard
