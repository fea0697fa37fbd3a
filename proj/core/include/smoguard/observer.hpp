#pragma once

#include "smoguard/extended_system.hpp"

namespace smoguard {

struct ObserverParams {
  Vec rho;     // switching gain per output channel
  Mat A22_s;   // desired stable output-error dynamics
  Mat A_nu;    // low-pass filter on the injection signal
  double epsilon = 0.02;  // boundary layer; 0 gives the discontinuous sign

  static ObserverParams defaults(int p = 4);
  void validate(int p) const;  // throws ConfigError
};

struct ObserverState {
  Vec xhat1, xhat2;
  Vec nu_fil;
};

// z' = A_f (z - y2)
Vec output_filter_derivative(const Vec& z, const Vec& y2, const Mat& A_f);

// e_y = xhat2 + c - y
Vec innovation(const Vec& xhat2, const Vec& y, const Vec& c);

// nu = -rho .* sat(e_y / eps), or -rho .* sign(e_y) when eps == 0
Vec switching_injection(const Vec& e_y, const Vec& rho, double epsilon);

struct ObserverDerivative {
  Vec dxhat1, dxhat2;
  Vec e_y, nu;
};

// u = (u_a, u_fol, c2), y = (y1, z)
//   xhat1' = A11 xhat1 + A12 xhat2 + B1 u - A12 e_y
//   xhat2' = A21 xhat1 + A22 xhat2 + B2 u - (A22 - A22_s) e_y + nu
ObserverDerivative observer_derivative(const ObserverState& obs, const Vec& u,
                                       const Vec& y, const PartitionedSystem& sys,
                                       const ObserverParams& params);

// Same, with the injection supplied (held over an integration step).
ObserverDerivative observer_derivative(const ObserverState& obs, const Vec& u,
                                       const Vec& y, const PartitionedSystem& sys,
                                       const ObserverParams& params, const Vec& nu);

// nu_fil' = A_nu (nu_fil - nu)
Vec eoi_derivative(const Vec& nu_fil, const Vec& nu, const Mat& A_nu);

}  // namespace smoguard
