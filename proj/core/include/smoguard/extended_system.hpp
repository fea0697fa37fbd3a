#pragma once

#include "smoguard/platoon.hpp"

#include <array>
#include <complex>
#include <string>
#include <vector>

namespace smoguard {

// Which measured channels are filtered. order lists the four channels; the
// first 4-h form y1 (used raw), the last h form y2 and pass through the
// stable filter z' = A_f (z - y2). 0 <= h <= 4.
struct OutputPartition {
  std::array<int, 4> order{kRelVel, kGap, kVelFol, kAccFol};
  int h = 3;

  int p() const { return kNumChannels; }
  int y1_size() const { return kNumChannels - h; }
  bool in_y1(int ch) const;
  int position(int ch) const;  // index of ch inside order
  Mat Ty() const;               // permutation, rows = order
  std::string label() const;    // e.g. "y1={rel_vel} y2={gap,v_fol,a_fol}"
  void validate() const;        // throws ConfigError
};

struct ExtendedSystem {
  OutputPartition part;
  int n = 0, p = 0, h = 0;
  Mat A, B, E, F, C;  // A_e, B_e, E_e, F_e, C_e
  Mat D;              // p x (p-h): where y1 noise enters
  Mat H;              // p x (p-h): where y1 attacks enter
  Mat A_f;
  Mat C1, C2;
  Vec c1, c2;
};

// B columns: (u_lead, u_fol, c2), E columns: (eta, zeta2), F columns: (du, dy2).
ExtendedSystem build_extended(const PlatoonParams& params,
                              const OutputPartition& part, double a_f = -5.0);

struct PartitionedSystem {
  ExtendedSystem ext;
  int n = 0, p = 0, h = 0;
  Mat T, T_inv;
  Mat A11, A12, A21, A22;
  Mat B1, B2, E1, E2, F1, F2;
  Mat D, H;
  Vec c;                   // y = x2 + c + D zeta1 (noise-free offset)
  std::vector<int> completion;  // natural coordinates picked for x1
  int m() const { return n - p; }
};

// Completes C_e to an invertible T with natural-coordinate selectors, tried
// in the order p_lead, v_lead, a_lead, p_fol, a_fol, v_fol, z...
PartitionedSystem build_partitioned(const ExtendedSystem& ext);
// Explicit completion rows ((n-p) x n). Throws DesignError when singular.
PartitionedSystem build_partitioned(const ExtendedSystem& ext,
                                    const Mat& completion_rows);

enum class PoleClass { stable, marginal, unstable };

struct PoleReport {
  std::vector<std::complex<double>> restricted;  // on the reachable subspace
  std::vector<PoleClass> classes;
  std::vector<std::complex<double>> raw;  // eig(A11)
  int reachable_dim = 0;
  bool has_unstable = false;
  bool has_marginal = false;
  bool admissible(bool strict) const {
    return !has_unstable && (!strict || !has_marginal);
  }
};

// Poles of (A11, G) that G can excite: eig of A11 restricted to the
// reachable subspace of (A11, G). A Jordan block at zero splits into
// eigenvalues of order sqrt(machine eps), hence the 1e-6 default.
PoleReport check_pole_pair(const Mat& A11, const Mat& G,
                           double marginal_tol = 1e-6);

struct RankReport {
  int rank_M = 0;
  int rank_F = 0;
  int required = 0;
  bool dims_ok = false;
  bool pass() const {
    return dims_ok && rank_M == required && rank_F == required;
  }
};

// M = A21 A11^+ F1 - F2 must have full column rank 1+h.
Mat reconstruction_matrix(const PartitionedSystem& sys);
RankReport check_rank_condition(const PartitionedSystem& sys,
                                double rel_tol = 1e-10);

struct DesignReport {
  OutputPartition part;
  bool constructed = false;
  std::string diagnosis;
  PoleReport poles_E, poles_F;
  RankReport rank;
  bool rel_vel_in_y1() const { return part.in_y1(kRelVel); }
  bool pole_admissible(bool strict) const {
    return constructed && poles_E.admissible(strict) &&
           poles_F.admissible(strict);
  }
  bool passes(bool strict) const {
    return pole_admissible(strict) && rank.pass();
  }
};

DesignReport check_design(const PlatoonParams& params,
                          const OutputPartition& part, double a_f = -5.0,
                          double marginal_tol = 1e-6);

// All 24 channel orderings times h = 0..4.
std::vector<OutputPartition> all_partitions();
std::vector<DesignReport> enumerate_designs(const PlatoonParams& params,
                                            double a_f = -5.0,
                                            double marginal_tol = 1e-6);

std::string format_poles(const PoleReport& r);

}  // namespace smoguard
