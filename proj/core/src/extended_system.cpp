#include "smoguard/extended_system.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace smoguard {

bool OutputPartition::in_y1(int ch) const { return position(ch) < y1_size(); }

int OutputPartition::position(int ch) const {
  for (int k = 0; k < 4; ++k)
    if (order[k] == ch) return k;
  return -1;
}

Mat OutputPartition::Ty() const {
  Mat t = Mat::Zero(4, 4);
  for (int k = 0; k < 4; ++k) t(k, order[k]) = 1.0;
  return t;
}

std::string OutputPartition::label() const {
  std::ostringstream os;
  os << "y1={";
  for (int k = 0; k < 4; ++k) {
    if (k == y1_size()) os << "} y2={";
    else if (k > 0) os << ",";
    os << channel_name(order[k]);
  }
  if (y1_size() == 4) os << "} y2={";
  os << "}";
  return os.str();
}

void OutputPartition::validate() const {
  if (h < 0 || h > 4)
    throw ConfigError("design.h must be between 0 and 4");
  std::set<int> seen(order.begin(), order.end());
  if (seen.size() != 4 || *seen.begin() != 0 || *seen.rbegin() != 3)
    throw ConfigError("design.order must be a permutation of 1..4");
}

ExtendedSystem build_extended(const PlatoonParams& params,
                              const OutputPartition& part, double a_f) {
  part.validate();
  if (!(a_f < 0)) throw ConfigError("filter pole must be negative");
  const PlatoonModel mdl = platoon_model(params);
  ExtendedSystem s;
  s.part = part;
  s.p = 4;
  s.h = part.h;
  s.n = 6 + s.h;
  const int n = s.n, h = s.h, q = s.p - h;

  const Mat Ty = part.Ty();
  const Mat TC = Ty * mdl.C;
  const Vec tc = Ty * mdl.c_tilde;
  s.C1 = TC.topRows(q);
  s.C2 = TC.bottomRows(h);
  s.c1 = tc.head(q);
  s.c2 = tc.tail(h);
  s.A_f = a_f * Mat::Identity(h, h);

  s.A = Mat::Zero(n, n);
  s.A.topLeftCorner(6, 6) = mdl.A;
  s.A.bottomLeftCorner(h, 6) = -s.A_f * s.C2;
  s.A.bottomRightCorner(h, h) = s.A_f;

  s.B = Mat::Zero(n, 2 + h);
  s.B.topLeftCorner(6, 2) = mdl.B;
  s.B.bottomRightCorner(h, h) = -s.A_f;

  s.E = Mat::Zero(n, 1 + h);
  s.E.topLeftCorner(6, 1) = mdl.E;
  s.E.bottomRightCorner(h, h) = -s.A_f;

  s.F = Mat::Zero(n, 1 + h);
  s.F.topLeftCorner(6, 1) = mdl.F;
  s.F.bottomRightCorner(h, h) = -s.A_f;

  s.C = Mat::Zero(s.p, n);
  s.C.topLeftCorner(q, 6) = s.C1;
  s.C.bottomRightCorner(h, h) = Mat::Identity(h, h);

  s.D = Mat::Zero(s.p, q);
  s.D.topRows(q) = Mat::Identity(q, q);
  s.H = s.D;
  return s;
}

namespace {

PartitionedSystem finish(const ExtendedSystem& ext, const Mat& S,
                         std::vector<int> completion) {
  PartitionedSystem s;
  s.ext = ext;
  s.n = ext.n;
  s.p = ext.p;
  s.h = ext.h;
  const int n = s.n, m = n - s.p;
  s.T = Mat(n, n);
  s.T << S, ext.C;
  Eigen::FullPivLU<Mat> lu(s.T);
  if (!lu.isInvertible())
    throw DesignError("completion rows collide with the output rows: T is singular");
  s.T_inv = lu.inverse();
  const Mat A = s.T * ext.A * s.T_inv;
  const Mat B = s.T * ext.B;
  const Mat E = s.T * ext.E;
  const Mat F = s.T * ext.F;
  s.A11 = A.topLeftCorner(m, m);
  s.A12 = A.topRightCorner(m, s.p);
  s.A21 = A.bottomLeftCorner(s.p, m);
  s.A22 = A.bottomRightCorner(s.p, s.p);
  s.B1 = B.topRows(m);
  s.B2 = B.bottomRows(s.p);
  s.E1 = E.topRows(m);
  s.E2 = E.bottomRows(s.p);
  s.F1 = F.topRows(m);
  s.F2 = F.bottomRows(s.p);
  s.D = ext.D;
  s.H = ext.H;
  s.c = Vec::Zero(s.p);
  s.c.head(s.p - s.h) = ext.c1;
  s.completion = std::move(completion);
  return s;
}

}  // namespace

PartitionedSystem build_partitioned(const ExtendedSystem& ext) {
  const int n = ext.n, m = n - ext.p;
  std::vector<int> candidates{0, 1, 2, 3, 5, 4};
  for (int k = 6; k < n; ++k) candidates.push_back(k);

  Mat rows = ext.C;
  int r = numeric_rank(rows);
  std::vector<int> picked;
  for (int c : candidates) {
    if (static_cast<int>(picked.size()) == m) break;
    Mat trial(rows.rows() + 1, n);
    trial << rows, Mat::Identity(n, n).row(c);
    const int tr = numeric_rank(trial);
    if (tr > r) {
      rows = trial;
      r = tr;
      picked.push_back(c);
    }
  }
  if (static_cast<int>(picked.size()) != m)
    throw DesignError("could not complete the output map to an invertible transform");
  Mat S = Mat::Zero(m, n);
  for (int k = 0; k < m; ++k) S(k, picked[k]) = 1.0;
  return finish(ext, S, picked);
}

PartitionedSystem build_partitioned(const ExtendedSystem& ext,
                                    const Mat& completion_rows) {
  if (completion_rows.rows() != ext.n - ext.p || completion_rows.cols() != ext.n)
    throw DesignError("completion rows must be (n-p) x n");
  return finish(ext, completion_rows, {});
}

PoleReport check_pole_pair(const Mat& A11, const Mat& G, double marginal_tol) {
  PoleReport r;
  if (A11.size() > 0) {
    Eigen::EigenSolver<Mat> es(A11, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      r.raw.push_back(es.eigenvalues()(i));
  }
  const Mat Q = controllable_basis(A11, G);
  r.reachable_dim = static_cast<int>(Q.cols());
  if (Q.cols() == 0) return r;
  const Mat Ar = Q.transpose() * A11 * Q;
  Eigen::EigenSolver<Mat> es(Ar, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto lam = es.eigenvalues()(i);
    PoleClass c = PoleClass::stable;
    if (std::abs(lam.real()) <= marginal_tol) c = PoleClass::marginal;
    else if (lam.real() > 0) c = PoleClass::unstable;
    r.restricted.push_back(lam);
    r.classes.push_back(c);
    r.has_marginal |= c == PoleClass::marginal;
    r.has_unstable |= c == PoleClass::unstable;
  }
  return r;
}

Mat reconstruction_matrix(const PartitionedSystem& s) {
  return s.A21 * pseudo_inverse(s.A11) * s.F1 - s.F2;
}

RankReport check_rank_condition(const PartitionedSystem& s, double rel_tol) {
  RankReport r;
  r.required = 1 + s.h;
  r.dims_ok = s.p >= r.required;
  r.rank_M = numeric_rank(reconstruction_matrix(s), rel_tol);
  r.rank_F = numeric_rank(s.ext.F, rel_tol);
  return r;
}

DesignReport check_design(const PlatoonParams& params,
                          const OutputPartition& part, double a_f,
                          double marginal_tol) {
  DesignReport d;
  d.part = part;
  try {
    const auto sys = build_partitioned(build_extended(params, part, a_f));
    d.constructed = true;
    d.poles_E = check_pole_pair(sys.A11, sys.E1, marginal_tol);
    d.poles_F = check_pole_pair(sys.A11, sys.F1, marginal_tol);
    d.rank = check_rank_condition(sys);
    std::ostringstream os;
    if (d.poles_E.has_unstable || d.poles_F.has_unstable)
      os << "unstable reachable pole; ";
    else if (d.poles_E.has_marginal || d.poles_F.has_marginal)
      os << "marginal reachable pole; ";
    if (!d.rank.pass())
      os << "rank(M)=" << d.rank.rank_M << " < " << d.rank.required << "; ";
    d.diagnosis = os.str();
  } catch (const Error& e) {
    d.diagnosis = e.what();
  }
  return d;
}

std::vector<OutputPartition> all_partitions() {
  std::vector<OutputPartition> out;
  std::array<int, 4> perm{0, 1, 2, 3};
  do {
    for (int h = 0; h <= 4; ++h) {
      OutputPartition p;
      p.order = perm;
      p.h = h;
      out.push_back(p);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::vector<DesignReport> enumerate_designs(const PlatoonParams& params,
                                            double a_f, double marginal_tol) {
  std::vector<DesignReport> out;
  for (const auto& p : all_partitions())
    out.push_back(check_design(params, p, a_f, marginal_tol));
  return out;
}

std::string format_poles(const PoleReport& r) {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < r.restricted.size(); ++i) {
    if (i) os << ", ";
    const auto z = r.restricted[i];
    char buf[64];
    if (std::abs(z.imag()) < 1e-9)
      std::snprintf(buf, sizeof buf, "%.4g", std::abs(z.real()) < 1e-7 ? 0.0 : z.real());
    else
      std::snprintf(buf, sizeof buf, "%.4g%+.4gi", z.real(), z.imag());
    os << buf;
  }
  os << "}";
  return os.str();
}

}  // namespace smoguard
