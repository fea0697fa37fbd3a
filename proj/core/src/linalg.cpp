#include "smoguard/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>

namespace smoguard {

namespace {

double cutoff(const Vec& sv, double rel_tol) {
  if (sv.size() == 0) return 0.0;
  return rel_tol * sv(0);
}

}  // namespace

Mat pseudo_inverse(const Mat& m, double rel_tol) {
  if (m.size() == 0) return Mat::Zero(m.cols(), m.rows());
  require_finite(m, "pseudo_inverse input");
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double tol = cutoff(sv, rel_tol);
  Vec inv = Vec::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

int numeric_rank(const Mat& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& sv = svd.singularValues();
  if (sv(0) == 0.0) return 0;
  const double tol = cutoff(sv, rel_tol);
  return static_cast<int>((sv.array() > tol).count());
}

Mat orth(const Mat& m, double rel_tol) {
  if (m.size() == 0) return Mat(m.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU);
  const Vec& sv = svd.singularValues();
  if (sv(0) == 0.0) return Mat(m.rows(), 0);
  const double tol = cutoff(sv, rel_tol);
  const auto r = (sv.array() > tol).count();
  return svd.matrixU().leftCols(r);
}

Mat matrix_exponential(const Mat& a, double t) {
  if (a.rows() != a.cols())
    throw NumericError("matrix_exponential: matrix is not square");
  require_finite(a, "matrix_exponential input");
  if (a.size() == 0) return a;
  Mat at = a * t;
  return at.exp();
}

Mat controllable_basis(const Mat& a, const Mat& g, double rel_tol) {
  const auto n = a.rows();
  if (g.size() == 0 || n == 0) return Mat(n, 0);
  Mat q = orth(g, rel_tol);
  for (Eigen::Index k = 0; k < n && q.cols() < n; ++k) {
    Mat aug(n, q.cols() * 2);
    aug << q, a * q;
    Mat next = orth(aug, rel_tol);
    if (next.cols() == q.cols()) break;
    q = next;
  }
  return q;
}

void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite())
    throw NumericError(std::string("non-finite value in ") + what);
}

}  // namespace smoguard
