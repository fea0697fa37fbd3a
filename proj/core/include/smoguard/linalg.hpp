#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace smoguard {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Error carrying a stable short code (E_CONFIG, E_DESIGN, ...) for the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("E_CONFIG", w) {}
};
struct DesignError : Error {
  explicit DesignError(const std::string& w) : Error("E_DESIGN", w) {}
};
struct BoundError : Error {
  explicit BoundError(const std::string& w) : Error("E_BOUND", w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error("E_NUMERIC", w) {}
};

// Moore-Penrose inverse via SVD. Singular values below rel_tol * sigma_max
// are treated as zero.
Mat pseudo_inverse(const Mat& m, double rel_tol = 1e-10);

int numeric_rank(const Mat& m, double rel_tol = 1e-10);

// Orthonormal basis of range(m); zero columns when m is numerically zero.
Mat orth(const Mat& m, double rel_tol = 1e-10);

// exp(a * t) by scaling and squaring with Pade approximants.
Mat matrix_exponential(const Mat& a, double t = 1.0);

// Basis of the reachable subspace of (a, g), built as a Krylov staircase
// with re-orthogonalisation at every step.
Mat controllable_basis(const Mat& a, const Mat& g, double rel_tol = 1e-10);

void require_finite(const Mat& m, const char* what);

}  // namespace smoguard
