#include "gen.hpp"

#include <doctest.h>
#include <smoguard/linalg.hpp>

#include <cmath>

using namespace smoguard;

TEST_CASE("pseudo_inverse basics") {
  CHECK(pseudo_inverse(Mat::Identity(4, 4)).isApprox(Mat::Identity(4, 4)));
  const Mat z = pseudo_inverse(Mat::Zero(3, 5));
  CHECK(z.rows() == 5);
  CHECK(z.cols() == 3);
  CHECK(z.norm() == 0.0);
  const Mat m = gen::matrix(5, 5);
  CHECK((pseudo_inverse(m) * m - Mat::Identity(5, 5)).norm() <= 1e-9);
}

TEST_CASE("pseudo_inverse satisfies the Penrose identities on random shapes and ranks") {
  for (int i = 0; i < 200; ++i) {
    const int r = gen::integer(1, 9), c = gen::integer(1, 9);
    const int k = gen::integer(1, std::min(r, c));
    const Mat a = gen::low_rank(r, c, k);
    const Mat x = pseudo_inverse(a);
    INFO("shape " << r << "x" << c << " rank " << k);
    CHECK((a * x * a - a).norm() <= 1e-9 * a.norm());
    CHECK((x * a * x - x).norm() <= 1e-9 * x.norm());
    CHECK(((a * x).transpose() - a * x).norm() <= 1e-9);
    CHECK(((x * a).transpose() - x * a).norm() <= 1e-9);
    CHECK(numeric_rank(a) == k);
  }
}

TEST_CASE("orth spans the column space") {
  for (int i = 0; i < 50; ++i) {
    const Mat a = gen::low_rank(7, 5, gen::integer(1, 5));
    const Mat q = orth(a);
    CHECK(q.cols() == numeric_rank(a));
    CHECK((q.transpose() * q - Mat::Identity(q.cols(), q.cols())).norm() <= 1e-10);
    CHECK((q * q.transpose() * a - a).norm() <= 1e-9 * a.norm());
  }
}

TEST_CASE("matrix_exponential") {
  CHECK(matrix_exponential(gen::matrix(4, 4), 0.0).isApprox(Mat::Identity(4, 4)));

  const Vec d = (Vec(3) << -1.0, 0.5, 2.0).finished();
  const Mat e = matrix_exponential(d.asDiagonal().toDenseMatrix(), 0.7);
  for (int i = 0; i < 3; ++i) CHECK(e(i, i) == doctest::Approx(std::exp(0.7 * d(i))).epsilon(1e-14));
  CHECK(std::abs(e(0, 1)) < 1e-15);

  // nilpotent chain: exp(N t) = I + N t + N^2 t^2 / 2
  Mat n = Mat::Zero(3, 3);
  n(0, 1) = n(1, 2) = 1;
  const Mat en = matrix_exponential(n, 2.0);
  CHECK(en(0, 2) == doctest::Approx(2.0));
  CHECK(en(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("matrix_exponential agrees with an RK4 integration of dx/dt = A x") {
  for (int i = 0; i < 20; ++i) {
    const int n = gen::integer(2, 7);
    const Mat a = gen::stable(n);
    Mat x = Mat::Identity(n, n);
    const int steps = 4000;
    const double h = 1.0 / steps;
    for (int s = 0; s < steps; ++s) {
      const Mat k1 = a * x, k2 = a * (x + 0.5 * h * k1), k3 = a * (x + 0.5 * h * k2),
                k4 = a * (x + h * k3);
      x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    CHECK((matrix_exponential(a, 1.0) - x).norm() <= 1e-8 * x.norm());
  }
}

TEST_CASE("controllable_basis") {
  Mat a = Mat::Zero(3, 3);
  a(0, 1) = 1;
  a(2, 2) = -1;
  Mat g = Mat::Zero(3, 1);
  g(1, 0) = 1;
  const Mat v = controllable_basis(a, g);
  CHECK(v.cols() == 2);
  CHECK(std::abs(v.row(2).norm()) < 1e-12);
}

TEST_CASE("require_finite") {
  Mat m = Mat::Ones(2, 2);
  CHECK_NOTHROW(require_finite(m, "m"));
  m(1, 0) = std::nan("");
  CHECK_THROWS_AS(require_finite(m, "m"), NumericError);
}
