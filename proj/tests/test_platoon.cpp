#include "gen.hpp"

#include <doctest.h>
#include <smoguard/platoon.hpp>

using namespace smoguard;

TEST_CASE("car_derivative") {
  const Car a = car_derivative({0, 8, 0}, 0, 0.1);
  CHECK(a[0] == 8);
  CHECK(a[1] == 0);
  CHECK(a[2] == 0);
  const Car b = car_derivative({0, 8, 1}, 2, 0.1);
  CHECK(b[0] == 8);
  CHECK(b[1] == 1);
  CHECK(b[2] == doctest::Approx(10));
}

TEST_CASE("spacing_error") {
  const auto e = spacing_error(Eigen::Vector4d(7.45, 0, 8.5, 0), 1.5, 0.7);
  CHECK(e.e == doctest::Approx(0).scale(1));
  CHECK(e.e_dot == doctest::Approx(0).scale(1));
  const auto f = spacing_error(Eigen::Vector4d(0, 1, 0, 1), 0, 0.7);
  CHECK(f.e == 0);
  CHECK(f.e_dot == doctest::Approx(0.3));
}

TEST_CASE("controller_derivative") {
  const PlatoonParams p;
  CHECK(controller_derivative(0, {1, 1}, 0, p) == doctest::Approx(0.9));
}

TEST_CASE("measure and the initial state") {
  const PlatoonParams p;
  const PlatoonState s = table1_initial_state(p);
  CHECK(s.v_lead == 8);
  CHECK(s.v_fol == 8);
  const Eigen::Vector4d y = measure(s, p.length, Eigen::Vector4d::Zero());
  CHECK(y(kGap) == doctest::Approx(7.45));
  CHECK(y(kRelVel) == 0);
  CHECK(y(kVelFol) == 8);
  CHECK(y(kAccFol) == 0);
  const Eigen::Vector4d w(0.1, -0.2, 0.03, 0.04);
  CHECK((measure(s, p.length, w) - y - w).norm() < 1e-14);
}

TEST_CASE("linear model reproduces the nonlinear helpers") {
  const PlatoonParams p;
  const PlatoonModel m = platoon_model(p);
  CHECK(m.F(2, 0) == doctest::Approx(-9.0909090909).epsilon(1e-10));
  CHECK((m.F + m.E).norm() == 0);
  for (int i = 0; i < 50; ++i) {
    PlatoonState s;
    const Vec x = gen::vector(6, -10, 10);
    s.p_lead = x(0), s.v_lead = x(1), s.a_lead = x(2);
    s.p_fol = x(3), s.v_fol = x(4), s.a_fol = x(5);
    const Vec y = m.C * x + m.c_tilde;
    CHECK((measure(s, p.length, Eigen::Vector4d::Zero()) - y).norm() < 1e-12);

    // with tau_hat = tau the model derivative equals the per-car derivative
    PlatoonParams q = p;
    q.r_tau = 1.0;
    const PlatoonModel mq = platoon_model(q);
    const double ul = gen::uniform(-2, 2), uf = gen::uniform(-2, 2);
    const Vec dx = mq.A * x + mq.B * (Vec(2) << ul, uf).finished();
    const Car dl = car_derivative({x(0), x(1), x(2)}, ul, q.tau_lead);
    const Car df = car_derivative({x(3), x(4), x(5)}, uf, q.tau_fol);
    for (int k = 0; k < 3; ++k) {
      CHECK(dx(k) == doctest::Approx(dl[k]));
      CHECK(dx(3 + k) == doctest::Approx(df[k]));
    }
  }
}

TEST_CASE("parameter validation") {
  PlatoonParams p;
  p.r_tau = 1.3;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.tau_lead = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("noise stays within its bounds and is reproducible") {
  for (NoiseKind k : {NoiseKind::uniform, NoiseKind::truncated_gaussian}) {
    NoiseSpec spec;
    spec.bound = Eigen::Vector4d(0.15, 0.3, 0.03, 0.15);
    spec.kind = k;
    spec.seed = 9;
    NoiseSampler a(spec), b(spec);
    for (int i = 0; i < 5000; ++i) {
      const Eigen::Vector4d w = a.sample();
      CHECK(((w.cwiseAbs() - spec.bound).array() <= 0).all());
      CHECK(w == b.sample());
    }
  }
  NoiseSpec bad;
  bad.bound(0) = -1;
  CHECK_THROWS_AS(NoiseSampler{bad}, ConfigError);
}
