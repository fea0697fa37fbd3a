#include <doctest.h>
#include <smoguard/config.hpp>

#include <string>

using namespace smoguard;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("table1 preset") {
  const RunConfig c = preset("table1");
  const Scenario& s = c.scenario;
  CHECK(s.platoon.tau_lead == 0.1);
  CHECK(s.platoon.r_tau == 1.1);
  CHECK(s.platoon.h_ref == 0.7);
  CHECK(s.platoon.standstill == 1.5);
  CHECK(s.platoon.k_p == 0.2);
  CHECK(s.platoon.k_d == 0.7);
  CHECK(s.filter_pole == -5);
  CHECK(s.observer.rho == (Vec(4) << 11.5, 11, 11, 11).finished());
  CHECK(s.bounds.eta_bar == (Vec(4) << 1, 0.15, 0.03, 0.15).finished());
  CHECK(s.bounds.zeta1_bar == Vec::Constant(1, 0.3));
  CHECK(s.attack_bounds.delta_bar == Vec::Constant(4, 10));
  CHECK(s.initial.v_lead == 8);
  CHECK(s.design.order[0] == kRelVel);
  CHECK(s.design.h == 3);
  CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("rejected inputs") {
  CHECK_FALSE(error_of("").empty());
  CHECK_FALSE(error_of("[]").empty());
  CHECK_FALSE(error_of("{\"preset\": \"table1\", \"preset\": \"table1\"}").empty());
  CHECK(error_of("{\"preset\": \"table1\", \"sim\": {\"dt\": 1e-3, \"dt\": 2e-3}}").find("duplicate") !=
        std::string::npos);
  CHECK(error_of("{\"preset\": \"table1\", \"bogus\": 1}").find("/bogus") != std::string::npos);
  CHECK(error_of("{\"preset\": \"table1\", \"sim\": {\"dt\": \"fast\"}}").find("/sim/dt") !=
        std::string::npos);
  CHECK_FALSE(error_of("{\"name\": \"x\"}").empty());  // no preset and no physics
  CHECK_FALSE(error_of("{\"preset\": \"table1\", \"design\": {\"order\": [1,1,2,3]}}").empty());
  CHECK_FALSE(error_of("{\"preset\": \"table1\", \"observer\": {\"rho\": [1, 2]}}").empty());
}

TEST_CASE("several errors are reported together") {
  const std::string e = error_of("{\"preset\": \"table1\", \"a\": 1, \"b\": 2}");
  CHECK(e.find("/a") != std::string::npos);
  CHECK(e.find("/b") != std::string::npos);
}

TEST_CASE("comments are accepted") {
  CHECK(error_of("{\n// reference run\n\"preset\": \"table1\"}").empty());
}

TEST_CASE("serialize and parse round trip") {
  RunConfig c = preset("table1");
  c.scenario.name = "round";
  c.scenario.attack.du = Signal::of(Waveform::step(1, 5));
  c.scenario.attack.dy[kGap] = Signal::of(Waveform::sinusoid(0.3, 0.5, 0.1, 2));
  c.scenario.attack.dy[kAccFol] = Signal{{Term{2.0, -1, Waveform::filtered_ramp(0.5, 2, 5)}}};
  c.sim.seed = 77;
  c.sim.integrator = Integrator::rk4;
  c.sweep.eta_scale = {0.5, 1};
  const std::string once = serialize_config(c);
  const RunConfig back = parse_config(once);
  CHECK(serialize_config(back) == once);
  CHECK(back.sim.seed == 77);
  CHECK(back.scenario.attack.eval(7).dy(kAccFol) == doctest::Approx(c.scenario.attack.eval(7).dy(kAccFol)));
  CHECK(back.scenario.attack.eval(3).dy(kGap) == doctest::Approx(c.scenario.attack.eval(3).dy(kGap)));
}

TEST_CASE("stealthy generator section") {
  const RunConfig c = parse_config(R"({
    "preset": "table1",
    "attack": {"stealthy": {"profile": {"kind": "filtered_ramp", "slope": 0.5, "rate": 2, "onset": 5},
                            "tau": "true"}}
  })");
  const auto cls = classify(c.scenario.attack, c.scenario.design, c.scenario.platoon.tau_lead, 60);
  CHECK(cls.cls == AttackClass::stealthy);
}

TEST_CASE("scaling helpers") {
  Scenario s = table1_scenario();
  s.attack.dy[kGap] = Signal::of(Waveform::step(1, 1));
  CHECK(scale_attack(s, 2).attack.eval(2).dy(kGap) == doctest::Approx(2));
  const Scenario u = scale_uncertainty(s, 0.5);
  CHECK(u.bounds.eta_bar(0) == doctest::Approx(0.5));
  CHECK(u.noise.bound(kRelVel) == doctest::Approx(0.15));
}

TEST_CASE("empty sweep grid is a no-op") {
  RunConfig c = preset("table1");
  c.sim.horizon = 1;
  CHECK(run_sweep(c).size() <= 1);
}
