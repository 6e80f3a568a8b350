#include <doctest.h>

#include <numbers>

#include "vstiff/simulation.hpp"

using namespace vstiff;

namespace {

// Static error feedback K2 = 5: stable around the integrating actuator.
ControllerSource static_error_feedback(double k) {
  return {[k](double) { return std::vector<RationalTF>{RationalTF::gain(0.0), RationalTF::gain(k)}; }, true};
}

SimScenario quiet(double duration, double zd) {
  SimScenario sc;
  sc.duration = duration;
  sc.motion = {1.0, 1.0, duration, 0.3};
  sc.segments = {{0.0, zd}};
  sc.disturbance.rms = 0.0;
  sc.noise.rms = 0.0;
  return sc;
}

}  // namespace

TEST_CASE("chirp basics") {
  const auto c = make_chirp(0.0, 6.0, 40.0, 0.5);
  CHECK(c(0.0) == 0.0);
  CHECK(c.instantaneous_frequency(0.0) == 0.0);
  CHECK(c.instantaneous_frequency(40.0) == doctest::Approx(6.0));
  // d(phase)/dt / 2 pi at T, by central difference.
  const double h = 1e-6;
  CHECK((c.phase(40.0 + h) - c.phase(40.0 - h)) / (2.0 * h) / (2.0 * std::numbers::pi) == doctest::Approx(6.0).epsilon(1e-6));
  CHECK_THROWS_AS(make_chirp(2.0, 1.0, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_chirp(0.0, 1.0, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("chirp RMS approaches amp / sqrt 2") {
  const auto c = make_chirp(0.0, 6.0, 40.0, 0.5);
  const int n = 400000;
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double v = c(40.0 * k / n);
    acc += (k == 0 || k == n ? 0.5 : 1.0) * v * v;
  }
  const double rms = std::sqrt(acc / n);
  CHECK(std::abs(rms - 0.5 / std::sqrt(2.0)) <= 0.02 * 0.5 / std::sqrt(2.0));
}

TEST_CASE("default stiffness sequence switches where the motion is zero") {
  const SimScenario sc;
  REQUIRE(sc.segments.size() == 8);
  CHECK(sc.segments.front().zd == 0.71);
  CHECK(sc.segments.back().zd == 1.0);
  for (std::size_t i = 1; i < sc.segments.size(); ++i) {
    const double t = sc.segments[i].start;
    CHECK(std::abs(sc.motion(t)) < 1e-9);
    const double even = 40.0 * static_cast<double>(i) / 8.0;
    CHECK(std::abs(t - even) <= 0.5 / sc.motion.instantaneous_frequency(even));
  }
}

TEST_CASE("zero excitation stays at equilibrium") {
  auto sc = quiet(2.0, 0.5);
  sc.motion.amplitude = 0.0;
  const auto tr = simulate_closed_loop(DesignProblem{}, static_error_feedback(5.0), sc);
  CHECK(tr.size() == 2001);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    CHECK(tr.tau_h[i] == 0.0);
    CHECK(tr.u[i] == 0.0);
    CHECK(tr.e[i] == 0.0);
  }
}

TEST_CASE("trace invariants: e = tau_d - tau_h and saturation") {
  auto sc = quiet(3.0, 0.3);
  sc.u_max = 0.2;
  sc.disturbance.rms = 0.01;
  sc.noise.rms = 0.005;
  const auto tr = simulate_closed_loop(DesignProblem{}, static_error_feedback(5.0), sc);
  bool clipped = false;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    CHECK(tr.e[i] == tr.tau_d[i] - tr.tau_h[i]);
    CHECK(std::abs(tr.u[i]) <= sc.u_max);
    CHECK(tr.tau_d[i] == -tr.zd[i] * tr.phi_h[i]);
    clipped = clipped || std::abs(tr.u_pre_sat[i]) > sc.u_max;
  }
  CHECK(clipped);
}

TEST_CASE("steady-state sinusoid matches the linear frequency response") {
  const double zd = 0.4, k = 5.0;
  auto sc = quiet(10.0, zd);
  sc.saturate = false;
  DesignProblem pb;
  const auto cl = close_loop(pb.augmented(zd), {RationalTF::gain(0.0), RationalTF::gain(k)});
  REQUIRE(is_stable(cl.sys).stable);
  const double gain = std::abs(cl.sys.channel("phi_h", "tau_h").response(2.0 * std::numbers::pi)(0, 0));
  const auto tr = simulate_closed_loop(pb, static_error_feedback(k), sc);
  double peak = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i)
    if (tr.t[i] >= 8.0) peak = std::max(peak, std::abs(tr.tau_h[i]));
  CHECK(std::abs(peak / sc.motion.amplitude - gain) <= 0.01 * gain);
}

TEST_CASE("simulation is deterministic and seed-dependent") {
  auto sc = quiet(1.0, 0.5);
  sc.disturbance.rms = 0.01;
  sc.noise.rms = 0.005;
  const auto a = simulate_closed_loop(DesignProblem{}, static_error_feedback(5.0), sc);
  const auto b = simulate_closed_loop(DesignProblem{}, static_error_feedback(5.0), sc);
  CHECK(a == b);
  sc.seed = 2;
  CHECK_FALSE(a == simulate_closed_loop(DesignProblem{}, static_error_feedback(5.0), sc));
}

TEST_CASE("scenario validation") {
  auto sc = quiet(1.0, 0.5);
  sc.dt = 3e-4;
  CHECK_THROWS_AS(sc.validate(), InvalidArgument);
  sc = quiet(1.0, 0.5);
  sc.segments = {{0.0, 0.5}, {0.0, 0.6}};
  CHECK_THROWS_AS(sc.validate(), InvalidArgument);
  sc = quiet(1.0, 0.5);
  sc.segments = {{0.0, -0.1}};
  CHECK_THROWS_AS(sc.validate(), InvalidArgument);
}

TEST_CASE("blow-up is reported") {
  auto sc = quiet(5.0, 0.5);
  sc.saturate = false;
  // Positive feedback on the error drives the integrator away.
  CHECK_THROWS_AS(simulate_closed_loop(DesignProblem{}, static_error_feedback(-200.0), sc), SimulationDiverged);
}

TEST_CASE("filtered noise reaches its stationary RMS") {
  for (bool hp : {false, true}) {
    const NoiseSpec spec{hp ? 40.0 * std::numbers::pi : 20.0 * std::numbers::pi, 0.01};
    const auto v = filtered_noise(spec, hp, 1e-3, 400000, 17);
    double acc = 0.0;
    for (double x : v) acc += x * x;
    CHECK(std::sqrt(acc / static_cast<double>(v.size())) == doctest::Approx(0.01).epsilon(0.05));
  }
  CHECK(filtered_noise({10.0, 0.0}, false, 1e-3, 5, 1) == std::vector<double>(5, 0.0));
}

TEST_CASE("energy check: zero trace and ideal spring") {
  SimTrace z;
  for (int i = 0; i < 10; ++i)
    for (auto* c : {&z.t, &z.zd, &z.phi_h, &z.tau_d, &z.tau_h, &z.e, &z.u_pre_sat, &z.u, &z.d, &z.n}) c->push_back(0.0);
  for (int i = 0; i < 10; ++i) z.t[static_cast<std::size_t>(i)] = 1e-3 * i;
  const auto e0 = passivity_energy_check(z);
  CHECK(e0.min_w == 0.0);
  CHECK(e0.pass);

  SimTrace s;
  const double zd = 0.8;
  for (int i = 0; i <= 3000; ++i) {
    const double t = 1e-3 * i, phi = std::sin(2.0 * std::numbers::pi * t);
    s.t.push_back(t);
    s.phi_h.push_back(phi);
    s.tau_h.push_back(-zd * phi);
  }
  const auto e = passivity_energy_check(s);
  CHECK(e.min_w >= -1e-15);
  for (int cycle = 1; cycle <= 3; ++cycle) CHECK(std::abs(e.w[static_cast<std::size_t>(1000 * cycle)]) < 1e-12);
}

TEST_CASE("zero PID recovers the open loop") {
  const PidGains g{0.0, 0.0, 0.0, 1e-3};
  CHECK(g.tf().is_zero());
  DesignProblem pb;
  const auto aug = pb.augmented(0.5);
  const auto a = close_loop(aug, {RationalTF::gain(0.0), g.tf()});
  const auto b = close_loop(aug, {RationalTF::gain(0.0), RationalTF::gain(0.0)});
  CHECK(std::abs(a.sys.channel("phi_h", "e").response(1.0)(0, 0) - b.sys.channel("phi_h", "e").response(1.0)(0, 0)) <
        1e-12);
}

TEST_CASE("PID baseline is stable and passive at its reference stiffness") {
  DesignProblem pb;
  const auto base = make_pid_baseline(pb, 0.5, 3);
  CHECK(base.gains.ki >= 0.0);
  CHECK(base.report.stable);
  CHECK(base.report[ConstraintKind::passivity].achieved <= 1.0 + kPassivityTolerance);
  CHECK(base.full_passivity <= 1.0 + kPassivityTolerance);
  CHECK_THROWS_AS(make_pid_baseline(pb, 0.0, 3), InvalidArgument);
}
