#include <doctest.h>

#include "vstiff/plant.hpp"

using namespace vstiff;

TEST_CASE("stand-in plant channels") {
  const auto p = build_sea_plant({2.0, 0.05, 44.0});
  CHECK(p.g1 == RationalTF({2.0}, {0.05, 1.0, 0.0}));
  CHECK(p.g2.static_gain() == -2.0);
  CHECK(p.g4 == p.g1);
  CHECK(p.impedance().static_gain() == 2.0);
  CHECK_THROWS_AS(build_sea_plant({0.0, 0.01, 44.0}), InvalidArgument);
  CHECK_THROWS_AS(build_sea_plant({1.0, -0.01, 44.0}), InvalidArgument);
}

TEST_CASE("desired torque model") {
  CHECK(desired_torque_model(0.7).static_gain() == -0.7);
  CHECK(desired_torque_model(0.0).is_zero());
  CHECK_THROWS_AS(desired_torque_model(-1.0), InvalidArgument);
}

TEST_CASE("augmented plant open-loop channels") {
  const double ks = 1.5, zd = 0.4, we = 10.0;
  const auto aug = build_augmented_plant(build_sea_plant({ks, 0.01, 44.0}), zd, default_error_weight(we));
  const auto& s = aug.sys;
  for (double w : {0.3, 2.0, 40.0}) {
    const auto r = s.response(w);
    const auto at = [&](const char* out, const char* in) { return r(s.output_index(out), s.input_index(in)); };
    // With u = 0 the port is a bare spring: tau_h = -K_s phi_h.
    CHECK(std::abs(at("tau_h", "phi_h") - Complex(-ks)) < 1e-12);
    CHECK(std::abs(at("e", "phi_h") - Complex(ks - zd)) < 1e-12);
    CHECK(std::abs(at("e_w", "phi_h") - (ks - zd) / Complex(1.0, w / we)) < 1e-12);
    // Disturbance enters at the plant input.
    CHECK(std::abs(at("tau_h", "d") - at("tau_h", "u")) < 1e-12);
    CHECK(std::abs(at("tau_h", "u") - ks / (Complex(0.0, w) * Complex(1.0, 0.01 * w))) < 1e-9);
    // Noise reaches only the measurement.
    CHECK(std::abs(at("tau_h_meas", "n") - 1.0) < 1e-12);
    CHECK(std::abs(at("tau_h", "n")) < 1e-12);
    CHECK(std::abs(at("u_out", "u") - 1.0) < 1e-12);
  }
}

TEST_CASE("unstable error weight is rejected") {
  const auto p = build_sea_plant({});
  CHECK_THROWS_AS(build_augmented_plant(p, 0.5, RationalTF({1.0}, {1.0, -1.0})), InvalidArgument);
}
