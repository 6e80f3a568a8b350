#include <doctest.h>

#include "vstiff/interconnect.hpp"

using namespace vstiff;

TEST_CASE("series connection multiplies transfer functions") {
  const RationalTF g1({1.0}, {1.0, 2.0}), g2({3.0, 1.0}, {1.0, 5.0});
  const auto sys = connect({{"a", tf_to_ss(g1, "x", "m")}, {"b", tf_to_ss(g2, "m", "y")}}, {}, {"x"}, {"y"});
  for (double w : {0.0, 0.5, 4.0, 30.0}) CHECK(std::abs(sys.response(w)(0, 0) - (g1 * g2).eval(w)) < 1e-12);
}

TEST_CASE("negative feedback loop gives G / (1 + G)") {
  const RationalTF g({10.0}, {1.0, 1.0, 0.0});
  Matrix diff(1, 2);
  diff << 1.0, -1.0;
  const auto sys = connect({{"sum", StateSpaceModel::static_gain(diff, {"r", "y"}, {"err"})},
                            {"plant", tf_to_ss(g, "err", "y")}},
                           {}, {"r"}, {"y"});
  for (double w : {0.1, 1.0, 3.0, 20.0}) {
    const auto gv = g.eval(w);
    CHECK(std::abs(sys.response(w)(0, 0) - gv / (1.0 + gv)) < 1e-12);
  }
  CHECK(is_stable(sys).stable);
}

TEST_CASE("explicit connection gains sum into an input") {
  const auto sys = connect({{"k", StateSpaceModel::static_gain(Matrix::Identity(1, 1), {"in"}, {"y"})}},
                           {{"k", "in", "a", 2.0}, {"k", "in", "b", -1.0}}, {"a", "b"}, {"y"});
  CHECK(sys.d()(0, 0) == 2.0);
  CHECK(sys.d()(0, 1) == -1.0);
}

TEST_CASE("external output may name an external input") {
  const auto sys = connect({{"k", StateSpaceModel::static_gain(Matrix::Constant(1, 1, 4.0), {"x"}, {"y"})}}, {},
                           {"x"}, {"y", "x"});
  CHECK(sys.d()(0, 0) == 4.0);
  CHECK(sys.d()(1, 0) == 1.0);
}

TEST_CASE("undriven input is reported by name") {
  try {
    connect({{"k", tf_to_ss(RationalTF::gain(1.0), "missing", "y")}}, {}, {}, {"y"});
    FAIL("expected UnresolvedSignal");
  } catch (const UnresolvedSignal& e) {
    CHECK(std::string(e.what()).find("missing") != std::string::npos);
  }
}

TEST_CASE("unit positive feedthrough loop is ill-posed") {
  Matrix sum(1, 2);
  sum << 1.0, 1.0;
  CHECK_THROWS_AS(connect({{"s", StateSpaceModel::static_gain(sum, {"r", "y"}, {"y"})}}, {}, {"r"}, {"y"}),
                  IllPosedLoop);
}

TEST_CASE("minimal realization drops an unobservable integrator") {
  Matrix a(2, 2), b(2, 1), c(1, 2), d(1, 1);
  a << -1.0, 0.0, 0.0, 0.0;
  b << 1.0, 1.0;
  c << 1.0, 0.0;
  d << 0.0;
  const StateSpaceModel sys(a, b, c, d, {"u"}, {"y"});
  CHECK_FALSE(is_stable(sys).stable);
  const auto m = minimal_siso(sys);
  CHECK(m.states() == 1);
  CHECK(is_stable(m).stable);
  CHECK(std::abs(m.response(2.0)(0, 0) - 1.0 / Complex(1.0, 2.0)) < 1e-12);
}

TEST_CASE("Hessenberg evaluator agrees with dense solve") {
  const RationalTF g({1.0, 0.2, 3.0, 1.0}, {1.0, 2.0, 5.0, 4.0, 1.0});
  const auto ss = tf_to_ss(g);
  FrequencyEvaluator ev(ss);
  for (double w : {0.0, 0.01, 0.9, 2.5, 100.0}) CHECK(std::abs(ev(w) - ss.response(w)(0, 0)) < 1e-12);
}

TEST_CASE("spectral abscissa") {
  const auto r = is_stable(tf_to_ss(RationalTF({1.0}, {1.0, 3.0, 2.0})));
  CHECK(r.stable);
  CHECK(r.abscissa == doctest::Approx(-1.0));
  CHECK_FALSE(is_stable(tf_to_ss(RationalTF({1.0}, {1.0, -0.5}))).stable);
}
