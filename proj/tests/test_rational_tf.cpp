#include <doctest.h>

#include <random>

#include "vstiff/state_space.hpp"

using namespace vstiff;

namespace {

// Independent evaluation: expand polynomials term by term with std::pow.
Complex naive_eval(const std::vector<double>& num, const std::vector<double>& den, double w) {
  const Complex s{0.0, w};
  Complex n = 0.0, d = 0.0;
  for (std::size_t i = 0; i < num.size(); ++i) n += num[i] * std::pow(s, static_cast<int>(num.size() - 1 - i));
  for (std::size_t i = 0; i < den.size(); ++i) d += den[i] * std::pow(s, static_cast<int>(den.size() - 1 - i));
  return n / d;
}

std::vector<RationalTF> regression_suite() {
  std::vector<RationalTF> out{
      RationalTF({1.0}, {1.0, 1.0}),
      RationalTF({2.0, 0.0}, {1.0, 3.0, 2.0}),
      RationalTF({1.0, 0.5, 4.0}, {1.0, 0.4, 4.0}),
      RationalTF({0.01, 1.0}, {0.01, 1.0, 0.0}),
      RationalTF({3.0}, {1.0}),
  };
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int k = 0; k < 20; ++k) {
    const int n = 1 + k % 4;
    std::vector<double> den{1.0}, num;
    for (int i = 0; i < n; ++i) den = poly::mul(den, std::vector<double>{1.0, u(gen)});
    for (int i = 0; i <= n - (k % 2); ++i) num.push_back(u(gen) - 2.5);
    out.emplace_back(num, den);
  }
  return out;
}

}  // namespace

TEST_CASE("first-order lag at its corner") {
  const RationalTF g({1.0}, {1.0, 1.0});
  const auto v = g.eval(1.0);
  CHECK(v.real() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(v.imag() == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("integrator has an on-axis pole at zero") {
  const RationalTF g({1.0}, {1.0, 0.0});
  CHECK_THROWS_AS(g.eval(0.0), OnAxisPole);
  CHECK(std::abs(g.eval(2.0) - Complex(0.0, -0.5)) < 1e-15);
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(RationalTF({1.0, 0.0, 0.0}, {1.0, 1.0}), ImproperSystem);
  CHECK_THROWS_AS(RationalTF({1.0}, {0.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(RationalTF({NAN}, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(RationalTF({1.0}, {1.0, 1.0}).eval(-1.0), InvalidArgument);
}

TEST_CASE("denominator normalized to monic") {
  const RationalTF g({2.0}, {4.0, 2.0});
  CHECK(g.den() == std::vector<double>{1.0, 0.5});
  CHECK(g.num() == std::vector<double>{0.5});
}

TEST_CASE("algebra matches pointwise arithmetic") {
  const RationalTF a({1.0, 2.0}, {1.0, 3.0}), b({4.0}, {1.0, 1.0, 5.0});
  for (double w : {0.0, 0.3, 1.0, 7.0}) {
    CHECK(std::abs((a * b).eval(w) - a.eval(w) * b.eval(w)) < 1e-12);
    CHECK(std::abs((a + b).eval(w) - (a.eval(w) + b.eval(w))) < 1e-12);
    CHECK(std::abs((a - b).eval(w) - (a.eval(w) - b.eval(w))) < 1e-12);
    CHECK(std::abs((2.5 * a).eval(w) - 2.5 * a.eval(w)) < 1e-12);
  }
}

TEST_CASE("Horner evaluation agrees with naive power sums") {
  for (const auto& g : regression_suite())
    for (double w : {0.01, 0.7, 3.0, 40.0}) {
      const auto ref = naive_eval(g.num(), g.den(), w);
      CHECK(std::abs(g.eval(w) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("state-space realization reproduces the transfer function") {
  double worst = 0.0;
  for (const auto& g : regression_suite()) {
    const auto ss = tf_to_ss(g);
    CHECK(ss.states() == static_cast<Eigen::Index>(g.order()));
    for (double w : {0.05, 0.5, 2.0, 10.0, 100.0}) {
      const auto ref = g.eval(w);
      const double err = std::abs(ss.response(w)(0, 0) - ref) / std::max(1.0, std::abs(ref));
      worst = std::max(worst, err);
    }
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("static gain realizes as pure feedthrough") {
  const auto ss = tf_to_ss(RationalTF::gain(-3.0), "x", "y");
  CHECK(ss.states() == 0);
  CHECK(ss.d()(0, 0) == -3.0);
  CHECK(ss.input_index("x") == 0);
  CHECK_THROWS_AS(ss.input_index("nope"), UnresolvedSignal);
}
