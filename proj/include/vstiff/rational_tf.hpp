#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "vstiff/error.hpp"

namespace vstiff {

using Complex = std::complex<double>;

/// Polynomial helpers. Coefficients are stored in descending powers of s.
namespace poly {

inline std::vector<double> trim(std::vector<double> p) {
  auto first = std::find_if(p.begin(), p.end(), [](double c) { return c != 0.0; });
  if (first == p.end()) return {0.0};
  p.erase(p.begin(), first);
  return p;
}

inline std::size_t degree(std::span<const double> p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != 0.0) return p.size() - 1 - i;
  }
  return 0;
}

inline bool is_zero(std::span<const double> p) {
  return std::all_of(p.begin(), p.end(), [](double c) { return c == 0.0; });
}

inline std::vector<double> mul(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return trim(std::move(out));
}

inline std::vector<double> add(std::span<const double> a, std::span<const double> b,
                               double b_scale = 1.0) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[n - a.size() + i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[n - b.size() + i] += b_scale * b[i];
  return trim(std::move(out));
}

inline std::vector<double> scale(std::span<const double> a, double k) {
  std::vector<double> out(a.begin(), a.end());
  for (auto& c : out) c *= k;
  return trim(std::move(out));
}

/// Horner evaluation at a complex point.
inline Complex eval(std::span<const double> p, Complex s) {
  Complex acc{0.0, 0.0};
  for (double c : p) acc = acc * s + c;
  return acc;
}

/// Pads on the left with zeros to `size` coefficients.
inline std::vector<double> pad(std::span<const double> p, std::size_t size) {
  std::vector<double> out(size, 0.0);
  std::copy(p.begin(), p.end(), out.end() - static_cast<std::ptrdiff_t>(p.size()));
  return out;
}

}  // namespace poly

/// Proper rational transfer function num(s)/den(s) with a monic denominator.
class RationalTF {
 public:
  RationalTF() : num_{0.0}, den_{1.0} {}

  RationalTF(std::vector<double> num, std::vector<double> den) {
    if (num.empty() || den.empty()) throw InvalidArgument("RationalTF: empty coefficient list");
    for (double c : num)
      if (!std::isfinite(c)) throw InvalidArgument("RationalTF: non-finite numerator coefficient");
    for (double c : den)
      if (!std::isfinite(c)) throw InvalidArgument("RationalTF: non-finite denominator coefficient");
    if (poly::is_zero(den)) throw InvalidArgument("RationalTF: zero denominator");
    num_ = poly::trim(std::move(num));
    den_ = poly::trim(std::move(den));
    if (!poly::is_zero(num_) && num_.size() > den_.size())
      throw ImproperSystem("RationalTF: numerator degree exceeds denominator degree");
    normalize();
  }

  static RationalTF gain(double k) { return RationalTF({k}, {1.0}); }

  const std::vector<double>& num() const noexcept { return num_; }
  const std::vector<double>& den() const noexcept { return den_; }
  std::size_t order() const noexcept { return den_.size() - 1; }
  bool is_static() const noexcept { return order() == 0; }
  bool is_zero() const noexcept { return poly::is_zero(num_); }

  /// Static gain; only meaningful for order-0 systems.
  double static_gain() const noexcept { return num_.back() / den_.back(); }

  /// Frequency response at s = j*omega.
  Complex eval(double omega) const {
    if (!std::isfinite(omega) || omega < 0.0)
      throw InvalidArgument("RationalTF::eval: omega must be finite and non-negative");
    const Complex s{0.0, omega};
    const Complex d = poly::eval(den_, s);
    if (d == Complex{0.0, 0.0}) throw OnAxisPole(omega);
    return poly::eval(num_, s) / d;
  }

  Complex eval_s(Complex s) const { return poly::eval(num_, s) / poly::eval(den_, s); }

  friend RationalTF operator*(const RationalTF& a, const RationalTF& b) {
    return RationalTF(poly::mul(a.num_, b.num_), poly::mul(a.den_, b.den_));
  }
  friend RationalTF operator+(const RationalTF& a, const RationalTF& b) {
    if (a.den_ == b.den_) return RationalTF(poly::add(a.num_, b.num_), a.den_);
    return RationalTF(poly::add(poly::mul(a.num_, b.den_), poly::mul(b.num_, a.den_)),
                      poly::mul(a.den_, b.den_));
  }
  friend RationalTF operator-(const RationalTF& a) { return RationalTF(poly::scale(a.num_, -1.0), a.den_); }
  friend RationalTF operator-(const RationalTF& a, const RationalTF& b) { return a + (-b); }
  friend RationalTF operator*(double k, const RationalTF& a) { return RationalTF(poly::scale(a.num_, k), a.den_); }

  friend bool operator==(const RationalTF&, const RationalTF&) = default;

 private:
  void normalize() {
    const double lead = den_.front();
    if (lead != 1.0) {
      for (auto& c : den_) c /= lead;
      for (auto& c : num_) c /= lead;
    }
  }

  std::vector<double> num_;
  std::vector<double> den_;
};

}  // namespace vstiff
