#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "vstiff/state_space.hpp"

namespace vstiff {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct GridOptions {
  double points_per_decade = 200.0;
  /// Lowest log-spaced frequency; a band starting at 0 is gridded from here.
  double floor = 1e-3;
  /// Substitute for an infinite upper edge.
  double ceiling = 1e5;
  /// Linear densification within +-edge_fraction of each finite, nonzero edge.
  double edge_fraction = 0.05;
  int edge_points = 40;
  /// Whether omega = 0 itself is sampled when the band starts at 0.
  bool include_zero = true;
};

/// Strictly increasing angular frequencies covering [lo, hi].
struct FrequencyGrid {
  std::vector<double> points;
  double lo = 0.0;
  double hi = kInf;

  static FrequencyGrid band(double lo, double hi, const GridOptions& opt = {}) {
    if (!(lo >= 0.0) || !(hi > lo) || std::isnan(hi))
      throw InvalidArgument("FrequencyGrid: require 0 <= lo < hi");
    if (!(opt.points_per_decade > 0.0) || !(opt.floor > 0.0))
      throw InvalidArgument("FrequencyGrid: bad options");
    FrequencyGrid g;
    g.lo = lo;
    g.hi = hi;
    const double top = std::isinf(hi) ? std::max(opt.ceiling, lo * 10.0) : hi;
    const double bottom = std::max(lo, opt.floor);
    if (!(top > bottom)) throw InvalidArgument("FrequencyGrid: band lies below the grid floor");

    std::vector<double> pts;
    const double decades = std::log10(top / bottom);
    const auto count = static_cast<std::size_t>(std::ceil(decades * opt.points_per_decade)) + 1;
    for (std::size_t k = 0; k < count; ++k) {
      const double t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
      pts.push_back(bottom * std::pow(top / bottom, t));
    }
    pts.front() = bottom;
    pts.back() = top;

    auto densify = [&](double edge) {
      const double a = std::max(bottom, edge * (1.0 - opt.edge_fraction));
      const double b = std::min(top, edge * (1.0 + opt.edge_fraction));
      for (int k = 0; k <= opt.edge_points; ++k)
        pts.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(opt.edge_points));
    };
    if (lo > 0.0) densify(lo);
    if (!std::isinf(hi)) densify(hi);
    if (lo == 0.0 && opt.include_zero) pts.push_back(0.0);

    std::sort(pts.begin(), pts.end());
    std::vector<double> unique;
    for (double w : pts) {
      if (unique.empty() || w > unique.back() * (1.0 + 1e-14) + 1e-300) unique.push_back(w);
    }
    g.points = std::move(unique);
    return g;
  }

  double top() const { return points.back(); }
  bool contains(double w) const { return w >= points.front() && w <= points.back(); }
};

struct BandPeak {
  double value = 0.0;
  double omega = 0.0;
};

/// Maximum of a scalar frequency function over a grid, refined by golden-section
/// search around the three largest grid local maxima.
inline BandPeak band_peak(const std::function<double(double)>& f, const FrequencyGrid& grid) {
  const auto& w = grid.points;
  const std::size_t n = w.size();
  std::vector<double> v(n);
  BandPeak best{-kInf, w.front()};
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = f(w[k]);
    if (std::isnan(v[k])) v[k] = kInf;
    if (v[k] > best.value) best = {v[k], w[k]};
  }
  if (std::isinf(best.value)) return best;

  std::vector<std::size_t> peaks;
  for (std::size_t k = 0; k < n; ++k) {
    const bool left = k == 0 || v[k] >= v[k - 1];
    const bool right = k + 1 == n || v[k] >= v[k + 1];
    if (left && right) peaks.push_back(k);
  }
  std::partial_sort(peaks.begin(), peaks.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(3, peaks.size())),
                    peaks.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  peaks.resize(std::min<std::size_t>(3, peaks.size()));

  constexpr double kGolden = 0.6180339887498949;
  for (std::size_t k : peaks) {
    double a = w[k == 0 ? 0 : k - 1];
    double b = w[k + 1 == n ? n - 1 : k + 1];
    if (!(b > a)) continue;
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 60 && (b - a) > 1e-12 * std::max(1.0, b); ++it) {
      if (f1 >= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - kGolden * (b - a);
        f1 = f(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kGolden * (b - a);
        f2 = f(x2);
      }
    }
    if (f1 > best.value) best = {f1, x1};
    if (f2 > best.value) best = {f2, x2};
  }
  return best;
}

/// Band-restricted H-infinity norm of a strictly stable SISO channel.
inline BandPeak band_hinf(const StateSpaceModel& siso, const FrequencyGrid& grid) {
  const auto st = is_stable(siso);
  if (!st.stable) throw UnstableSystem(st.abscissa);
  FrequencyEvaluator eval(siso);
  return band_peak([&](double w) { return std::abs(eval(w)); }, grid);
}

}  // namespace vstiff
