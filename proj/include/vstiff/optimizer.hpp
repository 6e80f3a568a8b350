#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "vstiff/error.hpp"

namespace vstiff {

struct NelderMeadOptions {
  int max_evals = 2000;
  /// Terminate as soon as an objective value at or below this is seen.
  double accept_below = -std::numeric_limits<double>::infinity();
  /// Initial simplex edge along coordinate i: rel_step * |x0_i| + abs_step.
  double rel_step = 0.2;
  double abs_step = 0.01;
  double x_tol = 1e-10;
  double f_tol = 1e-12;
};

struct OptimResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  int evals = 0;
  bool accepted = false;
};

/// Derivative-free Nelder-Mead simplex search with dimension-adaptive coefficients
/// (reflection 1, expansion 1+2/n, contraction 0.75-1/(2n), shrink 1-1/n).
/// Deterministic: no randomness inside the search.
inline OptimResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                               std::vector<double> x0, const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  if (n == 0) throw InvalidArgument("nelder_mead: empty parameter vector");
  const double dim = static_cast<double>(n);
  const double alpha = 1.0, beta = 1.0 + 2.0 / dim, gamma = 0.75 - 0.5 / dim, delta = 1.0 - 1.0 / dim;

  OptimResult best;
  auto eval = [&](const std::vector<double>& x) {
    double v = objective(x);
    if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
    ++best.evals;
    if (v < best.f) {
      best.f = v;
      best.x = x;
    }
    if (v <= opt.accept_below) best.accepted = true;
    return v;
  };
  auto done = [&] { return best.accepted || best.evals >= opt.max_evals; };

  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> fv(n + 1);
  fv[0] = eval(x0);
  for (std::size_t i = 0; i < n && !done(); ++i) {
    simplex[i + 1][i] += opt.rel_step * std::abs(x0[i]) + opt.abs_step;
    fv[i + 1] = eval(simplex[i + 1]);
  }
  if (done()) return best;

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  while (!done()) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t lo = order.front(), hi = order.back(), second = order[n - 1];

    double spread = 0.0;
    for (std::size_t k = 0; k <= n; ++k) spread = std::max(spread, std::abs(fv[k] - fv[lo]));
    double size = 0.0;
    for (std::size_t k = 0; k <= n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        size = std::max(size, std::abs(simplex[k][i] - simplex[lo][i]) / std::max(1.0, std::abs(simplex[lo][i])));
    if (spread <= opt.f_tol && size <= opt.x_tol) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == hi) continue;
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[k][i] / dim;
    }
    for (std::size_t i = 0; i < n; ++i) xr[i] = centroid[i] + alpha * (centroid[i] - simplex[hi][i]);
    const double fr = eval(xr);
    if (done()) break;
    if (fr < fv[lo]) {
      for (std::size_t i = 0; i < n; ++i) xe[i] = centroid[i] + beta * (xr[i] - centroid[i]);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[hi] = xe;
        fv[hi] = fe;
      } else {
        simplex[hi] = xr;
        fv[hi] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[hi] = xr;
      fv[hi] = fr;
      continue;
    }
    const bool outside = fr < fv[hi];
    for (std::size_t i = 0; i < n; ++i)
      xc[i] = outside ? centroid[i] + gamma * (xr[i] - centroid[i]) : centroid[i] - gamma * (centroid[i] - simplex[hi][i]);
    const double fc = eval(xc);
    if (done()) break;
    if (fc < std::min(fr, fv[hi])) {
      simplex[hi] = xc;
      fv[hi] = fc;
      continue;
    }
    for (std::size_t k = 0; k <= n && !done(); ++k) {
      if (k == lo) continue;
      for (std::size_t i = 0; i < n; ++i) simplex[k][i] = simplex[lo][i] + delta * (simplex[k][i] - simplex[lo][i]);
      fv[k] = eval(simplex[k]);
    }
  }
  return best;
}

}  // namespace vstiff
