#pragma once

#include <fftw3.h>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "vstiff/simulation.hpp"

namespace vstiff {

/// Comparison metrics of one run. SSE is a raw sum over trace samples, so it
/// scales with the sample count; MCO is taken before saturation.
struct Metrics {
  double me = 0.0;
  double sse = 0.0;
  double mco = 0.0;
  double snr_db = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr double kSnrSplitHz = 12.0;

/// 10 log10(P_low / P_high) from the periodogram of x, split at `split_hz`.
/// NaN when x carries no power; +inf when nothing lies above the split.
inline double band_power_ratio_db(std::span<const double> x, double sample_period, double split_hz = kSnrSplitHz) {
  const int n = static_cast<int>(x.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> in(x.begin(), x.end());
  std::vector<fftw_complex> out(static_cast<std::size_t>(n / 2 + 1));
  // FFTW_ESTIMATE keeps the plan (and hence the result) independent of timing.
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), out.data(), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  double lo = 0.0, hi = 0.0;
  const double df = 1.0 / (n * sample_period);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double p = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    // One-sided spectrum: interior bins stand for a conjugate pair.
    const bool edge = k == 0 || (n % 2 == 0 && k == out.size() - 1);
    if (!edge) p *= 2.0;
    (static_cast<double>(k) * df <= split_hz ? lo : hi) += p;
  }
  if (lo + hi == 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (hi == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(lo / hi);
}

inline Metrics compute_metrics(const SimTrace& tr) {
  if (tr.size() == 0) throw InvalidArgument("compute_metrics: empty trace");
  Metrics m;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    m.me = std::max(m.me, std::abs(tr.e[i]));
    m.sse += tr.e[i] * tr.e[i];
    m.mco = std::max(m.mco, std::abs(tr.u_pre_sat[i]));
  }
  const double ts = tr.size() > 1 ? tr.t[1] - tr.t[0] : 1.0;
  m.snr_db = band_power_ratio_db(tr.u_pre_sat, ts);
  return m;
}

}  // namespace vstiff
