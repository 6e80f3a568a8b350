#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "vstiff/frequency.hpp"

namespace vstiff {

/// Passivity pass tolerance: a pure spring sits exactly on the unit boundary.
inline constexpr double kPassivityTolerance = 1e-6;

/// Norm bounds and band edges of the five frequency-domain constraints.
struct ConstraintSpec {
  double gamma_error = 0.05;
  double gamma_control = 44.0;
  double gamma_disturbance = 0.03;
  double gamma_noise = 0.3;
  double omega_error = 12.0 * std::numbers::pi;
  double omega_control = 12.0 * std::numbers::pi;
  double omega_noise = 40.0 * std::numbers::pi;
  double omega_passivity = 12.0 * std::numbers::pi;
  /// Finite stand-in for the unbounded bands: omega_max = factor * omega_error.
  double omega_max_factor = 1000.0;
  GridOptions grid;

  double omega_max() const { return omega_max_factor * omega_error; }

  void validate() const {
    for (double v : {gamma_error, gamma_control, gamma_disturbance, gamma_noise, omega_error, omega_control,
                     omega_noise, omega_passivity})
      if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("ConstraintSpec: bounds and band edges must be positive");
    if (!(omega_max() > std::max({omega_error, omega_control, omega_noise, omega_passivity})))
      throw InvalidArgument("ConstraintSpec: omega_max must exceed every band edge");
  }
};

enum class ConstraintKind { error, control, disturbance, noise, passivity, passivity_full };

inline const char* constraint_name(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::error: return "error";
    case ConstraintKind::control: return "control";
    case ConstraintKind::disturbance: return "disturbance";
    case ConstraintKind::noise: return "noise";
    case ConstraintKind::passivity: return "passivity";
    case ConstraintKind::passivity_full: return "passivity_full";
  }
  return "?";
}

struct ConstraintResult {
  ConstraintKind kind = ConstraintKind::error;
  double achieved = 0.0;
  double bound = 0.0;
  double band_lo = 0.0;
  double band_hi = 0.0;
  double at_omega = 0.0;
  double margin = 0.0;
  bool pass = false;
  std::string note;

  double normalized() const { return achieved / bound; }
};

inline ConstraintResult make_result(ConstraintKind kind, double achieved, double bound, double lo, double hi,
                                    double at, std::string note = {}) {
  ConstraintResult r{kind, achieved, bound, lo, hi, at, bound - achieved, false, std::move(note)};
  r.pass = r.margin >= 0.0;
  return r;
}

/// Five constraint results in fixed order: error, control, disturbance, noise, passivity.
struct ConstraintReport {
  bool stable = false;
  double spectral_abscissa = 0.0;
  std::array<ConstraintResult, 5> items{};
  /// max_i achieved_i / bound_i, or +inf for an internally unstable loop.
  double overall = kInf;

  bool feasible() const { return overall <= 1.0; }
  const ConstraintResult& operator[](ConstraintKind k) const { return items[static_cast<std::size_t>(k)]; }
};

/// Closed loop with inputs [phi_h, d, n] and outputs [e_w, u, tau_h, e].
struct ClosedLoop {
  StateSpaceModel sys;
  double zd = 0.0;
};

/// Evaluates constraints with grids built once per spec. Not thread-safe to share.
class ConstraintEvaluator {
 public:
  explicit ConstraintEvaluator(ConstraintSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    const double wmax = spec_.omega_max();
    error_grid_ = FrequencyGrid::band(0.0, spec_.omega_error, spec_.grid);
    control_grid_ = FrequencyGrid::band(0.0, spec_.omega_control, spec_.grid);
    disturbance_grid_ = FrequencyGrid::band(0.0, wmax, spec_.grid);
    noise_grid_ = FrequencyGrid::band(spec_.omega_noise, wmax, spec_.grid);
    GridOptions open = spec_.grid;
    open.include_zero = false;
    passivity_grid_ = FrequencyGrid::band(0.0, spec_.omega_passivity, open);
    passivity_full_grid_ = FrequencyGrid::band(0.0, wmax, open);
  }

  const ConstraintSpec& spec() const noexcept { return spec_; }

  const FrequencyGrid& grid(ConstraintKind k) const {
    switch (k) {
      case ConstraintKind::error: return error_grid_;
      case ConstraintKind::control: return control_grid_;
      case ConstraintKind::disturbance: return disturbance_grid_;
      case ConstraintKind::noise: return noise_grid_;
      case ConstraintKind::passivity: return passivity_grid_;
      case ConstraintKind::passivity_full: return passivity_full_grid_;
    }
    return error_grid_;
  }

  double bound(ConstraintKind k) const {
    switch (k) {
      case ConstraintKind::error: return spec_.gamma_error;
      case ConstraintKind::control: return spec_.gamma_control;
      case ConstraintKind::disturbance: return spec_.gamma_disturbance;
      case ConstraintKind::noise: return spec_.gamma_noise;
      case ConstraintKind::passivity:
      case ConstraintKind::passivity_full: return 1.0 + kPassivityTolerance;
    }
    return 0.0;
  }

  /// Input/output pair of the channel a constraint inspects.
  static std::pair<const char*, const char*> channel_of(ConstraintKind k) {
    switch (k) {
      case ConstraintKind::error: return {"phi_h", "e_w"};
      case ConstraintKind::control: return {"phi_h", "u"};
      case ConstraintKind::disturbance: return {"d", "tau_h"};
      case ConstraintKind::noise: return {"n", "tau_h"};
      case ConstraintKind::passivity:
      case ConstraintKind::passivity_full: return {"phi_h", "tau_h"};
    }
    return {"", ""};
  }

  /// Evaluates one constraint. `known_stable` skips the hidden-mode test when the
  /// whole loop is already known to be internally stable. For the passivity kinds,
  /// `damping_margin` evaluates Z(s) - damping_margin * s instead of Z(s).
  ConstraintResult evaluate(const ClosedLoop& cl, ConstraintKind k, bool known_stable = false,
                            double damping_margin = 0.0) const {
    const auto& g = grid(k);
    const double b = bound(k);
    const auto [in, out] = channel_of(k);
    auto siso = cl.sys.channel(in, out);
    if (!known_stable) {
      siso = minimal_siso(siso);
      if (!is_stable(siso).stable) return make_result(k, kInf, b, g.lo, g.hi, 0.0, "unstable channel");
    }
    FrequencyEvaluator eval(siso);
    if (k == ConstraintKind::passivity || k == ConstraintKind::passivity_full) {
      double active = -1.0;
      auto index = [&](double w) {
        const Complex jw{0.0, w};
        const Complex z = -eval(w) - damping_margin * jw;
        const Complex den = z + jw;
        if (den == Complex{0.0, 0.0}) {
          active = w;
          return kInf;
        }
        return std::abs((z - jw) / den);
      };
      const auto peak = band_peak(index, g);
      if (active >= 0.0)
        return make_result(k, kInf, b, g.lo, g.hi, active, "Z(jw) = -jw at omega = " + std::to_string(active));
      return make_result(k, peak.value, b, g.lo, g.hi, peak.omega);
    }
    try {
      const auto peak = band_peak([&](double w) { return std::abs(eval(w)); }, g);
      return make_result(k, peak.value, b, g.lo, g.hi, peak.omega);
    } catch (const OnAxisPole& e) {
      return make_result(k, kInf, b, g.lo, g.hi, e.omega(), "on-axis pole");
    }
  }

  /// All five constraints (relaxed passivity) plus internal stability. Never throws
  /// on closed-loop properties; failures are encoded in the report.
  ConstraintReport evaluate_all(const ClosedLoop& cl) const {
    ConstraintReport rep;
    try {
      const auto st = is_stable(cl.sys);
      rep.stable = st.stable;
      rep.spectral_abscissa = st.abscissa;
    } catch (const EigenFailure&) {
      rep.stable = false;
      rep.spectral_abscissa = kInf;
    }
    constexpr std::array kinds{ConstraintKind::error, ConstraintKind::control, ConstraintKind::disturbance,
                               ConstraintKind::noise, ConstraintKind::passivity};
    double worst = 0.0;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      try {
        rep.items[i] = evaluate(cl, kinds[i], rep.stable);
      } catch (const EigenFailure& e) {
        rep.items[i] = make_result(kinds[i], kInf, bound(kinds[i]), grid(kinds[i]).lo, grid(kinds[i]).hi, 0.0, e.what());
      }
      worst = std::max(worst, rep.items[i].normalized());
    }
    rep.overall = rep.stable ? worst : kInf;
    return rep;
  }

 private:
  ConstraintSpec spec_;
  FrequencyGrid error_grid_, control_grid_, disturbance_grid_, noise_grid_, passivity_grid_, passivity_full_grid_;
};

inline ConstraintResult eval_error_constraint(const ClosedLoop& cl, const ConstraintSpec& spec) {
  return ConstraintEvaluator(spec).evaluate(cl, ConstraintKind::error);
}
inline ConstraintResult eval_control_constraint(const ClosedLoop& cl, const ConstraintSpec& spec) {
  return ConstraintEvaluator(spec).evaluate(cl, ConstraintKind::control);
}
inline ConstraintResult eval_disturbance_constraint(const ClosedLoop& cl, const ConstraintSpec& spec) {
  return ConstraintEvaluator(spec).evaluate(cl, ConstraintKind::disturbance);
}
inline ConstraintResult eval_noise_constraint(const ClosedLoop& cl, const ConstraintSpec& spec) {
  return ConstraintEvaluator(spec).evaluate(cl, ConstraintKind::noise);
}

enum class PassivityBand { relaxed, full };

inline ConstraintResult eval_passivity_index(const ClosedLoop& cl, const ConstraintSpec& spec, PassivityBand band) {
  return ConstraintEvaluator(spec).evaluate(
      cl, band == PassivityBand::relaxed ? ConstraintKind::passivity : ConstraintKind::passivity_full);
}

inline ConstraintReport evaluate_all(const ClosedLoop& cl, const ConstraintSpec& spec) {
  return ConstraintEvaluator(spec).evaluate_all(cl);
}

/// One row of a plottable constraint sweep.
struct SweepRow {
  double omega;
  double magnitude;
  double bound;
  bool in_band;
};

/// Channel magnitude (or passivity index) on a display grid spanning
/// [floor, omega_max], flagging which samples fall inside the constraint band.
inline std::vector<SweepRow> sweep_constraint(const ClosedLoop& cl, const ConstraintEvaluator& ev, ConstraintKind k,
                                              double points_per_decade = 50.0) {
  const auto& spec = ev.spec();
  GridOptions opt = spec.grid;
  opt.points_per_decade = points_per_decade;
  opt.include_zero = false;
  opt.edge_points = 0;
  const auto display = FrequencyGrid::band(0.0, spec.omega_max(), opt);
  const auto& band = ev.grid(k);
  const auto [in, out] = ConstraintEvaluator::channel_of(k);
  FrequencyEvaluator eval(minimal_siso(cl.sys.channel(in, out)));
  const bool passivity = k == ConstraintKind::passivity || k == ConstraintKind::passivity_full;
  std::vector<SweepRow> rows;
  rows.reserve(display.points.size());
  for (double w : display.points) {
    double mag;
    if (passivity) {
      const Complex z = -eval(w);
      const Complex jw{0.0, w};
      mag = std::abs((z - jw) / (z + jw));
    } else {
      mag = std::abs(eval(w));
    }
    rows.push_back({w, mag, ev.bound(k), w >= band.lo && w <= band.top()});
  }
  return rows;
}

}  // namespace vstiff
