#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "vstiff/synthesis.hpp"

namespace vstiff {

class SimulationDiverged : public Error {
 public:
  SimulationDiverged(double t, double magnitude)
      : Error("simulation diverged at t = " + std::to_string(t) + " (|state| = " + std::to_string(magnitude) + ")"),
        t_(t) {}
  double time() const noexcept { return t_; }

 private:
  double t_;
};

/// Linear chirp amp * sin(2 pi (f0 t + (f1 - f0) t^2 / (2T))).
struct Chirp {
  double f0 = 0.0;
  double f1 = 6.0;
  double duration = 40.0;
  double amplitude = 0.5;

  double phase(double t) const { return 2.0 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) * t * t / duration); }
  double operator()(double t) const { return amplitude * std::sin(phase(t)); }
  double rate(double t) const {
    return amplitude * std::cos(phase(t)) * 2.0 * std::numbers::pi * instantaneous_frequency(t);
  }
  double instantaneous_frequency(double t) const { return f0 + (f1 - f0) * t / duration; }
};

inline Chirp make_chirp(double f0, double f1, double duration, double amplitude) {
  if (!(f0 >= 0.0) || !(f1 > f0) || !(duration > 0.0) || !std::isfinite(f1) || !std::isfinite(duration))
    throw InvalidArgument("make_chirp: require 0 <= f0 < f1 and T > 0");
  if (!std::isfinite(amplitude)) throw InvalidArgument("make_chirp: amplitude must be finite");
  return {f0, f1, duration, amplitude};
}

struct StiffnessSegment {
  double start = 0.0;
  double zd = 0.0;
  friend bool operator==(const StiffnessSegment&, const StiffnessSegment&) = default;
};

/// Filtered Gaussian noise: low-pass below `bandwidth` (disturbance) or
/// high-pass above it (measurement noise), scaled to a stationary RMS.
struct NoiseSpec {
  double bandwidth = 0.0;  ///< rad/s
  double rms = 0.0;
  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Nearest time to `t` where the chirp crosses zero, so a stiffness switch there
/// leaves tau_d = -Zd phi_h continuous.
inline double nearest_zero_crossing(const Chirp& c, double t) {
  const double k = std::round(c.phase(t) / std::numbers::pi);
  // Solve pi k = 2 pi (f0 t + (f1 - f0) t^2 / (2T)) for t >= 0.
  const double qa = (c.f1 - c.f0) / c.duration, qb = 2.0 * c.f0;
  return (-qb + std::sqrt(qb * qb + 4.0 * qa * k)) / (2.0 * qa);
}

/// The eight-step stiffness sequence, boundaries split evenly over the run and
/// moved to the nearest zero crossing of the motion.
inline std::vector<StiffnessSegment> default_stiffness_sequence(double ks, const Chirp& motion) {
  const std::vector<double> ratios{0.71, 0.32, 0.51, 0.25, 0.56, 0.65, 0.91, 1.0};
  std::vector<StiffnessSegment> out;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double even = motion.duration * static_cast<double>(i) / static_cast<double>(ratios.size());
    out.push_back({i == 0 ? 0.0 : nearest_zero_crossing(motion, even), ratios[i] * ks});
  }
  return out;
}

struct SimScenario {
  double duration = 40.0;
  double dt = 1e-3;
  /// Trace sampling period; also the hold period of d and n. Must be a multiple of dt.
  double sample_period = 1e-3;
  Chirp motion{0.0, 6.0, 40.0, 0.5};
  std::vector<StiffnessSegment> segments = default_stiffness_sequence(1.0, motion);
  NoiseSpec disturbance{20.0 * std::numbers::pi, 0.01};
  NoiseSpec noise{40.0 * std::numbers::pi, 0.005};
  double u_max = 44.0;
  bool saturate = true;
  std::uint64_t seed = 1;

  std::size_t steps_per_sample() const { return static_cast<std::size_t>(std::llround(sample_period / dt)); }
  std::size_t sample_count() const { return static_cast<std::size_t>(std::llround(duration / sample_period)) + 1; }

  void validate() const {
    if (!(duration > 0.0) || !(dt > 0.0) || !(sample_period > 0.0))
      throw InvalidArgument("SimScenario: duration, dt and sample period must be positive");
    if (std::abs(static_cast<double>(steps_per_sample()) * dt - sample_period) > 1e-9 * sample_period ||
        steps_per_sample() == 0)
      throw InvalidArgument("SimScenario: sample period must be an integer multiple of dt");
    if (segments.empty()) throw InvalidArgument("SimScenario: need at least one stiffness segment");
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (!(segments[i].zd >= 0.0)) throw InvalidArgument("SimScenario: Zd must be >= 0");
      if (i > 0 && !(segments[i].start > segments[i - 1].start))
        throw InvalidArgument("SimScenario: segments must be strictly time-ordered");
    }
    if (!(disturbance.rms >= 0.0) || !(noise.rms >= 0.0)) throw InvalidArgument("SimScenario: RMS must be >= 0");
    if ((disturbance.rms > 0.0 && !(disturbance.bandwidth > 0.0)) || (noise.rms > 0.0 && !(noise.bandwidth > 0.0)))
      throw InvalidArgument("SimScenario: noise bandwidth must be positive");
    if (saturate && !(u_max > 0.0)) throw InvalidArgument("SimScenario: u_max must be positive");
  }

  double zd_at(double t) const {
    double zd = segments.front().zd;
    for (const auto& s : segments)
      if (t >= s.start) zd = s.zd;
    return zd;
  }
};

struct SimTrace {
  std::vector<double> t, zd, phi_h, tau_d, tau_h, e, u_pre_sat, u, d, n;

  std::size_t size() const { return t.size(); }
  void reserve(std::size_t k) {
    for (auto* c : {&t, &zd, &phi_h, &tau_d, &tau_h, &e, &u_pre_sat, &u, &d, &n}) c->reserve(k);
  }
  friend bool operator==(const SimTrace&, const SimTrace&) = default;
};

/// First-order filtered white noise sampled every `ts`, scaled so the stationary
/// RMS equals spec.rms.
inline std::vector<double> filtered_noise(const NoiseSpec& spec, bool high_pass, double ts, std::size_t count,
                                          std::uint64_t seed) {
  std::vector<double> out(count, 0.0);
  if (spec.rms == 0.0) return out;
  const double a = std::exp(-spec.bandwidth * ts);
  // Stationary variance of lp_k = a lp_(k-1) + (1-a) w_k and of hp_k = w_k - lp_k, unit-variance w.
  const double var_lp = (1.0 - a) / (1.0 + a);
  const double var = high_pass ? 1.0 - 2.0 * (1.0 - a) + var_lp : var_lp;
  const double gain = spec.rms / std::sqrt(var);
  Rng rng(seed);
  double lp = 0.0;
  for (auto& v : out) {
    const double w = rng.normal();
    lp = a * lp + (1.0 - a) * w;
    v = gain * (high_pass ? w - lp : lp);
  }
  return out;
}

/// PID(s) = kp + ki/s + kd s / (tf s + 1).
struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double filter = 1e-3;

  RationalTF tf() const {
    if (!(filter > 0.0)) throw InvalidArgument("PidGains: filter time constant must be positive");
    return RationalTF({kp * filter + kd, kp + ki * filter, ki}, {filter, 1.0, 0.0});
  }
  friend bool operator==(const PidGains&, const PidGains&) = default;
};

/// Where the controller comes from at each step: a schedule (refreshed per step),
/// fixed structured gains, or the frozen PID baseline acting on e.
struct ControllerSource {
  std::function<std::vector<RationalTF>(double zd)> at;
  bool fixed = false;

  static ControllerSource scheduled(const GainSchedule& s) {
    return {[s](double zd) { return instantiate_controller(s.problem.tpl, eval_schedule(s, zd).gains); }, false};
  }
  static ControllerSource fixed_gains(const ControllerTemplate& tpl, const ControllerGains& g) {
    auto k = instantiate_controller(tpl, g);
    return {[k](double) { return k; }, true};
  }
  static ControllerSource pid(const PidGains& g) {
    std::vector<RationalTF> k{RationalTF::gain(0.0), g.tf()};
    return {[k](double) { return k; }, true};
  }
};

namespace detail {

/// One subcontroller in controllable canonical form; coefficients can change while x persists.
struct CcfController {
  Matrix a, b, c, d;
  void set(const RationalTF& tf, Eigen::Index order) {
    const auto ss = tf_to_ss(tf);
    if (ss.states() != order) throw InvalidArgument("simulate_closed_loop: controller order changed between updates");
    a = ss.a();
    b = ss.b();
    c = ss.c();
    d = ss.d();
  }
};

}  // namespace detail

/// Fixed-step RK4 simulation of plant + two-input controller with saturation.
/// d and n are held over each sample period; phi_h is evaluated exactly at each stage.
inline SimTrace simulate_closed_loop(const SeaPlantParams& params, const RationalTF& error_weight,
                                     const ControllerSource& source, const SimScenario& sc) {
  sc.validate();
  const auto plant = build_sea_plant(params);
  // Plant-only model: inputs [phi_h, d, n, u], outputs [.., tau_h, tau_h_meas, e]. Zd enters only
  // through tau_d, which is recomputed here, so the model is built once at Zd = 0.
  const auto aug = build_augmented_plant(plant, 0.0, error_weight);
  const Matrix pa = aug.sys.a(), pb = aug.sys.b(), pc = aug.sys.c(), pd = aug.sys.d();
  const auto& P = aug.sys;
  const auto i_phi = P.input_index("phi_h"), i_d = P.input_index("d"), i_n = P.input_index("n"),
             i_u = P.input_index("u");
  const auto o_tau = P.output_index("tau_h"), o_meas = P.output_index("tau_h_meas");
  if (pd(o_tau, i_u) != 0.0 || pd(o_meas, i_u) != 0.0)
    throw InvalidArgument("simulate_closed_loop: plant must be strictly proper from u");

  auto k0 = source.at(sc.zd_at(0.0));
  if (k0.size() != 2) throw InvalidArgument("simulate_closed_loop: need two subcontrollers");
  const Eigen::Index np = pa.rows();
  const Eigen::Index n1 = static_cast<Eigen::Index>(k0[0].order()), n2 = static_cast<Eigen::Index>(k0[1].order());
  const Eigen::Index nx = np + n1 + n2;
  detail::CcfController c1, c2;
  c1.set(k0[0], n1);
  c2.set(k0[1], n2);

  const std::size_t samples = sc.sample_count();
  const auto dist = filtered_noise(sc.disturbance, false, sc.sample_period, samples, mix_seed(sc.seed, 1));
  const auto noise = filtered_noise(sc.noise, true, sc.sample_period, samples, mix_seed(sc.seed, 2));

  struct Signals {
    double tau_h, meas, tau_d, e, u_pre, u;
  };
  double zd = 0.0, dk = 0.0, nk = 0.0;
  auto signals = [&](const Vector& x, double t) {
    const auto xp = x.head(np);
    const double phi = sc.motion(t);
    Signals s;
    s.tau_h = (pc.row(o_tau) * xp)(0) + pd(o_tau, i_phi) * phi + pd(o_tau, i_d) * dk + pd(o_tau, i_n) * nk;
    s.meas = (pc.row(o_meas) * xp)(0) + pd(o_meas, i_phi) * phi + pd(o_meas, i_d) * dk + pd(o_meas, i_n) * nk;
    s.tau_d = -zd * phi;
    s.e = s.tau_d - s.tau_h;
    const double u1 = n1 ? (c1.c * x.segment(np, n1))(0) + c1.d(0) * s.meas : c1.d(0) * s.meas;
    const double u2 = n2 ? (c2.c * x.tail(n2))(0) + c2.d(0) * s.e : c2.d(0) * s.e;
    s.u_pre = u1 + u2;
    s.u = sc.saturate ? std::clamp(s.u_pre, -sc.u_max, sc.u_max) : s.u_pre;
    return s;
  };
  auto deriv = [&](const Vector& x, double t) {
    const Signals s = signals(x, t);
    Vector dx(nx);
    Vector w(pb.cols());
    w.setZero();
    w(i_phi) = sc.motion(t);
    w(i_d) = dk;
    w(i_n) = nk;
    w(i_u) = s.u;
    dx.head(np) = pa * x.head(np) + pb * w;
    if (n1) dx.segment(np, n1) = c1.a * x.segment(np, n1) + c1.b * s.meas;
    if (n2) dx.tail(n2) = c2.a * x.tail(n2) + c2.b * s.e;
    return dx;
  };

  SimTrace tr;
  tr.reserve(samples);
  Vector x = Vector::Zero(nx);
  const std::size_t sub = sc.steps_per_sample();
  double zd_loaded = sc.zd_at(0.0);
  for (std::size_t k = 0; k < samples; ++k) {
    const double tk = static_cast<double>(k) * sc.sample_period;
    dk = dist[k];
    nk = noise[k];
    for (std::size_t j = 0; j < sub || k + 1 == samples; ++j) {
      const double t = tk + static_cast<double>(j) * sc.dt;
      zd = sc.zd_at(t);
      if (!source.fixed && zd != zd_loaded) {
        const auto k_new = source.at(zd);
        c1.set(k_new[0], n1);
        c2.set(k_new[1], n2);
        zd_loaded = zd;
      }
      if (j == 0) {
        const Signals s = signals(x, t);
        tr.t.push_back(tk);
        tr.zd.push_back(zd);
        tr.phi_h.push_back(sc.motion(t));
        tr.tau_d.push_back(s.tau_d);
        tr.tau_h.push_back(s.tau_h);
        tr.e.push_back(s.e);
        tr.u_pre_sat.push_back(s.u_pre);
        tr.u.push_back(s.u);
        tr.d.push_back(dk);
        tr.n.push_back(nk);
        if (k + 1 == samples) break;
      }
      const double h = sc.dt;
      const Vector s1 = deriv(x, t);
      const Vector s2 = deriv(x + 0.5 * h * s1, t + 0.5 * h);
      const Vector s3 = deriv(x + 0.5 * h * s2, t + 0.5 * h);
      const Vector s4 = deriv(x + h * s3, t + h);
      x += (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
      const double mag = x.cwiseAbs().maxCoeff();
      if (!(mag <= 1e9)) throw SimulationDiverged(t + h, mag);
    }
  }
  return tr;
}

inline SimTrace simulate_closed_loop(const DesignProblem& problem, const ControllerSource& source,
                                     const SimScenario& sc) {
  return simulate_closed_loop(problem.plant, problem.error_weight(), source, sc);
}

struct EnergyCheck {
  std::vector<double> w;
  double min_w = 0.0;
  double epsilon = 0.0;
  bool pass = true;
};

/// Port energy W(t) = int tau_h * (-dphi_h), trapezoidal in the samples.
/// Tolerance: 1e-3 * peak|tau_h * dphi_h/dt| * duration.
inline EnergyCheck passivity_energy_check(const SimTrace& tr) {
  EnergyCheck out;
  const std::size_t k = tr.size();
  out.w.assign(k, 0.0);
  double peak = 0.0;
  for (std::size_t i = 1; i < k; ++i) {
    const double dphi = tr.phi_h[i] - tr.phi_h[i - 1];
    const double dt = tr.t[i] - tr.t[i - 1];
    out.w[i] = out.w[i - 1] - 0.5 * (tr.tau_h[i] + tr.tau_h[i - 1]) * dphi;
    if (dt > 0.0) peak = std::max(peak, std::abs(0.5 * (tr.tau_h[i] + tr.tau_h[i - 1]) * dphi / dt));
  }
  out.min_w = k ? *std::min_element(out.w.begin(), out.w.end()) : 0.0;
  out.epsilon = k > 1 ? 1e-3 * peak * (tr.t.back() - tr.t.front()) : 0.0;
  out.pass = out.min_w >= -out.epsilon;
  return out;
}

struct PidBaseline {
  PidGains gains;
  double zd_ref = 0.0;
  ConstraintReport report;  ///< relaxed-passivity report at zd_ref
  double full_passivity = kInf;
  double objective = kInf;
  bool feasible = false;
};

/// Tunes kp, ki, kd of K = [0, PID] at one stiffness against the four norm bounds
/// plus full-band passivity, with the same seeded multi-start simplex search.
inline PidBaseline make_pid_baseline(const DesignProblem& problem, double zd_ref, std::uint64_t seed,
                                     const TuningOptions& opt = {}, double filter = 1e-3) {
  if (!(zd_ref > 0.0)) throw InvalidArgument("make_pid_baseline: Zd_ref must be positive");
  const auto aug = problem.augmented(zd_ref);
  const ConstraintEvaluator ev(problem.spec);
  auto objective = [&](std::span<const double> x) {
    if (x[1] < 0.0) return 10.0 - x[1];
    const PidGains g{x[0], x[1], x[2], filter};
    try {
      const auto cl = close_loop(aug, {RationalTF::gain(0.0), g.tf()});
      const auto st = is_stable(cl.sys);
      if (!st.stable) return 10.0 + st.abscissa;
      double worst = 0.0;
      for (auto k : {ConstraintKind::error, ConstraintKind::control, ConstraintKind::disturbance,
                     ConstraintKind::noise, ConstraintKind::passivity_full})
        worst = std::max(worst, ev.evaluate(cl, k, true).normalized());
      return worst;
    } catch (const Error&) {
      return 1e3;
    }
  };
  Rng rng(seed);
  NelderMeadOptions nm;
  nm.max_evals = opt.max_evals;
  OptimResult best;
  for (int s = 0; s < opt.starts; ++s) {
    const std::vector<double> x0{std::pow(10.0, rng.uniform(-1.0, 2.0)), std::pow(10.0, rng.uniform(-1.0, 3.0)),
                                 std::pow(10.0, rng.uniform(-3.0, 0.0))};
    auto r = nelder_mead(objective, x0, nm);
    if (r.f < best.f) best = std::move(r);
  }
  PidBaseline out;
  out.gains = {best.x[0], best.x[1], best.x[2], filter};
  out.zd_ref = zd_ref;
  out.objective = best.f;
  const auto cl = close_loop(aug, {RationalTF::gain(0.0), out.gains.tf()});
  out.report = ev.evaluate_all(cl);
  out.full_passivity = ev.evaluate(cl, ConstraintKind::passivity_full).achieved;
  out.feasible = best.f <= 1.0;
  return out;
}

}  // namespace vstiff
