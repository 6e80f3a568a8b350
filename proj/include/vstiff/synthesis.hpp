#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vstiff/constraints.hpp"
#include "vstiff/optimizer.hpp"
#include "vstiff/plant.hpp"
#include "vstiff/rng.hpp"

namespace vstiff {

/// Orders of the structured controller K = [K_1 ... K_l], each
/// K_i(s) = (b_i0 s^m + ... + b_im) / (s^n + a_i1 s^(n-1) + ... + a_in).
struct ControllerTemplate {
  int inputs = 2;
  int den_order = 1;
  int num_order = 1;

  void validate() const {
    if (inputs < 1 || den_order < 0 || num_order < 0 || num_order > den_order)
      throw InvalidArgument("ControllerTemplate: require l >= 1 and 0 <= m <= n");
  }
  std::size_t gains_per_input() const { return static_cast<std::size_t>(den_order + num_order + 1); }
  std::size_t gain_count() const { return static_cast<std::size_t>(inputs) * gains_per_input(); }

  /// Gain names in storage order: per subcontroller, K_a(i)1..K_a(i)n then K_b(i)0..K_b(i)m.
  std::vector<std::string> gain_names() const {
    std::vector<std::string> names;
    for (int i = 1; i <= inputs; ++i) {
      for (int j = 1; j <= den_order; ++j) names.push_back("K_a" + std::to_string(i) + std::to_string(j));
      for (int k = 0; k <= num_order; ++k) names.push_back("K_b" + std::to_string(i) + std::to_string(k));
    }
    return names;
  }
  friend bool operator==(const ControllerTemplate&, const ControllerTemplate&) = default;
};

/// Flattened gain vector; for the default template the order is
/// (K_a11, K_b10, K_b11, K_a21, K_b20, K_b21).
struct ControllerGains {
  std::vector<double> values;
  friend bool operator==(const ControllerGains&, const ControllerGains&) = default;
};

/// Largest real part among the denominator roots of every subcontroller.
inline double subcontroller_abscissa(const ControllerTemplate& tpl, const ControllerGains& gains) {
  double worst = -kInf;
  const auto per = tpl.gains_per_input();
  for (int i = 0; i < tpl.inputs; ++i) {
    const auto base = static_cast<std::size_t>(i) * per;
    const auto n = tpl.den_order;
    if (n == 0) continue;
    Matrix companion = Matrix::Zero(n, n);
    for (int j = 0; j < n; ++j) companion(0, j) = -gains.values[base + static_cast<std::size_t>(j)];
    for (int j = 1; j < n; ++j) companion(j, j - 1) = 1.0;
    worst = std::max(worst, eigenvalues(companion).real().maxCoeff());
  }
  return worst;
}

inline std::vector<RationalTF> instantiate_controller(const ControllerTemplate& tpl, const ControllerGains& gains,
                                                      bool strict = false) {
  tpl.validate();
  if (gains.values.size() != tpl.gain_count())
    throw InvalidArgument("instantiate_controller: expected " + std::to_string(tpl.gain_count()) + " gains, got " +
                          std::to_string(gains.values.size()));
  if (strict && !(subcontroller_abscissa(tpl, gains) < -kStabilityMargin))
    throw InvalidArgument("instantiate_controller: subcontroller denominator is not strictly stable");
  std::vector<RationalTF> out;
  const auto per = tpl.gains_per_input();
  for (int i = 0; i < tpl.inputs; ++i) {
    const auto base = gains.values.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i) * per);
    std::vector<double> den{1.0};
    den.insert(den.end(), base, base + tpl.den_order);
    std::vector<double> num(base + tpl.den_order, base + static_cast<std::ptrdiff_t>(per));
    out.emplace_back(std::move(num), std::move(den));
  }
  return out;
}

/// u = K_1 tau_h_meas + K_2 e around the augmented plant.
inline ClosedLoop close_loop(const AugmentedPlant& aug, const std::vector<RationalTF>& controller) {
  if (controller.size() != 2) throw InvalidArgument("close_loop: default wiring needs exactly two subcontrollers");
  Matrix sum(1, 2);
  sum << 1.0, 1.0;
  std::vector<Block> blocks{
      {"plant", aug.sys},
      {"K1", tf_to_ss(controller[0], "tau_h_meas", "u1")},
      {"K2", tf_to_ss(controller[1], "e", "u2")},
      {"controller_sum", StateSpaceModel::static_gain(sum, {"u1", "u2"}, {"u"})},
  };
  // The plant block also exposes e and tau_h_meas as outputs, which drive K1/K2 by name.
  return {connect(blocks, {}, {"phi_h", "d", "n"}, {"e_w", "u", "tau_h", "e"}), aug.zd};
}

/// Plant, weight and constraint data shared by every design point.
struct DesignProblem {
  SeaPlantParams plant;
  ConstraintSpec spec;
  /// Error weight; defaults to 1/(s/omega_e + 1) when unset.
  std::optional<RationalTF> weight;
  ControllerTemplate tpl;

  RationalTF error_weight() const { return weight ? *weight : default_error_weight(spec.omega_error); }
  AugmentedPlant augmented(double zd) const {
    return build_augmented_plant(build_sea_plant(plant), zd, error_weight());
  }
};

struct TuningOptions {
  int starts = 16;
  int max_evals = 2000;
  /// Tuning-time backoff on the four norm bounds: the search targets
  /// gamma_i * (1 - design_margin) so interpolated gains keep slack.
  double design_margin = 0.1;
  /// Tuning-time passivity margin: the search requires Z(s) - damping_margin * s to
  /// be passive on the relaxed band, i.e. Im Z(jw) >= damping_margin * w.
  double damping_margin = 3e-4;
  /// Initial simplex step (relative) when refining a warm start.
  double warm_rel_step = 0.02;
  /// Evaluation budget for polishing the fitted coefficients (0 disables).
  int polish_evals = 4000;
  /// Cold-start sampling: denominator gains log-uniform on [10^lo, 10^hi]...
  double den_log10_lo = 0.0;
  double den_log10_hi = 3.0;
  /// ...numerator gain b_ik normal with standard deviation num_scale * 10^(m-k).
  double num_scale = 30.0;
};

struct OptimizerTrace {
  int evaluations = 0;
  int starts_used = 0;
  double best_objective = kInf;
  bool warm_started = false;
  std::uint64_t seed = 0;
};

struct DesignPointResult {
  double zd = 0.0;
  ControllerGains gains;
  ConstraintReport report;
  OptimizerTrace trace;
  bool feasible() const { return report.feasible(); }
};

/// Tuning objective: max_i achieved_i / bound_i with the norm bounds tightened by
/// the design margin; unstable subcontrollers or closed loops map to 10 + abscissa.
class TuningObjective {
 public:
  TuningObjective(const DesignProblem& problem, double zd, double design_margin, double damping_margin = 0.0)
      : problem_(problem), aug_(problem.augmented(zd)), evaluator_(problem.spec), backoff_(1.0 - design_margin),
        damping_margin_(damping_margin) {
    if (!(backoff_ > 0.0 && backoff_ <= 1.0)) throw InvalidArgument("TuningObjective: design margin must be in [0, 1)");
  }

  double operator()(std::span<const double> x) const {
    ControllerGains g{{x.begin(), x.end()}};
    const double sub = subcontroller_abscissa(problem_.tpl, g);
    if (!(sub < -kStabilityMargin)) return 10.0 + sub;
    try {
      const auto cl = close_loop(aug_, instantiate_controller(problem_.tpl, g));
      const auto st = is_stable(cl.sys);
      if (!st.stable) return 10.0 + st.abscissa;
      double worst = 0.0;
      for (auto k : {ConstraintKind::error, ConstraintKind::control, ConstraintKind::disturbance, ConstraintKind::noise}) {
        worst = std::max(worst, evaluator_.evaluate(cl, k, true).normalized() / backoff_);
      }
      worst = std::max(worst, evaluator_.evaluate(cl, ConstraintKind::passivity, true, damping_margin_).normalized());
      return worst;
    } catch (const Error&) {
      return 1e3;
    }
  }

  const AugmentedPlant& augmented() const { return aug_; }
  const ConstraintEvaluator& evaluator() const { return evaluator_; }

 private:
  const DesignProblem& problem_;
  AugmentedPlant aug_;
  ConstraintEvaluator evaluator_;
  double backoff_;
  double damping_margin_;
};

inline ControllerGains random_start(const ControllerTemplate& tpl, const TuningOptions& opt, Rng& rng) {
  ControllerGains g;
  for (int i = 0; i < tpl.inputs; ++i) {
    // Denominator from stable real poles, so every start is a stable subcontroller.
    std::vector<double> den{1.0};
    for (int j = 0; j < tpl.den_order; ++j)
      den = poly::mul(den, std::vector<double>{1.0, std::pow(10.0, rng.uniform(opt.den_log10_lo, opt.den_log10_hi))});
    g.values.insert(g.values.end(), den.begin() + 1, den.end());
    for (int k = 0; k <= tpl.num_order; ++k)
      g.values.push_back(rng.normal() * opt.num_scale * std::pow(10.0, tpl.num_order - k));
  }
  return g;
}

inline ConstraintReport report_for(const DesignProblem& problem, double zd, const ControllerGains& gains) {
  const auto cl = close_loop(problem.augmented(zd), instantiate_controller(problem.tpl, gains));
  return ConstraintEvaluator(problem.spec).evaluate_all(cl);
}

/// Tunes the structured controller at one stiffness. A warm start is refined with
/// early acceptance at objective <= 1; without one (or if it fails) a seeded
/// multi-start simplex search runs every start to budget and keeps the best.
/// Infeasible outcomes are returned flagged, never silently accepted.
inline DesignPointResult tune_design_point(const DesignProblem& problem, double zd, const TuningOptions& opt,
                                           const std::optional<ControllerGains>& warm, std::uint64_t seed) {
  problem.tpl.validate();
  if (!(zd >= 0.0)) throw InvalidArgument("tune_design_point: Zd must be >= 0");
  if (warm && warm->values.size() != problem.tpl.gain_count())
    throw InvalidArgument("tune_design_point: warm start has the wrong gain count");
  const TuningObjective objective(problem, zd, opt.design_margin, opt.damping_margin);
  auto f = [&](std::span<const double> x) { return objective(x); };

  DesignPointResult res;
  res.zd = zd;
  res.trace.seed = seed;
  OptimResult best;

  if (warm) {
    NelderMeadOptions nm;
    nm.max_evals = opt.max_evals;
    nm.accept_below = 1.0;
    nm.rel_step = opt.warm_rel_step;
    best = nelder_mead(f, warm->values, nm);
    res.trace.evaluations += best.evals;
    res.trace.starts_used = 1;
    res.trace.warm_started = true;
  }
  if (!warm || best.f > 1.0) {
    Rng rng(seed);
    NelderMeadOptions nm;
    nm.max_evals = opt.max_evals;
    for (int s = 0; s < opt.starts; ++s) {
      const auto x0 = random_start(problem.tpl, opt, rng);
      auto r = nelder_mead(f, x0.values, nm);
      res.trace.evaluations += r.evals;
      ++res.trace.starts_used;
      if (r.f < best.f) best = std::move(r);
    }
  }
  res.gains.values = best.x;
  res.trace.best_objective = best.f;
  res.report = report_for(problem, zd, res.gains);
  return res;
}

/// Least-squares polynomial in the normalized variable x = Zd / scale.
struct PolynomialFit {
  std::vector<double> coefficients;  ///< ascending powers of x
  double scale = 1.0;
  double rms_residual = 0.0;

  double eval(double zd) const {
    const double x = zd / scale;
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
  friend bool operator==(const PolynomialFit&, const PolynomialFit&) = default;
};

class RankDeficient : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

inline PolynomialFit fit_polynomial(std::span<const double> zd, std::span<const double> values, int order,
                                    double scale) {
  if (order < 0) throw InvalidArgument("fit_polynomial: negative order");
  if (zd.size() != values.size()) throw InvalidArgument("fit_polynomial: abscissa/ordinate size mismatch");
  if (!(scale > 0.0)) throw InvalidArgument("fit_polynomial: scale must be positive");
  const auto cols = static_cast<Eigen::Index>(order + 1);
  if (std::set<double>(zd.begin(), zd.end()).size() < static_cast<std::size_t>(cols))
    throw RankDeficient("fit_polynomial: need at least p+1 distinct abscissae");
  const auto rows = static_cast<Eigen::Index>(zd.size());
  Matrix v(rows, cols);
  Vector y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double x = zd[static_cast<std::size_t>(r)] / scale;
    double pw = 1.0;
    for (Eigen::Index c = 0; c < cols; ++c, pw *= x) v(r, c) = pw;
    y(r) = values[static_cast<std::size_t>(r)];
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(v);
  if (qr.rank() < cols) throw RankDeficient("fit_polynomial: Vandermonde matrix is rank deficient");
  const Vector c = qr.solve(y);
  PolynomialFit fit;
  fit.coefficients.assign(c.data(), c.data() + c.size());
  fit.scale = scale;
  fit.rms_residual = std::sqrt((v * c - y).squaredNorm() / static_cast<double>(rows));
  return fit;
}

/// Polynomial gain schedule over [zd_min, zd_max] plus the design points it came from.
struct GainSchedule {
  DesignProblem problem;
  int order = 5;
  double zd_min = 0.0;
  double zd_max = 1.0;
  std::vector<std::string> names;
  std::vector<PolynomialFit> fits;
  std::vector<DesignPointResult> points;
  std::uint64_t seed = 0;
  /// Set when some gain's RMS residual exceeds 1e-3 * max|gain| over the points.
  bool residual_flag = false;
  /// Coefficients were adjusted after the least-squares fit.
  bool polished = false;
};

struct ScheduledGains {
  ControllerGains gains;
  double zd_used = 0.0;
  bool clamped = false;
};

/// Evaluates every gain polynomial; Zd outside the design range is clamped and flagged.
inline ScheduledGains eval_schedule(const GainSchedule& schedule, double zd) {
  ScheduledGains out;
  out.zd_used = std::clamp(zd, schedule.zd_min, schedule.zd_max);
  out.clamped = out.zd_used != zd;
  for (const auto& fit : schedule.fits) out.gains.values.push_back(fit.eval(out.zd_used));
  return out;
}

class InfeasibleDesign : public Error {
 public:
  InfeasibleDesign(const std::string& what, std::vector<DesignPointResult> points)
      : Error(what), points_(std::move(points)) {}
  const std::vector<DesignPointResult>& points() const noexcept { return points_; }

 private:
  std::vector<DesignPointResult> points_;
};

/// Evenly spaced points k * zd_max / count, k = 1..count.
inline std::vector<double> even_design_points(double zd_max, int count) {
  std::vector<double> pts;
  for (int k = 1; k <= count; ++k) pts.push_back(zd_max * static_cast<double>(k) / static_cast<double>(count));
  return pts;
}

/// Tunes every design point in increasing Zd (warm-starting from the previous
/// point) and fits a degree-p polynomial per gain. Throws InfeasibleDesign,
/// carrying all per-point results, when any point is infeasible.
/// Refits every gain polynomial from the stored design-point gains.
inline void refit_schedule(GainSchedule& sched) {
  std::vector<double> zd;
  for (const auto& p : sched.points) zd.push_back(p.zd);
  const double scale = sched.zd_max > 0.0 ? sched.zd_max : 1.0;
  sched.fits.clear();
  sched.residual_flag = false;
  for (std::size_t g = 0; g < sched.names.size(); ++g) {
    std::vector<double> vals;
    double peak = 0.0;
    for (const auto& p : sched.points) {
      vals.push_back(p.gains.values[g]);
      peak = std::max(peak, std::abs(p.gains.values[g]));
    }
    auto fit = fit_polynomial(zd, vals, sched.order, scale);
    if (fit.rms_residual > 1e-3 * peak) sched.residual_flag = true;
    sched.fits.push_back(std::move(fit));
  }
}

inline GainSchedule synthesize_schedule(const DesignProblem& problem, std::vector<double> design_points, int order,
                                        const TuningOptions& opt, std::uint64_t seed) {
  std::sort(design_points.begin(), design_points.end());
  if (std::adjacent_find(design_points.begin(), design_points.end()) != design_points.end())
    throw RankDeficient("synthesize_schedule: duplicate design point");
  if (design_points.size() < static_cast<std::size_t>(order + 1))
    throw RankDeficient("synthesize_schedule: need at least p+1 design points");
  if (design_points.front() < 0.0) throw InvalidArgument("synthesize_schedule: negative design point");

  GainSchedule sched;
  sched.problem = problem;
  sched.order = order;
  sched.seed = seed;
  sched.zd_min = design_points.front();
  sched.zd_max = design_points.back();
  sched.names = problem.tpl.gain_names();

  std::optional<ControllerGains> warm;
  bool all_feasible = true;
  for (std::size_t i = 0; i < design_points.size(); ++i) {
    auto r = tune_design_point(problem, design_points[i], opt, warm, mix_seed(seed, i));
    all_feasible = all_feasible && r.feasible();
    warm = r.gains;
    sched.points.push_back(std::move(r));
  }
  if (!all_feasible) throw InfeasibleDesign("synthesize_schedule: infeasible design point(s)", sched.points);

  refit_schedule(sched);

  // Least-squares gains can miss the tuning target between and at the points.
  // Polish the coefficients directly against the worst design point.
  if (opt.polish_evals > 0) {
    std::vector<TuningObjective> objectives;
    for (const auto& pt : sched.points) objectives.emplace_back(problem, pt.zd, opt.design_margin, opt.damping_margin);
    const std::size_t ng = sched.fits.size(), nc = static_cast<std::size_t>(order + 1);
    auto unpack = [&](std::span<const double> c, GainSchedule& s) {
      for (std::size_t g = 0; g < ng; ++g)
        std::copy_n(c.begin() + static_cast<std::ptrdiff_t>(g * nc), nc, s.fits[g].coefficients.begin());
    };
    GainSchedule trial = sched;
    auto worst = [&](std::span<const double> c) {
      unpack(c, trial);
      double w = 0.0;
      for (std::size_t i = 0; i < objectives.size(); ++i) {
        std::vector<double> gains;
        for (const auto& fit : trial.fits) gains.push_back(fit.eval(sched.points[i].zd));
        w = std::max(w, objectives[i](gains));
      }
      return w;
    };
    std::vector<double> c0;
    for (const auto& fit : sched.fits) c0.insert(c0.end(), fit.coefficients.begin(), fit.coefficients.end());
    if (worst(c0) > 1.0) {
      NelderMeadOptions nm;
      nm.max_evals = opt.polish_evals;
      nm.accept_below = 1.0;
      nm.rel_step = opt.warm_rel_step;
      nm.abs_step = 0.0;
      const auto r = nelder_mead(worst, c0, nm);
      if (r.f < worst(c0)) {
        unpack(r.x, sched);
        sched.polished = true;
        sched.residual_flag = false;
        for (std::size_t g = 0; g < ng; ++g) {
          double ss = 0.0, peak = 0.0;
          for (const auto& pt : sched.points) {
            const double d = sched.fits[g].eval(pt.zd) - pt.gains.values[g];
            ss += d * d;
            peak = std::max(peak, std::abs(pt.gains.values[g]));
          }
          sched.fits[g].rms_residual = std::sqrt(ss / static_cast<double>(sched.points.size()));
          if (sched.fits[g].rms_residual > 1e-3 * peak) sched.residual_flag = true;
        }
      }
    }
  }
  return sched;
}

struct VerifyEntry {
  double zd = 0.0;
  double zd_used = 0.0;
  bool clamped = false;
  ControllerGains gains;
  ConstraintReport report;
};

struct VerifyReport {
  std::vector<VerifyEntry> entries;
  int violations = 0;  ///< entries failing any constraint or unstable
  int unstable = 0;
};

/// Closes the loop with scheduled gains at each sweep stiffness and evaluates all constraints.
inline VerifyReport verify_schedule(const GainSchedule& schedule, const std::vector<double>& sweep) {
  VerifyReport out;
  const ConstraintEvaluator ev(schedule.problem.spec);
  for (double zd : sweep) {
    const auto sg = eval_schedule(schedule, zd);
    VerifyEntry e{zd, sg.zd_used, sg.clamped, sg.gains, {}};
    try {
      const auto cl = close_loop(schedule.problem.augmented(sg.zd_used),
                                 instantiate_controller(schedule.problem.tpl, sg.gains));
      e.report = ev.evaluate_all(cl);
    } catch (const Error&) {
      e.report = ConstraintReport{};
    }
    if (!e.report.stable) ++out.unstable;
    if (!e.report.feasible()) ++out.violations;
    out.entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace vstiff
