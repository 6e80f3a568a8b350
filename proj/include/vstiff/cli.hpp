#pragma once

#include <Eigen/Core>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "vstiff/io.hpp"

namespace vstiff::cli {

namespace fs = std::filesystem;

/// Exit codes: 0 every gate passed, 2 a gate failed (infeasible design,
/// verification violations, energy check), 1 bad input or runtime error.
inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kGateFailed = 2;

struct Options {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  fs::path out = "out";
  std::optional<fs::path> schedule;
  std::optional<double> zd;
  std::ostream* log = &std::cerr;
};

/// Stage seeds, all derived from the top-level seed.
inline std::uint64_t pid_seed(std::uint64_t seed) { return mix_seed(seed, 2); }
inline std::uint64_t scenario_seed(std::uint64_t seed) { return mix_seed(seed, 3); }

inline RunConfig resolve_config(const Options& o) {
  RunConfig c = o.config ? load_config(*o.config) : default_config();
  if (o.seed) c.seed = *o.seed;
  c.scenario.seed = scenario_seed(c.seed);
  return c;
}

inline fs::path schedule_path(const Options& o) { return o.schedule ? *o.schedule : o.out / "schedule.json"; }

/// Records what a command produced; written last as manifest_<command>.json.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& cfg) : command_(std::move(command)), cfg_(cfg) {}

  void artifact(const fs::path& p) { artifacts_.push_back(p); }
  template <class F>
  auto timed(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timings_[stage] = seconds_since(t0);
    } else {
      auto r = f();
      timings_[stage] = seconds_since(t0);
      return r;
    }
  }

  void write(const fs::path& out) {
    Json files = Json::array();
    for (const auto& p : artifacts_) files.push_back({{"path", p.string()}, {"bytes", fs::file_size(p)}});
    const Json j = {{"schema_version", kSchemaVersion},
                 {"command", command_},
                 {"seed", cfg_.seed},
                 {"stage_seeds",
                  {{"synth", cfg_.seed},
                   {"pid", pid_seed(cfg_.seed)},
                   {"scenario", cfg_.scenario.seed},
                   {"disturbance", mix_seed(cfg_.scenario.seed, 1)},
                   {"noise", mix_seed(cfg_.scenario.seed, 2)}}},
                 {"versions",
                  {{"vstiff", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"fftw", std::string(fftw_version)}}},
                 {"config", to_json(cfg_)},
                 {"artifacts", files},
                 {"wall_clock_s", timings_}};
    io::write_json(out / ("manifest_" + command_ + ".json"), j);
  }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  std::string command_;
  RunConfig cfg_;
  std::vector<fs::path> artifacts_;
  Json timings_ = Json::object();
};

inline std::string gains_csv(const GainSchedule& s, int dense = 91) {
  std::string out = "zd,source";
  for (const auto& n : s.names) out += ',' + n;
  out += '\n';
  for (const auto& p : s.points) {
    out += io::fmt(p.zd) + ",tuned";
    for (double g : p.gains.values) out += ',' + io::fmt(g);
    out += '\n';
  }
  for (int k = 0; k < dense; ++k) {
    const double zd = s.zd_min + (s.zd_max - s.zd_min) * k / (dense - 1);
    out += io::fmt(zd) + ",fit";
    for (double g : eval_schedule(s, zd).gains.values) out += ',' + io::fmt(g);
    out += '\n';
  }
  return out;
}

inline Json points_json(const std::vector<DesignPointResult>& pts) {
  Json a = Json::array();
  for (const auto& p : pts)
    a.push_back({{"zd", p.zd}, {"gains", p.gains.values}, {"feasible", p.feasible()}, {"report", to_json(p.report)}});
  return {{"schema_version", kSchemaVersion}, {"points", a}};
}

inline int cmd_synth(const Options& o) {
  const auto cfg = resolve_config(o);
  Manifest man("synth", cfg);
  auto& log = *o.log;
  try {
    const auto sched = man.timed("synthesis", [&] {
      return synthesize_schedule(cfg.problem(), cfg.design_points, cfg.order, cfg.tuning, cfg.seed);
    });
    const auto sp = o.out / "schedule.json", pp = o.out / "design_points.json", gp = o.out / "gains.csv";
    io::write_json(sp, to_json(sched));
    io::write_json(pp, points_json(sched.points));
    io::write_text(gp, gains_csv(sched));
    for (const auto& p : {sp, pp, gp}) man.artifact(p);
    man.write(o.out);
    for (const auto& p : sched.points)
      log << "zd " << p.zd << "  overall " << p.report.overall << "  evals " << p.trace.evaluations << "\n";
    if (sched.residual_flag) log << "note: fit residual exceeds 1e-3 of peak gain for some gain\n";
    return kOk;
  } catch (const InfeasibleDesign& e) {
    const auto pp = o.out / "design_points.json";
    io::write_json(pp, points_json(e.points()));
    man.artifact(pp);
    man.write(o.out);
    log << "infeasible design:\n";
    for (const auto& p : e.points()) {
      log << "  zd " << p.zd << "  overall " << p.report.overall << (p.feasible() ? "" : "  INFEASIBLE") << "\n";
      if (!p.feasible())
        for (const auto& it : p.report.items)
          if (!it.pass)
            log << "    " << constraint_name(it.kind) << " " << it.achieved << " > " << it.bound << " at omega "
                << it.at_omega << "\n";
    }
    return kGateFailed;
  }
}

/// Midpoints of `count` equal cells spanning the design range.
inline std::vector<double> off_design_points(const GainSchedule& s, int count) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(s.zd_min + (s.zd_max - s.zd_min) * (k + 0.5) / count);
  return out;
}

inline int cmd_verify(const Options& o) {
  const auto cfg = resolve_config(o);
  Manifest man("verify", cfg);
  const auto sched = load_schedule(schedule_path(o));
  std::vector<double> design;
  for (const auto& p : sched.points) design.push_back(p.zd);
  const auto dr = man.timed("design", [&] { return verify_schedule(sched, design); });
  const auto off = off_design_points(sched, cfg.verify.off_design_count);
  const auto orr = man.timed("off_design", [&] { return verify_schedule(sched, off); });
  const int off_pass = static_cast<int>(off.size()) - orr.violations;
  const bool pass = dr.violations == 0 && orr.unstable == 0 && off_pass >= cfg.verify.min_off_design_pass;
  const auto dp = o.out / "verify_design.csv", op = o.out / "verify_off_design.csv", sp = o.out / "verify_summary.json";
  io::write_text(dp, verify_csv(dr));
  io::write_text(op, verify_csv(orr));
  io::write_json(sp, {{"schema_version", kSchemaVersion},
                      {"design_points", design.size()},
                      {"design_violations", dr.violations},
                      {"off_design_points", off.size()},
                      {"off_design_pass", off_pass},
                      {"off_design_unstable", orr.unstable},
                      {"min_off_design_pass", cfg.verify.min_off_design_pass},
                      {"pass", pass}});
  for (const auto& p : {dp, op, sp}) man.artifact(p);
  man.write(o.out);
  *o.log << "design points: " << dr.violations << " violations of " << design.size() << "\n"
         << "off-design: " << off_pass << "/" << off.size() << " pass, " << orr.unstable << " unstable\n";
  return pass ? kOk : kGateFailed;
}

struct RunResult {
  SimTrace trace;
  Metrics metrics;
  EnergyCheck energy;
};

inline RunResult run(const DesignProblem& problem, const ControllerSource& src, const SimScenario& sc) {
  RunResult r;
  r.trace = simulate_closed_loop(problem, src, sc);
  r.metrics = compute_metrics(r.trace);
  r.energy = passivity_energy_check(r.trace);
  return r;
}

inline Json run_json(const RunResult& r) {
  return {{"metrics", to_json(r.metrics)},
          {"energy", {{"min_w", r.energy.min_w}, {"epsilon", r.energy.epsilon}, {"pass", r.energy.pass}}},
          {"samples", r.trace.size()}};
}

inline int cmd_simulate(const Options& o) {
  const auto cfg = resolve_config(o);
  Manifest man("simulate", cfg);
  const auto sched = load_schedule(schedule_path(o));
  const auto r = man.timed("simulation", [&] { return run(sched.problem, ControllerSource::scheduled(sched), cfg.scenario); });
  const auto tp = o.out / "trace_scheduled.csv", mp = o.out / "simulate.json";
  io::write_text(tp, trace_csv(r.trace));
  Json j = run_json(r);
  j["schema_version"] = kSchemaVersion;
  io::write_json(mp, j);
  man.artifact(tp);
  man.artifact(mp);
  man.write(o.out);
  *o.log << "ME " << r.metrics.me << "  SSE " << r.metrics.sse << "  MCO " << r.metrics.mco << "  SNR "
         << r.metrics.snr_db << " dB  min W " << r.energy.min_w << "\n";
  return r.energy.pass ? kOk : kGateFailed;
}

inline int cmd_compare(const Options& o) {
  const auto cfg = resolve_config(o);
  Manifest man("compare", cfg);
  const auto sched = load_schedule(schedule_path(o));
  const auto pid = man.timed("pid_tuning", [&] {
    return make_pid_baseline(sched.problem, cfg.pid.zd_ref * cfg.plant.spring_stiffness, pid_seed(cfg.seed),
                             cfg.tuning, cfg.pid.filter);
  });
  const auto a = man.timed("sim_scheduled", [&] { return run(sched.problem, ControllerSource::scheduled(sched), cfg.scenario); });
  const auto b = man.timed("sim_pid", [&] { return run(sched.problem, ControllerSource::pid(pid.gains), cfg.scenario); });

  const auto ta = o.out / "trace_scheduled.csv", tb = o.out / "trace_pid.csv", mp = o.out / "metrics.csv",
             cp = o.out / "comparison.json";
  io::write_text(ta, trace_csv(a.trace));
  io::write_text(tb, trace_csv(b.trace));
  io::write_text(mp, std::string(kMetricsHeader) + "\n" + metrics_row("scheduled", a.metrics) + metrics_row("pid", b.metrics));
  auto winner = [](double x, double y, bool lower_better) {
    if (x == y) return "tie";
    return (x < y) == lower_better ? "scheduled" : "pid";
  };
  const bool gate = a.energy.pass && a.metrics.mco < cfg.plant.velocity_limit;
  io::write_json(cp, {{"schema_version", kSchemaVersion},
                      {"scheduled", run_json(a)},
                      {"pid", run_json(b)},
                      {"pid_gains",
                       {{"kp", pid.gains.kp},
                        {"ki", pid.gains.ki},
                        {"kd", pid.gains.kd},
                        {"filter", pid.gains.filter},
                        {"zd_ref", pid.zd_ref},
                        {"feasible", pid.feasible},
                        {"objective", io::num(pid.objective)},
                        {"full_band_passivity_index", io::num(pid.full_passivity)}}},
                      {"winner",
                       {{"ME", winner(a.metrics.me, b.metrics.me, true)},
                        {"SSE", winner(a.metrics.sse, b.metrics.sse, true)},
                        {"MCO", winner(a.metrics.mco, b.metrics.mco, true)},
                        {"SNR_dB", winner(a.metrics.snr_db, b.metrics.snr_db, false)}}},
                      {"scheduled_below_saturation", a.metrics.mco < cfg.plant.velocity_limit},
                      {"pass", gate}});
  for (const auto& p : {ta, tb, mp, cp}) man.artifact(p);
  man.write(o.out);
  auto& log = *o.log;
  log << "method      ME         SSE        MCO        SNR[dB]\n";
  for (auto [name, m] : {std::pair{"scheduled", a.metrics}, std::pair{"pid      ", b.metrics}})
    log << name << "  " << m.me << "  " << m.sse << "  " << m.mco << "  " << m.snr_db << "\n";
  return gate ? kOk : kGateFailed;
}

/// Frequency responses of the five constraint channels at one stiffness.
inline int cmd_sweep_freq(const Options& o) {
  const auto cfg = resolve_config(o);
  Manifest man("sweep-freq", cfg);
  const auto sched = load_schedule(schedule_path(o));
  const double zd = o.zd ? *o.zd : cfg.sweep.zd * cfg.plant.spring_stiffness;
  const auto sg = eval_schedule(sched, zd);
  if (sg.clamped) *o.log << "warning: zd " << zd << " clamped to " << sg.zd_used << "\n";
  const auto cl = close_loop(sched.problem.augmented(sg.zd_used), instantiate_controller(sched.problem.tpl, sg.gains));
  const ConstraintEvaluator ev(sched.problem.spec);
  for (auto k : {ConstraintKind::error, ConstraintKind::control, ConstraintKind::disturbance, ConstraintKind::noise,
                 ConstraintKind::passivity}) {
    const auto p = o.out / (std::string("sweep_") + constraint_name(k) + ".csv");
    io::write_text(p, sweep_csv(sweep_constraint(cl, ev, k, cfg.sweep.points_per_decade)));
    man.artifact(p);
  }
  const auto rp = o.out / "sweep_report.json";
  const auto rep = ev.evaluate_all(cl);
  io::write_json(rp, {{"schema_version", kSchemaVersion}, {"zd", zd}, {"zd_used", sg.zd_used}, {"clamped", sg.clamped},
                      {"report", to_json(rep)}, {"pass", rep.feasible()}});
  man.artifact(rp);
  man.write(o.out);
  return rep.feasible() ? kOk : kGateFailed;
}

}  // namespace vstiff::cli
