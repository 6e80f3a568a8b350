#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vstiff/metrics.hpp"

namespace vstiff {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

class FormatError : public Error {
 public:
  using Error::Error;
};

namespace io {

/// JSON has no inf/nan; those are written as strings.
inline Json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double get_num(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw FormatError("expected a number, got " + j.dump());
}

/// Shortest round-trip decimal form; identical inputs give identical text.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // no "-0" in output
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline Json read_json(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline void check_schema(const Json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("schema_version")) throw FormatError(what + ": missing schema_version");
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw FormatError(what + ": unsupported schema_version " + j.at("schema_version").dump());
}

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  if constexpr (std::is_same_v<T, double>)
    out = get_num(j.at(key));
  else
    out = j.at(key).get<T>();
}

}  // namespace io

// ---- plant / constraints / template ----

inline Json to_json(const SeaPlantParams& p) {
  return {{"spring_stiffness", p.spring_stiffness}, {"motor_lag", p.motor_lag}, {"velocity_limit", p.velocity_limit}};
}
inline void from_json(const Json& j, SeaPlantParams& p) {
  io::read_opt(j, "spring_stiffness", p.spring_stiffness);
  io::read_opt(j, "motor_lag", p.motor_lag);
  io::read_opt(j, "velocity_limit", p.velocity_limit);
}

inline Json to_json(const ConstraintSpec& s) {
  return {{"gamma_error", s.gamma_error},
          {"gamma_control", s.gamma_control},
          {"gamma_disturbance", s.gamma_disturbance},
          {"gamma_noise", s.gamma_noise},
          {"omega_error", s.omega_error},
          {"omega_control", s.omega_control},
          {"omega_noise", s.omega_noise},
          {"omega_passivity", s.omega_passivity},
          {"omega_max_factor", s.omega_max_factor},
          {"grid",
           {{"points_per_decade", s.grid.points_per_decade},
            {"floor", s.grid.floor},
            {"edge_fraction", s.grid.edge_fraction},
            {"edge_points", s.grid.edge_points}}}};
}
inline void from_json(const Json& j, ConstraintSpec& s) {
  io::read_opt(j, "gamma_error", s.gamma_error);
  io::read_opt(j, "gamma_control", s.gamma_control);
  io::read_opt(j, "gamma_disturbance", s.gamma_disturbance);
  io::read_opt(j, "gamma_noise", s.gamma_noise);
  io::read_opt(j, "omega_error", s.omega_error);
  io::read_opt(j, "omega_control", s.omega_control);
  io::read_opt(j, "omega_noise", s.omega_noise);
  io::read_opt(j, "omega_passivity", s.omega_passivity);
  io::read_opt(j, "omega_max_factor", s.omega_max_factor);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    io::read_opt(g, "points_per_decade", s.grid.points_per_decade);
    io::read_opt(g, "floor", s.grid.floor);
    io::read_opt(g, "edge_fraction", s.grid.edge_fraction);
    io::read_opt(g, "edge_points", s.grid.edge_points);
  }
}

inline Json to_json(const ControllerTemplate& t) {
  return {{"inputs", t.inputs}, {"den_order", t.den_order}, {"num_order", t.num_order}};
}
inline void from_json(const Json& j, ControllerTemplate& t) {
  io::read_opt(j, "inputs", t.inputs);
  io::read_opt(j, "den_order", t.den_order);
  io::read_opt(j, "num_order", t.num_order);
}

inline Json to_json(const TuningOptions& o) {
  return {{"starts", o.starts},
          {"max_evals", o.max_evals},
          {"design_margin", o.design_margin},
          {"damping_margin", o.damping_margin},
          {"warm_rel_step", o.warm_rel_step},
          {"polish_evals", o.polish_evals},
          {"den_log10_lo", o.den_log10_lo},
          {"den_log10_hi", o.den_log10_hi},
          {"num_scale", o.num_scale}};
}
inline void from_json(const Json& j, TuningOptions& o) {
  io::read_opt(j, "starts", o.starts);
  io::read_opt(j, "max_evals", o.max_evals);
  io::read_opt(j, "design_margin", o.design_margin);
  io::read_opt(j, "damping_margin", o.damping_margin);
  io::read_opt(j, "warm_rel_step", o.warm_rel_step);
  io::read_opt(j, "polish_evals", o.polish_evals);
  io::read_opt(j, "den_log10_lo", o.den_log10_lo);
  io::read_opt(j, "den_log10_hi", o.den_log10_hi);
  io::read_opt(j, "num_scale", o.num_scale);
}

inline Json to_json(const ConstraintReport& r) {
  Json items = Json::array();
  for (const auto& it : r.items)
    items.push_back({{"constraint", constraint_name(it.kind)},
                     {"achieved", io::num(it.achieved)},
                     {"bound", it.bound},
                     {"normalized", io::num(it.normalized())},
                     {"band", {it.band_lo, io::num(it.band_hi)}},
                     {"at_omega", io::num(it.at_omega)},
                     {"margin", io::num(it.margin)},
                     {"pass", it.pass},
                     {"note", it.note}});
  return {{"stable", r.stable},
          {"spectral_abscissa", io::num(r.spectral_abscissa)},
          {"overall", io::num(r.overall)},
          {"feasible", r.feasible()},
          {"constraints", items}};
}

// ---- run configuration ----

struct PidConfig {
  double zd_ref = 0.5;
  double filter = 1e-3;
};

struct VerifyConfig {
  int off_design_count = 50;
  int min_off_design_pass = 48;
};

struct SweepConfig {
  double zd = 0.5;
  double points_per_decade = 50.0;
};

/// Everything one run needs. Unset keys in the file keep these defaults.
struct RunConfig {
  std::uint64_t seed = 1;
  SeaPlantParams plant;
  ConstraintSpec constraints;
  ControllerTemplate tpl;
  std::vector<double> design_points = even_design_points(1.0, 10);
  int order = 5;
  TuningOptions tuning;
  SimScenario scenario;
  PidConfig pid;
  VerifyConfig verify;
  SweepConfig sweep;

  DesignProblem problem() const { return {plant, constraints, std::nullopt, tpl}; }
};

inline Json to_json(const RunConfig& c) {
  const auto& s = c.scenario;
  Json segs = Json::array();
  for (const auto& g : s.segments) segs.push_back({{"start", g.start}, {"zd", g.zd}});
  return {{"schema_version", kSchemaVersion},
          {"seed", c.seed},
          {"plant", to_json(c.plant)},
          {"constraints", to_json(c.constraints)},
          {"template", to_json(c.tpl)},
          {"schedule", {{"design_points", c.design_points}, {"order", c.order}}},
          {"tuning", to_json(c.tuning)},
          {"scenario",
           {{"duration", s.duration},
            {"dt", s.dt},
            {"sample_period", s.sample_period},
            {"segments", segs},
            {"motion", {{"f0", s.motion.f0}, {"f1", s.motion.f1}, {"amplitude", s.motion.amplitude}}},
            {"disturbance", {{"bandwidth", s.disturbance.bandwidth}, {"rms", s.disturbance.rms}}},
            {"noise", {{"bandwidth", s.noise.bandwidth}, {"rms", s.noise.rms}}},
            {"saturate", s.saturate}}},
          {"pid", {{"zd_ref", c.pid.zd_ref}, {"filter", c.pid.filter}}},
          {"verify",
           {{"off_design_count", c.verify.off_design_count}, {"min_off_design_pass", c.verify.min_off_design_pass}}},
          {"sweep_freq", {{"zd", c.sweep.zd}, {"points_per_decade", c.sweep.points_per_decade}}}};
}

inline RunConfig config_from_json(const Json& j) {
  io::check_schema(j, "config");
  RunConfig c;
  try {
    io::read_opt(j, "seed", c.seed);
    if (j.contains("plant")) from_json(j.at("plant"), c.plant);
    if (j.contains("constraints")) from_json(j.at("constraints"), c.constraints);
    if (j.contains("template")) from_json(j.at("template"), c.tpl);
    if (j.contains("schedule")) {
      io::read_opt(j.at("schedule"), "design_points", c.design_points);
      io::read_opt(j.at("schedule"), "order", c.order);
    }
    if (j.contains("tuning")) from_json(j.at("tuning"), c.tuning);
    auto& s = c.scenario;
    bool explicit_segments = false;
    if (j.contains("scenario")) {
      const auto& js = j.at("scenario");
      io::read_opt(js, "duration", s.duration);
      io::read_opt(js, "dt", s.dt);
      io::read_opt(js, "sample_period", s.sample_period);
      io::read_opt(js, "saturate", s.saturate);
      if (js.contains("motion")) {
        io::read_opt(js.at("motion"), "f0", s.motion.f0);
        io::read_opt(js.at("motion"), "f1", s.motion.f1);
        io::read_opt(js.at("motion"), "amplitude", s.motion.amplitude);
      }
      for (auto [key, spec] : {std::pair{"disturbance", &s.disturbance}, std::pair{"noise", &s.noise}}) {
        if (!js.contains(key)) continue;
        io::read_opt(js.at(key), "bandwidth", spec->bandwidth);
        io::read_opt(js.at(key), "rms", spec->rms);
      }
      if (js.contains("segments")) {
        explicit_segments = true;
        s.segments.clear();
        for (const auto& g : js.at("segments")) s.segments.push_back({io::get_num(g.at("start")), io::get_num(g.at("zd"))});
      }
    }
    // The chirp spans the whole run; the default sequence follows plant and duration.
    s.motion.duration = s.duration;
    s.u_max = c.plant.velocity_limit;
    if (!explicit_segments) s.segments = default_stiffness_sequence(c.plant.spring_stiffness, s.motion);
    if (j.contains("pid")) {
      io::read_opt(j.at("pid"), "zd_ref", c.pid.zd_ref);
      io::read_opt(j.at("pid"), "filter", c.pid.filter);
    }
    if (j.contains("verify")) {
      io::read_opt(j.at("verify"), "off_design_count", c.verify.off_design_count);
      io::read_opt(j.at("verify"), "min_off_design_pass", c.verify.min_off_design_pass);
    }
    if (j.contains("sweep_freq")) {
      io::read_opt(j.at("sweep_freq"), "zd", c.sweep.zd);
      io::read_opt(j.at("sweep_freq"), "points_per_decade", c.sweep.points_per_decade);
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  c.plant.validate();
  c.constraints.validate();
  c.tpl.validate();
  c.scenario.validate();
  return c;
}

/// Default configuration with the documented stand-in plant and constraint values.
inline RunConfig default_config() { return config_from_json(Json{{"schema_version", kSchemaVersion}}); }

inline RunConfig load_config(const std::filesystem::path& path) { return config_from_json(io::read_json(path)); }

// ---- gain schedule document ----

inline Json to_json(const GainSchedule& s) {
  Json gains = Json::array();
  for (std::size_t g = 0; g < s.names.size(); ++g)
    gains.push_back({{"name", s.names[g]},
                     {"coefficients", s.fits[g].coefficients},
                     {"rms_residual", s.fits[g].rms_residual}});
  Json points = Json::array();
  for (const auto& p : s.points)
    points.push_back({{"zd", p.zd},
                      {"gains", p.gains.values},
                      {"feasible", p.feasible()},
                      {"report", to_json(p.report)},
                      {"optimizer_trace",
                       {{"evaluations", p.trace.evaluations},
                        {"starts_used", p.trace.starts_used},
                        {"best_objective", io::num(p.trace.best_objective)},
                        {"warm_started", p.trace.warm_started},
                        {"seed", p.trace.seed}}}});
  Json weight = nullptr;
  if (s.problem.weight) weight = {{"num", s.problem.weight->num()}, {"den", s.problem.weight->den()}};
  return {{"schema_version", kSchemaVersion},
          {"kind", "gain_schedule"},
          {"seed", s.seed},
          {"plant", to_json(s.problem.plant)},
          {"constraints", to_json(s.problem.spec)},
          {"error_weight", weight},
          {"template", to_json(s.problem.tpl)},
          {"order", s.order},
          {"zd_range", {s.zd_min, s.zd_max}},
          {"normalization", {{"variable", "zd / scale"}, {"scale", s.fits.empty() ? 1.0 : s.fits.front().scale}}},
          {"residual_flag", s.residual_flag},
          {"polished", s.polished},
          {"gains", gains},
          {"points", points}};
}

/// Rebuilds a schedule; point reports are recomputed from the stored gains.
inline GainSchedule schedule_from_json(const Json& j) {
  io::check_schema(j, "schedule");
  GainSchedule s;
  try {
    if (j.value("kind", "") != "gain_schedule") throw FormatError("schedule: kind must be gain_schedule");
    s.seed = j.at("seed").get<std::uint64_t>();
    from_json(j.at("plant"), s.problem.plant);
    from_json(j.at("constraints"), s.problem.spec);
    from_json(j.at("template"), s.problem.tpl);
    if (!j.at("error_weight").is_null())
      s.problem.weight = RationalTF(j.at("error_weight").at("num").get<std::vector<double>>(),
                                    j.at("error_weight").at("den").get<std::vector<double>>());
    s.order = j.at("order").get<int>();
    s.zd_min = j.at("zd_range").at(0).get<double>();
    s.zd_max = j.at("zd_range").at(1).get<double>();
    s.residual_flag = j.at("residual_flag").get<bool>();
    s.polished = j.value("polished", false);
    const double scale = j.at("normalization").at("scale").get<double>();
    for (const auto& g : j.at("gains")) {
      s.names.push_back(g.at("name").get<std::string>());
      PolynomialFit f;
      f.coefficients = g.at("coefficients").get<std::vector<double>>();
      f.scale = scale;
      f.rms_residual = g.at("rms_residual").get<double>();
      if (f.coefficients.size() != static_cast<std::size_t>(s.order + 1))
        throw FormatError("schedule: gain " + s.names.back() + " needs order+1 coefficients");
      s.fits.push_back(std::move(f));
    }
    if (s.names != s.problem.tpl.gain_names()) throw FormatError("schedule: gain names do not match the template");
    for (const auto& p : j.at("points")) {
      DesignPointResult r;
      r.zd = p.at("zd").get<double>();
      r.gains.values = p.at("gains").get<std::vector<double>>();
      const auto& t = p.at("optimizer_trace");
      r.trace.evaluations = t.at("evaluations").get<int>();
      r.trace.starts_used = t.at("starts_used").get<int>();
      r.trace.best_objective = io::get_num(t.at("best_objective"));
      r.trace.warm_started = t.at("warm_started").get<bool>();
      r.trace.seed = t.at("seed").get<std::uint64_t>();
      r.report = report_for(s.problem, r.zd, r.gains);
      s.points.push_back(std::move(r));
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("schedule: ") + e.what());
  }
  return s;
}

inline GainSchedule load_schedule(const std::filesystem::path& path) { return schedule_from_json(io::read_json(path)); }

// ---- CSV ----

inline constexpr const char* kTraceHeader = "t,Zd,phi_h,tau_d,tau_h,e,u_pre_sat,u,d,n";
inline constexpr const char* kSweepHeader = "omega,magnitude,bound,in_band";
inline constexpr const char* kMetricsHeader = "method,ME,SSE,MCO,SNR_dB";
inline constexpr const char* kVerifyHeader = "zd,zd_used,clamped,stable,constraint,achieved,bound,normalized,at_omega,pass";

inline std::string trace_csv(const SimTrace& tr) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (std::size_t i = 0; i < tr.size(); ++i) {
    for (const auto* col : {&tr.t, &tr.zd, &tr.phi_h, &tr.tau_d, &tr.tau_h, &tr.e, &tr.u_pre_sat, &tr.u, &tr.d, &tr.n}) {
      if (col != &tr.t) out += ',';
      out += io::fmt((*col)[i]);
    }
    out += '\n';
  }
  return out;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const auto& r : rows)
    out += io::fmt(r.omega) + ',' + io::fmt(r.magnitude) + ',' + io::fmt(r.bound) + ',' + (r.in_band ? "1" : "0") + '\n';
  return out;
}

inline std::string metrics_row(const std::string& method, const Metrics& m) {
  return method + ',' + io::fmt(m.me) + ',' + io::fmt(m.sse) + ',' + io::fmt(m.mco) + ',' + io::fmt(m.snr_db) + '\n';
}

inline std::string verify_csv(const VerifyReport& rep) {
  std::string out = std::string(kVerifyHeader) + "\n";
  for (const auto& e : rep.entries)
    for (const auto& it : e.report.items)
      out += io::fmt(e.zd) + ',' + io::fmt(e.zd_used) + ',' + (e.clamped ? "1" : "0") + ',' +
             (e.report.stable ? "1" : "0") + ',' + constraint_name(it.kind) + ',' + io::fmt(it.achieved) + ',' +
             io::fmt(it.bound) + ',' + io::fmt(it.normalized()) + ',' + io::fmt(it.at_omega) + ',' +
             (it.pass ? "1" : "0") + '\n';
  return out;
}

inline Json to_json(const Metrics& m) {
  return {{"ME", io::num(m.me)}, {"SSE", io::num(m.sse)}, {"MCO", io::num(m.mco)}, {"SNR_dB", io::num(m.snr_db)}};
}

}  // namespace vstiff
