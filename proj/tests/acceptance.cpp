// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Argument: scratch directory for artifacts.
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>

#include "vstiff/cli.hpp"

using namespace vstiff;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <class... T>
std::string str(const T&... parts) {
  std::ostringstream s;
  s.precision(6);
  (s << ... << parts);
  return s.str();
}

cli::Options options(const fs::path& out, std::ostream& log) {
  cli::Options o;
  o.seed = 1;
  o.out = out;
  o.log = &log;
  return o;
}

double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- independent oracles ----

double tf_ss_disagreement() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int n = 1 + k % 5;
    std::vector<double> den{1.0}, num;
    for (int i = 0; i < n; ++i) den = poly::mul(den, std::vector<double>{1.0, u(gen)});
    for (int i = 0; i <= n - (k % 2); ++i) num.push_back(u(gen) - 2.5);
    const RationalTF g(num, den);
    const auto ss = tf_to_ss(g);
    for (double w : {0.0, 0.01, 0.3, 1.0, 7.0, 60.0, 1e3}) {
      // Plain power-sum evaluation of the rational function.
      const Complex s{0.0, w};
      Complex nv = 0.0, dv = 0.0;
      for (std::size_t i = 0; i < num.size(); ++i) nv += num[i] * std::pow(s, static_cast<int>(num.size() - 1 - i));
      for (std::size_t i = 0; i < den.size(); ++i) dv += den[i] * std::pow(s, static_cast<int>(den.size() - 1 - i));
      const Complex ref = nv / dv;
      worst = std::max(worst, std::abs(ss.response(w)(0, 0) - ref) / std::max(1.0, std::abs(ref)));
    }
  }
  return worst;
}

double band_hinf_error() {
  double worst = 0.0;
  // k/(s + a) on [lo, hi]: peak k / sqrt(lo^2 + a^2). k s/(s + a): peak k hi / sqrt(hi^2 + a^2).
  for (double a : {0.5, 2.0, 30.0})
    for (auto [lo, hi] : {std::pair{0.0, 10.0}, std::pair{1.0, 100.0}, std::pair{5.0, 40.0}}) {
      const double k = 3.0;
      const auto lp = band_hinf(tf_to_ss(RationalTF({k}, {1.0, a})), FrequencyGrid::band(lo, hi)).value;
      const auto hp = band_hinf(tf_to_ss(RationalTF({k, 0.0}, {1.0, a})), FrequencyGrid::band(lo, hi)).value;
      const double lp_ref = k / std::sqrt(lo * lo + a * a), hp_ref = k * hi / std::sqrt(hi * hi + a * a);
      worst = std::max({worst, std::abs(lp - lp_ref) / lp_ref, std::abs(hp - hp_ref) / hp_ref});
    }
  return worst;
}

double fit_disagreement() {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> noise(0.0, 0.5);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x, y;
    for (int k = 1; k <= 10; ++k) {
      x.push_back(0.1 * k);
      y.push_back(std::cos(2.0 * k * 0.1 + trial) * 10.0 + noise(gen));
    }
    const auto f = fit_polynomial(x, y, 5, 1.0);
    Matrix v(10, 6);
    for (int r = 0; r < 10; ++r)
      for (int c = 0; c < 6; ++c) v(r, c) = std::pow(x[static_cast<std::size_t>(r)], c);
    const Vector yy = Eigen::Map<const Vector>(y.data(), 10);
    const Vector c = (v.transpose() * v).ldlt().solve(v.transpose() * yy);
    for (int i = 0; i < 6; ++i)
      worst = std::max(worst, std::abs(f.coefficients[static_cast<std::size_t>(i)] - c(i)) / std::max(1.0, std::abs(c(i))));
  }
  return worst;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  return fs::exists(a) && fs::exists(b) && io::read_text(a) == io::read_text(b);
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::remove_all(root);
  const auto run_a = root / "run_a", run_b = root / "run_b";
  std::ostringstream log;

  // 1. synthesis
  auto t0 = std::chrono::steady_clock::now();
  const int synth_code = cli::cmd_synth(options(run_a, log));
  const double synth_s = seconds(t0);
  if (synth_code != cli::kOk) {
    std::fputs(log.str().c_str(), stdout);
    report(1, "synthesis feasibility", false, str("synth exited with ", synth_code));
    return 1;
  }
  const auto sched = load_schedule(run_a / "schedule.json");
  int feasible = 0;
  double worst_overall = 0.0;
  for (const auto& p : sched.points) {
    feasible += p.report.overall <= 1.0;
    worst_overall = std::max(worst_overall, p.report.overall);
  }
  report(1, "synthesis feasibility", feasible == 10 && synth_s < 600.0,
         str(feasible, "/10 feasible, worst overall ", worst_overall, ", ", synth_s, " s"));

  // 2. verification sweep
  const int verify_code = cli::cmd_verify(options(run_a, log));
  const auto vs = io::read_json(run_a / "verify_summary.json");
  const int dv = vs.at("design_violations"), op = vs.at("off_design_pass"), ou = vs.at("off_design_unstable"),
            on = vs.at("off_design_points");
  report(2, "constraint sweeps", verify_code == cli::kOk && dv == 0 && op >= 48 && ou == 0 && on == 50,
         str("design violations ", dv, ", off-design ", op, "/", on, " pass, ", ou, " unstable"));

  // 3. passivity on [1e-3, omega_p] at the design points, and the bare spring
  {
    const ConstraintEvaluator ev(sched.problem.spec);
    double worst = 0.0;
    for (const auto& p : sched.points) {
      const auto sg = eval_schedule(sched, p.zd);
      const auto cl = close_loop(sched.problem.augmented(p.zd), instantiate_controller(sched.problem.tpl, sg.gains));
      worst = std::max(worst, ev.evaluate(cl, ConstraintKind::passivity).achieved);
    }
    const auto spring = close_loop(sched.problem.augmented(0.5), {RationalTF::gain(0.0), RationalTF::gain(0.0)});
    const double si = ev.evaluate(spring, ConstraintKind::passivity).achieved;
    char buf[160];
    std::snprintf(buf, sizeof buf, "worst scheduled index %.9f, pure spring %.9f", worst, si);
    report(3, "passivity boundary", worst <= 1.0 + 1e-6 && std::abs(si - 1.0) <= 1e-9, buf);
  }

  // 4. ordinal comparison with the PID baseline
  const int compare_code = cli::cmd_compare(options(run_a, log));
  const auto cmp = io::read_json(run_a / "comparison.json");
  const auto& ms = cmp.at("scheduled").at("metrics");
  const auto& mp = cmp.at("pid").at("metrics");
  const double sse_s = io::get_num(ms.at("SSE")), sse_p = io::get_num(mp.at("SSE"));
  const double mco_s = io::get_num(ms.at("MCO")), mco_p = io::get_num(mp.at("MCO"));
  const double snr_s = io::get_num(ms.at("SNR_dB")), snr_p = io::get_num(mp.at("SNR_dB"));
  report(4, "ordinal comparison",
         sse_s < sse_p && mco_s < mco_p && mco_s < sched.problem.plant.velocity_limit && snr_s > snr_p,
         str("SSE ", sse_s, " vs ", sse_p, ", MCO ", mco_s, " vs ", mco_p, ", SNR ", snr_s, " vs ", snr_p, " dB"));

  // 5. numerical oracles
  {
    const double a = tf_ss_disagreement(), b = band_hinf_error(), c = fit_disagreement();
    report(5, "numerical oracles", a <= 1e-9 && b <= 1e-4 && c <= 1e-8,
           str("tf/ss ", a, ", band norm ", b, ", fit ", c));
  }

  // 6. energy
  {
    const auto& e = cmp.at("scheduled").at("energy");
    const double mw = e.at("min_w"), eps = e.at("epsilon");
    report(6, "energy check", mw >= -eps && compare_code == cli::kOk, str("min W ", mw, ", epsilon ", eps));
  }

  // 7. determinism: a second synth + compare with the same seed
  {
    const int s2 = cli::cmd_synth(options(run_b, log));
    const int c2 = cli::cmd_compare(options(run_b, log));
    int compared = 0, differ = 0;
    for (const auto& entry : fs::directory_iterator(run_b)) {
      const auto name = entry.path().filename().string();
      if (name.rfind("manifest_", 0) == 0) continue;  // wall-clock timings
      ++compared;
      if (!same_bytes(run_a / name, entry.path())) {
        ++differ;
        std::printf("  differs: %s\n", name.c_str());
      }
    }
    report(7, "determinism", s2 == cli::kOk && c2 == cli::kOk && compared >= 7 && differ == 0,
           str(compared, " artifacts compared, ", differ, " differ"));
  }

  // 8. dt convergence
  {
    auto cfg = cli::resolve_config(options(run_a, log));
    const auto src = ControllerSource::scheduled(sched);
    const double a = compute_metrics(simulate_closed_loop(sched.problem, src, cfg.scenario)).sse;
    cfg.scenario.dt = 5e-4;
    const double b = compute_metrics(simulate_closed_loop(sched.problem, src, cfg.scenario)).sse;
    const double rel = std::abs(b - a) / a;
    report(8, "simulation convergence", rel < 0.01, str("SSE ", a, " -> ", b, " (", rel * 100.0, "%)"));
  }

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
