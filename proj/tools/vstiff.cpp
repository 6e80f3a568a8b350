// Command-line front end: synth, verify, simulate, compare, sweep-freq.
#include <CLI11.hpp>

#include "vstiff/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Gain-scheduled variable stiffness controller synthesis"};
  app.require_subcommand(1);

  vstiff::cli::Options opt;
  std::string config, out = "out", schedule;
  std::uint64_t seed = 0;
  double zd = 0.0;

  auto add_common = [&](CLI::App* sub, bool needs_schedule) {
    sub->add_option("--config", config, "run configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "top-level seed (overrides the config)");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    if (needs_schedule)
      sub->add_option("--schedule", schedule, "gain schedule JSON (default <out>/schedule.json)");
  };
  auto* synth = app.add_subcommand("synth", "tune design points and fit the gain schedule");
  auto* verify = app.add_subcommand("verify", "check constraints at design and off-design stiffnesses");
  auto* simulate = app.add_subcommand("simulate", "simulate the scheduled controller");
  auto* compare = app.add_subcommand("compare", "scheduled controller vs frozen PID baseline");
  auto* sweep = app.add_subcommand("sweep-freq", "constraint channel responses at one stiffness");
  add_common(synth, false);
  for (auto* s : {verify, simulate, compare, sweep}) add_common(s, true);
  sweep->add_option("--zd", zd, "stiffness (default from config)");

  CLI11_PARSE(app, argc, argv);

  auto* sub = app.get_subcommands().front();
  if (!config.empty()) opt.config = config;
  if (sub->count("--seed")) opt.seed = seed;
  if (!schedule.empty()) opt.schedule = schedule;
  if (sub == sweep && sub->count("--zd")) opt.zd = zd;
  opt.out = out;

  try {
    if (sub == synth) return vstiff::cli::cmd_synth(opt);
    if (sub == verify) return vstiff::cli::cmd_verify(opt);
    if (sub == simulate) return vstiff::cli::cmd_simulate(opt);
    if (sub == compare) return vstiff::cli::cmd_compare(opt);
    return vstiff::cli::cmd_sweep_freq(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return vstiff::cli::kError;
  }
}
