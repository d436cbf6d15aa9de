#include "biphoton/commands.hpp"
#include "biphoton/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Simulate and analyze time-frequency entangled photon pairs"};
  app.require_subcommand(1);

  biphoton::RunOptions opts;
  std::string config, propagation, events, temporal, spectral;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON config (default: built-in preset)");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out-dir", opts.out_dir, "output directory")->capture_default_str();
  };

  auto* simulate = app.add_subcommand("simulate", "generate a detection event stream");
  common(simulate);

  auto* temporal_cmd = app.add_subcommand("analyze-temporal", "coincidence histogram, Delta t, g2c");
  common(temporal_cmd);
  temporal_cmd->add_option("--events", events, "event CSV (default: <out-dir>/events.csv)");

  auto* spectral_cmd = app.add_subcommand("analyze-spectral", "joint spectral scan and sum-frequency fit");
  common(spectral_cmd);
  spectral_cmd->add_flag("--deconvolve-cavity", opts.deconvolve_cavity, "fit a Voigt with the cavity Lorentzian");

  auto* report = app.add_subcommand("report", "uncertainty product and entanglement verdicts");
  common(report);
  report->add_option("--temporal", temporal, "temporal.json (default: <out-dir>/temporal.json)");
  report->add_option("--spectral", spectral, "spectral.json (default: <out-dir>/spectral.json)");
  report->add_option("--propagation", propagation, "linear or quadrature")
      ->check(CLI::IsMember({"linear", "quadrature"}));

  auto* reproduce = app.add_subcommand("reproduce-paper", "run every stage");
  common(reproduce);
  reproduce->add_option("--propagation", propagation, "linear or quadrature")
      ->check(CLI::IsMember({"linear", "quadrature"}));
  reproduce->add_flag("--deconvolve-cavity", opts.deconvolve_cavity, "fit a Voigt with the cavity Lorentzian");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (!config.empty()) opts.config_path = config;
  if (chosen->count("--seed") > 0) opts.seed = seed;
  if (!events.empty()) opts.events_path = events;
  if (!temporal.empty()) opts.temporal_json = temporal;
  if (!spectral.empty()) opts.spectral_json = spectral;
  if (!propagation.empty()) opts.propagation = biphoton::parse_propagation(propagation);

  return biphoton::run_command(chosen->get_name(), opts, std::cout, std::cerr);
}
