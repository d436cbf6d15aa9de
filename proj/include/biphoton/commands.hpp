#pragma once

#include "biphoton/config.hpp"
#include "biphoton/metrics.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

// Pipeline stages behind the command-line front end. Each stage reads and
// writes plain files in out_dir; see README for the file list.
namespace biphoton {

struct RunOptions {
  std::optional<std::string> config_path;  // default: built-in preset
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::optional<Propagation> propagation;
  bool deconvolve_cavity = false;
  std::optional<std::string> events_path;    // analyze-temporal input
  std::optional<std::string> temporal_json;  // report inputs
  std::optional<std::string> spectral_json;
};

struct StageResult {
  std::string name;
  double seconds = 0.0;
  std::vector<std::string> files;  // relative to out_dir
};

// Config file (or the built-in preset) with command-line overrides applied.
LabConfig effective_config(const RunOptions& opts);

StageResult run_simulate(const LabConfig& cfg, const RunOptions& opts);
StageResult run_analyze_temporal(const LabConfig& cfg, const RunOptions& opts);
StageResult run_analyze_spectral(const LabConfig& cfg, const RunOptions& opts);
StageResult run_report(const LabConfig& cfg, const RunOptions& opts, std::ostream& table_out);

// Runs a named subcommand, writes manifest.json (deterministic) and
// timing.json (wall-clock record), and maps errors to exit codes:
// 0 ok, 2 invalid input or config, 3 analysis failure, 1 anything else.
int run_command(const std::string& command, const RunOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace biphoton
