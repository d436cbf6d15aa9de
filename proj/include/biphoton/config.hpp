#pragma once

#include "biphoton/eventsim.hpp"
#include "biphoton/metrics.hpp"
#include "biphoton/model.hpp"
#include "biphoton/spectral.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// Run configuration. JSON keys carry their unit as a suffix (_rad_s, _s,
// _per_s); unknown keys are rejected so a stray "_hz" never slips through.
// See configs/paper.json and the README for the full schema.
namespace biphoton {

struct TemporalAnalysisConfig {
  double bin_width = 1e-9;    // s
  double max_delay = 1.5e-6;  // s
  int bootstrap_resamples = 200;
  int smoothing_bins = 15;
  std::vector<double> g2c_windows;  // s
  Channel herald = Channel::Stokes;
  // Thermal autocorrelations g2_ss(0), g2_asas(0) used in the
  // Cauchy-Schwarz factor.
  std::array<double, 2> autocorrelation_zero{2.0, 2.0};
};

struct SpectralAnalysisConfig {
  ScanConfig scan;
  CavityFilter cavity;
  bool deconvolve_cavity = false;
};

struct LabConfig {
  std::uint64_t seed = 1;
  SourceModel model;
  bool gain_from_pair_rate = true;  // gain_floor derived from source.pair_rate_per_s
  std::optional<FrequencyGrid> grid;  // default: resolves the histogram bin
  SimConfig source;
  std::optional<double> target_g2_peak;  // solves source.noise_singles when set
  TemporalAnalysisConfig temporal;
  SpectralAnalysisConfig spectral;
  Propagation propagation = Propagation::Quadrature;

  void validate() const;
  // Seed applied to every stage.
  void set_seed(std::uint64_t s);
};

// Built-in paper calibration (same content as configs/paper.json).
LabConfig paper_preset();

// Throws ValidationError naming the offending field path, e.g.
// "source.pair_rate_per_s: must be >= 0".
LabConfig parse_config(const nlohmann::json& j);
LabConfig load_config(const std::string& path);
nlohmann::json config_to_json(const LabConfig& c);

// FNV-1a 64 of the canonical JSON form.
std::uint64_t config_hash(const LabConfig& c);
std::string hex64(std::uint64_t v);

// Resolved pieces shared by the pipeline stages.
struct ResolvedSource {
  SourceModel model;  // gain applied
  FrequencyGrid grid;
  BiphotonWavefunction wavefunction;
  SimConfig sim;  // noise singles solved
};

ResolvedSource resolve_source(const LabConfig& c);

}  // namespace biphoton
