#pragma once

#include "biphoton/model.hpp"
#include "biphoton/temporal.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace biphoton {

enum class Channel : std::uint8_t { Stokes = 0, AntiStokes = 1 };

std::string_view channel_name(Channel c);
Channel parse_channel(std::string_view name);

struct DetectionEvent {
  std::int64_t t_ns = 0;
  Channel channel = Channel::Stokes;

  friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
  friend bool operator<(const DetectionEvent& a, const DetectionEvent& b) {
    return a.t_ns != b.t_ns ? a.t_ns < b.t_ns : a.channel < b.channel;
  }
};

// Pairs are generated only inside a window of each cycle (MOT loading
// takes the rest).
struct DutyCycle {
  double cycle_period = 1.25e-3;     // s
  double generation_window = 0.5e-3; // s

  double fraction() const { return generation_window / cycle_period; }
  void validate() const;
};

struct SimConfig {
  double pair_rate = 0.0;                       // pairs/s inside generation windows
  std::array<double, 2> noise_singles{0, 0};    // uncorrelated detected counts/s [s, as]
  std::array<double, 2> arm_efficiencies{1, 1}; // per-photon detection probability [s, as]
  DutyCycle duty;
  double run_length = 1.0;  // s of wall-clock acquisition
  std::uint64_t seed = 1;
  double dead_time = 0.0;                    // s, non-paralyzable, per channel
  std::array<double, 2> dark_counts{0, 0};   // counts/s while gated on

  void validate() const;
  // eta = eta_s * eta_as * duty fraction
  double joint_efficiency() const;
  // Detected singles rates inside generation windows.
  std::array<double, 2> detected_singles_rates() const;
  // R_x such that eta * R_s * R_as reproduces the accidental floor.
  std::array<double, 2> effective_singles_rates() const;
};

struct EventStream {
  std::vector<DetectionEvent> events;  // sorted by (t_ns, channel)
  std::uint64_t seed = 0;
  DutyCycle duty;
  double run_length = 0.0;
  double joint_efficiency = 1.0;

  double live_time() const;
  std::size_t count(Channel c) const;
  std::vector<std::int64_t> times(Channel c) const;
};

// Inverse-CDF sampler over the tabulated |psi|^2 (piecewise constant per
// grid cell).
class RelativeDelaySampler {
 public:
  explicit RelativeDelaySampler(const BiphotonWavefunction& wf);

  double operator()(std::mt19937_64& rng) const { return quantile(std::generate_canonical<double, 53>(rng)); }
  double quantile(double u) const;
  double cdf(double tau) const;

 private:
  double first_edge_ = 0.0;
  double step_ = 0.0;
  Eigen::ArrayXd cumulative_;  // at cell edges, normalized to 1
};

double sample_relative_delay(const RelativeDelaySampler& sampler, std::mt19937_64& rng);
std::vector<double> sample_relative_delays(const BiphotonWavefunction& wf, std::uint64_t seed, std::size_t n);

EventStream generate_events(const SimConfig& config, const BiphotonWavefunction& wf);

// Uncorrelated singles u (same on both channels) that put the expected
// g2_{s,as} peak at `target` for bins of `bin_width`:
//   g2 = 1 + P eta_s eta_as p_bin / (S_s S_as t_bin),  S_x = P eta_x + u + dark_x
// with p_bin the largest bin probability of |psi|^2. Throws ValidationError
// when even u = 0 cannot reach the target.
double noise_for_g2_peak(const SimConfig& config, const BiphotonWavefunction& wf, double bin_width, double target);

// Every (Stokes, anti-Stokes) pair with |t_as - t_s| <= max_delay adds one
// count at tau = t_as - t_s.
CoincidenceHistogram count_coincidences(const EventStream& stream, double bin_width, double max_delay);

// Appends `second` after `first`, shifted by the whole cycles of `first`.
EventStream merge_streams(const EventStream& first, const EventStream& second);

}  // namespace biphoton
