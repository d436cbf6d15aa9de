#pragma once

#include "biphoton/model.hpp"
#include "biphoton/numeric.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace biphoton {

struct EventStream;
enum class Channel : std::uint8_t;

// Coincidence counts versus relative delay tau = t_as - t_s. Bin k is
// centered at tau(k) and spans [tau - t_bin/2, tau + t_bin/2).
struct CoincidenceHistogram {
  double bin_width = 0.0;  // t_bin, s
  Eigen::ArrayXd tau;      // bin centers, s
  ArrayXi64 counts;
  double acquisition_time = 0.0;      // Delta T, s
  double detection_efficiency = 1.0;  // eta, includes duty cycle
  double live_time = 0.0;             // detector-gated time, s
  std::int64_t stokes_singles = 0;
  std::int64_t anti_stokes_singles = 0;

  void validate() const;
  bool has_singles() const { return live_time > 0.0 && stokes_singles > 0 && anti_stokes_singles > 0; }
  // Accidental counts per bin expected from the measured singles:
  // N_s N_as t_bin / live_time.
  double accidental_floor() const;
  // Bin-wise sum; both histograms must share binning.
  CoincidenceHistogram& operator+=(const CoincidenceHistogram& other);
};

// Bin centers k * t_bin for |k * t_bin| <= max_delay.
Eigen::ArrayXd bin_centers(double bin_width, double max_delay);

// eta * DeltaT * (Integral_bin |psi|^2 + R_s R_as t_bin) for each bin center.
// Throws AliasingError when t_bin exceeds the width holding 99.9% of |psi|^2.
Eigen::ArrayXd expected_coincidence_curve(const BiphotonWavefunction& wf, double rate_s, double rate_as, double eta,
                                          double acquisition_time, double bin_width, const Eigen::ArrayXd& centers);

struct TemporalStats {
  double mean_delay = 0.0;  // s
  double std = 0.0;         // Delta(t_as - t_s), s
  double std_error = 0.0;   // bootstrap, s
  double peak_g2 = 0.0;     // smoothed peak over the accidental level
  double floor_level = 0.0; // counts per bin
  double fwhm = 0.0;        // initial width guess, s
  int bootstrap_used = 0;
};

enum class MomentEstimator {
  // Moments over every bin. Right for exact curves.
  FullRange,
  // Moments over [peak - 2 FWHM, peak + 2 FWHM]; the decay beyond the right
  // edge is fitted with an exponential (Poisson-weighted LM on
  // [peak + FWHM, peak + 5 FWHM]) and added analytically.
  TailCorrected,
};

struct TemporalStdOptions {
  bool floor_subtract = true;
  MomentEstimator estimator = MomentEstimator::TailCorrected;
  int bootstrap_resamples = 200;
  std::uint64_t seed = 0;
  int smoothing_bins = 15;
  // Bins farther than this many FWHM from the peak define the floor.
  double wing_factor = 5.0;

  static TemporalStdOptions exact_curve() {
    TemporalStdOptions o;
    o.floor_subtract = false;
    o.estimator = MomentEstimator::FullRange;
    o.bootstrap_resamples = 0;
    return o;
  }
};

TemporalStats temporal_std(const CoincidenceHistogram& hist, const TemporalStdOptions& options = {});
// Curve overload (no bootstrap; std_error stays 0).
TemporalStats temporal_std(const Eigen::ArrayXd& tau, const Eigen::ArrayXd& values,
                           const TemporalStdOptions& options = TemporalStdOptions::exact_curve());

// g2_{s,as}(tau) = counts / (eta R_s R_as DeltaT t_bin).
Eigen::ArrayXd cross_correlation_g2(const CoincidenceHistogram& hist, double rate_s, double rate_as, double eta,
                                    double acquisition_time, double bin_width);
// Same, normalized by the accidental floor implied by the histogram's singles.
Eigen::ArrayXd cross_correlation_g2(const CoincidenceHistogram& hist);

// Maximum of the centered moving average.
double smoothed_peak(const Eigen::ArrayXd& values, int smoothing_bins);

// [g2_{s,as}]^2 / (g2_{s,s}(0) g2_{as,as}(0)); > 1 is nonclassical.
double cauchy_schwarz_factor(double g2_cross_peak, double g2_ss0, double g2_asas0);

struct HeraldedPoint {
  double window = 0.0;  // delta t, s
  double g2c = 0.0;     // NaN when either split arm saw nothing
  std::int64_t heralds = 0;
  std::int64_t arm1 = 0;
  std::int64_t arm2 = 0;
  std::int64_t both = 0;
};

// Heralded autocorrelation of the non-herald channel. Each signal event is
// routed to one of two virtual detectors by a seeded 50/50 coin; for every
// herald at t_h the window [t_h, t_h + delta t] is inspected and
//   g2c = N_h N_12 / (N_1 N_2).
std::vector<HeraldedPoint> conditional_autocorrelation(const EventStream& stream, Channel herald,
                                                       const std::vector<double>& windows, std::uint64_t seed);

}  // namespace biphoton
