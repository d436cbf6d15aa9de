#pragma once

#include "biphoton/model.hpp"
#include "biphoton/numeric.hpp"
#include "biphoton/units.hpp"

#include <Eigen/Dense>

#include <cmath>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

// Frequency-domain side: joint spectral intensity, cavity-filtered scans and
// their projections, sum-frequency fitting, and spectra recovered from
// autocorrelations. All frequencies are angular offsets in rad/s.
namespace biphoton {

// Scanning filter cavity with a Lorentzian line,
//   T(d) = T0 / (1 + (2 d / kappa)^2).
struct CavityFilter {
  double fwhm = units::angular_khz(72.0);  // kappa, rad/s
  double peak_transmission = 0.3;          // T0
  double finesse = 20000.0;                // metadata only

  double half_width() const { return 0.5 * fwhm; }
  void validate() const;
};

double cavity_transmission(const CavityFilter& filter, double detuning);
Eigen::ArrayXd cavity_transmission(const CavityFilter& filter, const Eigen::ArrayXd& detuning);
// Integral of T over [lo, hi]; T0 pi kappa / 2 over the whole line.
double cavity_transmission_integral(const CavityFilter& filter, double lo, double hi);

struct JsiTerms {
  bool entangled = true;
  bool accidental = true;
};

// S^2(dw_s, dw_as) = |B(w) D(Sigma - w)|^2 G(dw_s + dw_as - Sigma; sigma_pc)
//                  + |B(dw_as) C(dw_s)|^2
// with G a unit-area Gaussian and w = (dw_as - dw_s + Sigma) / 2 the ridge
// point at the same difference frequency (equal to dw_as on the ridge). Rows follow dw_s, columns dw_as. A zero
// sigma_pc is clamped to the smaller grid step (resolution-limited ridge).
Eigen::ArrayXXd joint_spectral_intensity(const SourceModel& model, const Eigen::ArrayXd& dws,
                                         const Eigen::ArrayXd& dwas, JsiTerms terms = {});

struct ScanConfig {
  double half_span = units::angular_mhz(8.0);  // rad/s, both AOM axes
  double step = units::angular_khz(100.0);     // rad/s
  double per_point_acquisition = 3000.0;       // s
  double coincidence_window = 3e-6;            // s
  std::uint64_t seed = 1;

  Eigen::ArrayXd axis() const;
  void validate() const;
};

// Rates feeding the scan, shared with the event simulation.
struct SpectralRates {
  double pair_rate = 0.0;                  // pairs/s inside generation windows
  std::array<double, 2> singles{0.0, 0.0}; // effective singles [s, as], counts/s
  double joint_efficiency = 1.0;           // eta

  void validate() const;
};

struct ExpectedScan {
  Eigen::ArrayXd dws;
  Eigen::ArrayXd dwas;
  Eigen::ArrayXXd pairs;        // expected true-pair counts per point
  Eigen::ArrayXXd accidentals;  // expected accidental counts per point
  double ridge_width = 0.0;     // sigma used for the ridge, rad/s
  bool ridge_clamped = false;
  std::vector<std::string> warnings;

  Eigen::ArrayXXd total() const { return pairs + accidentals; }
};

// Expected counts: eta * acquisition * (pair rate through both cavities +
// R_s R_as window * singles fractions through each cavity). The cavity
// response is convolved exactly against the JSI tabulated on a fine grid.
ExpectedScan expected_joint_scan(const SourceModel& model, const CavityFilter& filter, const ScanConfig& scan,
                                 const SpectralRates& rates);

struct JointSpectralMap {
  Eigen::ArrayXd dws;   // rad/s, strictly increasing, uniform
  Eigen::ArrayXd dwas;  // rad/s, strictly increasing, uniform
  ArrayXXi64 counts;    // rows dws, columns dwas
  double per_point_acquisition = 0.0;  // s
  double coincidence_window = 0.0;     // s
  CavityFilter cavity;
  std::uint64_t seed = 0;
  bool ridge_clamped = false;
  std::vector<std::string> warnings;

  void validate() const;
};

// Poisson draw of an expected scan; point (i, j) uses its own substream so
// the result does not depend on threading.
JointSpectralMap sample_joint_scan(const ExpectedScan& expected, const CavityFilter& filter, const ScanConfig& scan);
JointSpectralMap simulate_joint_scan(const SourceModel& model, const CavityFilter& filter, const ScanConfig& scan,
                                     const SpectralRates& rates);

struct Marginals {
  Eigen::ArrayXd dws;
  ArrayXi64 stokes;  // summed over dwas
  Eigen::ArrayXd dwas;
  ArrayXi64 anti_stokes;  // summed over dws
};

Marginals project_axes(const JointSpectralMap& map);

// Counts summed along lines of constant dw_s + dw_as. Needs a square map
// with equal uniform steps.
struct SumFrequencyProjection {
  Eigen::ArrayXd offset;  // dw_s + dw_as, rad/s
  ArrayXi64 counts;
};

SumFrequencyProjection project_antidiagonal(const JointSpectralMap& map);

// Projection a separable (uncorrelated) map with the same marginals would
// have: the convolution of the two marginals, peak-normalized, on the
// project_antidiagonal offsets. Accidentals have this shape.
Eigen::ArrayXd separable_floor_shape(const JointSpectralMap& map);

struct SumFrequencyFitOptions {
  // Fit a Gaussian convolved with the two-cavity Lorentzian (HWHM = kappa)
  // instead of a bare Gaussian.
  bool deconvolve_cavity = false;
  double cavity_fwhm = 0.0;  // rad/s, needed when deconvolving
  double min_peak_to_floor = 3.0;
  // Optional floor template on the projection offsets (see
  // separable_floor_shape). The floor becomes template * (a + b x) instead
  // of a bare quadratic.
  Eigen::ArrayXd floor_shape;
};

struct SumFrequencyFit {
  double sigma = 0.0;        // rad/s
  double sigma_error = 0.0;  // rad/s
  double center = 0.0;       // rad/s
  double amplitude = 0.0;    // counts above the floor
  double floor_level = 0.0;  // counts at the center
  double residual_norm = 0.0;  // sqrt(chi2 / dof)
  double fit_half_width = 0.0;  // rad/s, half width of the fitted core
  bool deconvolved = false;
  double cavity_fwhm = 0.0;

  // Floor polynomial in powers of (x - x_ref) / x_scale, times the
  // template when one was given.
  Eigen::VectorXd floor_coeffs;
  double x_ref = 0.0;
  double x_scale = 1.0;
  Eigen::ArrayXd floor_shape;
  double shape_x0 = 0.0;
  double shape_step = 1.0;

  double floor_at(double x) const;
  // A bare polynomial is meaningless beyond the wings it was fitted on;
  // a templated floor holds over the whole projection.
  bool floor_covers(double x) const {
    if (floor_shape.size() == 0) return std::abs(x - x_ref) <= x_scale;
    const double u = (x - shape_x0) / shape_step;
    return u >= -1e-9 && u <= static_cast<double>(floor_shape.size() - 1) + 1e-9;
  }
  double peak_at(double x) const;  // fitted peak without the floor
};

// Floor: weighted quadratic (or scaled template) over the wings
// 2.5 < |x - peak| / FWHM < 5.
// Peak: Poisson-weighted Gaussian (or Voigt) fit within 2.5 FWHM.
// Throws FitFailure when no peak stands above the floor.
SumFrequencyFit fit_sum_frequency(const Eigen::ArrayXd& offset, const Eigen::ArrayXd& counts,
                                  const SumFrequencyFitOptions& options = {});
SumFrequencyFit fit_sum_frequency(const SumFrequencyProjection& projection, const SumFrequencyFitOptions& options = {});

// Unit-area Voigt profile: Gaussian (sigma) convolved with Lorentzian (HWHM gamma).
double voigt_profile(double x, double sigma, double gamma);

struct PowerSpectrum {
  Eigen::ArrayXd omega;    // rad/s, centered grid
  Eigen::ArrayXd density;  // unit area
};

struct Autocorrelation {
  Eigen::ArrayXd tau;  // s
  Eigen::ArrayXd g2;
};

// Thermal-light g2(tau) = 1 + |g1(tau)|^2 with g1 the transform of the
// unit-area spectrum. omega must be a centered power-of-two grid.
Autocorrelation autocorrelation_from_spectrum(const Eigen::ArrayXd& omega, const Eigen::ArrayXd& density);

// Inverse of the above under a zero-phase (symmetric spectrum) assumption:
// g1 = sqrt(max(g2 - 1, 0)). tau is either a centered power-of-two grid or
// a uniform one-sided grid starting at 0 (mirrored internally).
// Throws DegenerateInputError when g2 - 1 never exceeds 1e-6.
PowerSpectrum spectrum_from_autocorrelation(const Eigen::ArrayXd& tau, const Eigen::ArrayXd& g2);

double spectral_std(const Eigen::ArrayXd& omega, const Eigen::ArrayXd& density);

}  // namespace biphoton
