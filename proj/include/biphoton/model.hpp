#pragma once

#include <Eigen/Dense>

#include <complex>

// Biphoton source model.
//
// Output fields follow the two-mode squeezing form
//   a_as(dw)   = A(dw) a_as,0 + B(dw) a_s,0^dagger
//   a_s^+(dw)  = C(dw) a_as,0 + D(dw) a_s,0^dagger
// with |A|^2 - |B|^2 = |D|^2 - |C|^2 = 1 enforced by construction.
//
// Fourier convention (used everywhere in this library):
//   psi(tau) = (1/2pi) Integral B(dw) D*(-dw) exp(-i dw tau) d(dw),
//   tau = t_as - t_s.
// With this sign a spectral factor 1/(a - i dw) yields a causal exp(-a tau)
// for tau > 0.
//
// Pairs conserve energy about the sum offset Sigma = delta_s + delta_as, so a
// Stokes photon at Sigma - w accompanies an anti-Stokes photon at w. The
// amplitudes are chosen with |C(Sigma - w)| = |B(w)| (equal singles rates) and
//   B(w) D*(Sigma - w) = sqrt(g) u(w - delta_as),
// the "pair amplitude". For Sigma = 0 this is B(dw) D*(-dw) in the formula above.
//
// with u one of two shapes:
//   Gaussian:      u = exp(-dw^2 / (4 sb^2))
//   LorentzianEIT: u = a exp(-dw^2 / (4 Omega^2)) / (a - i dw),  a = kappa/2
// sb is the single_bandwidth (std of |u|^2). For LorentzianEIT the Gaussian
// envelope width Omega is solved so that std(|u|^2) == sb.
namespace biphoton {

enum class ProfileKind { Gaussian, LorentzianEIT };

struct SourceModel {
  ProfileKind profile = ProfileKind::Gaussian;
  double single_bandwidth = 0.0;  // rad/s, std of |B|^2 and |C|^2
  double eit_linewidth = 0.0;     // rad/s, FWHM of the Lorentzian factor (LorentzianEIT)
  double gain_floor = 0.0;        // peak of |B D*|^2
  double pump_linewidth = 0.0;      // sigma_p, rad/s
  double coupling_linewidth = 0.0;  // sigma_c, rad/s
  double stokes_detuning = 0.0;       // rad/s
  double anti_stokes_detuning = 0.0;  // rad/s

  // sigma_pc = sqrt(sigma_p^2 + sigma_c^2)
  double pair_linewidth() const;
  // Sigma = delta_s + delta_as, center of the sum-frequency ridge.
  double pair_center() const;
  void validate() const;
};

// Gaussian-envelope width Omega for the LorentzianEIT family; throws for the
// Gaussian family.
double eit_envelope_width(const SourceModel& model);

// Closed-form std of |u|^2 for the Lorentzian x Gaussian-envelope shape.
double eit_power_std(double eit_linewidth, double envelope_width);

// gain_floor that makes the pair rate Integral |psi|^2 d(tau) equal `pair_rate`.
double gain_for_pair_rate(const SourceModel& model, double pair_rate);

// Uniform angular-frequency grid w_k = (k - n/2) * span / n, k = 0..n-1.
struct FrequencyGrid {
  Eigen::Index n_points = 1 << 14;
  double span = 0.0;  // rad/s

  double step() const { return span / static_cast<double>(n_points); }
  // Conjugate time step 2pi / span.
  double time_step() const;
  Eigen::ArrayXd samples() const;
  void validate() const;

  // n = 2^14, span = 40 x single_bandwidth.
  static FrequencyGrid for_model(const SourceModel& model);
  // Smallest power-of-two grid whose conjugate time step is <= dt and whose
  // time window is >= window, honoring the n >= 4096, span >= 20 sb rules.
  static FrequencyGrid for_time_resolution(const SourceModel& model, double dt, double window);
};

struct Amplitudes {
  Eigen::ArrayXd omega;
  Eigen::ArrayXcd A, B, C, D;
};

Amplitudes eval_amplitudes(const SourceModel& model, const FrequencyGrid& grid);
Amplitudes eval_amplitudes(const SourceModel& model, const Eigen::ArrayXd& omega);

// sqrt(g) u(w - delta_as) = B(w) D*(Sigma - w).
Eigen::ArrayXcd pair_amplitude(const SourceModel& model, const Eigen::ArrayXd& omega);

struct BiphotonWavefunction {
  Eigen::ArrayXd tau;   // s, uniform
  Eigen::ArrayXcd psi;  // 1/s
  double norm = 0.0;    // Integral |psi|^2 d(tau), pairs/s

  double step() const { return tau.size() > 1 ? tau(1) - tau(0) : 0.0; }
  Eigen::ArrayXd density() const { return psi.abs2(); }
};

BiphotonWavefunction wavefunction_from_spectrum(const SourceModel& model, const FrequencyGrid& grid);

struct RelativeTimeMoments {
  double mean = 0.0;  // s
  double std = 0.0;   // s
};

// Mean and std of tau under |psi(tau)|^2.
RelativeTimeMoments relative_time_moments(const BiphotonWavefunction& wf);

struct SinglesRates {
  double stokes = 0.0;       // R_s = (1/2pi) Integral |C|^2
  double anti_stokes = 0.0;  // R_as = (1/2pi) Integral |B|^2
};

SinglesRates singles_rates(const SourceModel& model, const FrequencyGrid& grid);

}  // namespace biphoton
