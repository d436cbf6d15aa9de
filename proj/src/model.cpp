#include "biphoton/model.hpp"

#include "biphoton/errors.hpp"
#include "biphoton/fourier.hpp"
#include "biphoton/numeric.hpp"
#include "biphoton/units.hpp"

#include <cmath>
#include <string>

namespace biphoton {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

// |u|^2 integral and shape evaluation, detuning excluded.
struct Shape {
  ProfileKind kind;
  double bandwidth;  // Gaussian sb
  double half_width; // a = kappa / 2
  double envelope;   // Omega

  std::complex<double> operator()(double w) const {
    if (kind == ProfileKind::Gaussian) return {std::exp(-w * w / (4.0 * bandwidth * bandwidth)), 0.0};
    const double env = std::exp(-w * w / (4.0 * envelope * envelope));
    return half_width * env / std::complex<double>(half_width, -w);
  }

  double power_integral() const {
    if (kind == ProfileKind::Gaussian) return std::sqrt(2.0 * units::pi) * bandwidth;
    return units::pi * half_width * erfcx(half_width / (std::sqrt(2.0) * envelope));
  }
};

Shape make_shape(const SourceModel& model) {
  model.validate();
  Shape s{model.profile, model.single_bandwidth, 0.5 * model.eit_linewidth, 0.0};
  if (model.profile == ProfileKind::LorentzianEIT) s.envelope = eit_envelope_width(model);
  return s;
}

}  // namespace

double SourceModel::pair_linewidth() const { return std::hypot(pump_linewidth, coupling_linewidth); }

double SourceModel::pair_center() const { return stokes_detuning + anti_stokes_detuning; }

void SourceModel::validate() const {
  require(std::isfinite(single_bandwidth) && single_bandwidth > 0.0, "single_bandwidth must be > 0");
  require(finite_nonneg(gain_floor), "gain_floor must be >= 0");
  require(finite_nonneg(pump_linewidth), "pump_linewidth must be >= 0");
  require(finite_nonneg(coupling_linewidth), "coupling_linewidth must be >= 0");
  require(std::isfinite(stokes_detuning) && std::isfinite(anti_stokes_detuning), "central detunings must be finite");
  if (profile == ProfileKind::LorentzianEIT)
    require(std::isfinite(eit_linewidth) && eit_linewidth > 0.0, "eit_linewidth must be > 0 for the LorentzianEIT profile");
}

double eit_power_std(double eit_linewidth, double envelope_width) {
  const double a = 0.5 * eit_linewidth;
  const double x = a / (std::sqrt(2.0) * envelope_width);
  // I0 = (pi/a) erfcx(x), I2 = sqrt(2 pi) Omega - a^2 I0, var = I2 / I0
  const double var = std::sqrt(2.0 * units::pi) * envelope_width * a / (units::pi * erfcx(x)) - a * a;
  return std::sqrt(std::max(var, 0.0));
}

double eit_envelope_width(const SourceModel& model) {
  if (model.profile != ProfileKind::LorentzianEIT) throw ValidationError("envelope width is defined for LorentzianEIT only");
  const double sb = model.single_bandwidth;
  const double kappa = model.eit_linewidth;
  // std grows monotonically with Omega, from ~Omega (narrow envelope) to infinity.
  double lo = 1e-3 * sb;
  double hi = sb;
  while (eit_power_std(kappa, hi) < sb) hi *= 2.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    const double mid = std::sqrt(lo * hi);
    (eit_power_std(kappa, mid) < sb ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double gain_for_pair_rate(const SourceModel& model, double pair_rate) {
  require(finite_nonneg(pair_rate), "pair_rate must be >= 0");
  const Shape s = make_shape(model);
  return units::two_pi * pair_rate / s.power_integral();
}

double FrequencyGrid::time_step() const { return units::two_pi / span; }

Eigen::ArrayXd FrequencyGrid::samples() const { return centered_axis(n_points, step()); }

void FrequencyGrid::validate() const {
  require(is_power_of_two(n_points) && n_points >= 4096, "grid n_points must be a power of two >= 4096");
  require(std::isfinite(span) && span > 0.0, "grid span must be > 0");
}

FrequencyGrid FrequencyGrid::for_model(const SourceModel& model) {
  model.validate();
  return FrequencyGrid{1 << 14, 40.0 * model.single_bandwidth};
}

FrequencyGrid FrequencyGrid::for_time_resolution(const SourceModel& model, double dt, double window) {
  model.validate();
  require(dt > 0.0 && window > 0.0, "time resolution and window must be > 0");
  FrequencyGrid g;
  g.span = std::max(units::two_pi / dt, 40.0 * model.single_bandwidth);
  Eigen::Index n = 4096;
  while (static_cast<double>(n) * g.time_step() < window) n *= 2;
  g.n_points = n;
  return g;
}

Eigen::ArrayXcd pair_amplitude(const SourceModel& model, const Eigen::ArrayXd& omega) {
  const Shape s = make_shape(model);
  const double amp = std::sqrt(model.gain_floor);
  Eigen::ArrayXcd out(omega.size());
  for (Eigen::Index k = 0; k < omega.size(); ++k) out(k) = amp * s(omega(k) - model.anti_stokes_detuning);
  return out;
}

Amplitudes eval_amplitudes(const SourceModel& model, const Eigen::ArrayXd& omega) {
  const Shape s = make_shape(model);
  const double g = model.gain_floor;
  // |B|^2 (1 + |B|^2) = g |u|^2, solved in the cancellation-free form.
  const auto occupation = [g](double u2) {
    const double x = g * u2;
    return 2.0 * x / (1.0 + std::sqrt(1.0 + 4.0 * x));
  };
  Amplitudes out;
  out.omega = omega;
  const Eigen::Index n = omega.size();
  out.A.resize(n);
  out.B.resize(n);
  out.C.resize(n);
  out.D.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double w = omega(k);
    const std::complex<double> ua = s(w - model.anti_stokes_detuning);
    const double mag = std::abs(ua);
    const double b2 = occupation(mag * mag);
    const double c2 = occupation(std::norm(s(model.stokes_detuning - w)));
    out.B(k) = mag > 0.0 ? ua / mag * std::sqrt(b2) : std::complex<double>(0.0, 0.0);
    out.C(k) = std::sqrt(c2);
    out.D(k) = std::sqrt(1.0 + c2);
    out.A(k) = std::sqrt(1.0 + b2);
  }
  return out;
}

Amplitudes eval_amplitudes(const SourceModel& model, const FrequencyGrid& grid) {
  grid.validate();
  return eval_amplitudes(model, grid.samples());
}

BiphotonWavefunction wavefunction_from_spectrum(const SourceModel& model, const FrequencyGrid& grid) {
  model.validate();
  grid.validate();
  if (grid.span < 20.0 * model.single_bandwidth)
    throw ResolutionError("frequency grid span must be >= 20 x single_bandwidth");
  const Eigen::ArrayXd omega = grid.samples();
  const Amplitudes amp = eval_amplitudes(model, omega);
  const Amplitudes mirror = eval_amplitudes(model, Eigen::ArrayXd(model.pair_center() - omega));
  const Eigen::ArrayXcd product = amp.B * mirror.D.conjugate();

  BiphotonWavefunction wf;
  wf.psi = centered_to_time(product, grid.step());
  wf.tau = centered_axis(grid.n_points, grid.time_step());
  wf.norm = wf.psi.abs2().sum() * grid.time_step();
  return wf;
}

RelativeTimeMoments relative_time_moments(const BiphotonWavefunction& wf) {
  const auto m = weighted_moments(wf.tau, wf.density());
  if (!(m.total > 0.0)) throw NoSignalError("wavefunction has zero norm");
  return {m.mean, m.stddev()};
}

SinglesRates singles_rates(const SourceModel& model, const FrequencyGrid& grid) {
  const Amplitudes amp = eval_amplitudes(model, grid);
  const double scale = grid.step() / units::two_pi;
  return {scale * amp.C.abs2().sum(), scale * amp.B.abs2().sum()};
}

}  // namespace biphoton
