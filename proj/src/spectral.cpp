#include "biphoton/spectral.hpp"

#include "biphoton/errors.hpp"
#include "biphoton/fit.hpp"
#include "biphoton/fourier.hpp"
#include "biphoton/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace biphoton {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

bool is_uniform(const Eigen::ArrayXd& x, double rel_tol = 1e-9) {
  if (x.size() < 2) return false;
  const double step = (x(x.size() - 1) - x(0)) / static_cast<double>(x.size() - 1);
  if (!(step > 0.0)) return false;
  for (Eigen::Index k = 1; k < x.size(); ++k)
    if (std::abs((x(k) - x(k - 1)) - step) > rel_tol * std::max(step, std::abs(x(k)))) return false;
  return true;
}

double uniform_step(const Eigen::ArrayXd& x) { return (x(x.size() - 1) - x(0)) / static_cast<double>(x.size() - 1); }

// Anti-Stokes coordinate of the ridge point nearest (dws, dwas): the pair
// amplitude depends on the difference frequency, the pump envelope on the sum.
double ridge_point(double dws, double dwas, double center) { return 0.5 * (dwas - dws + center); }

double gaussian(double x, double sigma) {
  return std::exp(-0.5 * x * x / (sigma * sigma)) / (std::sqrt(2.0 * units::pi) * sigma);
}

// Cavity transmission integrated over fine cell j, for each scan setting q:
// K(j, q) = Integral_{cell j} T(x_q - x) dx.
Eigen::MatrixXd cell_kernel(const CavityFilter& filter, const Eigen::ArrayXd& fine, double h,
                            const Eigen::ArrayXd& scan) {
  const double g = filter.half_width();
  Eigen::MatrixXd k(fine.size(), scan.size());
  for (Eigen::Index q = 0; q < scan.size(); ++q)
    for (Eigen::Index j = 0; j < fine.size(); ++j) {
      const double d = scan(q) - fine(j);
      k(j, q) = filter.peak_transmission * g * (std::atan((d + 0.5 * h) / g) - std::atan((d - 0.5 * h) / g));
    }
  return k;
}

Eigen::ArrayXd fine_axis(const Eigen::ArrayXd& scan, double center, double reach, double h) {
  const double lo = std::min(scan(0), center - reach) - reach;
  const double hi = std::max(scan(scan.size() - 1), center + reach) + reach;
  const auto n = static_cast<Eigen::Index>(std::ceil((hi - lo) / h)) + 1;
  return Eigen::ArrayXd::LinSpaced(n, lo, lo + h * static_cast<double>(n - 1));
}

// Full width at half of `height` above `base(x)`, with linearly interpolated
// crossings on either side of ipk.
template <typename Base>
double half_max_width(const Eigen::ArrayXd& x, const Eigen::ArrayXd& v, Eigen::Index ipk, double height, Base base) {
  const Eigen::Index n = x.size();
  const auto above = [&](Eigen::Index k) { return v(k) - base(x(k)) - 0.5 * height; };
  Eigen::Index l = ipk, r = ipk;
  while (l > 0 && above(l - 1) > 0.0) --l;
  while (r < n - 1 && above(r + 1) > 0.0) ++r;
  double xl = x(l), xr = x(r);
  if (l > 0) xl = x(l - 1) + (x(l) - x(l - 1)) * (-above(l - 1)) / (above(l) - above(l - 1));
  if (r < n - 1) xr = x(r) + (x(r + 1) - x(r)) * above(r) / (above(r) - above(r + 1));
  return xr - xl;
}

}  // namespace

void CavityFilter::validate() const {
  require(std::isfinite(fwhm) && fwhm > 0.0, "cavity fwhm must be > 0");
  require(peak_transmission > 0.0 && peak_transmission <= 1.0, "cavity peak_transmission must be in (0, 1]");
  require(std::isfinite(finesse) && finesse > 0.0, "cavity finesse must be > 0");
}

double cavity_transmission(const CavityFilter& filter, double detuning) {
  filter.validate();
  const double r = detuning / filter.half_width();
  return filter.peak_transmission / (1.0 + r * r);
}

Eigen::ArrayXd cavity_transmission(const CavityFilter& filter, const Eigen::ArrayXd& detuning) {
  filter.validate();
  return filter.peak_transmission / (1.0 + (detuning / filter.half_width()).square());
}

double cavity_transmission_integral(const CavityFilter& filter, double lo, double hi) {
  filter.validate();
  const double g = filter.half_width();
  return filter.peak_transmission * g * (std::atan(hi / g) - std::atan(lo / g));
}

Eigen::ArrayXXd joint_spectral_intensity(const SourceModel& model, const Eigen::ArrayXd& dws,
                                         const Eigen::ArrayXd& dwas, JsiTerms terms) {
  model.validate();
  require(dws.size() > 0 && dwas.size() > 0, "joint_spectral_intensity: empty grid");
  const Amplitudes s = eval_amplitudes(model, dws);
  const Amplitudes as = eval_amplitudes(model, dwas);
  const Eigen::ArrayXd c2 = s.C.abs2();
  const Eigen::ArrayXd b2 = as.B.abs2();

  double sigma = model.pair_linewidth();
  if (!(sigma > 0.0)) {
    const double rs = dws.size() > 1 ? uniform_step(dws) : 0.0;
    const double ra = dwas.size() > 1 ? uniform_step(dwas) : 0.0;
    sigma = std::max(0.5 * std::min(rs > 0 ? rs : ra, ra > 0 ? ra : rs), 1e-300);
  }
  const double center = model.pair_center();
  Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(dws.size(), dwas.size());
  if (terms.entangled) {
    Eigen::ArrayXd along(dws.size() * dwas.size());
    for (Eigen::Index j = 0; j < dwas.size(); ++j)
      for (Eigen::Index i = 0; i < dws.size(); ++i) along(j * dws.size() + i) = ridge_point(dws(i), dwas(j), center);
    const Eigen::ArrayXd p2 = pair_amplitude(model, along).abs2();
    for (Eigen::Index j = 0; j < dwas.size(); ++j)
      for (Eigen::Index i = 0; i < dws.size(); ++i)
        out(i, j) += p2(j * dws.size() + i) * gaussian(dws(i) + dwas(j) - center, sigma);
  }
  if (terms.accidental) out += (c2.matrix() * b2.matrix().transpose()).array();
  return out;
}

Eigen::ArrayXd ScanConfig::axis() const {
  const auto half = static_cast<Eigen::Index>(std::llround(half_span / step));
  return Eigen::ArrayXd::LinSpaced(2 * half + 1, static_cast<double>(-half), static_cast<double>(half)) * step;
}

void ScanConfig::validate() const {
  require(std::isfinite(step) && step > 0.0, "scan step must be > 0");
  require(std::isfinite(half_span) && half_span >= step, "scan half_span must be >= step");
  require(half_span / step <= 2000.0, "scan grid too large (more than 4001 points per axis)");
  require(std::isfinite(per_point_acquisition) && per_point_acquisition > 0.0, "per_point_acquisition must be > 0");
  require(std::isfinite(coincidence_window) && coincidence_window > 0.0, "coincidence_window must be > 0");
}

void SpectralRates::validate() const {
  require(std::isfinite(pair_rate) && pair_rate >= 0.0, "pair_rate must be >= 0");
  require(std::isfinite(singles[0]) && singles[0] >= 0.0 && std::isfinite(singles[1]) && singles[1] >= 0.0,
          "singles rates must be >= 0");
  require(joint_efficiency > 0.0 && joint_efficiency <= 1.0, "joint_efficiency must be in (0, 1]");
}

ExpectedScan expected_joint_scan(const SourceModel& model, const CavityFilter& filter, const ScanConfig& scan,
                                 const SpectralRates& rates) {
  model.validate();
  filter.validate();
  scan.validate();
  rates.validate();

  ExpectedScan out;
  out.dws = scan.axis();
  out.dwas = out.dws;
  const double sigma_pc = model.pair_linewidth();
  out.ridge_width = std::max(sigma_pc, 0.5 * scan.step);
  out.ridge_clamped = sigma_pc < 0.5 * scan.step;
  if (out.ridge_clamped) out.warnings.emplace_back("pair linewidth below half a scan step; ridge clamped to step/2");
  if (scan.step < 0.1 * filter.fwhm) out.warnings.emplace_back("scan step below cavity fwhm/10 (oversampled scan)");

  // Fine tabulation: the ridge is resolved with 8 cells per sigma and the
  // spectra are covered well past the scan range.
  double h = std::min(out.ridge_width / 8.0, scan.step / 2.0);
  const double reach = 4.0 * model.single_bandwidth;
  const double center_s = model.stokes_detuning;
  const double center_as = model.anti_stokes_detuning;
  Eigen::ArrayXd xs = fine_axis(out.dws, center_s, reach, h);
  Eigen::ArrayXd xa = fine_axis(out.dwas, center_as, reach, h);
  constexpr Eigen::Index max_fine = 6000;
  if (std::max(xs.size(), xa.size()) > max_fine) {
    h *= static_cast<double>(std::max(xs.size(), xa.size())) / static_cast<double>(max_fine);
    xs = fine_axis(out.dws, center_s, reach, h);
    xa = fine_axis(out.dwas, center_as, reach, h);
    out.warnings.emplace_back("fine spectral grid coarsened to bound memory");
  }

  const Amplitudes amp_s = eval_amplitudes(model, xs);
  const Amplitudes amp_as = eval_amplitudes(model, xa);
  const Eigen::ArrayXd c2 = amp_s.C.abs2();
  const Eigen::ArrayXd b2 = amp_as.B.abs2();

  const Eigen::MatrixXd ks = cell_kernel(filter, xs, h, out.dws);
  const Eigen::MatrixXd ka = cell_kernel(filter, xa, h, out.dwas);
  const double scale = rates.joint_efficiency * scan.per_point_acquisition;
  const double pair_center = model.pair_center();

  // Entangled term as a pair-rate density on the fine grid.
  // Both fine axes share the step h, so the ridge coordinate only depends
  // on k - j and the pair amplitude is tabulated once per diagonal.
  const Eigen::Index ns = xs.size();
  Eigen::ArrayXd along(ns + xa.size() - 1);
  for (Eigen::Index d = 0; d < along.size(); ++d)
    along(d) = ridge_point(xs(ns - 1), xa(0), pair_center) + 0.5 * h * static_cast<double>(d);
  const Eigen::ArrayXd p2 = pair_amplitude(model, along).abs2();
  Eigen::MatrixXd jsi(xs.size(), xa.size());
  for (Eigen::Index k = 0; k < xa.size(); ++k)
    for (Eigen::Index j = 0; j < xs.size(); ++j)
      jsi(j, k) = p2(k - j + ns - 1) * gaussian(xs(j) + xa(k) - pair_center, out.ridge_width);
  const double mass = jsi.sum() * h * h;
  if (mass > 0.0 && rates.pair_rate > 0.0) {
    jsi *= rates.pair_rate / mass;
    const Eigen::MatrixXd half = ks.transpose() * jsi;
    out.pairs = (half * ka).array() * scale;
  } else {
    out.pairs = Eigen::ArrayXXd::Zero(out.dws.size(), out.dwas.size());
  }

  // Accidental term: independent singles, each through its own cavity.
  const double c_mass = c2.sum() * h;
  const double b_mass = b2.sum() * h;
  if (c_mass > 0.0 && b_mass > 0.0) {
    const Eigen::VectorXd fs = ks.transpose() * (c2 / c_mass).matrix();
    const Eigen::VectorXd fa = ka.transpose() * (b2 / b_mass).matrix();
    const double rate = rates.singles[0] * rates.singles[1] * scan.coincidence_window;
    out.accidentals = (fs * fa.transpose()).array() * (rate * scale);
  } else {
    out.accidentals = Eigen::ArrayXXd::Zero(out.dws.size(), out.dwas.size());
  }
  return out;
}

void JointSpectralMap::validate() const {
  require(dws.size() >= 2 && dwas.size() >= 2, "joint spectral map needs at least 2 points per axis");
  require(counts.rows() == dws.size() && counts.cols() == dwas.size(), "joint spectral map shape mismatch");
  require((counts >= 0).all(), "joint spectral map counts must be >= 0");
  if (!is_uniform(dws) || !is_uniform(dwas)) throw GeometryError("scan grids must be strictly increasing and uniform");
}

JointSpectralMap sample_joint_scan(const ExpectedScan& expected, const CavityFilter& filter, const ScanConfig& scan) {
  const Eigen::ArrayXXd mean = expected.total();
  JointSpectralMap map;
  map.dws = expected.dws;
  map.dwas = expected.dwas;
  map.counts.resize(mean.rows(), mean.cols());
  map.per_point_acquisition = scan.per_point_acquisition;
  map.coincidence_window = scan.coincidence_window;
  map.cavity = filter;
  map.seed = scan.seed;
  map.ridge_clamped = expected.ridge_clamped;
  map.warnings = expected.warnings;

  const auto rows = static_cast<std::size_t>(mean.rows());
  const std::size_t points = rows * static_cast<std::size_t>(mean.cols());
  parallel_for(points, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const auto i = static_cast<Eigen::Index>(p % rows);
      const auto j = static_cast<Eigen::Index>(p / rows);
      const double mu = mean(i, j);
      std::int64_t n = 0;
      if (mu > 0.0) {
        auto rng = substream(scan.seed, Stream::ScanPoints, p);
        n = std::poisson_distribution<std::int64_t>(mu)(rng);
      }
      map.counts(i, j) = n;
    }
  });
  return map;
}

JointSpectralMap simulate_joint_scan(const SourceModel& model, const CavityFilter& filter, const ScanConfig& scan,
                                     const SpectralRates& rates) {
  return sample_joint_scan(expected_joint_scan(model, filter, scan, rates), filter, scan);
}

Marginals project_axes(const JointSpectralMap& map) {
  map.validate();
  Marginals m;
  m.dws = map.dws;
  m.dwas = map.dwas;
  m.stokes = map.counts.rowwise().sum();
  m.anti_stokes = map.counts.colwise().sum().transpose();
  return m;
}

SumFrequencyProjection project_antidiagonal(const JointSpectralMap& map) {
  map.validate();
  if (map.dws.size() != map.dwas.size()) throw GeometryError("anti-diagonal projection needs a square map");
  const double step = uniform_step(map.dws);
  if (std::abs(uniform_step(map.dwas) - step) > 1e-9 * step)
    throw GeometryError("anti-diagonal projection needs equal steps on both axes");
  const Eigen::Index n = map.dws.size();
  SumFrequencyProjection p;
  p.offset = Eigen::ArrayXd::LinSpaced(2 * n - 1, 0.0, static_cast<double>(2 * n - 2)) * step +
             (map.dws(0) + map.dwas(0));
  p.counts = ArrayXi64::Zero(2 * n - 1);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) p.counts(i + j) += map.counts(i, j);
  return p;
}

Eigen::ArrayXd separable_floor_shape(const JointSpectralMap& map) {
  const Marginals m = project_axes(map);
  const Eigen::Index n = m.stokes.size();
  if (m.anti_stokes.size() != n) throw GeometryError("separable floor needs a square map");
  Eigen::ArrayXd c = Eigen::ArrayXd::Zero(2 * n - 1);
  for (Eigen::Index j = 0; j < n; ++j)
    c.segment(j, n) += m.stokes.cast<double>() * static_cast<double>(m.anti_stokes(j));
  const double top = c.maxCoeff();
  if (!(top > 0.0)) throw FitFailure("empty map has no floor shape");
  return c / top;
}

double SumFrequencyFit::floor_at(double x) const {
  if (floor_coeffs.size() == 0) return 0.0;
  const double p = eval_polynomial(floor_coeffs, (x - x_ref) / x_scale);
  if (floor_shape.size() == 0) return p;
  const double u = std::clamp((x - shape_x0) / shape_step, 0.0, static_cast<double>(floor_shape.size() - 1));
  const auto i = std::min(static_cast<Eigen::Index>(u), floor_shape.size() - 2);
  const double f = u - static_cast<double>(i);
  return p * ((1.0 - f) * floor_shape(i) + f * floor_shape(i + 1));
}

double SumFrequencyFit::peak_at(double x) const {
  const double d = x - center;
  if (!deconvolved) return amplitude * std::exp(-0.5 * d * d / (sigma * sigma));
  return amplitude * voigt_profile(d, sigma, cavity_fwhm) / voigt_profile(0.0, sigma, cavity_fwhm);
}

SumFrequencyFit fit_sum_frequency(const Eigen::ArrayXd& offset, const Eigen::ArrayXd& counts,
                                  const SumFrequencyFitOptions& options) {
  require(offset.size() == counts.size(), "fit_sum_frequency: offset/counts length mismatch");
  require(offset.size() >= 12, "fit_sum_frequency: fewer than 12 points");
  if (!is_uniform(offset)) throw GeometryError("fit_sum_frequency: offsets must be uniform");
  if (options.deconvolve_cavity) require(options.cavity_fwhm > 0.0, "deconvolution needs cavity_fwhm > 0");
  if (!(counts.sum() > 0.0)) throw FitFailure("sum-frequency projection is empty");

  const Eigen::Index n = offset.size();
  const double step = uniform_step(offset);
  const Eigen::ArrayXd smooth = moving_average(counts, 3);
  Eigen::Index ipk = 0;
  smooth.maxCoeff(&ipk);
  const double x_pk = offset(ipk);
  const Eigen::ArrayXd dist = (offset - x_pk).abs();

  SumFrequencyFit out;
  out.x_ref = x_pk;
  const Eigen::ArrayXd raw_w = 1.0 / counts.max(1.0);
  const bool templated = options.floor_shape.size() > 0;
  if (templated) {
    require(options.floor_shape.size() == n, "fit_sum_frequency: floor_shape length mismatch");
    require((options.floor_shape >= 0.0).all() && options.floor_shape.maxCoeff() > 0.0,
            "fit_sum_frequency: floor_shape must be non-negative and not all zero");
    out.floor_shape = options.floor_shape;
    out.shape_x0 = offset(0);
    out.shape_step = step;
  }

  // Floor and width refined together: the wings are placed from the width,
  // the width is measured above the floor.
  const double range = offset(n - 1) - offset(0);
  double fwhm = 0.0;
  {
    double lowest = smooth(ipk);
    for (Eigen::Index k = 0; k < n; ++k)
      if (dist(k) < 0.25 * range) lowest = std::min(lowest, smooth(k));
    fwhm = std::max(half_max_width(offset, smooth, ipk, smooth(ipk) - lowest, [lowest](double) { return lowest; }),
                    2.0 * step);
  }
  for (int pass = 0; pass < 4; ++pass) {
    std::vector<Eigen::Index> wing;
    for (Eigen::Index k = 0; k < n; ++k)
      if (dist(k) > 2.5 * fwhm && dist(k) < 5.0 * fwhm && (!templated || options.floor_shape(k) > 1e-9))
        wing.push_back(k);
    if (wing.size() < 4) throw FitFailure("sum-frequency projection too narrow to place the floor wings");
    out.x_scale = 5.0 * fwhm;
    Eigen::ArrayXd wx(static_cast<Eigen::Index>(wing.size())), wy(wx.size()), ww(wx.size());
    for (Eigen::Index i = 0; i < wx.size(); ++i) {
      const auto k = wing[static_cast<std::size_t>(i)];
      wx(i) = (offset(k) - x_pk) / out.x_scale;
      // y = s p(x) with weight w is p(x) = y / s with weight w s^2.
      const double sk = templated ? options.floor_shape(k) : 1.0;
      wy(i) = counts(k) / sk;
      ww(i) = raw_w(k) * sk * sk;
    }
    out.floor_coeffs = fit_polynomial(wx, wy, ww, templated ? 1 : 2);
    const double base = out.floor_at(x_pk);
    const double height = smooth(ipk) - base;
    if (!(height > 0.0)) throw FitFailure("no sum-frequency peak above the floor");
    fwhm = std::max(half_max_width(offset, smooth, ipk, height, [&out](double x) { return out.floor_at(x); }),
                    2.0 * step);
  }

  const double base = out.floor_at(x_pk);
  const double height = smooth(ipk) - base;
  if (!(height > 0.0)) throw FitFailure("no sum-frequency peak above the floor");
  if (base > 0.0 && smooth(ipk) / base < options.min_peak_to_floor)
    throw FitFailure("sum-frequency peak below " + std::to_string(options.min_peak_to_floor) + " x floor");
  if (height < 3.0 * std::sqrt(std::max(base, 1.0) / 3.0)) throw FitFailure("sum-frequency peak not significant");

  std::vector<Eigen::Index> core;
  for (Eigen::Index k = 0; k < n; ++k)
    if (dist(k) <= 2.5 * fwhm) core.push_back(k);
  if (core.size() < 5) throw FitFailure("too few points across the sum-frequency peak");
  const auto m = static_cast<Eigen::Index>(core.size());
  Eigen::ArrayXd t(m), z(m), b(m), w(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto k = core[static_cast<std::size_t>(i)];
    t(i) = (offset(k) - x_pk) / fwhm;
    b(i) = out.floor_at(offset(k));
    z(i) = counts(k) - b(i);
    w(i) = raw_w(k);
  }

  const double gamma = options.deconvolve_cavity ? options.cavity_fwhm / fwhm : 0.0;
  CurveModel shape;
  if (options.deconvolve_cavity) {
    shape = [height, gamma](double x, const Eigen::VectorXd& p) {
      const double s = std::abs(p(2));
      return height * p(0) * voigt_profile(x - p(1), s, gamma) / voigt_profile(0.0, s, gamma);
    };
  } else {
    shape = [height](double x, const Eigen::VectorXd& p) {
      const double d = (x - p(1)) / p(2);
      return height * p(0) * std::exp(-0.5 * d * d);
    };
  }
  Eigen::VectorXd p0(3);
  p0 << 1.0, 0.0, 1.0 / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  CurveFit fit = fit_curve(t, z, w, shape, p0);
  // Reweight by the fitted mean (Poisson variance) rather than the data.
  for (int pass = 0; pass < 3; ++pass) {
    for (Eigen::Index i = 0; i < m; ++i) w(i) = 1.0 / std::max(shape(t(i), fit.params) + b(i), 1.0);
    fit = fit_curve(t, z, w, shape, fit.params);
  }

  out.sigma = std::abs(fit.params(2)) * fwhm;
  // Poisson weights make the covariance absolute; a misspecified shape shows
  // up as reduced chi2 > 1 and inflates the error accordingly.
  out.sigma_error = fit.error(2) * fwhm * std::sqrt(std::max(fit.reduced_chi2(), 1.0));
  out.center = x_pk + fit.params(1) * fwhm;
  out.amplitude = height * fit.params(0);
  out.floor_level = out.floor_at(out.center);
  out.residual_norm = std::sqrt(fit.reduced_chi2());
  out.fit_half_width = 2.5 * fwhm;
  out.deconvolved = options.deconvolve_cavity;
  out.cavity_fwhm = options.deconvolve_cavity ? options.cavity_fwhm : 0.0;
  if (!(out.sigma > 0.0) || !std::isfinite(out.sigma) || !std::isfinite(out.residual_norm))
    throw ConvergenceError("sum-frequency fit returned a non-finite width");
  return out;
}

SumFrequencyFit fit_sum_frequency(const SumFrequencyProjection& projection, const SumFrequencyFitOptions& options) {
  return fit_sum_frequency(projection.offset, projection.counts.cast<double>(), options);
}

double voigt_profile(double x, double sigma, double gamma) {
  require(sigma >= 0.0 && gamma >= 0.0 && (sigma > 0.0 || gamma > 0.0), "voigt_profile: invalid widths");
  if (gamma == 0.0) return gaussian(x, sigma);
  if (sigma == 0.0) return gamma / (units::pi * (x * x + gamma * gamma));
  // (1/pi) Integral_0^inf exp(-gamma t - sigma^2 t^2 / 2) cos(x t) dt by the
  // trapezoid rule with the first endpoint correction.
  const double t_end = std::min(std::sqrt(2.0 * 46.0) / sigma, 46.0 / gamma);
  const double cycles = std::abs(x) * t_end / (2.0 * units::pi);
  const auto n = static_cast<Eigen::Index>(std::min(2.0e5, std::max(2000.0, 32.0 * cycles)));
  const double dt = t_end / static_cast<double>(n);
  double acc = 0.5;  // t = 0 term
  for (Eigen::Index k = 1; k <= n; ++k) {
    const double tk = dt * static_cast<double>(k);
    acc += std::exp(-gamma * tk - 0.5 * sigma * sigma * tk * tk) * std::cos(x * tk);
  }
  acc *= dt;
  acc -= dt * dt * gamma / 12.0;
  return acc / units::pi;
}

Autocorrelation autocorrelation_from_spectrum(const Eigen::ArrayXd& omega, const Eigen::ArrayXd& density) {
  require(omega.size() == density.size(), "autocorrelation_from_spectrum: length mismatch");
  require(is_power_of_two(omega.size()) && omega.size() >= 4, "spectrum grid must have power-of-two length");
  require(is_uniform(omega), "spectrum grid must be uniform");
  const double dw = uniform_step(omega);
  const Eigen::Index n = omega.size();
  require(std::abs(omega(n / 2)) <= 1e-9 * dw * static_cast<double>(n), "spectrum grid must be centered on zero");
  require((density >= 0.0).all(), "spectrum must be nonnegative");
  const double area = density.sum() * dw;
  if (!(area > 0.0)) throw DegenerateInputError("spectrum has zero area");

  const Eigen::ArrayXcd s = (density / area).cast<std::complex<double>>();
  const Eigen::ArrayXcd g1 = centered_to_time(s, dw) * units::two_pi;
  Autocorrelation out;
  out.tau = centered_axis(n, units::two_pi / (dw * static_cast<double>(n)));
  out.g2 = 1.0 + g1.abs2();
  return out;
}

PowerSpectrum spectrum_from_autocorrelation(const Eigen::ArrayXd& tau, const Eigen::ArrayXd& g2) {
  require(tau.size() == g2.size(), "spectrum_from_autocorrelation: length mismatch");
  require(tau.size() >= 4 && is_uniform(tau), "autocorrelation delays must be uniform");
  require(g2.allFinite(), "autocorrelation must be finite");
  const Eigen::ArrayXd g1_in = (g2 - 1.0).max(0.0).sqrt();
  if (!((g2 - 1.0).maxCoeff() > 1e-6))
    throw DegenerateInputError("g2 is flat at 1: no spectral information (coherent light)");
  const double dt = uniform_step(tau);

  Eigen::ArrayXcd g1;
  const Eigen::Index n_in = tau.size();
  if (std::abs(tau(0)) <= 1e-9 * dt) {
    // One-sided: mirror into an even centered grid.
    Eigen::Index n = 4;
    while (n < 2 * n_in) n *= 2;
    g1 = Eigen::ArrayXcd::Zero(n);
    for (Eigen::Index k = 0; k < n_in; ++k) {
      g1(n / 2 + k) = (k < n / 2) ? g1_in(k) : 0.0;
      if (k > 0 && k <= n / 2) g1(n / 2 - k) = g1_in(k);
    }
  } else {
    require(is_power_of_two(n_in) && std::abs(tau(n_in / 2)) <= 1e-9 * dt * static_cast<double>(n_in),
            "two-sided delays must form a centered power-of-two grid");
    g1 = g1_in.cast<std::complex<double>>();
  }

  const Eigen::Index n = g1.size();
  const Eigen::ArrayXd s = (centered_to_frequency(g1, dt) / units::two_pi).real().max(0.0);
  const double dw = units::two_pi / (dt * static_cast<double>(n));
  const double area = s.sum() * dw;
  if (!(area > 0.0)) throw DegenerateInputError("recovered spectrum has zero area");
  PowerSpectrum out;
  out.omega = centered_axis(n, dw);
  out.density = s / area;
  return out;
}

double spectral_std(const Eigen::ArrayXd& omega, const Eigen::ArrayXd& density) {
  require(omega.size() == density.size(), "spectral_std: length mismatch");
  const auto m = weighted_moments(omega, density);
  if (!(m.total > 0.0)) throw NoSignalError("spectral_std: zero total weight");
  return m.stddev();
}

}  // namespace biphoton
