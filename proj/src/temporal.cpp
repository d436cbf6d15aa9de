#include "biphoton/temporal.hpp"

#include "biphoton/errors.hpp"
#include "biphoton/eventsim.hpp"
#include "biphoton/fit.hpp"
#include "biphoton/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace biphoton {
namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

struct TailSums {
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
};

// Exponential A exp(-(x - edge)/lambda) fitted to the floor-subtracted decay
// beyond the peak, summed over bins right of `edge` (x measured from edge).
std::optional<TailSums> exponential_tail(const Eigen::ArrayXd& x, const Eigen::ArrayXd& z, const Eigen::ArrayXd& raw,
                                         double floor, double fit_lo, double fit_hi, double edge, double bin,
                                         double fwhm) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index k = 0; k < x.size(); ++k)
    if (x(k) >= fit_lo && x(k) <= fit_hi) idx.push_back(k);
  if (idx.size() < 6) return std::nullopt;

  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::ArrayXd t(m), y(m), w(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto k = idx[static_cast<std::size_t>(i)];
    t(i) = (x(k) - edge) / fwhm;
    y(i) = z(k);
    w(i) = 1.0 / std::max(raw(k), 1.0);
  }
  const double a0 = std::max(y.head(std::min<Eigen::Index>(3, m)).mean(), 1e-3 * y.abs().maxCoeff() + 1e-12);
  const double scale = std::max(std::abs(a0), 1e-12);
  const CurveModel model = [scale](double tt, const Eigen::VectorXd& p) {
    return scale * std::exp(p(0)) * std::exp(-tt / std::exp(p(1)));
  };
  Eigen::VectorXd p0(2);
  p0 << 0.0, std::log(0.5);
  try {
    // Weights from the data bias the amplitude low at a few counts per bin;
    // reweighting by the fitted mean converges to the Poisson estimate.
    CurveFit fit = fit_curve(t, y, w, model, p0);
    for (int pass = 0; pass < 3; ++pass) {
      for (Eigen::Index i = 0; i < m; ++i) w(i) = 1.0 / std::max(model(t(i), fit.params) + floor, 0.5);
      fit = fit_curve(t, y, w, model, fit.params);
    }
    const double amp = scale * std::exp(fit.params(0));
    const double lambda = std::exp(fit.params(1)) * fwhm;
    if (!std::isfinite(amp) || !std::isfinite(lambda) || lambda > 10.0 * fwhm) return std::nullopt;
    // Geometric sums over bin centers edge + j*bin, j >= 1, relative to edge.
    const double r = std::exp(-bin / lambda);
    const double g = r / (1.0 - r);
    TailSums s;
    s.m0 = amp * g;
    s.m1 = amp * bin * r / ((1.0 - r) * (1.0 - r));
    s.m2 = amp * bin * bin * r * (1.0 + r) / std::pow(1.0 - r, 3);
    return s;
  } catch (const Error&) {
    return std::nullopt;
  }
}

struct Estimate {
  double mean = 0.0;
  double std = 0.0;
  double floor = 0.0;
  double peak = 0.0;
  double fwhm = 0.0;
};

Estimate estimate_moments(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y, const TemporalStdOptions& opt) {
  const Eigen::Index n = x.size();
  if (n < 10) throw NoSignalError("temporal_std: fewer than 10 bins");
  const double bin = x(1) - x(0);
  const Eigen::ArrayXd s = moving_average(y, opt.smoothing_bins);
  Eigen::Index ipk = 0;
  s.maxCoeff(&ipk);

  const double guess_floor = opt.floor_subtract ? median(y) : 0.0;
  const auto significant = [&](double base) {
    return s(ipk) - base >= 5.0 * std::sqrt(std::max(base, 1.0) / std::max(opt.smoothing_bins, 1));
  };
  if (opt.floor_subtract && !significant(guess_floor)) throw NoSignalError("no coincidence peak above the median level");
  const double half = guess_floor + 0.5 * (s(ipk) - guess_floor);
  // Half-max crossings, stepping over dips shorter than the width found so
  // far so that a noisy bin near the top does not end the walk.
  const auto outermost = [&](int dir) {
    Eigen::Index last = ipk, k = ipk;
    while (true) {
      k += dir;
      if (k < 0 || k >= n) break;
      if (s(k) > half) last = k;
      else if (std::abs(k - last) > std::max<Eigen::Index>(3, std::abs(last - ipk))) break;
    }
    const Eigen::Index out = last + dir;
    if (out < 0 || out >= n) return static_cast<double>(last);
    return static_cast<double>(last) + dir * (s(last) - half) / (s(last) - s(out));
  };
  Estimate e;
  e.fwhm = std::max((outermost(1) - outermost(-1)) * bin, bin);
  const double x_pk = x(ipk);

  if (opt.floor_subtract) {
    double acc = 0.0;
    Eigen::Index cnt = 0;
    for (Eigen::Index k = 0; k < n; ++k)
      if (std::abs(x(k) - x_pk) > opt.wing_factor * e.fwhm) {
        acc += y(k);
        ++cnt;
      }
    if (cnt < 10) throw ValidationError("histogram range too narrow to estimate the accidental floor");
    e.floor = acc / static_cast<double>(cnt);
    if (!significant(e.floor)) throw NoSignalError("no coincidence peak above the accidental floor");
  } else if (!(s(ipk) > 0.0)) {
    throw NoSignalError("curve has no positive peak");
  }
  e.peak = s(ipk);

  const Eigen::ArrayXd z = y - e.floor;
  if ((z > 0.0).count() < 10) throw NoSignalError("fewer than 10 bins above the floor");

  // Moments about x_pk to avoid cancellation.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  if (opt.estimator == MomentEstimator::FullRange) {
    const Eigen::ArrayXd d = x - x_pk;
    s0 = z.sum();
    s1 = (d * z).sum();
    s2 = (d * d * z).sum();
  } else {
    const double lo = x_pk - 2.0 * e.fwhm;
    const double hi = x_pk + 2.0 * e.fwhm;
    double edge = x_pk;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (x(k) < lo || x(k) > hi) continue;
      const double d = x(k) - x_pk;
      s0 += z(k);
      s1 += d * z(k);
      s2 += d * d * z(k);
      edge = x(k);
    }
    if (const auto tail = exponential_tail(x, z, y, e.floor, x_pk + e.fwhm, x_pk + 5.0 * e.fwhm, edge, bin, e.fwhm)) {
      const double c = edge - x_pk;
      s0 += tail->m0;
      s1 += c * tail->m0 + tail->m1;
      s2 += c * c * tail->m0 + 2.0 * c * tail->m1 + tail->m2;
    }
  }
  if (!(s0 > 0.0)) throw NoSignalError("nonpositive signal after floor subtraction");
  const double mean_rel = s1 / s0;
  const double var = s2 / s0 - mean_rel * mean_rel;
  if (!(var > 0.0)) throw NoSignalError("nonpositive variance after floor subtraction");
  e.mean = x_pk + mean_rel;
  e.std = std::sqrt(var);
  return e;
}

// Multinomial resample of the histogram (equivalent to redrawing events).
Eigen::ArrayXd resample(const ArrayXi64& counts, std::mt19937_64& rng) {
  std::int64_t remaining = counts.sum();
  double mass_left = static_cast<double>(remaining);
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(counts.size());
  for (Eigen::Index k = 0; k < counts.size() && remaining > 0; ++k) {
    const double c = static_cast<double>(counts(k));
    if (c <= 0.0) continue;
    const double p = std::min(1.0, c / mass_left);
    std::binomial_distribution<std::int64_t> draw(remaining, p);
    const std::int64_t v = draw(rng);
    out(k) = static_cast<double>(v);
    remaining -= v;
    mass_left -= c;
  }
  return out;
}

}  // namespace

void CoincidenceHistogram::validate() const {
  require(std::isfinite(bin_width) && bin_width > 0.0, "histogram bin_width must be > 0");
  require(tau.size() == counts.size(), "histogram tau/counts length mismatch");
  require((counts >= 0).all(), "histogram counts must be >= 0");
  require(detection_efficiency > 0.0 && detection_efficiency <= 1.0, "detection efficiency must be in (0, 1]");
}

double CoincidenceHistogram::accidental_floor() const {
  if (!has_singles()) return nan;
  return static_cast<double>(stokes_singles) * static_cast<double>(anti_stokes_singles) * bin_width / live_time;
}

CoincidenceHistogram& CoincidenceHistogram::operator+=(const CoincidenceHistogram& other) {
  if (other.tau.size() != tau.size() || other.bin_width != bin_width)
    throw ValidationError("cannot merge histograms with different binning");
  counts += other.counts;
  acquisition_time += other.acquisition_time;
  live_time += other.live_time;
  stokes_singles += other.stokes_singles;
  anti_stokes_singles += other.anti_stokes_singles;
  return *this;
}

Eigen::ArrayXd bin_centers(double bin_width, double max_delay) {
  require(bin_width > 0.0 && max_delay >= 0.0, "bin_centers: invalid bin width or range");
  const auto half = static_cast<Eigen::Index>(std::floor(max_delay / bin_width + 1e-9));
  return Eigen::ArrayXd::LinSpaced(2 * half + 1, static_cast<double>(-half), static_cast<double>(half)) * bin_width;
}

Eigen::ArrayXd expected_coincidence_curve(const BiphotonWavefunction& wf, double rate_s, double rate_as, double eta,
                                          double acquisition_time, double bin_width, const Eigen::ArrayXd& centers) {
  require(rate_s >= 0.0 && rate_as >= 0.0, "singles rates must be >= 0");
  require(eta > 0.0 && eta <= 1.0, "eta must be in (0, 1]");
  require(acquisition_time > 0.0 && bin_width > 0.0, "acquisition time and bin width must be > 0");
  require(wf.tau.size() >= 2 && wf.norm > 0.0, "wavefunction must be normalized");

  // Cumulative |psi|^2 at the cell edges of the wavefunction grid.
  const Eigen::ArrayXd density = wf.density();
  const double dt = wf.step();
  Eigen::ArrayXd cum(density.size() + 1);
  cum(0) = 0.0;
  for (Eigen::Index k = 0; k < density.size(); ++k) cum(k + 1) = cum(k) + density(k) * dt;
  const double first_edge = wf.tau(0) - 0.5 * dt;
  const auto cumulative_at = [&](double t) {
    const double u = (t - first_edge) / dt;
    if (u <= 0.0) return 0.0;
    if (u >= static_cast<double>(density.size())) return cum(density.size());
    const auto k = static_cast<Eigen::Index>(u);
    return cum(k) + (u - static_cast<double>(k)) * (cum(k + 1) - cum(k));
  };

  const double total = cum(density.size());
  const double* b = cum.data();
  const double* e = b + cum.size();
  const auto lo_idx = std::lower_bound(b, e, 5e-4 * total) - b;
  const auto hi_idx = std::lower_bound(b, e, (1.0 - 5e-4) * total) - b;
  const double support = static_cast<double>(hi_idx - lo_idx) * dt;
  if (bin_width > support) throw AliasingError("bin width exceeds the wavefunction support");

  Eigen::ArrayXd out(centers.size());
  const double floor_rate = rate_s * rate_as * bin_width;
  for (Eigen::Index k = 0; k < centers.size(); ++k) {
    const double pairs = cumulative_at(centers(k) + 0.5 * bin_width) - cumulative_at(centers(k) - 0.5 * bin_width);
    out(k) = eta * acquisition_time * (pairs + floor_rate);
  }
  return out;
}

TemporalStats temporal_std(const Eigen::ArrayXd& tau, const Eigen::ArrayXd& values, const TemporalStdOptions& options) {
  require(tau.size() == values.size(), "tau/values length mismatch");
  const Estimate e = estimate_moments(tau, values, options);
  TemporalStats st;
  st.mean_delay = e.mean;
  st.std = e.std;
  st.floor_level = e.floor;
  st.fwhm = e.fwhm;
  st.peak_g2 = e.floor > 0.0 ? e.peak / e.floor : std::numeric_limits<double>::infinity();
  return st;
}

TemporalStats temporal_std(const CoincidenceHistogram& hist, const TemporalStdOptions& options) {
  hist.validate();
  const Eigen::ArrayXd y = hist.counts.cast<double>();
  const Estimate e = estimate_moments(hist.tau, y, options);

  TemporalStats st;
  st.mean_delay = e.mean;
  st.std = e.std;
  st.floor_level = e.floor;
  st.fwhm = e.fwhm;
  const double norm = hist.has_singles() ? hist.accidental_floor() : e.floor;
  st.peak_g2 = norm > 0.0 ? e.peak / norm : std::numeric_limits<double>::infinity();

  const int n_boot = std::max(options.bootstrap_resamples, 0);
  if (n_boot > 0) {
    std::vector<double> stds(static_cast<std::size_t>(n_boot), nan);
    parallel_for(stds.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t r = begin; r < end; ++r) {
        auto rng = substream(options.seed, Stream::Bootstrap, r);
        try {
          stds[r] = estimate_moments(hist.tau, resample(hist.counts, rng), options).std;
        } catch (const Error&) {
        }
      }
    });
    std::vector<double> ok;
    for (double v : stds)
      if (std::isfinite(v)) ok.push_back(v);
    st.bootstrap_used = static_cast<int>(ok.size());
    if (ok.size() >= 2 && 2 * ok.size() >= stds.size()) {
      const Eigen::Map<const Eigen::ArrayXd> v(ok.data(), static_cast<Eigen::Index>(ok.size()));
      st.std_error = std::sqrt((v - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
    } else {
      st.std_error = nan;
    }
  }
  return st;
}

Eigen::ArrayXd cross_correlation_g2(const CoincidenceHistogram& hist, double rate_s, double rate_as, double eta,
                                    double acquisition_time, double bin_width) {
  if (!(rate_s > 0.0) || !(rate_as > 0.0)) throw ValidationError("cross_correlation_g2: singles rates must be > 0");
  require(eta > 0.0 && acquisition_time > 0.0 && bin_width > 0.0, "cross_correlation_g2: invalid normalization");
  return hist.counts.cast<double>() / (eta * rate_s * rate_as * acquisition_time * bin_width);
}

Eigen::ArrayXd cross_correlation_g2(const CoincidenceHistogram& hist) {
  if (!hist.has_singles()) throw ValidationError("cross_correlation_g2: histogram carries no singles counts");
  return hist.counts.cast<double>() / hist.accidental_floor();
}

double smoothed_peak(const Eigen::ArrayXd& values, int smoothing_bins) {
  if (values.size() == 0) return nan;
  return moving_average(values, smoothing_bins).maxCoeff();
}

double cauchy_schwarz_factor(double g2_cross_peak, double g2_ss0, double g2_asas0) {
  if (!(g2_cross_peak > 0.0) || !(g2_ss0 > 0.0) || !(g2_asas0 > 0.0))
    throw ValidationError("cauchy_schwarz_factor: inputs must be > 0");
  return g2_cross_peak * g2_cross_peak / (g2_ss0 * g2_asas0);
}

std::vector<HeraldedPoint> conditional_autocorrelation(const EventStream& stream, Channel herald,
                                                       const std::vector<double>& windows, std::uint64_t seed) {
  require(!windows.empty(), "conditional_autocorrelation: no windows given");
  for (double w : windows) require(std::isfinite(w) && w > 0.0, "conditional_autocorrelation: windows must be > 0");
  const Channel signal = herald == Channel::Stokes ? Channel::AntiStokes : Channel::Stokes;
  const auto heralds = stream.times(herald);
  if (heralds.empty()) throw InsufficientDataError("conditional_autocorrelation: no herald events");
  const auto sig = stream.times(signal);

  // 50/50 routing in stream order, so a global time shift changes nothing.
  auto rng = substream(seed, Stream::BeamSplitter, 0);
  std::vector<std::uint8_t> arm(sig.size());
  for (auto& a : arm) a = static_cast<std::uint8_t>(rng() >> 63);

  std::vector<double> win_ns(windows.size());
  std::transform(windows.begin(), windows.end(), win_ns.begin(), [](double w) { return w * 1e9; });
  const double reach = *std::max_element(win_ns.begin(), win_ns.end());

  std::vector<HeraldedPoint> out(windows.size());
  for (std::size_t w = 0; w < windows.size(); ++w) {
    out[w].window = windows[w];
    out[w].heralds = static_cast<std::int64_t>(heralds.size());
  }
  constexpr double none = std::numeric_limits<double>::infinity();
  std::size_t lo = 0;
  for (const std::int64_t th : heralds) {
    while (lo < sig.size() && sig[lo] < th) ++lo;
    double d1 = none, d2 = none;
    for (std::size_t j = lo; j < sig.size(); ++j) {
      const double d = static_cast<double>(sig[j] - th);
      if (d > reach) break;
      double& slot = arm[j] == 0 ? d1 : d2;
      if (slot == none) slot = d;
      if (d1 != none && d2 != none) break;
    }
    if (d1 == none && d2 == none) continue;
    for (std::size_t w = 0; w < windows.size(); ++w) {
      const bool h1 = d1 <= win_ns[w];
      const bool h2 = d2 <= win_ns[w];
      out[w].arm1 += h1;
      out[w].arm2 += h2;
      out[w].both += h1 && h2;
    }
  }
  for (auto& p : out) {
    const double denom = static_cast<double>(p.arm1) * static_cast<double>(p.arm2);
    p.g2c = denom > 0.0 ? static_cast<double>(p.heralds) * static_cast<double>(p.both) / denom : nan;
  }
  return out;
}

}  // namespace biphoton
