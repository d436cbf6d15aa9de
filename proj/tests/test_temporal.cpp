#include "biphoton/errors.hpp"
#include "biphoton/eventsim.hpp"
#include "biphoton/temporal.hpp"
#include "biphoton/units.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace biphoton;

namespace {

BiphotonWavefunction tabulated(const Eigen::ArrayXd& tau, const Eigen::ArrayXd& density) {
  BiphotonWavefunction wf;
  wf.tau = tau;
  wf.psi = density.sqrt().cast<std::complex<double>>();
  wf.norm = density.sum() * wf.step();
  return wf;
}

EventStream stream_of(std::vector<DetectionEvent> events, double run_length) {
  EventStream s;
  s.events = std::move(events);
  std::sort(s.events.begin(), s.events.end());
  s.duty = DutyCycle{run_length, run_length};
  s.run_length = run_length;
  return s;
}

// Histogram from expected counts, rounded; no noise.
CoincidenceHistogram histogram_from(const Eigen::ArrayXd& tau, const Eigen::ArrayXd& counts, double bin) {
  CoincidenceHistogram h;
  h.bin_width = bin;
  h.tau = tau;
  h.counts = counts.round().cast<std::int64_t>();
  h.acquisition_time = 1.0;
  h.live_time = 1.0;
  return h;
}

}  // namespace

TEST_CASE("temporal_std on exact curves") {
  SUBCASE("Gaussian, std 30 ns") {
    const Eigen::ArrayXd tau = bin_centers(0.1e-9, 400e-9);
    const Eigen::ArrayXd v = (-0.5 * (tau - 20e-9).square() / (30e-9 * 30e-9)).exp();
    const TemporalStats s = temporal_std(tau, v);
    CHECK(s.std == doctest::Approx(30e-9).epsilon(1e-3));
    CHECK(s.mean_delay == doctest::Approx(20e-9).epsilon(1e-3));
    CHECK(s.std_error == 0.0);
  }
  SUBCASE("one-sided exponential, 50 ns") {
    const double dt = 0.05e-9;
    const Eigen::ArrayXd tau = bin_centers(dt, 2e-6);
    // cell averages of exp(-t/50ns) on [t - dt/2, t + dt/2] intersected with t >= 0
    Eigen::ArrayXd v(tau.size());
    for (Eigen::Index k = 0; k < tau.size(); ++k) {
      const double lo = std::max(tau(k) - dt / 2, 0.0), hi = tau(k) + dt / 2;
      v(k) = hi > lo ? 50e-9 * (std::exp(-lo / 50e-9) - std::exp(-hi / 50e-9)) / dt : 0.0;
    }
    const TemporalStats s = temporal_std(tau, v);
    CHECK(s.mean_delay == doctest::Approx(50e-9).epsilon(2e-3));
    CHECK(s.std == doctest::Approx(50e-9).epsilon(2e-3));
  }
  SUBCASE("flat input has no peak") {
    const Eigen::ArrayXd tau = bin_centers(1e-9, 1e-6);
    const CoincidenceHistogram h = histogram_from(tau, Eigen::ArrayXd::Constant(tau.size(), 40.0), 1e-9);
    TemporalStdOptions o;
    o.bootstrap_resamples = 10;
    CHECK_THROWS_AS(temporal_std(h, o), NoSignalError);
  }
}

TEST_CASE("tail-corrected estimator on a noiseless exponential with floor") {
  const double bin = 1e-9;
  const Eigen::ArrayXd tau = bin_centers(bin, 1.5e-6);
  // g2 peak about 16, as in the reference data
  Eigen::ArrayXd v = Eigen::ArrayXd::Constant(tau.size(), 500.0);
  for (Eigen::Index k = 0; k < tau.size(); ++k)
    if (tau(k) >= 0) v(k) += 7500.0 * std::exp(-tau(k) / 60e-9);
  TemporalStdOptions o;
  o.bootstrap_resamples = 0;
  const TemporalStats s = temporal_std(histogram_from(tau, v, bin), o);
  CHECK(s.std == doctest::Approx(60e-9).epsilon(0.02));
  CHECK(s.floor_level == doctest::Approx(500.0).epsilon(0.02));
}

TEST_CASE("expected coincidence curve") {
  const double bin = 1e-9;
  const Eigen::ArrayXd fine = bin_centers(0.1e-9, 2e-6);
  SUBCASE("uniform |psi|^2 gives equal bins") {
    const Eigen::ArrayXd density = (fine.abs() <= 100e-9).cast<double>() * 1e7;
    const BiphotonWavefunction wf = tabulated(fine, density);
    const Eigen::ArrayXd centers = bin_centers(bin, 80e-9);
    const Eigen::ArrayXd c = expected_coincidence_curve(wf, 0.0, 0.0, 1.0, 1.0, bin, centers);
    CHECK((c - c(0)).abs().maxCoeff() <= 1e-12 * c(0));
  }
  SUBCASE("no accidentals means the curve follows |psi|^2") {
    const Eigen::ArrayXd density = (-0.5 * fine.square() / (30e-9 * 30e-9)).exp() * 1e6;
    const BiphotonWavefunction wf = tabulated(fine, density);
    const Eigen::ArrayXd centers = bin_centers(bin, 1e-6);
    const Eigen::ArrayXd c = expected_coincidence_curve(wf, 0.0, 0.0, 0.5, 10.0, bin, centers);
    CHECK(c(0) < 1e-12 * c.maxCoeff());
    CHECK(c.sum() == doctest::Approx(0.5 * 10.0 * wf.norm).epsilon(1e-6));
    CHECK(temporal_std(centers, c).std == doctest::Approx(30e-9).epsilon(2e-3));
  }
  SUBCASE("floor is eta R_s R_as DeltaT t_bin") {
    const Eigen::ArrayXd density = (-0.5 * fine.square() / (30e-9 * 30e-9)).exp();
    const BiphotonWavefunction wf = tabulated(fine, density);
    const Eigen::ArrayXd centers = bin_centers(bin, 1e-6);
    const Eigen::ArrayXd c = expected_coincidence_curve(wf, 2e4, 3e4, 0.034, 60.0, bin, centers);
    CHECK(c(0) == doctest::Approx(0.034 * 2e4 * 3e4 * 60.0 * bin));
  }
  SUBCASE("reference statistics give about 6.3e3 true pairs") {
    const Eigen::ArrayXd density = (-0.5 * fine.square() / (60e-9 * 60e-9)).exp();
    BiphotonWavefunction wf = tabulated(fine, density);
    wf.psi *= std::sqrt(3088.0 / wf.norm);
    wf.norm = 3088.0;
    const Eigen::ArrayXd centers = bin_centers(bin, 1e-6);
    const double total = expected_coincidence_curve(wf, 0.0, 0.0, 0.034, 60.0, bin, centers).sum();
    CHECK(total == doctest::Approx(3088.0 * 0.034 * 60.0).epsilon(1e-3));
  }
  SUBCASE("bins wider than the signal alias") {
    const Eigen::ArrayXd density = (-0.5 * fine.square() / (1e-9 * 1e-9)).exp();
    const BiphotonWavefunction wf = tabulated(fine, density);
    CHECK_THROWS_AS(expected_coincidence_curve(wf, 0, 0, 1, 1, 50e-9, bin_centers(50e-9, 1e-6)), AliasingError);
  }
}

TEST_CASE("cross-correlation normalization") {
  const double bin = 1e-9;
  const Eigen::ArrayXd tau = bin_centers(bin, 1e-6);
  const double rs = 2e4, ras = 2e4, eta = 0.034, dT = 60.0;
  const double floor = eta * rs * ras * dT * bin;
  Eigen::ArrayXd v = Eigen::ArrayXd::Constant(tau.size(), floor);
  v(tau.size() / 2) = 15.8 * floor;
  CoincidenceHistogram h = histogram_from(tau, v * 1000.0, bin);
  const Eigen::ArrayXd g2 = cross_correlation_g2(h, rs, ras, eta, dT * 1000.0, bin);
  CHECK(g2(0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(g2(tau.size() / 2) == doctest::Approx(15.8).epsilon(1e-3));
  CHECK_THROWS_AS(cross_correlation_g2(h, 0.0, ras, eta, dT, bin), ValidationError);
}

TEST_CASE("Cauchy-Schwarz factor") {
  CHECK(cauchy_schwarz_factor(15.8, 2.0, 2.0) == doctest::Approx(62.41));
  CHECK(cauchy_schwarz_factor(2.0, 2.0, 2.0) == 1.0);
  CHECK(cauchy_schwarz_factor(1.0, 2.0, 2.0) == 0.25);
  for (double p : {1.3, 7.0, 40.0}) CHECK(cauchy_schwarz_factor(p, 2.0, 2.0) == p * p / 4.0);
  CHECK_THROWS_AS(cauchy_schwarz_factor(15.8, 0.0, 2.0), ValidationError);
  CHECK_THROWS_AS(cauchy_schwarz_factor(-1.0, 2.0, 2.0), ValidationError);
}

TEST_CASE("histogram merge is bin-wise and commutative") {
  const Eigen::ArrayXd tau = bin_centers(1e-9, 50e-9);
  CoincidenceHistogram a = histogram_from(tau, Eigen::ArrayXd::LinSpaced(tau.size(), 0, 100), 1e-9);
  CoincidenceHistogram b = histogram_from(tau, Eigen::ArrayXd::LinSpaced(tau.size(), 7, 3), 1e-9);
  a.stokes_singles = 4;
  b.stokes_singles = 6;
  CoincidenceHistogram ab = a, ba = b;
  ab += b;
  ba += a;
  CHECK((ab.counts == ba.counts).all());
  CHECK((ab.counts == a.counts + b.counts).all());
  CHECK(ab.stokes_singles == 10);
  CHECK(ab.acquisition_time == 2.0);
  CoincidenceHistogram c = histogram_from(bin_centers(2e-9, 50e-9), Eigen::ArrayXd::Zero(51), 2e-9);
  CHECK_THROWS_AS(a += c, ValidationError);
}

TEST_CASE("conditional autocorrelation") {
  const std::vector<double> windows{20e-9, 100e-9, 300e-9};
  SUBCASE("pure pairs give zero") {
    std::vector<DetectionEvent> ev;
    for (int i = 0; i < 20000; ++i) {
      ev.push_back({i * 5000LL, Channel::Stokes});
      ev.push_back({i * 5000LL + 10, Channel::AntiStokes});
    }
    for (const auto& p : conditional_autocorrelation(stream_of(ev, 1e-4 * 20000), Channel::Stokes, windows, 3)) {
      CHECK(p.g2c == 0.0);
      CHECK(p.both == 0);
      CHECK(p.heralds == 20000);
    }
  }
  SUBCASE("uncorrelated Poisson streams give one") {
    // direct-counting oracle: independent arms, so P(both) = P(1) P(2)
    std::mt19937_64 rng(11);
    std::exponential_distribution<double> gap_h(1.0 / 4000.0), gap_s(1.0 / 300.0);
    std::vector<DetectionEvent> ev;
    const double stop = 4e9;
    for (double t = gap_h(rng); t < stop; t += gap_h(rng)) ev.push_back({static_cast<std::int64_t>(t), Channel::Stokes});
    for (double t = gap_s(rng); t < stop; t += gap_s(rng))
      ev.push_back({static_cast<std::int64_t>(t), Channel::AntiStokes});
    const auto pts = conditional_autocorrelation(stream_of(ev, stop * 1e-9), Channel::Stokes, windows, 5);
    for (const auto& p : pts) {
      const double err = p.g2c * std::sqrt(1.0 / p.both + 1.0 / p.arm1 + 1.0 / p.arm2);
      CHECK(std::abs(p.g2c - 1.0) < 4.0 * err);
    }
  }
  SUBCASE("translation invariance") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::int64_t> t(0, 50'000'000);
    std::vector<DetectionEvent> ev, shifted;
    for (int i = 0; i < 60000; ++i) ev.push_back({t(rng), i % 3 ? Channel::AntiStokes : Channel::Stokes});
    for (auto e : ev) shifted.push_back({e.t_ns + 123457, e.channel});
    const auto a = conditional_autocorrelation(stream_of(ev, 0.06), Channel::Stokes, windows, 9);
    const auto b = conditional_autocorrelation(stream_of(shifted, 0.06), Channel::Stokes, windows, 9);
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].both == b[k].both);
      CHECK(a[k].arm1 == b[k].arm1);
      CHECK(a[k].g2c == b[k].g2c);
    }
  }
  SUBCASE("no heralds") {
    const std::vector<DetectionEvent> ev{{10, Channel::AntiStokes}};
    CHECK_THROWS_AS(conditional_autocorrelation(stream_of(ev, 1.0), Channel::Stokes, windows, 1), InsufficientDataError);
  }
}

TEST_CASE("bootstrap error scales as one over root acquisition") {
  SourceModel m;
  m.profile = ProfileKind::LorentzianEIT;
  m.single_bandwidth = units::angular_mhz(1.826);
  m.eit_linewidth = 17396717.027271938;
  m.gain_floor = gain_for_pair_rate(m, 3088.0);
  const BiphotonWavefunction wf = wavefunction_from_spectrum(m, FrequencyGrid::for_time_resolution(m, 0.5e-9, 12e-6));
  SimConfig c;
  c.pair_rate = 3088.0;
  c.arm_efficiencies = {std::sqrt(0.085), std::sqrt(0.085)};
  c.noise_singles = {11590.0, 11590.0};
  c.seed = 21;
  TemporalStdOptions o;
  o.seed = 4;
  c.run_length = 15.0;
  const TemporalStats short_run = temporal_std(count_coincidences(generate_events(c, wf), 1e-9, 1.5e-6), o);
  c.run_length = 60.0;
  const TemporalStats long_run = temporal_std(count_coincidences(generate_events(c, wf), 1e-9, 1.5e-6), o);
  CHECK(short_run.std_error / long_run.std_error == doctest::Approx(2.0).epsilon(0.2));
  CHECK(long_run.std_error > 0.0);
}
