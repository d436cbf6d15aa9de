#include "biphoton/eventsim.hpp"

#include "biphoton/errors.hpp"
#include "biphoton/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace biphoton {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

bool probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }
bool rate(double r) { return std::isfinite(r) && r >= 0.0; }

std::int64_t cycle_count(const DutyCycle& duty, double run_length) {
  return static_cast<std::int64_t>(std::ceil(run_length / duty.cycle_period - 1e-9));
}

void add_poisson_singles(std::vector<DetectionEvent>& out, std::mt19937_64& rng, double counts_per_s, double start_ns,
                         double length_ns, Channel ch) {
  if (counts_per_s <= 0.0) return;
  std::poisson_distribution<long> n_dist(counts_per_s * length_ns * 1e-9);
  std::uniform_real_distribution<double> pos(0.0, length_ns);
  const long n = n_dist(rng);
  for (long k = 0; k < n; ++k)
    out.push_back({static_cast<std::int64_t>(std::floor(start_ns + pos(rng))), ch});
}

void apply_dead_time(std::vector<DetectionEvent>& events, double dead_time) {
  if (dead_time <= 0.0) return;
  const double dead_ns = dead_time * 1e9;
  std::array<std::int64_t, 2> last{INT64_MIN / 2, INT64_MIN / 2};
  std::vector<DetectionEvent> kept;
  kept.reserve(events.size());
  for (const auto& e : events) {
    auto& l = last[static_cast<std::size_t>(e.channel)];
    if (static_cast<double>(e.t_ns - l) < dead_ns) continue;
    l = e.t_ns;
    kept.push_back(e);
  }
  events.swap(kept);
}

}  // namespace

std::string_view channel_name(Channel c) { return c == Channel::Stokes ? "stokes" : "anti_stokes"; }

Channel parse_channel(std::string_view name) {
  if (name == "stokes" || name == "s") return Channel::Stokes;
  if (name == "anti_stokes" || name == "as") return Channel::AntiStokes;
  throw ValidationError("unknown channel '" + std::string(name) + "'");
}

void DutyCycle::validate() const {
  require(std::isfinite(cycle_period) && cycle_period > 0.0, "duty_cycle.cycle_period_s must be > 0");
  require(std::isfinite(generation_window) && generation_window > 0.0 && generation_window <= cycle_period,
          "duty_cycle.generation_window_s must be in (0, cycle_period_s]");
}

void SimConfig::validate() const {
  require(rate(pair_rate), "pair_rate_per_s must be >= 0");
  require(rate(noise_singles[0]) && rate(noise_singles[1]), "noise_singles_per_s must be >= 0");
  require(rate(dark_counts[0]) && rate(dark_counts[1]), "dark_counts_per_s must be >= 0");
  require(probability(arm_efficiencies[0]) && probability(arm_efficiencies[1]), "arm_efficiencies must be in [0, 1]");
  require(std::isfinite(run_length) && run_length > 0.0, "run_length_s must be > 0");
  require(std::isfinite(dead_time) && dead_time >= 0.0, "dead_time_s must be >= 0");
  duty.validate();
}

double SimConfig::joint_efficiency() const { return arm_efficiencies[0] * arm_efficiencies[1] * duty.fraction(); }

std::array<double, 2> SimConfig::detected_singles_rates() const {
  return {pair_rate * arm_efficiencies[0] + noise_singles[0] + dark_counts[0],
          pair_rate * arm_efficiencies[1] + noise_singles[1] + dark_counts[1]};
}

std::array<double, 2> SimConfig::effective_singles_rates() const {
  const auto d = detected_singles_rates();
  return {arm_efficiencies[0] > 0.0 ? d[0] / arm_efficiencies[0] : 0.0,
          arm_efficiencies[1] > 0.0 ? d[1] / arm_efficiencies[1] : 0.0};
}

double EventStream::live_time() const {
  duty.validate();
  const std::int64_t cycles = cycle_count(duty, run_length);
  double live = 0.0;
  for (std::int64_t i = 0; i < cycles; ++i) {
    const double start = static_cast<double>(i) * duty.cycle_period;
    live += std::max(0.0, std::min(duty.generation_window, run_length - start));
  }
  return live;
}

std::size_t EventStream::count(Channel c) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [c](const DetectionEvent& e) { return e.channel == c; }));
}

std::vector<std::int64_t> EventStream::times(Channel c) const {
  std::vector<std::int64_t> out;
  out.reserve(events.size());
  for (const auto& e : events)
    if (e.channel == c) out.push_back(e.t_ns);
  return out;
}

RelativeDelaySampler::RelativeDelaySampler(const BiphotonWavefunction& wf) {
  const Eigen::ArrayXd density = wf.density();
  const double total = density.sum();
  if (wf.tau.size() < 2 || !(total > 0.0) || !std::isfinite(total))
    throw ValidationError("wavefunction is not normalizable");
  step_ = wf.step();
  first_edge_ = wf.tau(0) - 0.5 * step_;
  cumulative_.resize(density.size() + 1);
  cumulative_(0) = 0.0;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < density.size(); ++k) {
    acc += density(k);
    cumulative_(k + 1) = acc / total;
  }
  cumulative_(density.size()) = 1.0;
}

double RelativeDelaySampler::quantile(double u) const {
  const auto* begin = cumulative_.data();
  const auto* end = begin + cumulative_.size();
  const auto* it = std::upper_bound(begin, end, u);
  const Eigen::Index k = std::clamp<Eigen::Index>(it - begin - 1, 0, cumulative_.size() - 2);
  const double lo = cumulative_(k);
  const double hi = cumulative_(k + 1);
  const double frac = hi > lo ? (u - lo) / (hi - lo) : 0.5;
  return first_edge_ + (static_cast<double>(k) + frac) * step_;
}

double RelativeDelaySampler::cdf(double tau) const {
  const double u = (tau - first_edge_) / step_;
  if (u <= 0.0) return 0.0;
  if (u >= static_cast<double>(cumulative_.size() - 1)) return 1.0;
  const auto k = static_cast<Eigen::Index>(u);
  const double frac = u - static_cast<double>(k);
  return cumulative_(k) + frac * (cumulative_(k + 1) - cumulative_(k));
}

double sample_relative_delay(const RelativeDelaySampler& sampler, std::mt19937_64& rng) { return sampler(rng); }

std::vector<double> sample_relative_delays(const BiphotonWavefunction& wf, std::uint64_t seed, std::size_t n) {
  const RelativeDelaySampler sampler(wf);
  auto rng = substream(seed, Stream::RelativeDelays, 0);
  std::vector<double> out(n);
  for (auto& v : out) v = sampler(rng);
  return out;
}

EventStream generate_events(const SimConfig& config, const BiphotonWavefunction& wf) {
  config.validate();
  const RelativeDelaySampler sampler(wf);

  const DutyCycle& duty = config.duty;
  const std::int64_t cycles = cycle_count(duty, config.run_length);
  std::vector<std::vector<DetectionEvent>> per_window(static_cast<std::size_t>(cycles));

  parallel_for(per_window.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double start_s = static_cast<double>(i) * duty.cycle_period;
      const double length_s = std::min(duty.generation_window, config.run_length - start_s);
      if (length_s <= 0.0) continue;
      const double start_ns = start_s * 1e9;
      const double length_ns = length_s * 1e9;
      const double stop_ns = start_ns + length_ns;
      auto& out = per_window[i];

      auto rng_epoch = substream(config.seed, Stream::PairEpochs, i);
      auto rng_delay = substream(config.seed, Stream::RelativeDelays, i);
      auto rng_thin = substream(config.seed, Stream::Thinning, i);
      std::poisson_distribution<long> n_pairs(config.pair_rate * length_s);
      std::uniform_real_distribution<double> pos(0.0, length_ns);
      std::uniform_real_distribution<double> coin(0.0, 1.0);
      const long n = config.pair_rate > 0.0 ? n_pairs(rng_epoch) : 0;
      for (long k = 0; k < n; ++k) {
        const double t_s = start_ns + pos(rng_epoch);
        const double t_as = t_s + sampler(rng_delay) * 1e9;
        const bool keep_s = coin(rng_thin) < config.arm_efficiencies[0];
        const bool keep_as = coin(rng_thin) < config.arm_efficiencies[1];
        if (keep_s) out.push_back({static_cast<std::int64_t>(std::floor(t_s)), Channel::Stokes});
        if (keep_as && t_as >= start_ns && t_as < stop_ns)
          out.push_back({static_cast<std::int64_t>(std::floor(t_as)), Channel::AntiStokes});
      }

      auto rng_noise = substream(config.seed, Stream::NoiseSingles, i);
      add_poisson_singles(out, rng_noise, config.noise_singles[0], start_ns, length_ns, Channel::Stokes);
      add_poisson_singles(out, rng_noise, config.noise_singles[1], start_ns, length_ns, Channel::AntiStokes);
      auto rng_dark = substream(config.seed, Stream::DarkCounts, i);
      add_poisson_singles(out, rng_dark, config.dark_counts[0], start_ns, length_ns, Channel::Stokes);
      add_poisson_singles(out, rng_dark, config.dark_counts[1], start_ns, length_ns, Channel::AntiStokes);
      std::sort(out.begin(), out.end());
    }
  });

  EventStream stream;
  stream.seed = config.seed;
  stream.duty = duty;
  stream.run_length = config.run_length;
  stream.joint_efficiency = config.joint_efficiency();
  std::size_t total = 0;
  for (const auto& w : per_window) total += w.size();
  stream.events.reserve(total);
  for (auto& w : per_window) stream.events.insert(stream.events.end(), w.begin(), w.end());
  apply_dead_time(stream.events, config.dead_time);
  return stream;
}

double noise_for_g2_peak(const SimConfig& config, const BiphotonWavefunction& wf, double bin_width, double target) {
  config.validate();
  require(std::isfinite(bin_width) && bin_width > 0.0, "bin width must be > 0");
  require(std::isfinite(target) && target > 1.0, "target g2 peak must be > 1");
  const RelativeDelaySampler sampler(wf);
  const auto lo = static_cast<std::int64_t>(std::floor(wf.tau(0) / bin_width));
  const auto hi = static_cast<std::int64_t>(std::ceil(wf.tau(wf.tau.size() - 1) / bin_width));
  double p_bin = 0.0;
  for (std::int64_t k = lo; k <= hi; ++k) {
    const double c = static_cast<double>(k) * bin_width;
    p_bin = std::max(p_bin, sampler.cdf(c + 0.5 * bin_width) - sampler.cdf(c - 0.5 * bin_width));
  }
  const double p = config.pair_rate;
  const double a = p * config.arm_efficiencies[0] + config.dark_counts[0];
  const double b = p * config.arm_efficiencies[1] + config.dark_counts[1];
  const double k = p * config.arm_efficiencies[0] * config.arm_efficiencies[1] * p_bin / (bin_width * (target - 1.0));
  // (a + u)(b + u) = k
  const double disc = (a - b) * (a - b) + 4.0 * k;
  const double u = 0.5 * (-(a + b) + std::sqrt(disc));
  if (!(u >= 0.0)) throw ValidationError("target g2 peak is above what the source reaches without noise singles");
  return u;
}

CoincidenceHistogram count_coincidences(const EventStream& stream, double bin_width, double max_delay) {
  require(std::isfinite(bin_width) && bin_width > 0.0, "bin width must be > 0");
  require(std::isfinite(max_delay) && max_delay >= bin_width, "max delay must be >= bin width");

  CoincidenceHistogram h;
  h.bin_width = bin_width;
  h.tau = bin_centers(bin_width, max_delay);
  h.counts = ArrayXi64::Zero(h.tau.size());
  h.acquisition_time = stream.run_length;
  h.detection_efficiency = stream.joint_efficiency;
  h.live_time = stream.run_length > 0.0 ? stream.live_time() : 0.0;

  const auto s = stream.times(Channel::Stokes);
  const auto as = stream.times(Channel::AntiStokes);
  h.stokes_singles = static_cast<std::int64_t>(s.size());
  h.anti_stokes_singles = static_cast<std::int64_t>(as.size());

  const Eigen::Index half = (h.tau.size() - 1) / 2;
  const double bin_ns = bin_width * 1e9;
  const auto reach = static_cast<std::int64_t>(std::floor(max_delay * 1e9));
  std::size_t lo = 0;
  for (const std::int64_t ts : s) {
    while (lo < as.size() && as[lo] < ts - reach) ++lo;
    for (std::size_t j = lo; j < as.size() && as[j] <= ts + reach; ++j) {
      const double tau_ns = static_cast<double>(as[j] - ts);
      const auto k = static_cast<Eigen::Index>(std::floor(tau_ns / bin_ns + 0.5));
      if (k >= -half && k <= half) ++h.counts(k + half);
    }
  }
  return h;
}

EventStream merge_streams(const EventStream& first, const EventStream& second) {
  if (first.duty.cycle_period != second.duty.cycle_period ||
      first.duty.generation_window != second.duty.generation_window)
    throw ValidationError("merge_streams: duty cycles differ");
  const std::int64_t cycles = cycle_count(first.duty, first.run_length);
  const double offset_s = static_cast<double>(cycles) * first.duty.cycle_period;
  const auto offset_ns = static_cast<std::int64_t>(std::llround(offset_s * 1e9));

  EventStream out = first;
  out.run_length = offset_s + second.run_length;
  out.events.reserve(first.events.size() + second.events.size());
  for (auto e : second.events) {
    e.t_ns += offset_ns;
    out.events.push_back(e);
  }
  std::sort(out.events.begin(), out.events.end());
  return out;
}

}  // namespace biphoton
