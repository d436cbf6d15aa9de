#include "biphoton/config.hpp"

#include "biphoton/errors.hpp"
#include "biphoton/units.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace biphoton {
namespace {

using nlohmann::json;

enum class Check { Any, NonNegative, Positive, Probability, Fraction };

// Field reader that remembers the JSON path and rejects unknown keys.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double fallback, Check check = Check::Any) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    return checked(key, j_.at(key), check);
  }

  std::optional<double> optional_number(const std::string& key, Check check = Check::Any) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
    return checked(key, j_.at(key), check);
  }

  std::array<double, 2> pair(const std::string& key, std::array<double, 2> fallback, Check check) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    const json& v = j_.at(key);
    if (v.is_number()) {
      const double x = checked(key, v, check);
      return {x, x};
    }
    if (!v.is_array() || v.size() != 2) fail(field(key), "must be a number or a [stokes, anti_stokes] pair");
    return {checked(key + "[0]", v[0], check), checked(key + "[1]", v[1], check)};
  }

  std::vector<double> list(const std::string& key, std::vector<double> fallback, Check check) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array() || v.empty()) fail(field(key), "must be a nonempty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(checked(key + "[" + std::to_string(i) + "]", v[i], check));
    return out;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t min_value) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(field(key), "must be an integer");
    const auto x = v.get<std::int64_t>();
    if (x < min_value) fail(field(key), "must be >= " + std::to_string(min_value));
    return x;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(field(key), "must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_boolean()) fail(field(key), "must be true or false");
    return j_.at(key).get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_string()) fail(field(key), "must be a string");
    return j_.at(key).get<std::string>();
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, field(key));
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (seen_.count(item.key())) continue;
      std::string hint;
      const auto& k = item.key();
      if (k.size() > 3 && (k.ends_with("_hz") || k.ends_with("_khz") || k.ends_with("_mhz")))
        hint = " (frequencies are angular: use the _rad_s key)";
      fail(field(k), "unknown field" + hint);
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ValidationError(where + ": " + what);
  }

 private:
  double checked(const std::string& key, const json& v, Check check) const {
    if (!v.is_number()) fail(field(key), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field(key), "must be finite");
    switch (check) {
      case Check::NonNegative:
        if (x < 0.0) fail(field(key), "must be >= 0");
        break;
      case Check::Positive:
        if (!(x > 0.0)) fail(field(key), "must be > 0");
        break;
      case Check::Probability:
        if (x < 0.0 || x > 1.0) fail(field(key), "must be in [0, 1]");
        break;
      case Check::Fraction:
        if (!(x > 0.0) || x > 1.0) fail(field(key), "must be in (0, 1]");
        break;
      case Check::Any:
        break;
    }
    return x;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string profile_name(ProfileKind p) { return p == ProfileKind::Gaussian ? "gaussian" : "lorentzian_eit"; }

ProfileKind parse_profile(const std::string& s, const std::string& where) {
  if (s == "gaussian") return ProfileKind::Gaussian;
  if (s == "lorentzian_eit") return ProfileKind::LorentzianEIT;
  Section::fail(where, "must be 'gaussian' or 'lorentzian_eit', got '" + s + "'");
}

// Re-raise a domain validation error under the section it came from.
template <typename F>
void within(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace

void LabConfig::validate() const {
  within("model", [&] { model.validate(); });
  within("source", [&] { source.validate(); });
  if (grid) within("model.grid", [&] { grid->validate(); });
  within("spectral.scan", [&] { spectral.scan.validate(); });
  within("spectral.cavity", [&] { spectral.cavity.validate(); });
  if (!(temporal.bin_width > 0.0)) throw ValidationError("temporal.bin_width_s: must be > 0");
  if (!(temporal.max_delay >= 10.0 * temporal.bin_width))
    throw ValidationError("temporal.max_delay_s: must be >= 10 x bin_width_s");
  if (target_g2_peak && !(*target_g2_peak > 1.0)) throw ValidationError("source.target_g2_peak: must be > 1");
}

void LabConfig::set_seed(std::uint64_t s) {
  seed = s;
  source.seed = s;
  spectral.scan.seed = s;
}

LabConfig paper_preset() {
  LabConfig c;
  c.model.profile = ProfileKind::LorentzianEIT;
  c.model.single_bandwidth = units::angular_mhz(1.826);
  c.model.eit_linewidth = 17396717.027271938;
  c.model.pump_linewidth = 482555.0568;
  c.model.coupling_linewidth = 482555.0568;
  c.gain_from_pair_rate = true;

  c.source.pair_rate = 3088.0;
  c.source.arm_efficiencies = {std::sqrt(0.085), std::sqrt(0.085)};
  c.source.duty = DutyCycle{1.25e-3, 0.5e-3};
  c.source.run_length = 60.0;
  c.target_g2_peak = 15.8;

  c.temporal.bin_width = 1e-9;
  c.temporal.max_delay = 1.5e-6;
  c.temporal.g2c_windows.clear();
  for (int k = 1; k <= 15; ++k) c.temporal.g2c_windows.push_back(20e-9 * k);

  c.spectral.scan.half_span = units::angular_mhz(8.0);
  c.spectral.scan.step = units::angular_khz(100.0);
  c.spectral.scan.per_point_acquisition = 3000.0;
  c.spectral.scan.coincidence_window = 3e-6;
  c.spectral.cavity = CavityFilter{units::angular_khz(72.0), 0.3, 20000.0};
  c.set_seed(1);
  return c;
}

LabConfig parse_config(const nlohmann::json& j) {
  LabConfig c;
  Section root(j, "");
  c.set_seed(root.seed("seed", 1));

  {
    Section m = root.child("model");
    c.model.profile = parse_profile(m.text("profile", "gaussian"), m.field("profile"));
    c.model.single_bandwidth = m.number("single_bandwidth_rad_s", 0.0, Check::Positive);
    if (!m.has("single_bandwidth_rad_s")) Section::fail(m.field("single_bandwidth_rad_s"), "is required");
    c.model.eit_linewidth = m.number("eit_linewidth_rad_s", 0.0, Check::NonNegative);
    if (c.model.profile == ProfileKind::LorentzianEIT && !(c.model.eit_linewidth > 0.0))
      Section::fail(m.field("eit_linewidth_rad_s"), "must be > 0 for the lorentzian_eit profile");
    c.model.pump_linewidth = m.number("pump_linewidth_rad_s", 0.0, Check::NonNegative);
    c.model.coupling_linewidth = m.number("coupling_linewidth_rad_s", 0.0, Check::NonNegative);
    c.model.stokes_detuning = m.number("stokes_detuning_rad_s", 0.0);
    c.model.anti_stokes_detuning = m.number("anti_stokes_detuning_rad_s", 0.0);
    if (const auto g = m.optional_number("gain_floor", Check::NonNegative)) {
      c.model.gain_floor = *g;
      c.gain_from_pair_rate = false;
    }
    if (m.has("grid")) {
      Section g = m.child("grid");
      FrequencyGrid grid;
      grid.n_points = g.integer("n_points", 1 << 14, 4096);
      grid.span = g.number("span_rad_s", 40.0 * c.model.single_bandwidth, Check::Positive);
      g.finish();
      c.grid = grid;
    }
    m.finish();
  }
  {
    Section s = root.child("source");
    c.source.pair_rate = s.number("pair_rate_per_s", 0.0, Check::NonNegative);
    c.source.arm_efficiencies = s.pair("arm_efficiencies", {1.0, 1.0}, Check::Probability);
    c.source.noise_singles = s.pair("noise_singles_per_s", {0.0, 0.0}, Check::NonNegative);
    c.target_g2_peak = s.optional_number("target_g2_peak");
    if (c.target_g2_peak && s.has("noise_singles_per_s"))
      Section::fail(s.field("target_g2_peak"), "cannot be combined with noise_singles_per_s");
    if (c.target_g2_peak && !(*c.target_g2_peak > 1.0)) Section::fail(s.field("target_g2_peak"), "must be > 1");
    c.source.duty.cycle_period = s.number("cycle_period_s", 1.25e-3, Check::Positive);
    c.source.duty.generation_window = s.number("generation_window_s", 0.5e-3, Check::Positive);
    if (c.source.duty.generation_window > c.source.duty.cycle_period)
      Section::fail(s.field("generation_window_s"), "must be <= cycle_period_s");
    c.source.run_length = s.number("run_length_s", 1.0, Check::Positive);
    c.source.dead_time = s.number("dead_time_s", 0.0, Check::NonNegative);
    c.source.dark_counts = s.pair("dark_counts_per_s", {0.0, 0.0}, Check::NonNegative);
    s.finish();
  }
  {
    Section t = root.child("temporal");
    c.temporal.bin_width = t.number("bin_width_s", 1e-9, Check::Positive);
    c.temporal.max_delay = t.number("max_delay_s", 1.5e-6, Check::Positive);
    c.temporal.bootstrap_resamples = static_cast<int>(t.integer("bootstrap_resamples", 200, 0));
    c.temporal.smoothing_bins = static_cast<int>(t.integer("smoothing_bins", 15, 1));
    std::vector<double> windows;
    for (int k = 1; k <= 15; ++k) windows.push_back(20e-9 * k);
    c.temporal.g2c_windows = t.list("g2c_windows_s", windows, Check::Positive);
    const std::string herald = t.text("herald", "stokes");
    try {
      c.temporal.herald = parse_channel(herald);
    } catch (const ValidationError&) {
      Section::fail(t.field("herald"), "must be 'stokes' or 'anti_stokes'");
    }
    c.temporal.autocorrelation_zero = t.pair("autocorrelation_zero", {2.0, 2.0}, Check::Positive);
    t.finish();
  }
  {
    Section sp = root.child("spectral");
    Section scan = sp.child("scan");
    c.spectral.scan.half_span = scan.number("half_span_rad_s", units::angular_mhz(8.0), Check::Positive);
    c.spectral.scan.step = scan.number("step_rad_s", units::angular_khz(100.0), Check::Positive);
    c.spectral.scan.per_point_acquisition = scan.number("per_point_acquisition_s", 3000.0, Check::Positive);
    c.spectral.scan.coincidence_window = scan.number("coincidence_window_s", 3e-6, Check::Positive);
    scan.finish();
    Section cav = sp.child("cavity");
    c.spectral.cavity.fwhm = cav.number("fwhm_rad_s", units::angular_khz(72.0), Check::Positive);
    c.spectral.cavity.peak_transmission = cav.number("peak_transmission", 0.3, Check::Fraction);
    c.spectral.cavity.finesse = cav.number("finesse", 20000.0, Check::Positive);
    cav.finish();
    c.spectral.deconvolve_cavity = sp.boolean("deconvolve_cavity", false);
    sp.finish();
  }
  {
    Section r = root.child("report");
    const std::string mode = r.text("propagation", "quadrature");
    try {
      c.propagation = parse_propagation(mode);
    } catch (const ValidationError&) {
      Section::fail(r.field("propagation"), "must be 'linear' or 'quadrature'");
    }
    r.finish();
  }
  root.finish();
  c.set_seed(c.seed);
  c.validate();
  return c;
}

LabConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const LabConfig& c) {
  json j;
  j["seed"] = c.seed;
  json m;
  m["profile"] = profile_name(c.model.profile);
  m["single_bandwidth_rad_s"] = c.model.single_bandwidth;
  if (c.model.profile == ProfileKind::LorentzianEIT) m["eit_linewidth_rad_s"] = c.model.eit_linewidth;
  m["pump_linewidth_rad_s"] = c.model.pump_linewidth;
  m["coupling_linewidth_rad_s"] = c.model.coupling_linewidth;
  m["stokes_detuning_rad_s"] = c.model.stokes_detuning;
  m["anti_stokes_detuning_rad_s"] = c.model.anti_stokes_detuning;
  if (!c.gain_from_pair_rate) m["gain_floor"] = c.model.gain_floor;
  if (c.grid) m["grid"] = {{"n_points", c.grid->n_points}, {"span_rad_s", c.grid->span}};
  j["model"] = m;

  json s;
  s["pair_rate_per_s"] = c.source.pair_rate;
  s["arm_efficiencies"] = c.source.arm_efficiencies;
  if (c.target_g2_peak)
    s["target_g2_peak"] = *c.target_g2_peak;
  else
    s["noise_singles_per_s"] = c.source.noise_singles;
  s["cycle_period_s"] = c.source.duty.cycle_period;
  s["generation_window_s"] = c.source.duty.generation_window;
  s["run_length_s"] = c.source.run_length;
  s["dead_time_s"] = c.source.dead_time;
  s["dark_counts_per_s"] = c.source.dark_counts;
  j["source"] = s;

  json t;
  t["bin_width_s"] = c.temporal.bin_width;
  t["max_delay_s"] = c.temporal.max_delay;
  t["bootstrap_resamples"] = c.temporal.bootstrap_resamples;
  t["smoothing_bins"] = c.temporal.smoothing_bins;
  t["g2c_windows_s"] = c.temporal.g2c_windows;
  t["herald"] = std::string(channel_name(c.temporal.herald));
  t["autocorrelation_zero"] = c.temporal.autocorrelation_zero;
  j["temporal"] = t;

  json sp;
  sp["scan"] = {{"half_span_rad_s", c.spectral.scan.half_span},
                {"step_rad_s", c.spectral.scan.step},
                {"per_point_acquisition_s", c.spectral.scan.per_point_acquisition},
                {"coincidence_window_s", c.spectral.scan.coincidence_window}};
  sp["cavity"] = {{"fwhm_rad_s", c.spectral.cavity.fwhm},
                  {"peak_transmission", c.spectral.cavity.peak_transmission},
                  {"finesse", c.spectral.cavity.finesse}};
  sp["deconvolve_cavity"] = c.spectral.deconvolve_cavity;
  j["spectral"] = sp;
  j["report"] = {{"propagation", std::string(propagation_name(c.propagation))}};
  return j;
}

std::uint64_t config_hash(const LabConfig& c) {
  const std::string text = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return out;
}

ResolvedSource resolve_source(const LabConfig& c) {
  c.validate();
  ResolvedSource r;
  r.model = c.model;
  if (c.gain_from_pair_rate) r.model.gain_floor = gain_for_pair_rate(r.model, c.source.pair_rate);
  // Half-bin time resolution over a window well past the histogram range.
  r.grid = c.grid ? *c.grid
                  : FrequencyGrid::for_time_resolution(r.model, 0.5 * c.temporal.bin_width, 8.0 * c.temporal.max_delay);
  r.wavefunction = wavefunction_from_spectrum(r.model, r.grid);
  r.sim = c.source;
  if (c.target_g2_peak) {
    const double u = noise_for_g2_peak(c.source, r.wavefunction, c.temporal.bin_width, *c.target_g2_peak);
    r.sim.noise_singles = {u, u};
  }
  return r;
}

}  // namespace biphoton
