#include "biphoton/commands.hpp"

#include "biphoton/errors.hpp"
#include "biphoton/eventsim.hpp"
#include "biphoton/io.hpp"
#include "biphoton/parallel.hpp"
#include "biphoton/spectral.hpp"
#include "biphoton/temporal.hpp"
#include "biphoton/units.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace biphoton {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* tool_version = "0.1.0";

std::string in_dir(const RunOptions& o, const std::string& name) { return (fs::path(o.out_dir) / name).string(); }

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

SpectralRates spectral_rates(const ResolvedSource& src) {
  const auto singles = src.sim.effective_singles_rates();
  return {src.sim.pair_rate, singles, src.sim.joint_efficiency()};
}

// Singles spectrum recovered through its thermal autocorrelation.
PowerSpectrum recovered_spectrum(const Eigen::ArrayXd& omega, const Eigen::ArrayXd& density) {
  const Autocorrelation g2 = autocorrelation_from_spectrum(omega, density);
  return spectrum_from_autocorrelation(g2.tau, g2.g2);
}

Eigen::ArrayXd resample_density(const PowerSpectrum& s, const Eigen::ArrayXd& at) {
  const double dw = s.omega(1) - s.omega(0);
  Eigen::ArrayXd out(at.size());
  for (Eigen::Index k = 0; k < at.size(); ++k) out(k) = interpolate_uniform(s.density, s.omega(0), dw, at(k));
  return out;
}

Eigen::ArrayXd unit_area(const Eigen::ArrayXd& counts, double step) {
  const double area = counts.sum() * step;
  return area > 0.0 ? Eigen::ArrayXd(counts / area) : Eigen::ArrayXd::Zero(counts.size());
}

json warnings_json(const std::vector<std::string>& w) {
  json a = json::array();
  for (const auto& s : w) a.push_back(s);
  return a;
}

}  // namespace

LabConfig effective_config(const RunOptions& opts) {
  LabConfig c = opts.config_path ? load_config(*opts.config_path) : paper_preset();
  if (opts.seed) c.set_seed(*opts.seed);
  if (opts.propagation) c.propagation = *opts.propagation;
  if (opts.deconvolve_cavity) c.spectral.deconvolve_cavity = true;
  c.validate();
  return c;
}

StageResult run_simulate(const LabConfig& cfg, const RunOptions& opts) {
  Stopwatch clock;
  const ResolvedSource src = resolve_source(cfg);
  const EventStream stream = generate_events(src.sim, src.wavefunction);
  fs::create_directories(opts.out_dir);
  write_event_stream(in_dir(opts, "events.csv"), stream, hex64(config_hash(cfg)));
  return {"simulate", clock.seconds(), {"events.csv", "events.json"}};
}

StageResult run_analyze_temporal(const LabConfig& cfg, const RunOptions& opts) {
  Stopwatch clock;
  const std::string events_path = opts.events_path ? *opts.events_path : in_dir(opts, "events.csv");
  const EventStream stream = read_event_stream(events_path);
  if (stream.events.empty()) throw NoSignalError("event stream '" + events_path + "' is empty");
  const auto& tc = cfg.temporal;

  const CoincidenceHistogram hist = count_coincidences(stream, tc.bin_width, tc.max_delay);
  TemporalStdOptions to;
  to.bootstrap_resamples = tc.bootstrap_resamples;
  to.smoothing_bins = tc.smoothing_bins;
  to.seed = cfg.seed;
  const TemporalStats stats = temporal_std(hist, to);
  const Eigen::ArrayXd g2 = cross_correlation_g2(hist);
  const double cs = cauchy_schwarz_factor(stats.peak_g2, tc.autocorrelation_zero[0], tc.autocorrelation_zero[1]);
  const auto g2c = conditional_autocorrelation(stream, tc.herald, tc.g2c_windows, cfg.seed);

  // Model curve at the configured source, for plotting next to the data.
  const ResolvedSource src = resolve_source(cfg);
  const auto rates = src.sim.effective_singles_rates();
  const Eigen::ArrayXd model = expected_coincidence_curve(src.wavefunction, rates[0], rates[1],
                                                          src.sim.joint_efficiency(), stream.run_length,
                                                          tc.bin_width, hist.tau);

  fs::create_directories(opts.out_dir);
  {
    CsvWriter w(in_dir(opts, "fig2a.csv"), {"tau_ns", "counts", "g2", "model_counts"});
    for (Eigen::Index k = 0; k < hist.tau.size(); ++k)
      w.cell(units::to_ns(hist.tau(k))).cell(hist.counts(k)).cell(g2(k)).cell(model(k)).end_row();
    w.close();
  }
  {
    CsvWriter w(in_dir(opts, "fig2b.csv"), {"window_ns", "g2c", "heralds", "arm1", "arm2", "both"});
    for (const auto& p : g2c)
      w.cell(units::to_ns(p.window)).cell(p.g2c).cell(p.heralds).cell(p.arm1).cell(p.arm2).cell(p.both).end_row();
    w.close();
  }

  json j;
  j["delta_t"] = tagged(stats.std, stats.std_error, "s");
  j["mean_delay"] = tagged(stats.mean_delay, "s");
  j["fwhm_estimate"] = tagged(stats.fwhm, "s");
  j["g2_peak"] = stats.peak_g2;
  j["floor_counts_per_bin"] = stats.floor_level;
  j["bootstrap_resamples_used"] = stats.bootstrap_used;
  j["cauchy_schwarz"] = {{"factor", cs},
                         {"g2_ss0", tc.autocorrelation_zero[0]},
                         {"g2_asas0", tc.autocorrelation_zero[1]},
                         {"violated", cs > 1.0}};
  json points = json::array();
  for (const auto& p : g2c)
    points.push_back({{"window", tagged(p.window, "s")},
                      {"g2c", std::isfinite(p.g2c) ? json(p.g2c) : json(nullptr)},
                      {"heralds", p.heralds},
                      {"arm1", p.arm1},
                      {"arm2", p.arm2},
                      {"both", p.both}});
  j["g2c"] = points;
  j["g2c_herald"] = std::string(channel_name(tc.herald));
  j["histogram"] = {{"bin_width", tagged(hist.bin_width, "s")},
                    {"max_delay", tagged(tc.max_delay, "s")},
                    {"total_counts", hist.counts.sum()},
                    {"stokes_singles", hist.stokes_singles},
                    {"anti_stokes_singles", hist.anti_stokes_singles},
                    {"live_time", tagged(hist.live_time, "s")},
                    {"acquisition_time", tagged(hist.acquisition_time, "s")},
                    {"joint_efficiency", hist.detection_efficiency}};
  j["source_events"] = fs::path(events_path).filename().string();
  write_json(in_dir(opts, "temporal.json"), j);
  return {"analyze-temporal", clock.seconds(), {"fig2a.csv", "fig2b.csv", "temporal.json"}};
}

StageResult run_analyze_spectral(const LabConfig& cfg, const RunOptions& opts) {
  Stopwatch clock;
  const ResolvedSource src = resolve_source(cfg);
  const auto& sc = cfg.spectral;
  const ExpectedScan expected = expected_joint_scan(src.model, sc.cavity, sc.scan, spectral_rates(src));
  const JointSpectralMap map = sample_joint_scan(expected, sc.cavity, sc.scan);
  const Marginals marg = project_axes(map);
  const SumFrequencyProjection proj = project_antidiagonal(map);
  const double step = sc.scan.step;
  fs::create_directories(opts.out_dir);

  {
    CsvWriter w(in_dir(opts, "fig3a.csv"), {"dws_rad_s", "dwas_rad_s", "counts"});
    for (Eigen::Index i = 0; i < map.dws.size(); ++i)
      for (Eigen::Index j = 0; j < map.dwas.size(); ++j) w.cell(map.dws(i)).cell(map.dwas(j)).cell(map.counts(i, j)).end_row();
    w.close();
    json meta;
    meta["per_point_acquisition"] = tagged(map.per_point_acquisition, "s");
    meta["coincidence_window"] = tagged(map.coincidence_window, "s");
    meta["step"] = tagged(step, "rad/s");
    meta["half_span"] = tagged(sc.scan.half_span, "rad/s");
    meta["points_per_axis"] = map.dws.size();
    meta["cavity"] = {{"fwhm", tagged(map.cavity.fwhm, "rad/s")},
                      {"peak_transmission", map.cavity.peak_transmission},
                      {"finesse", map.cavity.finesse}};
    meta["seed"] = map.seed;
    meta["ridge_width"] = tagged(expected.ridge_width, "rad/s");
    meta["ridge_clamped"] = map.ridge_clamped;
    meta["warnings"] = warnings_json(map.warnings);
    meta["config_hash"] = hex64(config_hash(cfg));
    meta["layout"] = "long format, rows ordered by dws then dwas";
    write_json(in_dir(opts, "fig3a.json"), meta);
  }

  // Cavity-measured marginals against spectra recovered from the thermal
  // autocorrelation of each arm (model spectra through g2 and back).
  const Eigen::ArrayXd stokes_counts = marg.stokes.cast<double>();
  const Eigen::ArrayXd anti_counts = marg.anti_stokes.cast<double>();
  const Eigen::ArrayXd omega = src.grid.samples();
  const Amplitudes amp = eval_amplitudes(src.model, omega);
  const Eigen::ArrayXd c2 = amp.C.abs2();
  const Eigen::ArrayXd b2 = amp.B.abs2();
  std::optional<PowerSpectrum> rec_s, rec_as;
  if (c2.sum() > 0.0) rec_s = recovered_spectrum(omega, c2);
  if (b2.sum() > 0.0) rec_as = recovered_spectrum(omega, b2);
  {
    CsvWriter w(in_dir(opts, "fig3b.csv"), {"dw_rad_s", "stokes_counts", "anti_stokes_counts", "stokes_cavity",
                                            "anti_stokes_cavity", "stokes_autocorr", "anti_stokes_autocorr"});
    const Eigen::ArrayXd ns = unit_area(stokes_counts, step);
    const Eigen::ArrayXd nas = unit_area(anti_counts, step);
    const Eigen::ArrayXd rs = rec_s ? resample_density(*rec_s, marg.dws) : Eigen::ArrayXd::Zero(marg.dws.size());
    const Eigen::ArrayXd ras = rec_as ? resample_density(*rec_as, marg.dwas) : Eigen::ArrayXd::Zero(marg.dwas.size());
    for (Eigen::Index k = 0; k < marg.dws.size(); ++k)
      w.cell(marg.dws(k)).cell(marg.stokes(k)).cell(marg.anti_stokes(k)).cell(ns(k)).cell(nas(k)).cell(rs(k)).cell(ras(k)).end_row();
    w.close();
  }

  const double peak = std::max<double>(static_cast<double>(proj.counts.maxCoeff()), 1.0);
  const Eigen::ArrayXd proj_counts = proj.counts.cast<double>();
  std::optional<SumFrequencyFit> fit;
  std::string fit_error;
  SumFrequencyFitOptions fo;
  fo.deconvolve_cavity = sc.deconvolve_cavity;
  fo.cavity_fwhm = sc.cavity.fwhm;
  try {
    fo.floor_shape = separable_floor_shape(map);
    fit = fit_sum_frequency(proj, fo);
  } catch (const FitFailure& e) {
    fit_error = e.what();
  }
  // Floor column stays empty where there is no fit or outside its region.
  auto floor = [&fit](double x) -> std::string {
    return fit && fit->floor_covers(x) ? format_number(fit->floor_at(x)) : std::string();
  };
  {
    CsvWriter w(in_dir(opts, "fig3c.csv"), {"sum_rad_s", "counts", "normalized", "floor"});
    for (Eigen::Index k = 0; k < proj.offset.size(); ++k)
      w.cell(proj.offset(k)).cell(proj.counts(k)).cell(proj_counts(k) / peak).cell(floor(proj.offset(k))).end_row();
    w.close();
  }
  if (!fit) {
    throw FitFailure("sum-frequency fit failed: " + fit_error);
  }
  {
    CsvWriter w(in_dir(opts, "fig3d.csv"), {"sum_rad_s", "subtracted", "normalized", "fit"});
    const double norm = std::max(fit->amplitude, 1e-300);
    for (Eigen::Index k = 0; k < proj.offset.size(); ++k) {
      const double x = proj.offset(k);
      if (!fit->floor_covers(x)) continue;
      const double sub = proj_counts(k) - fit->floor_at(x);
      w.cell(x).cell(sub).cell(sub / norm).cell(fit->peak_at(x)).end_row();
    }
    w.close();
  }

  const double std_s = spectral_std(marg.dws, stokes_counts);
  const double std_as = spectral_std(marg.dwas, anti_counts);
  json j;
  j["delta_omega_sum"] = tagged(fit->sigma, fit->sigma_error, "rad/s");
  j["delta_omega_single"] = tagged(0.5 * (std_s + std_as), 0.5 * std::abs(std_s - std_as), "rad/s");
  j["marginal_std"] = {{"stokes", tagged(std_s, "rad/s")}, {"anti_stokes", tagged(std_as, "rad/s")}};
  json rec = json::object();
  if (rec_s) rec["stokes"] = tagged(spectral_std(rec_s->omega, rec_s->density), "rad/s");
  if (rec_as) rec["anti_stokes"] = tagged(spectral_std(rec_as->omega, rec_as->density), "rad/s");
  j["autocorrelation_spectrum_std"] = rec;
  j["fit"] = {{"center", tagged(fit->center, "rad/s")},
              {"amplitude_counts", fit->amplitude},
              {"floor_counts", fit->floor_level},
              {"residual_norm", fit->residual_norm},
              {"fit_half_width", tagged(fit->fit_half_width, "rad/s")},
              {"deconvolved", fit->deconvolved},
              {"cavity_fwhm", tagged(sc.cavity.fwhm, "rad/s")}};
  j["map_total_counts"] = map.counts.sum();
  j["ridge_clamped"] = map.ridge_clamped;
  j["warnings"] = warnings_json(map.warnings);
  write_json(in_dir(opts, "spectral.json"), j);
  return {"analyze-spectral",
          clock.seconds(),
          {"fig3a.csv", "fig3a.json", "fig3b.csv", "fig3c.csv", "fig3d.csv", "spectral.json"}};
}

StageResult run_report(const LabConfig& cfg, const RunOptions& opts, std::ostream& table_out) {
  Stopwatch clock;
  const std::string tpath = opts.temporal_json ? *opts.temporal_json : in_dir(opts, "temporal.json");
  const std::string spath = opts.spectral_json ? *opts.spectral_json : in_dir(opts, "spectral.json");
  const json tj = read_json(tpath);
  const json sj = read_json(spath);
  const TaggedValue dt = read_tagged(tj, "delta_t", "s", tpath, true);
  const TaggedValue dw = read_tagged(sj, "delta_omega_sum", "rad/s", spath, true);
  const TaggedValue single = read_tagged(sj, "delta_omega_single", "rad/s", spath);

  const EntanglementReport r = certify({dw.value, dw.error}, {dt.value, dt.error}, single.value, cfg.propagation);
  const Propagation other = cfg.propagation == Propagation::Linear ? Propagation::Quadrature : Propagation::Linear;
  const Measured alt = uncertainty_product({dw.value, dw.error}, {dt.value, dt.error}, other);

  json j;
  j["delta_t"] = tagged(r.delta_t.value, r.delta_t.error, "s");
  j["delta_omega_sum"] = tagged(r.delta_omega_sum.value, r.delta_omega_sum.error, "rad/s");
  j["delta_omega_single"] = tagged(r.delta_omega_single, "rad/s");
  j["product"] = {{"value", r.product.value}, {"error", r.product.error}, {"propagation", propagation_name(r.propagation)}};
  j["product_" + std::string(propagation_name(other))] = {{"value", alt.value}, {"error", alt.error}};
  j["separability"] = {{"violated", r.separability_violated}, {"sigmas", r.violation_sigmas}};
  j["steering_satisfied"] = r.steering_satisfied;
  j["schmidt_k"] = r.schmidt_k;
  j["inputs"] = {{"temporal", fs::path(tpath).filename().string()}, {"spectral", fs::path(spath).filename().string()}};

  std::ostringstream t;
  t << "Energy-time entanglement certificate\n";
  t << "  Delta(t_as - t_s)       " << fixed(units::to_ns(dt.value), 2) << " +/- " << fixed(units::to_ns(dt.error), 2)
    << " ns\n";
  t << "  Delta(w_as + w_s)       2pi x " << fixed(units::to_khz(dw.value), 2) << " +/- "
    << fixed(units::to_khz(dw.error), 2) << " kHz\n";
  t << "  Delta w (single)        2pi x " << fixed(units::to_mhz(single.value), 3) << " MHz\n";
  t << "  product                 " << fixed(r.product.value, 4) << " +/- " << fixed(r.product.error, 4) << " ("
    << propagation_name(r.propagation) << ")\n";
  t << "  product                 " << fixed(alt.value, 4) << " +/- " << fixed(alt.error, 4) << " ("
    << propagation_name(other) << ")\n";
  t << "  separability (>= 1)     " << (r.separability_violated ? "violated" : "not violated") << " by "
    << fixed(r.violation_sigmas, 1) << " sigma\n";
  t << "  steering (< 0.5)        " << (r.steering_satisfied ? "satisfied" : "not satisfied") << "\n";
  t << "  Schmidt number K        " << fixed(r.schmidt_k, 2) << "\n";

  fs::create_directories(opts.out_dir);
  write_json(in_dir(opts, "report.json"), j);
  {
    std::ofstream out(in_dir(opts, "report.txt"), std::ios::binary);
    out << t.str();
    if (!out) throw Error("failed writing report.txt");
  }
  table_out << t.str();
  return {"report", clock.seconds(), {"report.json", "report.txt"}};
}

int run_command(const std::string& command, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const LabConfig cfg = effective_config(opts);
    std::vector<StageResult> stages;
    if (command == "simulate") {
      stages.push_back(run_simulate(cfg, opts));
    } else if (command == "analyze-temporal") {
      stages.push_back(run_analyze_temporal(cfg, opts));
    } else if (command == "analyze-spectral") {
      stages.push_back(run_analyze_spectral(cfg, opts));
    } else if (command == "report") {
      stages.push_back(run_report(cfg, opts, out));
    } else if (command == "reproduce-paper") {
      fs::create_directories(opts.out_dir);
      write_json(in_dir(opts, "config.json"), config_to_json(cfg));
      stages.push_back({"config", 0.0, {"config.json"}});
      stages.push_back(run_simulate(cfg, opts));
      stages.push_back(run_analyze_temporal(cfg, opts));
      stages.push_back(run_analyze_spectral(cfg, opts));
      stages.push_back(run_report(cfg, opts, out));
    } else {
      err << "unknown command '" << command << "'\n";
      return 2;
    }

    // manifest.json accumulates across commands sharing an output directory;
    // it holds only deterministic content.
    const std::string manifest_path = in_dir(opts, "manifest.json");
    std::map<std::string, std::string> files;
    if (fs::exists(manifest_path)) {
      try {
        const json old = read_json(manifest_path);
        if (old.value("config_hash", "") == hex64(config_hash(cfg)) && old.contains("files"))
          for (const auto& f : old.at("files")) files[f.at("name").get<std::string>()] = f.at("fnv1a64").get<std::string>();
      } catch (const std::exception&) {
        files.clear();
      }
    }
    for (const auto& s : stages)
      for (const auto& f : s.files) files[f] = hex64(file_hash(in_dir(opts, f)));
    json m;
    m["tool"] = "biphoton-lab";
    m["version"] = tool_version;
    m["command"] = command;
    m["config_source"] = opts.config_path ? fs::path(*opts.config_path).filename().string() : "built-in preset";
    m["config_hash"] = hex64(config_hash(cfg));
    m["seed"] = cfg.seed;
    m["config"] = config_to_json(cfg);
    json list = json::array();
    for (const auto& [name, hash] : files) list.push_back({{"name", name}, {"fnv1a64", hash}});
    m["files"] = list;
    write_json(manifest_path, m);

    json timing;
    timing["out_dir"] = opts.out_dir;
    timing["threads"] = thread_budget();
    json st = json::array();
    for (const auto& s : stages) st.push_back({{"stage", s.name}, {"seconds", s.seconds}});
    timing["stages"] = st;
    write_json(in_dir(opts, "timing.json"), timing);
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const GeometryError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace biphoton
