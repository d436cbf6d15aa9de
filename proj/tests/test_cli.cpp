#include <doctest.h>

#include "biphoton/commands.hpp"
#include "biphoton/config.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/eventsim.hpp"
#include "biphoton/io.hpp"
#include "biphoton/model.hpp"
#include "biphoton/units.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace biphoton;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("biphoton_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Reference preset with a short run and a narrow scan, for quick end-to-end runs.
json fast_config() {
  json j = config_to_json(paper_preset());
  j["source"]["run_length_s"] = 5.0;
  j["temporal"]["bootstrap_resamples"] = 20;
  j["spectral"]["scan"]["half_span_rad_s"] = units::angular_mhz(4.0);
  return j;
}

std::string write_config(const fs::path& dir, const json& j) {
  const std::string p = (dir / "cfg.json").string();
  write_json(p, j);
  return p;
}

std::string validation_message(const json& j) {
  try {
    parse_config(j);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

int run(const std::string& cmd, const RunOptions& o, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_command(cmd, o, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int shell(const std::string& args) {
  const std::string cmd = std::string("\"") + BIPHOTON_LAB_EXE + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config validation names the field") {
  json j = config_to_json(paper_preset());
  SUBCASE("frequency in Hz gets a hint") {
    j["model"]["pump_linewidth_hz"] = 1.0;
    const std::string m = validation_message(j);
    CHECK(m.find("model.pump_linewidth_hz") != std::string::npos);
    CHECK(m.find("_rad_s") != std::string::npos);
  }
  SUBCASE("negative rate") {
    j["source"]["pair_rate_per_s"] = -1.0;
    CHECK(validation_message(j) == "source.pair_rate_per_s: must be >= 0");
  }
  SUBCASE("unknown top-level key") {
    j["extra"] = 1;
    CHECK(validation_message(j) == "extra: unknown field");
  }
  SUBCASE("noise rate and g2 target are exclusive") {
    j["source"]["noise_singles_per_s"] = {100.0, 100.0};
    CHECK(validation_message(j).find("source.target_g2_peak") == 0);
  }
  SUBCASE("efficiency above one") {
    j["source"]["arm_efficiencies"] = {0.3, 1.2};
    CHECK(validation_message(j).find("source.arm_efficiencies") == 0);
  }
  SUBCASE("wrong type") {
    j["temporal"]["bootstrap_resamples"] = 2.5;
    CHECK(validation_message(j) == "temporal.bootstrap_resamples: must be an integer");
  }
  SUBCASE("bad profile") {
    j["model"]["profile"] = "sech";
    CHECK(validation_message(j).find("model.profile") == 0);
  }
}

TEST_CASE("config round trip") {
  const LabConfig p = paper_preset();
  CHECK(config_hash(parse_config(config_to_json(p))) == config_hash(p));
  CHECK(config_to_json(parse_config(config_to_json(p))) == config_to_json(p));
  CHECK(config_hash(load_config(std::string(BIPHOTON_SOURCE_DIR) + "/configs/paper.json")) == config_hash(p));
  LabConfig q = p;
  q.set_seed(2);
  CHECK(config_hash(q) != config_hash(p));
  CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), ValidationError);
}

TEST_CASE("tagged values") {
  const json j = {{"w", tagged(3.0, 0.5, "rad/s")}, {"f", tagged(3.0, "Hz")}};
  const TaggedValue w = read_tagged(j, "w", "rad/s", "x.json", true);
  CHECK(w.value == 3.0);
  CHECK(w.error == 0.5);
  CHECK_THROWS_AS(read_tagged(j, "f", "rad/s", "x.json"), ValidationError);
  CHECK_THROWS_AS(read_tagged(j, "f", "Hz", "x.json", true), ValidationError);  // error required
  CHECK_THROWS_AS(read_tagged(j, "missing", "s", "x.json"), ValidationError);
}

TEST_CASE("event stream files") {
  const fs::path dir = scratch("events");
  SimConfig c;
  c.pair_rate = 2000.0;
  c.arm_efficiencies = {0.5, 0.5};
  c.noise_singles = {300.0, 300.0};
  c.run_length = 0.2;
  c.seed = 5;
  SourceModel m;
  m.single_bandwidth = units::angular_mhz(2.0);
  m.gain_floor = 1e-6;
  const EventStream s =
      generate_events(c, wavefunction_from_spectrum(m, FrequencyGrid::for_time_resolution(m, 0.5e-9, 4e-6)));
  REQUIRE(s.events.size() > 100);
  const std::string csv = (dir / "events.csv").string();
  write_event_stream(csv, s, "abc");
  CHECK(fs::exists(sidecar_path(csv)));
  const EventStream r = read_event_stream(csv);
  CHECK(r.events == s.events);
  CHECK(r.seed == s.seed);
  CHECK(r.run_length == s.run_length);
  CHECK(r.duty.cycle_period == s.duty.cycle_period);
  CHECK(r.live_time() == doctest::Approx(s.live_time()));
  CHECK_THROWS_AS(read_event_stream((dir / "missing.csv").string()), ValidationError);
}

TEST_CASE("command exit codes") {
  SUBCASE("invalid config file") {
    const fs::path dir = scratch("badcfg");
    json j = fast_config();
    j["spectral"]["scan"]["step_hz"] = 1e5;
    RunOptions o;
    o.config_path = write_config(dir, j);
    o.out_dir = dir.string();
    std::string err;
    CHECK(run("simulate", o, &err) == 2);
    CHECK(err.find("spectral.scan.step_hz") != std::string::npos);
  }
  SUBCASE("unknown command and missing inputs") {
    const fs::path dir = scratch("missing");
    RunOptions o;
    o.out_dir = dir.string();
    CHECK(run("simulate-everything", o) == 2);
    CHECK(run("analyze-temporal", o) == 2);
    CHECK(run("report", o) == 2);
  }
  SUBCASE("no pairs: the spectral fit fails after writing the maps") {
    const fs::path dir = scratch("nopairs");
    json j = fast_config();
    j["source"]["pair_rate_per_s"] = 0.0;
    j["source"].erase("target_g2_peak");
    j["source"]["noise_singles_per_s"] = {1000.0, 1000.0};
    RunOptions o;
    o.config_path = write_config(dir, j);
    o.out_dir = dir.string();
    CHECK(run("analyze-spectral", o) == 3);
    for (const char* f : {"fig3a.csv", "fig3b.csv", "fig3c.csv"}) CHECK(fs::exists(dir / f));
    CHECK_FALSE(fs::exists(dir / "fig3d.csv"));
    CHECK_FALSE(fs::exists(dir / "spectral.json"));
  }
  SUBCASE("empty event stream") {
    const fs::path dir = scratch("empty");
    EventStream s;
    s.run_length = 1.0;
    write_event_stream((dir / "events.csv").string(), s, "0");
    RunOptions o;
    o.out_dir = dir.string();
    std::string err;
    CHECK(run("analyze-temporal", o, &err) == 3);
    CHECK(err.find("empty") != std::string::npos);
  }
  SUBCASE("report refuses mislabeled units") {
    const fs::path dir = scratch("units");
    write_json((dir / "temporal.json").string(), {{"delta_t", tagged(6.3e-8, 2e-9, "rad/s")}});
    write_json((dir / "spectral.json").string(),
               {{"delta_omega_sum", tagged(1e6, 4e4, "rad/s")}, {"delta_omega_single", tagged(1.1e7, "rad/s")}});
    RunOptions o;
    o.out_dir = dir.string();
    CHECK(run("report", o) == 2);
    write_json((dir / "temporal.json").string(), {{"delta_t", tagged(6.3e-8, 2e-9, "s")}});
    write_json((dir / "spectral.json").string(),
               {{"delta_omega_sum", tagged(161.78, 6.87, "Hz")}, {"delta_omega_single", tagged(1.1e7, "rad/s")}});
    CHECK(run("report", o) == 2);
  }
  SUBCASE("product exactly one is not a violation") {
    const fs::path dir = scratch("boundary");
    const double w = 2.0e6;
    write_json((dir / "temporal.json").string(), {{"delta_t", tagged(1.0 / w, 0.01 / w, "s")}});
    write_json((dir / "spectral.json").string(),
               {{"delta_omega_sum", tagged(w, 0.01 * w, "rad/s")}, {"delta_omega_single", tagged(4.0 * w, "rad/s")}});
    RunOptions o;
    o.out_dir = dir.string();
    REQUIRE(run("report", o) == 0);
    const json r = read_json((dir / "report.json").string());
    CHECK(r["product"]["value"].get<double>() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_FALSE(r["separability"]["violated"].get<bool>());
    CHECK_FALSE(r["steering_satisfied"].get<bool>());
  }
}

TEST_CASE("executable") {
  CHECK(shell("--help") == 0);
  CHECK(shell("") == 2);
  CHECK(shell("simulate --no-such-flag") == 2);
  CHECK(shell("report --propagation sideways") == 2);
  CHECK(shell("simulate --config /nonexistent.json") == 2);
}

TEST_CASE("end to end runs are deterministic") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::string cfg = write_config(a, fast_config());
  REQUIRE(shell("reproduce-paper --config " + cfg + " --out-dir " + (a / "out").string()) == 0);
  REQUIRE(shell("reproduce-paper --config " + cfg + " --out-dir " + (b / "out").string()) == 0);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(a / "out")) {
    const std::string name = e.path().filename().string();
    if (name == "timing.json") continue;
    CHECK_MESSAGE(slurp(e.path()) == slurp(b / "out" / name), name);
    ++compared;
  }
  CHECK(compared >= 12);
  const json m = read_json((a / "out" / "manifest.json").string());
  CHECK(m["config_hash"] == hex64(config_hash(load_config(cfg))));
  CHECK(m["files"].size() >= 11);

  // thread count does not change results
  const fs::path c = scratch("det_c");
  REQUIRE(shell("simulate --config " + cfg + " --out-dir " + (c / "t1").string()) == 0);
  const std::string env = "BIPHOTON_LAB_THREADS=3 ";
  const std::string cmd = env + "\"" + BIPHOTON_LAB_EXE + "\" simulate --config " + cfg + " --out-dir " + (c / "t3").string() +
                          " >/dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(slurp(c / "t1" / "events.csv") == slurp(c / "t3" / "events.csv"));
}
