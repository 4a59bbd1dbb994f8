#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ringlock/cli.hpp"
#include "ringlock/errors.hpp"
#include "ringlock/scenario.hpp"

using namespace ringlock;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ringlock_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ringlock");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream f(p);
  return nlohmann::json::parse(f);
}

bool has_unit_suffix(const std::string& key) {
  static const std::vector<std::string> suffixes = {
      "_hz", "_s", "_w", "_m", "_w_per_hz", "_db", "_deg", "_rad", "_v", "_rad_per_v", "_w_rthz", "_hz_rthz",
      "_rthz", "_ratio", "_count", "_u64", "_w2_per_hz", "_log10hz"};
  for (const auto& s : suffixes)
    if (key.size() > s.size() && key.compare(key.size() - s.size(), s.size(), s) == 0) return true;
  return false;
}

void check_units(const nlohmann::json& j, const std::string& path) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (v.is_number()) {
        CAPTURE(path + "." + k);
        CHECK(has_unit_suffix(k));
      }
      check_units(v, path + "." + k);
    }
  } else if (j.is_array()) {
    for (const auto& v : j) {
      CAPTURE(path);
      CHECK_FALSE(v.is_number());
      check_units(v, path + "[]");
    }
  }
}

const char* kSmall = R"(
; short runs for tests
[cavity]
arm_length_m = 0.4
finesse = 50000

[modulation]
input_power_w = 0.01708

[servo.fast]
[servo.pzt]
[servo.tec]

[noise]
shot_noise_enabled = true

[injection]
drive_amplitude_v = 1
drive_frequency_hz = 2170

[run]
duration_s = 0.6

[ringdown]
duration_s = 0.0004

[sweep]
points = 201

[bode]
points = 61

[sense]
amplitudes_v = 0.1, 1, 10
lockin_time_constant_s = 0.05

[spectrum]
duration_s = 0.05
)";

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("scenario parse: defaults, sections, values") {
  std::istringstream in(kSmall);
  const auto f = parse_scenario(in);
  CHECK(f.has_section("servo.fast"));
  CHECK(f.has_section("run"));
  CHECK(f.scenario.run.duration_s == 0.6);
  CHECK(f.scenario.injection->drive_frequency_hz == 2170.0);
  CHECK(f.sense.amplitudes_v == std::vector<double>{0.1, 1.0, 10.0});
  CHECK(f.scenario.servo.fast_stages.size() == 4);
  CHECK(f.scenario.noise.shot_noise_enabled);
}

TEST_CASE("scenario parse errors name the section") {
  auto err = [](const std::string& text) -> std::string {
    std::istringstream in(text);
    try {
      parse_scenario(in);
    } catch (const ScenarioError& e) {
      return e.section() + "|" + e.what();
    }
    return "no error";
  };
  CHECK(err("[cavity]\narm_lenght_m = 0.4\n").find("cavity|") == 0);
  CHECK(err("[cavity]\narm_lenght_m = 0.4\n").find("arm_lenght_m") != std::string::npos);
  CHECK(err("[servo]\nx = 1\n").find("servo|") == 0);
  CHECK(err("[run]\nduration_s = ten\n").find("run|") == 0);
  CHECK(err("[run]\nduration_s = -1\n").find("run|") == 0);
  CHECK(err("[servo.fast]\nstage_count = 1\nstage1_kind = pdi\n").find("servo.fast|") == 0);
  CHECK(err("[noise]\nshot_noise_enabled = yes\n").find("noise|") == 0);
  CHECK(err("[sense]\namplitudes_v = 1, 2\n").find("sense|") == 0);
}

TEST_CASE("resolved scenario round-trips") {
  std::istringstream in(kSmall);
  const auto f = parse_scenario(in);
  std::ostringstream a;
  write_scenario(a, f);
  std::istringstream again(a.str());
  const auto g = parse_scenario(again);
  std::ostringstream b;
  write_scenario(b, g);
  CHECK(a.str() == b.str());
  CHECK(g.scenario.servo.overall_gain == f.scenario.servo.overall_gain);
  CHECK(g.scenario.servo.loop_delay_s == f.scenario.servo.loop_delay_s);
}

TEST_CASE("cli: budget at the reference working point") {
  const auto dir = fresh_dir("budget");
  const auto r = cli({"budget", "--carrier-w", "0.01", "--sideband-w", "0.003", "--linewidth-hz", "4000", "--out",
                      dir.string()});
  REQUIRE(r.code == 0);
  const auto j = read_json(dir / "budget.json");
  CHECK(j["shot_freq_psd_hz_rthz"].get<double>() == doctest::Approx(1.03e-5).epsilon(0.01));
  CHECK(fs::exists(dir / "manifest.json"));
  const auto m = read_json(dir / "manifest.json");
  CHECK(m["files"].size() == 2);
}

TEST_CASE("cli: lock without a servo section fails naming the section") {
  const auto dir = fresh_dir("noservo");
  const auto sc = write_file(dir, "s.ini", "[cavity]\n[modulation]\n[run]\nduration_s = 0.01\n");
  const auto r = cli({"lock", "--scenario", sc.string(), "--out", (dir / "o").string()});
  CHECK(r.code != 0);
  const auto j = nlohmann::json::parse(r.err);
  CHECK(j["error"]["type"] == "scenario");
  CHECK(j["error"]["section"].get<std::string>().rfind("servo", 0) == 0);
  CHECK_FALSE(fs::exists(dir / "o" / "manifest.json"));
}

TEST_CASE("cli: usage and unknown-key errors are machine readable") {
  auto r = cli({"frobnicate"});
  CHECK(r.code == kExitUsage);
  CHECK(nlohmann::json::parse(r.err)["error"]["type"] == "usage");
  const auto dir = fresh_dir("badkey");
  const auto sc = write_file(dir, "s.ini", "[cavity]\nfinese = 3\n");
  r = cli({"ringdown", "--scenario", sc.string(), "--out", dir.string()});
  CHECK(r.code == kExitUsage);
  CHECK(nlohmann::json::parse(r.err)["error"]["section"] == "cavity");
}

TEST_CASE("cli: print-defaults emits a parseable scenario") {
  const auto r = cli({"--print-defaults"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  const auto f = parse_scenario(in);
  CHECK(f.scenario.servo.overall_gain == ServoChain::reference_default().overall_gain);
}

TEST_CASE("cli: every subcommand writes unit-suffixed JSON and a manifest") {
  const auto dir = fresh_dir("all");
  const auto sc = write_file(dir, "s.ini", kSmall);
  for (const std::string cmd : {"ringdown", "sweep", "bode", "lock", "sense", "budget"}) {
    CAPTURE(cmd);
    const auto out = dir / cmd;
    const auto r = cli({cmd, "--scenario", sc.string(), "--seed", "5", "--out", out.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto m = read_json(out / "manifest.json");
    CHECK(m["subcommand"] == cmd);
    CHECK(m["seed_u64"] == 5);
    for (const auto& file : m["files"]) {
      CHECK(fs::exists(out / file.get<std::string>()));
      if (file.get<std::string>().find(".json") != std::string::npos)
        check_units(read_json(out / file.get<std::string>()), file.get<std::string>());
    }
    check_units(m, "manifest");
  }
  const auto rd = read_json(dir / "ringdown" / "ringdown.json");
  CHECK(rd["fit"]["finesse_ratio"].get<double>() == doctest::Approx(50000).epsilon(0.01));
}
