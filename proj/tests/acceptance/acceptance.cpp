// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "ringlock/cavity.hpp"
#include "ringlock/cli.hpp"
#include "ringlock/dsp.hpp"
#include "ringlock/loop_sim.hpp"
#include "ringlock/noise.hpp"
#include "ringlock/pdh.hpp"
#include "ringlock/sensitivity.hpp"
#include "ringlock/servo.hpp"

using namespace ringlock;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  fmt::print("AC{:<2} {} | {} | {} [{:.1f} s]\n", id, o.pass ? "PASS" : "FAIL", title, o.detail, secs);
  std::fflush(stdout);
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ringlock");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) throw std::runtime_error("ringlock " + args[1] + " failed: " + err.str());
  return code;
}

json read_json(const fs::path& p) {
  std::ifstream f(p);
  return json::parse(f);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

fs::path work_dir() {
  const auto d = fs::temp_directory_path() / "ringlock_acceptance";
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

CavityParams cavity_with_linewidth(double linewidth_hz) {
  CavityConfig c;
  c.finesse = derive_params(c).fsr_hz / linewidth_hz;
  return derive_params(c);
}

double rel(double a, double b) { return a / b - 1.0; }

}  // namespace

int main() {
  const auto dir = work_dir();

  report(1, "spectral constants", [&] {
    cli({"ringdown", "--out", (dir / "ac1").string()});
    const auto c = read_json(dir / "ac1" / "ringdown.json")["cavity"];
    const double fsr = c["fsr_hz"], tau = c["photon_lifetime_s"];
    const bool ok = std::abs(rel(fsr, 188e6)) <= 0.01 && std::abs(rel(tau, 42e-6)) <= 0.02;
    return Outcome{ok, fmt::format("fsr = {:.4f} MHz ({:+.2f}% vs 188 MHz, tol 1%), tau = {:.3f} us ({:+.2f}% vs 42 us, tol 2%)",
                                   fsr / 1e6, 100 * rel(fsr, 188e6), tau * 1e6, 100 * rel(tau, 42e-6))};
  });

  report(2, "ring-down round trip", [&] {
    std::vector<std::uint64_t> seeds(100);
    std::iota(seeds.begin(), seeds.end(), 1);
    std::string detail;
    bool ok = true;
    for (double f : {15000.0, 50000.0}) {
      CavityConfig c;
      c.finesse = f;
      const auto p = derive_params(c);
      const RingdownConfig rc{10 * p.photon_lifetime_s, 200.0 / p.photon_lifetime_s, 1e-3, 0.01, 0};
      const auto fits = ringdown_monte_carlo(p, rc, seeds, Execution::parallel);
      double worst = 0.0;
      for (const auto& fit : fits) worst = std::max(worst, std::abs(rel(fit.finesse, f)));
      ok = ok && worst <= 0.01 && fits.size() >= 100;
      detail += fmt::format("F={:.0f}: worst |dF/F| = {:.3f}% over {} seeds; ", f, 100 * worst, fits.size());
    }
    return Outcome{ok, detail + "tol 1%"};
  });

  report(3, "PDH slope", [&] {
    const auto p = cavity_with_linewidth(4000.0);
    ModulationConfig m;
    m.mod_frequency_hz = 10e6;
    const double d = discriminator_slope(sideband_powers(m), p.linewidth_hz);
    const double h = 1.0;
    const std::vector<double> det = {-h, 0.0, h};
    const auto e = error_signal_sweep(p, m, det, Execution::serial);
    const double slope = (e[2] - e[0]) / (2 * h);
    return Outcome{std::abs(rel(slope, d)) <= 0.02,
                   fmt::format("numeric {:.6e} W/Hz vs D = {:.6e} W/Hz ({:+.3f}%, tol 2%)", slope, d, 100 * rel(slope, d))};
  });

  report(4, "shot-noise budget", [&] {
    cli({"budget", "--carrier-w", "0.01", "--sideband-w", "0.003", "--linewidth-hz", "4000", "--out",
         (dir / "ac4").string()});
    const auto j = read_json(dir / "ac4" / "budget.json");
    const double g = j["shot_freq_psd_hz_rthz"], gp = j["shot_power_psd_w_rthz"], d = j["discriminator_w_per_hz"];
    const double consistency = std::abs(g * d / gp - 1.0);
    const bool ok = std::abs(rel(g, 1.03e-5)) <= 0.05 && std::abs(rel(g, 1e-5)) <= 0.05 && consistency <= 1e-10;
    return Outcome{ok, fmt::format("gamma_snnu = {:.4e} Hz/rtHz ({:+.2f}% vs 1.03e-5, {:+.2f}% vs 1e-5, tol 5%); "
                                   "|gamma_snnu*D/gamma_snP - 1| = {:.1e} (tol 1e-10)",
                                   g, 100 * rel(g, 1.03e-5), 100 * rel(g, 1e-5), consistency)};
  });

  report(5, "servo shape", [&] {
    const double pole = derive_params(CavityConfig{}).cavity_pole_hz();
    const auto cal = calibrate_loop(ServoChain::reference_default(), pole, 10.0, 180e3);
    const auto& r = cal.report;
    const bool ok = std::abs(r.resonance_peak_db - 10.0) <= 2.0 && std::abs(rel(r.resonance_frequency_hz, 180e3)) <= 0.15 &&
                    r.unity_gain_frequency_hz >= 60e3 && r.unity_gain_frequency_hz <= 90e3;
    return Outcome{ok, fmt::format("peak {:.2f} dB at {:.1f} kHz, UGF {:.1f} kHz, PM {:.1f} deg, GM {:.2f} dB "
                                   "(gain {:.8g}, delay {:.6g} s)",
                                   r.resonance_peak_db, r.resonance_frequency_hz / 1e3, r.unity_gain_frequency_hz / 1e3,
                                   r.phase_margin_deg, r.gain_margin_db, cal.overall_gain, cal.loop_delay_s)};
  });

  report(6, "end-to-end calibration", [&] {
    bool ok = true;
    std::string detail;
    for (double f : {217.0, 276.0}) {
      Scenario sc;
      sc.run.duration_s = 10.0;
      sc.injection = InjectionConfig{1.0, f, 0.85e-3};
      const auto t0 = std::chrono::steady_clock::now();
      const auto run = run_lock(sc);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const auto li = lock_in(run.trace.channel("ccw_error_w"), run.trace.sample_rate(), LockInConfig::for_reference(f));
      const double got = li.magnitude / run.report.discriminator_w_per_hz;
      const double want = 0.85e-3 * 1.0 * f;
      ok = ok && std::abs(rel(got, want)) <= 0.02 && secs <= 60.0;
      detail += fmt::format("f={:.0f} Hz: {:.5f} Hz vs {:.5f} Hz ({:+.2f}%, run {:.1f} s); ", f, got, want,
                            100 * rel(got, want), secs);
    }
    return Outcome{ok, detail + "tol 2%, <= 60 s/run"};
  });

  report(7, "linearity", [&] {
    Scenario sc;
    sc.run.duration_s = 5.0;
    sc.injection = InjectionConfig{1.0, 217.0, 0.85e-3};
    const std::vector<double> amps = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
    const auto scan = sensitivity_scan(sc, amps, std::nullopt, Execution::parallel);
    const double decades = std::log10(scan.points.back().fm_amplitude_hz / scan.points.front().fm_amplitude_hz);
    const bool ok = std::abs(scan.fit.slope - 1.0) <= 0.01 && decades >= 6.0 && scan.points_in_fit == amps.size();
    return Outcome{ok, fmt::format("log-log slope {:.5f} over {:.1f} decades ({} points; tol 1.00 +- 0.01)", scan.fit.slope,
                                   decades, scan.points_in_fit)};
  });

  report(8, "sensitivity floor (scaled)", [&] {
    Scenario sc;
    sc.run.duration_s = 10.0;
    sc.noise.shot_noise_enabled = true;
    sc.noise.rng_seed = 2024;
    sc.injection = InjectionConfig{1.0, 217.0, 0.85e-3};
    const std::vector<double> amps = {1e-3, 1e-1, 1e1};
    const auto scan = sensitivity_scan(sc, amps, std::nullopt, Execution::parallel);
    const auto p = derive_params(sc.cavity);
    const double nu = sc.cavity.optical_frequency_hz();
    const auto b = noise_budget(sideband_powers(sc.modulation), p.linewidth_hz, nu);
    const double t = sc.run.duration_s;
    const double expect = b.shot_freq_psd_hz_rthz / std::sqrt(4 * t);
    const double ratio = scan.floor_at_measurement_time_hz / expect;
    const double dn = birefringence_from_frequency(500e-6, 2.8176e14);
    const double gn = noise_equivalent_birefringence(dn, 1000.0);
    const bool conv = std::abs(dn - 500e-6 / 2.8176e14) <= 1e-30 && std::abs(rel(dn, 1.77e-18)) <= 0.005 &&
                      std::abs(gn - dn * std::sqrt(4000.0)) <= 1e-30 && std::abs(rel(gn, 1.12e-16)) <= 0.005;
    const bool ok = ratio >= 0.5 && ratio <= 2.0 && conv;
    return Outcome{ok, fmt::format("floor at T=10 s {:.3e} Hz vs gamma_snnu/sqrt(4T) = {:.3e} Hz (ratio {:.2f}, tol x2); "
                                   "extrapolated to 1000 s: {:.3e} Hz; dn(500 uHz) = {:.4e}, gamma_n = {:.4e}/rtHz",
                                   scan.floor_at_measurement_time_hz, expect, ratio, scan.floor_extrapolated_1000s_hz, dn,
                                   gn)};
  });

  report(9, "spectrum floor", [&] {
    cli({"budget", "--out", (dir / "ac9").string()});
    const auto s = read_json(dir / "ac9" / "budget.json")["spectrum"];
    const double dev = s["deviation_db"];
    return Outcome{std::abs(dev) <= 1.0, fmt::format("Welch mean density {:.4e} W^2/Hz vs shot floor {:.4e} W^2/Hz "
                                                     "({:+.3f} dB, tol 1 dB, {} segments)",
                                                     s["mean_density_w2_per_hz"].get<double>(),
                                                     s["shot_floor_w2_per_hz"].get<double>(), dev,
                                                     s["segments_count"].get<int>())};
  });

  report(10, "determinism", [&] {
    const auto sc = dir / "ac10.ini";
    std::ofstream(sc) << "[cavity]\n[modulation]\n[servo.fast]\n[servo.pzt]\n[servo.tec]\n"
                         "[noise]\nshot_noise_enabled = true\nwhite_frequency_noise_hz_rthz = 0.02\n"
                         "[injection]\ndrive_frequency_hz = 2170\n[run]\nduration_s = 0.6\n"
                         "[sense]\namplitudes_v = 0.1, 1, 10\nlockin_time_constant_s = 0.05\n"
                         "[spectrum]\nduration_s = 0.1\n[sweep]\npoints = 1001\n";
    std::size_t compared = 0;
    std::string mismatch;
    for (const std::string cmd : {"ringdown", "sweep", "bode", "lock", "sense", "budget"}) {
      const auto a = dir / "ac10" / (cmd + "_a"), b = dir / "ac10" / (cmd + "_b");
      cli({cmd, "--scenario", sc.string(), "--seed", "17", "--out", a.string()});
      cli({cmd, "--scenario", sc.string(), "--seed", "17", "--out", b.string()});
      const auto manifest = read_json(a / "manifest.json");
      for (const auto& f : manifest["files"]) {
        const auto name = f.get<std::string>();
        ++compared;
        if (slurp(a / name) != slurp(b / name) || slurp(a / name).empty()) mismatch += cmd + "/" + name + " ";
      }
    }
    return Outcome{mismatch.empty() && compared >= 6,
                   mismatch.empty() ? fmt::format("{} data files byte-identical across repeated runs of 6 subcommands", compared)
                                    : "differs: " + mismatch};
  });

  fmt::print("{} of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
