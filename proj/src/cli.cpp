#include "ringlock/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "ringlock/cavity.hpp"
#include "ringlock/constants.hpp"
#include "ringlock/dsp.hpp"
#include "ringlock/errors.hpp"
#include "ringlock/execution.hpp"
#include "ringlock/loop_sim.hpp"
#include "ringlock/noise.hpp"
#include "ringlock/pdh.hpp"
#include "ringlock/scenario.hpp"
#include "ringlock/sensitivity.hpp"
#include "ringlock/servo.hpp"

#ifndef RINGLOCK_VERSION
#define RINGLOCK_VERSION "0.0.0"
#endif

namespace ringlock {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Options {
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  int workers = 0;
  bool print_defaults = false;
  std::optional<double> carrier_w;
  std::optional<double> sideband_w;
  std::optional<double> linewidth_hz;
};

// Collects output files so the manifest can list them.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw std::runtime_error(fmt::format("cannot create output directory '{}': {}", dir_.string(), ec.message()));
  }

  std::ofstream open(const std::string& name) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", (dir_ / name).string()));
    files_.push_back(name);
    return f;
  }

  void write_json(const std::string& name, const json& j) {
    auto f = open(name);
    f << j.dump(2) << '\n';
  }

  const fs::path& path() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

std::string csv_number(double v) { return fmt::format("{:.15g}", v); }

json cavity_json(const CavityConfig& c, const CavityParams& p) {
  return {{"arm_length_m", c.arm_length_m},
          {"mirror_count", c.mirror_count},
          {"perimeter_m", c.perimeter_m()},
          {"configured_finesse_ratio", c.finesse},
          {"optical_frequency_hz", c.optical_frequency_hz()},
          {"fsr_hz", p.fsr_hz},
          {"linewidth_hz", p.linewidth_hz},
          {"photon_lifetime_s", p.photon_lifetime_s},
          {"roundtrip_amplitude_ratio", p.roundtrip_amplitude},
          {"cavity_pole_hz", p.cavity_pole_hz()}};
}

json loop_json(const LoopReport& r) {
  json j = {{"unity_gain_frequency_hz", r.unity_gain_frequency_hz},
            {"phase_margin_deg", r.phase_margin_deg},
            {"resonance_frequency_hz", r.resonance_frequency_hz},
            {"resonance_peak_db", r.resonance_peak_db},
            {"stable", r.stable}};
  // A loop whose phase never reaches -180 deg has no finite gain margin; JSON has no inf.
  if (std::isfinite(r.gain_margin_db)) {
    j["gain_margin_db"] = r.gain_margin_db;
    j["phase_crossover_hz"] = r.phase_crossover_hz;
  } else {
    j["gain_margin_db"] = nullptr;
  }
  return j;
}

json stage_json(const FilterStage& s) {
  json j = {{"kind", std::string(to_string(s.kind))}, {"gain_ratio", s.proportional_gain}};
  if (s.kind == StageKind::pi || s.kind == StageKind::pid) j["integrator_corner_hz"] = s.integrator_corner_hz;
  if (s.kind == StageKind::pid) {
    j["differentiator_corner_hz"] = s.differentiator_corner_hz;
    j["derivative_rolloff_ratio"] = s.derivative_rolloff;
  }
  if (s.kind == StageKind::lead) {
    j["lead_zero_hz"] = s.lead_zero_hz;
    j["lead_pole_hz"] = s.lead_pole_hz;
  }
  return j;
}

json servo_json(const ServoChain& c) {
  json fast = json::array();
  for (const auto& s : c.fast_stages) fast.push_back(stage_json(s));
  return {{"overall_gain_ratio", c.overall_gain},
          {"loop_delay_s", c.loop_delay_s},
          {"fast_stages", fast},
          {"pzt_stage", c.pzt_stage ? stage_json(*c.pzt_stage) : json(nullptr)},
          {"tec_stage", c.tec_stage ? stage_json(*c.tec_stage) : json(nullptr)}};
}

void apply_seed(ScenarioFile& file, const Options& opt) {
  if (opt.seed) file.scenario.noise.rng_seed = *opt.seed;
}

std::uint64_t seed_of(const ScenarioFile& file) { return file.scenario.noise.rng_seed; }

void cmd_ringdown(const ScenarioFile& file, OutputDir& out) {
  const auto params = derive_params(file.scenario.cavity);
  RingdownConfig rc;
  rc.duration_s = file.ringdown.duration_s;
  rc.sample_rate_hz = file.ringdown.sample_rate_hz;
  rc.initial_power_w = file.ringdown.initial_power_w;
  rc.relative_noise = file.ringdown.relative_noise;
  rc.seed = seed_of(file);
  const auto trace = ringdown_trace(params, rc);
  const auto fit = fit_ringdown(trace, params.fsr_hz);
  {
    auto f = out.open("ringdown.csv");
    trace.write_csv(f);
  }
  out.write_json("ringdown.json",
                 {{"cavity", cavity_json(file.scenario.cavity, params)},
                  {"ringdown",
                   {{"duration_s", rc.duration_s},
                    {"sample_rate_hz", rc.sample_rate_hz},
                    {"initial_power_w", rc.initial_power_w},
                    {"relative_noise_ratio", rc.relative_noise},
                    {"seed_u64", rc.seed}}},
                  {"fit",
                   {{"tau_s", fit.tau_s},
                    {"finesse_ratio", fit.finesse},
                    {"initial_power_w", fit.initial_power_w},
                    {"samples_used_count", fit.samples_used},
                    {"finesse_relative_error_ratio", fit.finesse / file.scenario.cavity.finesse - 1.0}}}});
}

void cmd_sweep(ScenarioFile file, OutputDir& out) {
  const auto params = derive_params(file.scenario.cavity);
  auto& mod = file.scenario.modulation;
  if (file.sweep.auto_phase) mod.demod_phase_rad = auto_demod_phase(params, mod);
  const auto powers = sideband_powers(mod);
  std::vector<double> det(file.sweep.points);
  for (std::size_t i = 0; i < det.size(); ++i)
    det[i] = file.sweep.span_hz * (-0.5 + static_cast<double>(i) / static_cast<double>(det.size() - 1));
  const auto err = error_signal_sweep(params, mod, det, Execution::serial);
  {
    auto f = out.open("sweep.csv");
    f << "detuning_hz,error_w\n";
    for (std::size_t i = 0; i < det.size(); ++i) f << csv_number(det[i]) << ',' << csv_number(err[i]) << '\n';
  }
  const double d = discriminator_slope(powers, params.linewidth_hz);
  const double slope = numeric_slope_at_resonance(params, mod);
  json j = {{"cavity", cavity_json(file.scenario.cavity, params)},
            {"modulation",
             {{"mod_frequency_hz", mod.mod_frequency_hz},
              {"mod_depth_rad", mod.mod_depth_rad},
              {"input_power_w", mod.input_power_w},
              {"demod_phase_rad", mod.demod_phase_rad}}},
            {"carrier_w", powers.carrier_w},
            {"sideband_w", powers.sideband_w},
            {"discriminator_w_per_hz", d},
            {"numeric_slope_w_per_hz", slope},
            {"slope_to_discriminator_ratio", slope / d},
            {"points_count", det.size()}};
  if (auto w = regime_warning(params, mod)) j["warning"] = *w;
  out.write_json("sweep.json", j);
}

void cmd_bode(const ScenarioFile& file, OutputDir& out) {
  const auto params = derive_params(file.scenario.cavity);
  const auto& chain = file.scenario.servo;
  chain.validate();
  const double pole = params.cavity_pole_hz();
  const auto report = loop_report_unchecked(chain, pole);
  const auto freqs = log_frequency_grid(file.bode.f_min_hz, file.bode.f_max_hz, file.bode.points);
  const auto points = bode(chain, pole, freqs, Execution::serial);
  {
    auto f = out.open("bode.csv");
    f << "frequency_hz,magnitude_db,phase_deg,suppression_db\n";
    for (const auto& p : points)
      f << csv_number(p.frequency_hz) << ',' << csv_number(p.magnitude_db) << ',' << csv_number(p.phase_deg) << ','
        << csv_number(suppression_db(chain, pole, p.frequency_hz)) << '\n';
  }
  out.write_json("loop.json", {{"cavity", cavity_json(file.scenario.cavity, params)},
                               {"plant_pole_hz", pole},
                               {"servo", servo_json(chain)},
                               {"loop", loop_json(report)},
                               {"suppression_at_217hz_db", suppression_db(chain, pole, 217.0)}});
  if (!report.stable)
    throw UnstableLoopError(fmt::format("loop is unstable (phase margin {:.3g} deg, gain margin {:.3g} dB)",
                                        report.phase_margin_deg, report.gain_margin_db));
}

void cmd_lock(const ScenarioFile& file, OutputDir& out) {
  const auto& sc = file.scenario;
  const auto run = run_lock(sc);
  {
    auto f = out.open("trace.csv");
    run.trace.write_csv(f);
  }
  const auto& r = run.report;
  json j = {{"locked", true},
            {"duration_s", r.duration_s},
            {"sample_rate_hz", r.sample_rate_hz},
            {"samples_count", r.samples},
            {"record_rate_hz", r.record_rate_hz},
            {"delay",
             {{"requested_s", r.requested_delay_s},
              {"samples_count", r.delay_samples},
              {"effective_s", r.effective_delay_s},
              {"rounding_s", r.effective_delay_s - r.requested_delay_s}}},
            {"discriminator_w_per_hz", r.discriminator_w_per_hz},
            {"detector_psd_w_rthz", r.detector_psd_w_rthz},
            {"servo", servo_json(sc.servo)},
            {"loop", loop_json(r.loop)},
            {"time_to_lock_s", r.time_to_lock_s},
            {"residual_rms_cw_detuning_hz", r.residual_rms_cw_detuning_hz},
            {"mean_ccw_error_w", r.mean_ccw_error_w},
            {"mean_ccw_equivalent_hz", r.mean_ccw_error_w / r.discriminator_w_per_hz},
            {"max_abs_aom_cmd_hz", r.max_abs_aom_cmd_hz},
            {"seed_u64", sc.noise.rng_seed}};
  if (sc.injection) {
    const auto li_cfg = LockInConfig::for_reference(sc.injection->drive_frequency_hz);
    const auto& ccw = run.trace.channel("ccw_error_w");
    json inj = {{"drive_amplitude_v", sc.injection->drive_amplitude_v},
                {"drive_frequency_hz", sc.injection->drive_frequency_hz},
                {"eom_depth_rad_per_v", sc.injection->eom_depth_rad_per_v},
                {"fm_amplitude_hz", sc.injection->fm_amplitude_hz()},
                {"lockin_time_constant_s", li_cfg.time_constant_s},
                {"lockin_filter_order_count", li_cfg.filter_order}};
    if (static_cast<double>(ccw.size()) >= 10.0 * li_cfg.time_constant_s * run.trace.sample_rate()) {
      const auto li = lock_in(ccw, run.trace.sample_rate(), li_cfg);
      inj["lockin_magnitude_w"] = li.magnitude;
      inj["lockin_phase_rad"] = li.phase_rad;
      inj["equivalent_frequency_hz"] = li.magnitude / r.discriminator_w_per_hz;
    } else {
      inj["note"] = "run shorter than 10 lock-in time constants; no lock-in reading";
    }
    j["injection"] = inj;
  }
  out.write_json("report.json", j);
}

void cmd_sense(const ScenarioFile& file, OutputDir& out) {
  const auto& sc = file.scenario;
  const InjectionConfig base = sc.injection.value_or(InjectionConfig{});
  LockInConfig li = LockInConfig::for_reference(base.drive_frequency_hz);
  if (file.sense.lockin_time_constant_s > 0.0) li.time_constant_s = file.sense.lockin_time_constant_s;
  li.filter_order = file.sense.lockin_filter_order;
  const auto scan = sensitivity_scan(sc, file.sense.amplitudes_v, li, Execution::parallel);
  {
    auto f = out.open("scan.csv");
    f << "drive_amplitude_v,fm_amplitude_hz,lockin_w,equivalent_hz,lock_lost\n";
    for (const auto& p : scan.points)
      f << csv_number(p.drive_amplitude_v) << ',' << csv_number(p.fm_amplitude_hz) << ','
        << csv_number(p.lockin_reading_w) << ',' << csv_number(p.equivalent_frequency_hz) << ','
        << (p.lock_lost ? 1 : 0) << '\n';
  }
  const double nu = sc.cavity.optical_frequency_hz();
  const double dn_1000 = birefringence_from_frequency(scan.floor_extrapolated_1000s_hz, nu);
  const auto params = derive_params(sc.cavity);
  const auto budget = noise_budget(sideband_powers(sc.modulation), params.linewidth_hz, nu);
  json points = json::array();
  for (const auto& p : scan.points)
    points.push_back({{"drive_amplitude_v", p.drive_amplitude_v},
                      {"fm_amplitude_hz", p.fm_amplitude_hz},
                      {"lockin_w", p.lockin_reading_w},
                      {"equivalent_hz", p.equivalent_frequency_hz},
                      {"lock_lost", p.lock_lost},
                      {"used_in_fit", p.used_in_fit}});
  out.write_json("fit.json",
                 {{"lockin",
                   {{"reference_frequency_hz", scan.lockin.reference_frequency_hz},
                    {"time_constant_s", scan.lockin.time_constant_s},
                    {"filter_order_count", scan.lockin.filter_order},
                    {"enbw_hz", lock_in_enbw_hz(scan.lockin)}}},
                  {"discriminator_w_per_hz", scan.discriminator_w_per_hz},
                  {"measurement_time_s", scan.measurement_time_s},
                  {"loglog_slope_ratio", scan.fit.slope},
                  {"loglog_intercept_log10hz", scan.fit.intercept},
                  {"points_in_fit_count", scan.points_in_fit},
                  {"floor_reading_w", scan.floor_reading_w},
                  {"floor_equivalent_hz", scan.floor_equivalent_hz},
                  {"floor_at_measurement_time_hz", scan.floor_at_measurement_time_hz},
                  {"shot_limit_at_measurement_time_hz",
                   budget.shot_freq_psd_hz_rthz / std::sqrt(4.0 * scan.measurement_time_s)},
                  {"floor_extrapolated_1000s_hz", scan.floor_extrapolated_1000s_hz},
                  {"floor_extrapolated_1000s_birefringence_ratio", dn_1000},
                  {"floor_extrapolated_1000s_gamma_n_rthz", noise_equivalent_birefringence(dn_1000, 1000.0)},
                  {"smallest_resolved_fm_hz", scan.smallest_resolved_fm_hz},
                  {"seed_u64", sc.noise.rng_seed},
                  {"points", points}});
}

void cmd_budget(const ScenarioFile& file, const Options& opt, OutputDir& out) {
  const auto& sc = file.scenario;
  const auto params = derive_params(sc.cavity);
  SidebandPowers powers = sideband_powers(sc.modulation);
  if (opt.carrier_w) powers.carrier_w = *opt.carrier_w;
  if (opt.sideband_w) powers.sideband_w = *opt.sideband_w;
  const double linewidth = opt.linewidth_hz.value_or(params.linewidth_hz);
  const double nu = sc.cavity.optical_frequency_hz();
  const auto b = noise_budget(powers, linewidth, nu);

  // Shot-only detector noise, analyzed like the measured error-signal spectrum.
  const auto& sp = file.spectrum;
  NoiseConfig nc;
  nc.shot_noise_enabled = true;
  nc.detector_psd_w_rthz = b.shot_power_psd_w_rthz;
  nc.rng_seed = sc.noise.rng_seed;
  const auto count = static_cast<std::size_t>(std::llround(sp.duration_s * sp.sample_rate_hz));
  const auto series = sample_noise(nc, count, sp.sample_rate_hz);
  WelchConfig wc{sp.segment_length, sp.overlap_fraction, sp.window};
  const auto psd = welch_psd(series.detector_w, sp.sample_rate_hz, wc, Execution::serial);
  const double floor = b.shot_power_psd_w_rthz * b.shot_power_psd_w_rthz;
  {
    auto f = out.open("detector_psd.csv");
    f << "frequency_hz,psd_w2_per_hz,shot_floor_w2_per_hz\n";
    for (std::size_t i = 0; i < psd.frequency_hz.size(); ++i)
      f << csv_number(psd.frequency_hz[i]) << ',' << csv_number(psd.density[i]) << ',' << csv_number(floor) << '\n';
  }
  const double measured = mean_density(psd, psd.resolution_hz, 0.5 * sp.sample_rate_hz - psd.resolution_hz);
  out.write_json("budget.json",
                 {{"carrier_w", powers.carrier_w},
                  {"sideband_w", powers.sideband_w},
                  {"linewidth_hz", linewidth},
                  {"optical_frequency_hz", nu},
                  {"reflected_power_w", b.reflected_power_w},
                  {"discriminator_w_per_hz", b.discriminator_w_per_hz},
                  {"shot_power_psd_w_rthz", b.shot_power_psd_w_rthz},
                  {"shot_freq_psd_hz_rthz", b.shot_freq_psd_hz_rthz},
                  {"shot_freq_psd_closed_form_hz_rthz", b.shot_freq_psd_closed_form_hz_rthz},
                  {"shot_birefringence_psd_rthz", b.shot_birefringence_psd_rthz},
                  {"spectrum",
                   {{"duration_s", sp.duration_s},
                    {"sample_rate_hz", sp.sample_rate_hz},
                    {"segments_count", psd.segments},
                    {"resolution_hz", psd.resolution_hz},
                    {"window", std::string(to_string(sp.window))},
                    {"mean_density_w2_per_hz", measured},
                    {"shot_floor_w2_per_hz", floor},
                    {"deviation_db", 10.0 * std::log10(measured / floor)},
                    {"seed_u64", nc.rng_seed}}}});
}

std::string timestamp(std::chrono::system_clock::time_point t) {
  const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(t);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t - secs).count();
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03d}Z", fmt::gmtime(std::chrono::system_clock::to_time_t(t)), ms);
}

json error_json(const std::string& type, const std::string& message) {
  return {{"error", {{"type", type}, {"message", message}}}};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ring-cavity PDH lock simulator", "ringlock"};
  app.fallthrough();
  app.set_version_flag("--version", RINGLOCK_VERSION);
  Options opt;
  std::uint64_t seed_value = 0;
  app.add_option("--scenario", opt.scenario_path, "Scenario file (INI)");
  auto* seed_opt = app.add_option("--seed", seed_value, "RNG seed (overrides [noise] seed)");
  app.add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
  app.add_option("--workers", opt.workers, "Worker threads for parallel kernels (0 = all)")->check(CLI::NonNegativeNumber);
  app.add_flag("--print-defaults", opt.print_defaults, "Print the fully resolved scenario and exit");

  app.add_subcommand("ringdown", "Synthesize a ring-down trace and refit the finesse");
  app.add_subcommand("sweep", "Static PDH error signal versus detuning");
  app.add_subcommand("bode", "Open-loop Bode data and loop report");
  app.add_subcommand("lock", "Closed-loop time-domain run");
  app.add_subcommand("sense", "Sensitivity scan over injection amplitudes");
  auto* budget = app.add_subcommand("budget", "Shot-noise budget and simulated detector spectrum");
  double carrier = 0.0, sideband = 0.0, linewidth = 0.0;
  auto* carrier_opt = budget->add_option("--carrier-w", carrier, "Carrier power override (W)");
  auto* sideband_opt = budget->add_option("--sideband-w", sideband, "Sideband power override (W)");
  auto* linewidth_opt = budget->add_option("--linewidth-hz", linewidth, "Cavity linewidth override (Hz)");
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_json("usage", e.what()).dump() << '\n';
    return kExitUsage;
  }
  if (*seed_opt) opt.seed = seed_value;
  if (*carrier_opt) opt.carrier_w = carrier;
  if (*sideband_opt) opt.sideband_w = sideband;
  if (*linewidth_opt) opt.linewidth_hz = linewidth;

  const auto subs = app.get_subcommands();
  const std::string command = subs.empty() ? "" : subs.front()->get_name();

  try {
    ScenarioFile file = opt.scenario_path.empty() ? ScenarioFile{} : load_scenario(opt.scenario_path);
    apply_seed(file, opt);
    if (opt.print_defaults) {
      write_scenario(out, file);
      return kExitOk;
    }
    if (command.empty()) {
      err << error_json("usage", "a subcommand is required (ringdown, sweep, bode, lock, sense, budget)").dump() << '\n';
      return kExitUsage;
    }
    if (!opt.scenario_path.empty()) {
      if (command == "ringdown") file.require_sections({"cavity"});
      if (command == "sweep") file.require_sections({"cavity", "modulation"});
      if (command == "bode") file.require_sections({"cavity", "servo.fast", "servo.pzt", "servo.tec"});
      if (command == "lock" || command == "sense")
        file.require_sections({"cavity", "modulation", "servo.fast", "servo.pzt", "servo.tec", "run"});
      if (command == "sense") file.require_sections({"injection"});
      if (command == "budget" && !(opt.carrier_w && opt.sideband_w && opt.linewidth_hz))
        file.require_sections({"cavity", "modulation"});
    }
    set_worker_count(opt.workers);

    const auto started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();
    OutputDir dir(opt.out_dir);
    if (command == "ringdown") cmd_ringdown(file, dir);
    else if (command == "sweep") cmd_sweep(file, dir);
    else if (command == "bode") cmd_bode(file, dir);
    else if (command == "lock") cmd_lock(file, dir);
    else if (command == "sense") cmd_sense(file, dir);
    else if (command == "budget") cmd_budget(file, opt, dir);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // Written last: its presence marks a complete run. Timestamps live only here.
    json manifest = {{"tool", "ringlock"},
                     {"version", RINGLOCK_VERSION},
                     {"subcommand", command},
                     {"scenario", opt.scenario_path.empty() ? json(nullptr) : json(opt.scenario_path)},
                     {"seed_u64", seed_of(file)},
                     {"output_dir", dir.path().string()},
                     {"workers_count", resolved_threads()},
                     {"started_utc", timestamp(started)},
                     {"finished_utc", timestamp(std::chrono::system_clock::now())},
                     {"wall_clock_s", wall},
                     {"files", dir.files()}};
    {
      std::ofstream f(dir.path() / "manifest.json", std::ios::binary);
      f << manifest.dump(2) << '\n';
    }
    out << (dir.path() / "manifest.json").string() << '\n';
    return kExitOk;
  } catch (const ScenarioError& e) {
    json j = error_json("scenario", e.what());
    j["error"]["section"] = e.section();
    err << j.dump() << '\n';
    return kExitUsage;
  } catch (const LockLossError& e) {
    json j = error_json("lock_loss", e.what());
    j["error"]["time_s"] = e.time_s();
    err << j.dump() << '\n';
    return kExitLockLoss;
  } catch (const UnstableLoopError& e) {
    err << error_json("unstable_loop", e.what()).dump() << '\n';
    return kExitUnstable;
  } catch (const LoopInactiveError& e) {
    err << error_json("loop_inactive", e.what()).dump() << '\n';
    return kExitInvalid;
  } catch (const ValidationError& e) {
    err << error_json("validation", e.what()).dump() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << error_json("internal", e.what()).dump() << '\n';
    return kExitFailure;
  }
}

}  // namespace ringlock
