#include "ringlock/scenario.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <utility>
#include <fstream>
#include <map>
#include <ostream>
#include <string_view>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ringlock/errors.hpp"

namespace ringlock {

namespace {

std::string trim(std::string_view s);

using RawSection = std::map<std::string, std::string>;

struct RawFile {
  std::vector<std::pair<std::string, RawSection>> sections;
};

// Strict INI: "[name]" headers, "key = value" lines, full-line ';' or '#' comments.
// Empty sections are kept (their presence is meaningful).
RawFile read_ini(std::istream& in) {
  RawFile file;
  std::string line;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3)
        throw ScenarioError(fmt::format("line {}: malformed section header '{}'", line_no, t), "");
      std::string name = trim(std::string_view(t).substr(1, t.size() - 2));
      if (!seen.insert(name).second)
        throw ScenarioError(fmt::format("line {}: duplicate section [{}]", line_no, name), name);
      file.sections.emplace_back(std::move(name), RawSection{});
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ScenarioError(fmt::format("line {}: expected 'key = value', got '{}'", line_no, t), "");
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (file.sections.empty())
      throw ScenarioError(fmt::format("line {}: key '{}' outside of any section", line_no, key), "");
    auto& [section_name, section] = file.sections.back();
    if (key.empty()) throw ScenarioError(fmt::format("line {}: empty key", line_no), section_name);
    if (!section.emplace(key, trim(std::string_view(t).substr(eq + 1))).second)
      throw ScenarioError(fmt::format("line {}: duplicate key '{}'", line_no, key), section_name);
  }
  return file;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& section, const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto* first = t.data();
  const auto* last = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (t.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ScenarioError(fmt::format("[{}] {}: '{}' is not a finite number", section, key, t), section);
  return v;
}

// Key reader for one section; every key must be consumed (misspellings are errors).
class SectionReader {
 public:
  SectionReader(std::string name, RawSection values) : name_(std::move(name)), values_(std::move(values)) {}

  const std::string& name() const { return name_; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  void real(const std::string& key, double& target) {
    if (auto it = take(key)) target = parse_double(name_, key, **it);
  }

  void count(const std::string& key, std::size_t& target) {
    double v = static_cast<double>(target);
    real(key, v);
    if (v < 0.0 || v != std::floor(v) || v > 1e12)
      throw ScenarioError(fmt::format("[{}] {}: expected a non-negative integer", name_, key), name_);
    target = static_cast<std::size_t>(v);
  }

  void integer(const std::string& key, int& target) {
    double v = target;
    real(key, v);
    if (v != std::floor(v) || std::abs(v) > 1e9)
      throw ScenarioError(fmt::format("[{}] {}: expected an integer", name_, key), name_);
    target = static_cast<int>(v);
  }

  void seed(const std::string& key, std::uint64_t& target) {
    if (auto it = take(key)) {
      const std::string t = trim(**it);
      std::uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw ScenarioError(fmt::format("[{}] {}: expected an unsigned 64-bit integer", name_, key), name_);
      target = v;
    }
  }

  void boolean(const std::string& key, bool& target) {
    if (auto it = take(key)) {
      const std::string t = trim(**it);
      if (t == "true") target = true;
      else if (t == "false") target = false;
      else throw ScenarioError(fmt::format("[{}] {}: expected true or false", name_, key), name_);
    }
  }

  void text(const std::string& key, std::string& target) {
    if (auto it = take(key)) target = trim(**it);
  }

  void list(const std::string& key, std::vector<double>& target) {
    if (auto it = take(key)) {
      std::vector<double> out;
      std::string_view rest = **it;
      while (true) {
        const auto comma = rest.find(',');
        out.push_back(parse_double(name_, key, rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      target = std::move(out);
    }
  }

  void finish() const {
    for (const auto& [key, value] : values_)
      if (!used_.count(key))
        throw ScenarioError(fmt::format("[{}] unknown key '{}'", name_, key), name_);
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ScenarioError(fmt::format("[{}] {}", name_, message), name_);
  }

 private:
  std::optional<const std::string*> take(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    used_.insert(key);
    return &it->second;
  }

  std::string name_;
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

FilterStage read_stage(SectionReader& r, const std::string& prefix, FilterStage stage) {
  std::string kind(to_string(stage.kind));
  r.text(prefix + "kind", kind);
  try {
    stage.kind = stage_kind_from_string(kind);
  } catch (const ValidationError& e) {
    r.fail(e.what());
  }
  r.real(prefix + "gain", stage.proportional_gain);
  r.real(prefix + "integrator_corner_hz", stage.integrator_corner_hz);
  r.real(prefix + "differentiator_corner_hz", stage.differentiator_corner_hz);
  r.real(prefix + "derivative_rolloff", stage.derivative_rolloff);
  r.real(prefix + "lead_zero_hz", stage.lead_zero_hz);
  r.real(prefix + "lead_pole_hz", stage.lead_pole_hz);
  return stage;
}

void read_cavity(SectionReader& r, CavityConfig& c) {
  r.real("arm_length_m", c.arm_length_m);
  double mirrors = c.mirror_count;
  r.real("mirror_count", mirrors);
  if (mirrors != std::floor(mirrors) || mirrors < 0 || mirrors > 1e6) r.fail("mirror_count must be an integer");
  c.mirror_count = static_cast<int>(mirrors);
  r.real("finesse", c.finesse);
  r.real("vacuum_wavelength_m", c.vacuum_wavelength_m);
  r.real("anisotropy_detuning_hz", c.anisotropy_detuning_hz);
  r.real("coupler_mismatch", c.coupler_mismatch);
}

void read_modulation(SectionReader& r, ModulationConfig& m) {
  r.real("mod_frequency_hz", m.mod_frequency_hz);
  r.real("mod_depth_rad", m.mod_depth_rad);
  r.real("input_power_w", m.input_power_w);
  r.real("demod_phase_rad", m.demod_phase_rad);
}

void read_fast(SectionReader& r, ServoChain& s) {
  r.real("overall_gain", s.overall_gain);
  r.real("loop_delay_s", s.loop_delay_s);
  std::size_t n = s.fast_stages.size();
  r.count("stage_count", n);
  std::vector<FilterStage> stages(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FilterStage base = i < s.fast_stages.size() ? s.fast_stages[i] : FilterStage{};
    stages[i] = read_stage(r, fmt::format("stage{}_", i + 1), base);
  }
  s.fast_stages = std::move(stages);
}

void read_slow(SectionReader& r, std::optional<FilterStage>& stage) {
  bool enabled = stage.has_value();
  r.boolean("enabled", enabled);
  const FilterStage base = stage.value_or(FilterStage{});
  const FilterStage read = read_stage(r, "", base);
  if (enabled) stage = read;
  else stage.reset();
}

void read_noise(SectionReader& r, NoiseConfig& n) {
  r.boolean("shot_noise_enabled", n.shot_noise_enabled);
  r.real("detector_psd_w_rthz", n.detector_psd_w_rthz);
  r.real("white_frequency_noise_hz_rthz", n.white_frequency_noise_hz_rthz);
  r.real("flicker_level_hz_rthz", n.flicker_level_hz_rthz);
  r.real("flicker_corner_hz", n.flicker_corner_hz);
  r.real("flicker_min_hz", n.flicker_min_hz);
  r.seed("seed", n.rng_seed);
  std::size_t lines = n.technical_lines.size();
  r.count("line_count", lines);
  n.technical_lines.resize(lines);
  for (std::size_t i = 0; i < lines; ++i) {
    r.real(fmt::format("line{}_frequency_hz", i + 1), n.technical_lines[i].frequency_hz);
    r.real(fmt::format("line{}_amplitude_hz_rms", i + 1), n.technical_lines[i].amplitude_hz_rms);
  }
}

void read_injection(SectionReader& r, std::optional<InjectionConfig>& inj) {
  bool enabled = true;
  r.boolean("enabled", enabled);
  InjectionConfig c = inj.value_or(InjectionConfig{});
  r.real("drive_amplitude_v", c.drive_amplitude_v);
  r.real("drive_frequency_hz", c.drive_frequency_hz);
  r.real("eom_depth_rad_per_v", c.eom_depth_rad_per_v);
  if (enabled) inj = c;
  else inj.reset();
}

void read_run(SectionReader& r, RunConfig& c) {
  r.real("duration_s", c.duration_s);
  r.real("sample_rate_hz", c.sample_rate_hz);
  r.real("initial_detuning_hz", c.initial_detuning_hz);
  r.real("lock_loss_dwell_s", c.lock_loss_dwell_s);
  r.count("record_decimation", c.record_decimation);
  r.real("aom_range_hz", c.limits.aom_range_hz);
  r.real("pzt_range_hz", c.limits.pzt_range_hz);
  r.real("tec_range_hz", c.limits.tec_range_hz);
}

void read_ringdown(SectionReader& r, RingdownSettings& c) {
  r.real("duration_s", c.duration_s);
  r.real("sample_rate_hz", c.sample_rate_hz);
  r.real("initial_power_w", c.initial_power_w);
  r.real("relative_noise", c.relative_noise);
}

void read_sweep(SectionReader& r, SweepSettings& c) {
  r.real("span_hz", c.span_hz);
  r.count("points", c.points);
  r.boolean("auto_phase", c.auto_phase);
}

void read_bode(SectionReader& r, BodeSettings& c) {
  r.real("f_min_hz", c.f_min_hz);
  r.real("f_max_hz", c.f_max_hz);
  r.count("points", c.points);
}

void read_sense(SectionReader& r, SenseSettings& c) {
  r.list("amplitudes_v", c.amplitudes_v);
  r.real("lockin_time_constant_s", c.lockin_time_constant_s);
  r.integer("lockin_filter_order", c.lockin_filter_order);
}

void read_spectrum(SectionReader& r, SpectrumSettings& c) {
  r.real("duration_s", c.duration_s);
  r.real("sample_rate_hz", c.sample_rate_hz);
  r.count("segment_length", c.segment_length);
  r.real("overlap_fraction", c.overlap_fraction);
  std::string w(to_string(c.window));
  r.text("window", w);
  try {
    c.window = window_from_string(w);
  } catch (const ValidationError& e) {
    r.fail(e.what());
  }
}

void validate_file(const ScenarioFile& f) {
  auto check = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      throw ScenarioError(fmt::format("[{}] {}", section, e.what()), section);
    }
  };
  const auto& s = f.scenario;
  check("cavity", [&] { s.cavity.validate(); });
  check("modulation", [&] { s.modulation.validate(); });
  check("servo.fast", [&] {
    for (const auto& st : s.servo.fast_stages) st.validate();
    if (!(std::isfinite(s.servo.loop_delay_s) && s.servo.loop_delay_s >= 0.0))
      throw ValidationError("loop_delay_s must be non-negative");
    if (!std::isfinite(s.servo.overall_gain)) throw ValidationError("overall_gain must be finite");
  });
  check("servo.pzt", [&] { if (s.servo.pzt_stage) s.servo.pzt_stage->validate(); });
  check("servo.tec", [&] { if (s.servo.tec_stage) s.servo.tec_stage->validate(); });
  check("run", [&] { s.run.validate(); });
  check("noise", [&] { s.noise.validate(s.run.sample_rate_hz); });
  check("injection", [&] { if (s.injection) s.injection->validate(); });
  check("ringdown", [&] {
    const auto& r = f.ringdown;
    if (!(r.duration_s > 0.0 && r.sample_rate_hz > 0.0 && r.initial_power_w >= 0.0 && r.relative_noise >= 0.0))
      throw ValidationError("ringdown settings must be positive");
  });
  check("sweep", [&] {
    if (!(f.sweep.span_hz > 0.0) || f.sweep.points < 2) throw ValidationError("sweep needs a positive span and >= 2 points");
  });
  check("bode", [&] {
    if (!(f.bode.f_min_hz > 0.0 && f.bode.f_max_hz > f.bode.f_min_hz) || f.bode.points < 2)
      throw ValidationError("bode needs 0 < f_min_hz < f_max_hz and >= 2 points");
  });
  check("sense", [&] {
    if (f.sense.amplitudes_v.size() < 3) throw ValidationError("sense needs at least 3 amplitudes");
    for (double v : f.sense.amplitudes_v)
      if (!(v >= 0.0)) throw ValidationError("amplitudes must be non-negative");
    if (!(f.sense.lockin_time_constant_s >= 0.0)) throw ValidationError("lockin_time_constant_s must be >= 0");
    if (f.sense.lockin_filter_order < 1) throw ValidationError("lockin_filter_order must be >= 1");
  });
  check("spectrum", [&] {
    const auto& c = f.spectrum;
    if (!(c.duration_s > 0.0 && c.sample_rate_hz > 0.0)) throw ValidationError("spectrum needs positive duration and rate");
    if (!(c.overlap_fraction >= 0.0 && c.overlap_fraction < 1.0)) throw ValidationError("overlap_fraction must lie in [0, 1)");
  });
}

std::string num(double v) { return fmt::format("{}", v); }  // shortest round-trip form

void write_stage(std::ostream& out, const std::string& prefix, const FilterStage& s) {
  fmt::print(out, "{}kind = {}\n{}gain = {}\n", prefix, to_string(s.kind), prefix, num(s.proportional_gain));
  switch (s.kind) {
    case StageKind::pure_gain: break;
    case StageKind::pi:
      fmt::print(out, "{}integrator_corner_hz = {}\n", prefix, num(s.integrator_corner_hz));
      break;
    case StageKind::pid:
      fmt::print(out, "{}integrator_corner_hz = {}\n{}differentiator_corner_hz = {}\n{}derivative_rolloff = {}\n",
                 prefix, num(s.integrator_corner_hz), prefix, num(s.differentiator_corner_hz), prefix,
                 num(s.derivative_rolloff));
      break;
    case StageKind::lead:
      fmt::print(out, "{}lead_zero_hz = {}\n{}lead_pole_hz = {}\n", prefix, num(s.lead_zero_hz), prefix,
                 num(s.lead_pole_hz));
      break;
  }
}

}  // namespace

void ScenarioFile::require_sections(std::initializer_list<const char*> names) const {
  for (const char* n : names)
    if (!has_section(n)) throw ScenarioError(fmt::format("missing required section [{}]", n), n);
}

ScenarioFile parse_scenario(std::istream& in) {
  const RawFile raw = read_ini(in);

  using Handler = void (*)(SectionReader&, ScenarioFile&);
  static const std::map<std::string, Handler> handlers = {
      {"cavity", [](SectionReader& r, ScenarioFile& f) { read_cavity(r, f.scenario.cavity); }},
      {"modulation", [](SectionReader& r, ScenarioFile& f) { read_modulation(r, f.scenario.modulation); }},
      {"servo.fast", [](SectionReader& r, ScenarioFile& f) { read_fast(r, f.scenario.servo); }},
      {"servo.pzt", [](SectionReader& r, ScenarioFile& f) { read_slow(r, f.scenario.servo.pzt_stage); }},
      {"servo.tec", [](SectionReader& r, ScenarioFile& f) { read_slow(r, f.scenario.servo.tec_stage); }},
      {"noise", [](SectionReader& r, ScenarioFile& f) { read_noise(r, f.scenario.noise); }},
      {"injection", [](SectionReader& r, ScenarioFile& f) { read_injection(r, f.scenario.injection); }},
      {"run", [](SectionReader& r, ScenarioFile& f) { read_run(r, f.scenario.run); }},
      {"ringdown", [](SectionReader& r, ScenarioFile& f) { read_ringdown(r, f.ringdown); }},
      {"sweep", [](SectionReader& r, ScenarioFile& f) { read_sweep(r, f.sweep); }},
      {"bode", [](SectionReader& r, ScenarioFile& f) { read_bode(r, f.bode); }},
      {"sense", [](SectionReader& r, ScenarioFile& f) { read_sense(r, f.sense); }},
      {"spectrum", [](SectionReader& r, ScenarioFile& f) { read_spectrum(r, f.spectrum); }},
  };

  ScenarioFile file;
  for (const auto& [name, section] : raw.sections) {
    const auto it = handlers.find(name);
    if (it == handlers.end()) throw ScenarioError(fmt::format("unknown section [{}]", name), name);
    SectionReader reader(name, section);
    it->second(reader, file);
    reader.finish();
    file.sections.insert(name);
  }
  validate_file(file);
  return file;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(fmt::format("cannot open scenario file '{}'", path.string()), "");
  return parse_scenario(in);
}

void write_scenario(std::ostream& out, const ScenarioFile& f) {
  const auto& s = f.scenario;
  const auto& c = s.cavity;
  fmt::print(out, "[cavity]\narm_length_m = {}\nmirror_count = {}\nfinesse = {}\nvacuum_wavelength_m = {}\n"
                  "anisotropy_detuning_hz = {}\ncoupler_mismatch = {}\n\n",
             num(c.arm_length_m), c.mirror_count, num(c.finesse), num(c.vacuum_wavelength_m),
             num(c.anisotropy_detuning_hz), num(c.coupler_mismatch));
  const auto& m = s.modulation;
  fmt::print(out, "[modulation]\nmod_frequency_hz = {}\nmod_depth_rad = {}\ninput_power_w = {}\ndemod_phase_rad = {}\n\n",
             num(m.mod_frequency_hz), num(m.mod_depth_rad), num(m.input_power_w), num(m.demod_phase_rad));
  fmt::print(out, "[servo.fast]\noverall_gain = {}\nloop_delay_s = {}\nstage_count = {}\n", num(s.servo.overall_gain),
             num(s.servo.loop_delay_s), s.servo.fast_stages.size());
  for (std::size_t i = 0; i < s.servo.fast_stages.size(); ++i)
    write_stage(out, fmt::format("stage{}_", i + 1), s.servo.fast_stages[i]);
  for (const auto& [name, stage] : {std::pair{"servo.pzt", &s.servo.pzt_stage}, std::pair{"servo.tec", &s.servo.tec_stage}}) {
    fmt::print(out, "\n[{}]\nenabled = {}\n", name, stage->has_value() ? "true" : "false");
    if (stage->has_value()) write_stage(out, "", **stage);
  }
  const auto& n = s.noise;
  fmt::print(out, "\n[noise]\nshot_noise_enabled = {}\ndetector_psd_w_rthz = {}\nwhite_frequency_noise_hz_rthz = {}\n"
                  "flicker_level_hz_rthz = {}\nflicker_corner_hz = {}\nflicker_min_hz = {}\nseed = {}\nline_count = {}\n",
             n.shot_noise_enabled, num(n.detector_psd_w_rthz), num(n.white_frequency_noise_hz_rthz),
             num(n.flicker_level_hz_rthz), num(n.flicker_corner_hz), num(n.flicker_min_hz), n.rng_seed,
             n.technical_lines.size());
  for (std::size_t i = 0; i < n.technical_lines.size(); ++i)
    fmt::print(out, "line{0}_frequency_hz = {1}\nline{0}_amplitude_hz_rms = {2}\n", i + 1,
               num(n.technical_lines[i].frequency_hz), num(n.technical_lines[i].amplitude_hz_rms));
  const InjectionConfig inj = s.injection.value_or(InjectionConfig{});
  fmt::print(out, "\n[injection]\nenabled = {}\ndrive_amplitude_v = {}\ndrive_frequency_hz = {}\neom_depth_rad_per_v = {}\n",
             s.injection.has_value(), num(inj.drive_amplitude_v), num(inj.drive_frequency_hz),
             num(inj.eom_depth_rad_per_v));
  const auto& r = s.run;
  fmt::print(out, "\n[run]\nduration_s = {}\nsample_rate_hz = {}\ninitial_detuning_hz = {}\nlock_loss_dwell_s = {}\n"
                  "record_decimation = {}\naom_range_hz = {}\npzt_range_hz = {}\ntec_range_hz = {}\n",
             num(r.duration_s), num(r.sample_rate_hz), num(r.initial_detuning_hz), num(r.lock_loss_dwell_s),
             r.record_decimation, num(r.limits.aom_range_hz), num(r.limits.pzt_range_hz), num(r.limits.tec_range_hz));
  fmt::print(out, "\n[ringdown]\nduration_s = {}\nsample_rate_hz = {}\ninitial_power_w = {}\nrelative_noise = {}\n",
             num(f.ringdown.duration_s), num(f.ringdown.sample_rate_hz), num(f.ringdown.initial_power_w),
             num(f.ringdown.relative_noise));
  fmt::print(out, "\n[sweep]\nspan_hz = {}\npoints = {}\nauto_phase = {}\n", num(f.sweep.span_hz), f.sweep.points,
             f.sweep.auto_phase);
  fmt::print(out, "\n[bode]\nf_min_hz = {}\nf_max_hz = {}\npoints = {}\n", num(f.bode.f_min_hz), num(f.bode.f_max_hz),
             f.bode.points);
  std::string amps;
  for (std::size_t i = 0; i < f.sense.amplitudes_v.size(); ++i)
    amps += (i ? ", " : "") + num(f.sense.amplitudes_v[i]);
  fmt::print(out, "\n[sense]\namplitudes_v = {}\nlockin_time_constant_s = {}\nlockin_filter_order = {}\n", amps,
             num(f.sense.lockin_time_constant_s), f.sense.lockin_filter_order);
  fmt::print(out, "\n[spectrum]\nduration_s = {}\nsample_rate_hz = {}\nsegment_length = {}\noverlap_fraction = {}\nwindow = {}\n",
             num(f.spectrum.duration_s), num(f.spectrum.sample_rate_hz), f.spectrum.segment_length,
             num(f.spectrum.overlap_fraction), to_string(f.spectrum.window));
}

}  // namespace ringlock
