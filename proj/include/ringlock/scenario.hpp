#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "ringlock/dsp.hpp"
#include "ringlock/loop_sim.hpp"

namespace ringlock {

struct RingdownSettings {
  double duration_s = 400e-6;
  double sample_rate_hz = 10e6;
  double initial_power_w = 1e-3;
  double relative_noise = 0.01;
};

struct SweepSettings {
  double span_hz = 25e6;  // symmetric, covers both sidebands at 10 MHz
  std::size_t points = 5001;
  bool auto_phase = false;
};

struct BodeSettings {
  double f_min_hz = 1.0;
  double f_max_hz = 1e7;
  std::size_t points = 601;
};

struct SenseSettings {
  std::vector<double> amplitudes_v = {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};
  double lockin_time_constant_s = 0.0;  // 0 = 100 / drive frequency
  int lockin_filter_order = 2;
};

/// Simulated shot-only detector noise for the spectrum next to the budget.
struct SpectrumSettings {
  double duration_s = 1.0;
  double sample_rate_hz = 2e6;
  std::size_t segment_length = 0;  // 0 = default
  double overlap_fraction = 0.5;
  Window window = Window::hann;
};

/// Everything a scenario file can set. Sections absent from the file keep defaults;
/// `sections` lists the ones that were present.
struct ScenarioFile {
  Scenario scenario;
  RingdownSettings ringdown;
  SweepSettings sweep;
  BodeSettings bode;
  SenseSettings sense;
  SpectrumSettings spectrum;
  std::set<std::string> sections;

  bool has_section(const std::string& name) const { return sections.count(name) != 0; }
  /// Throws ScenarioError naming the first missing section.
  void require_sections(std::initializer_list<const char*> names) const;
};

/// INI text with ';' comments. Unknown sections and keys, malformed numbers and
/// invalid values are ScenarioError (carrying the section name).
ScenarioFile parse_scenario(std::istream& in);
ScenarioFile load_scenario(const std::filesystem::path& path);
/// Fully resolved configuration in the same format (round-trips through parse_scenario).
void write_scenario(std::ostream& out, const ScenarioFile& file);

}  // namespace ringlock
