#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ringlock/execution.hpp"

namespace ringlock {

enum class StageKind { pi, pid, pure_gain, lead };

std::string_view to_string(StageKind kind);
StageKind stage_kind_from_string(std::string_view name);

/// One controller stage, in continuous time (s = i 2 pi f, w = 2 pi corner):
///   pure_gain  Kp
///   pi         Kp (1 + wi/s)
///   pid        Kp (1 + wi/s + (s/wd) / (1 + s/(N wd)))     N = derivative_rolloff
///   lead       Kp (1 + s/wz) / (1 + s/wp)
struct FilterStage {
  StageKind kind = StageKind::pure_gain;
  double proportional_gain = 1.0;
  double integrator_corner_hz = 0.0;
  double differentiator_corner_hz = 0.0;
  double derivative_rolloff = 10.0;
  double lead_zero_hz = 0.0;
  double lead_pole_hz = 0.0;

  static FilterStage gain(double k);
  static FilterStage pi(double kp, double integrator_corner_hz);
  static FilterStage pid(double kp, double integrator_corner_hz, double differentiator_corner_hz,
                         double derivative_rolloff = 10.0);
  static FilterStage lead(double zero_hz, double pole_hz, double kp = 1.0);

  void validate() const;
  std::complex<double> response(double frequency_hz) const;
  /// Highest corner, used to check that a sample rate resolves the stage.
  double highest_corner_hz() const;
};

/// Bilinear-transform realization of a FilterStage. The integral term is kept as a
/// separate trapezoidal accumulator so it can be clamped (anti-windup).
/// Single owner: one sample stream per object.
class StageFilter {
 public:
  StageFilter(const FilterStage& stage, double sample_rate_hz,
              double integrator_limit = std::numeric_limits<double>::infinity());

  /// Advances one sample. A non-finite input throws ValidationError and leaves the state untouched.
  double step(double input);
  void reset();
  double integrator_state() const noexcept { return integral_; }

 private:
  struct Section {
    double b0 = 0.0, b1 = 0.0, a1 = 0.0;
    double x1 = 0.0, y1 = 0.0;
    double step(double x) {
      const double y = b0 * x + b1 * x1 - a1 * y1;
      x1 = x;
      y1 = y;
      return y;
    }
  };

  StageKind kind_;
  double kp_;
  double integral_gain_ = 0.0;  // Kp * wi * T / 2
  double limit_;
  double integral_ = 0.0;
  double last_input_ = 0.0;
  bool has_section_ = false;
  Section section_;
};

/// Three-tier controller: fast stages drive the AOM; the AOM command is the input of the
/// PZT stage whose output is the input of the TEC stage. All three corrections add.
struct ServoChain {
  std::vector<FilterStage> fast_stages;
  std::optional<FilterStage> pzt_stage;
  std::optional<FilterStage> tec_stage;
  double loop_delay_s = 0.0;
  double overall_gain = 1.0;

  /// 3 PI (30 kHz, 5 kHz, 3 kHz) + phase lead, PZT PID (100 Hz / 1 kHz),
  /// TEC PID (15 mHz / 150 mHz); gain and delay from calibrate_loop().
  static ServoChain reference_default();
  void validate() const;
};

/// Proportional gain of a slow PID that nulls the mean command of the stage feeding it with
/// the given closed-loop time constant: Kp/(1+Kp) = 1/(tau * 2 pi f_i).
double handover_gain(double integrator_corner_hz, double time_constant_s);

std::complex<double> fast_path_response(const ServoChain& chain, double frequency_hz);
/// 1 + C_pzt (1 + C_tec): extra correction contributed by the slow actuators per unit AOM command.
std::complex<double> actuator_factor(const ServoChain& chain, double frequency_hz);
/// Loop gain: fast path x actuator factor x single-pole plant x exp(-i 2 pi f delay).
std::complex<double> open_loop_transfer(const ServoChain& chain, double plant_pole_hz,
                                        double frequency_hz);
/// Continuous (unwrapped) loop phase in degrees, built from per-factor phases.
double open_loop_phase_deg(const ServoChain& chain, double plant_pole_hz, double frequency_hz);
/// 20 log10 |1 + G(f)|; positive means the disturbance is suppressed.
double suppression_db(const ServoChain& chain, double plant_pole_hz, double frequency_hz);

struct LoopReport {
  double unity_gain_frequency_hz = 0.0;
  double gain_margin_db = 0.0;  // +inf when the phase never reaches -180 deg
  double phase_margin_deg = 0.0;
  double phase_crossover_hz = 0.0;  // 0 when absent
  double resonance_frequency_hz = 0.0;
  double resonance_peak_db = 0.0;
  bool stable = false;
};

/// Unity-gain crossing by bracketed root find; margins by the usual definitions;
/// resonance = peak of |1/(1+G)| above the unity-gain frequency.
/// Throws LoopInactiveError without a crossing, UnstableLoopError if a margin is negative.
LoopReport loop_report(const ServoChain& chain, double plant_pole_hz);
/// Same computation without the stability check.
LoopReport loop_report_unchecked(const ServoChain& chain, double plant_pole_hz);

struct BodePoint {
  double frequency_hz = 0.0;
  double magnitude_db = 0.0;
  double phase_deg = 0.0;
};

std::vector<BodePoint> bode(const ServoChain& chain, double plant_pole_hz,
                            std::span<const double> frequencies_hz,
                            Execution exec = Execution::parallel);
std::vector<double> log_frequency_grid(double f_min_hz, double f_max_hz, std::size_t points);

struct LoopCalibration {
  double overall_gain = 0.0;
  double loop_delay_s = 0.0;
  LoopReport report;
};

/// Two-parameter fit of overall_gain and loop_delay_s so that the closed-loop resonance
/// reaches target_peak_db at target_resonance_hz. Takes the smallest delay that does it.
LoopCalibration calibrate_loop(ServoChain chain, double plant_pole_hz,
                               double target_peak_db = 10.0,
                               double target_resonance_hz = 180e3);

}  // namespace ringlock
