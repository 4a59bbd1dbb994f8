#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "ringlock/cavity.hpp"
#include "ringlock/noise.hpp"
#include "ringlock/pdh.hpp"
#include "ringlock/servo.hpp"
#include "ringlock/trace.hpp"

namespace ringlock {

/// Phase modulation of the cw beam by the drive voltage V: the cw detuning picks up
/// eom_depth * V * f * cos(2 pi f t), the derivative of eom_depth * V * sin(2 pi f t) / 2 pi.
struct InjectionConfig {
  double drive_amplitude_v = 1.0;
  double drive_frequency_hz = 217.0;
  double eom_depth_rad_per_v = 0.85e-3;

  /// Peak frequency excursion of the cw beam.
  double fm_amplitude_hz() const;
  void validate() const;
};

/// Commands are clamped to +-range (Hz of laser tuning).
struct ActuatorLimits {
  double aom_range_hz = 1e6;
  double pzt_range_hz = 1e8;
  double tec_range_hz = 3e10;

  void validate() const;
};

struct RunConfig {
  double duration_s = 10.0;
  double sample_rate_hz = 2e6;
  /// Laser detuning from the cw resonance at t = 0.
  double initial_detuning_hz = 0.0;
  /// The run fails when |cw detuning| stays above linewidth/2 for this long.
  double lock_loss_dwell_s = 1e-3;
  /// Recorded channels hold block means over this many samples.
  std::size_t record_decimation = 100;
  ActuatorLimits limits;

  void validate() const;
};

struct Scenario {
  CavityConfig cavity;
  ModulationConfig modulation;
  ServoChain servo = ServoChain::reference_default();
  NoiseConfig noise;
  std::optional<InjectionConfig> injection;
  RunConfig run;

  void validate() const;
};

struct RunReport {
  double duration_s = 0.0;
  double sample_rate_hz = 0.0;
  std::size_t samples = 0;
  double record_rate_hz = 0.0;
  std::size_t delay_samples = 0;
  double requested_delay_s = 0.0;
  /// Delay line plus the one-sample latency of the digital loop.
  double effective_delay_s = 0.0;
  double discriminator_w_per_hz = 0.0;
  double detector_psd_w_rthz = 0.0;
  LoopReport loop;
  /// Time after which |cw detuning| stays below linewidth/100.
  double time_to_lock_s = 0.0;
  /// Over the second half of the run.
  double residual_rms_cw_detuning_hz = 0.0;
  double mean_ccw_error_w = 0.0;
  double max_abs_aom_cmd_hz = 0.0;
};

struct LockRun {
  Trace trace;
  RunReport report;
};

/// Closed-loop time-domain run. Recorded channels: cw_error_w, ccw_error_w, aom_cmd_hz,
/// pzt_cmd_hz, tec_cmd_hz, true_cw_detuning_hz, true_ccw_detuning_hz, reflected_cw_w,
/// transmitted_cw_w.
/// Throws LockLossError (with the time) if the cw beam leaves the resonance, and
/// UnstableLoopError if the servo design is unstable.
LockRun run_lock(const Scenario& scenario);

struct AcquisitionReport {
  bool locked = false;
  double time_to_lock_s = 0.0;
  double residual_rms_detuning_hz = 0.0;
  std::string failure;  // empty when locked
  double failure_time_s = 0.0;
};

/// Starts the run from initial_detuning_hz (|x| <= fsr/2) and reports instead of throwing
/// on lock loss.
AcquisitionReport acquire_and_hold(const Scenario& scenario, double initial_detuning_hz);

}  // namespace ringlock
