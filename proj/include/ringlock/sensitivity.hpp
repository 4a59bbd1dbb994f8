#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ringlock/dsp.hpp"
#include "ringlock/execution.hpp"
#include "ringlock/loop_sim.hpp"

namespace ringlock {

struct SensitivityPoint {
  double drive_amplitude_v = 0.0;
  double fm_amplitude_hz = 0.0;
  double lockin_reading_w = 0.0;
  double equivalent_frequency_hz = 0.0;  // lockin_reading / D
  bool lock_lost = false;
  bool used_in_fit = false;
};

struct SensitivityScan {
  std::vector<SensitivityPoint> points;
  LockInConfig lockin;
  double discriminator_w_per_hz = 0.0;
  double measurement_time_s = 0.0;
  /// log10(equivalent) = slope * log10(fm_amplitude) + intercept.
  LineFit fit;
  std::size_t points_in_fit = 0;
  /// Zero-injection run: lock-in output rms per quadrature and its frequency equivalent.
  double floor_reading_w = 0.0;
  double floor_equivalent_hz = 0.0;
  /// Floor referred to a measurement time T with the 1/(4T) bandwidth convention.
  double floor_at_measurement_time_hz = 0.0;
  double floor_extrapolated_1000s_hz = 0.0;
  /// Smallest fm amplitude whose reading exceeds 3x the floor (0 when none does).
  double smallest_resolved_fm_hz = 0.0;
};

/// Frequency-equivalent floor for measurement time T from the lock-in quadrature rms:
/// floor_T = rms / (D sqrt(8 T enbw)). For order 2 this is rms/D * sqrt(tau/T).
double floor_for_measurement_time(double quadrature_rms_w, double discriminator_w_per_hz,
                                  const LockInConfig& lockin, double measurement_time_s);

/// One run_lock + lock_in per drive amplitude, plus a zero-injection run for the floor.
/// The template's injection sets frequency and EOM depth (defaults if absent); the lock-in
/// defaults to LockInConfig::for_reference(drive frequency). Lock loss marks the point and
/// drops it from the fit; an empty fit throws ValidationError.
SensitivityScan sensitivity_scan(const Scenario& scenario_template,
                                 std::span<const double> drive_amplitudes_v,
                                 std::optional<LockInConfig> lockin = std::nullopt,
                                 Execution exec = Execution::parallel);

}  // namespace ringlock
