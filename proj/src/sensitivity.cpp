#include "ringlock/sensitivity.hpp"

#include <cmath>

#include "ringlock/errors.hpp"

namespace ringlock {

double floor_for_measurement_time(double quadrature_rms_w, double discriminator_w_per_hz,
                                  const LockInConfig& lockin, double measurement_time_s) {
  if (!(discriminator_w_per_hz > 0.0)) throw ValidationError("floor needs a positive discriminator");
  if (!(measurement_time_s > 0.0)) throw ValidationError("floor needs a positive measurement time");
  // Per-quadrature variance is 2 S enbw for a one-sided input PSD S; the reference
  // convention assigns S / (4 T).
  const double enbw = lock_in_enbw_hz(lockin);
  return quadrature_rms_w / discriminator_w_per_hz / std::sqrt(8.0 * measurement_time_s * enbw);
}

SensitivityScan sensitivity_scan(const Scenario& scenario_template,
                                 std::span<const double> drive_amplitudes_v,
                                 std::optional<LockInConfig> lockin, Execution exec) {
  if (drive_amplitudes_v.size() < 3) throw ValidationError("sensitivity scan needs at least 3 amplitudes");
  for (double v : drive_amplitudes_v)
    if (!(std::isfinite(v) && v >= 0.0)) throw ValidationError("drive amplitudes must be non-negative");

  const InjectionConfig base = scenario_template.injection.value_or(InjectionConfig{});
  const LockInConfig li = lockin.value_or(LockInConfig::for_reference(base.drive_frequency_hz));
  li.validate();

  struct Slot {
    double reading = 0.0;
    double quadrature_rms = 0.0;
    double discriminator = 0.0;
    bool lost = false;
  };
  const std::size_t n = drive_amplitudes_v.size();
  std::vector<Slot> slots(n + 1);

  // Slot 0 is the zero-injection floor run.
  for_each_index(exec, static_cast<std::ptrdiff_t>(n + 1), [&](std::ptrdiff_t i) {
    Scenario sc = scenario_template;
    InjectionConfig inj = base;
    inj.drive_amplitude_v = i == 0 ? 0.0 : drive_amplitudes_v[static_cast<std::size_t>(i - 1)];
    sc.injection = inj;
    auto& slot = slots[static_cast<std::size_t>(i)];
    try {
      const auto run = run_lock(sc);
      const auto& trace = run.trace;
      const auto r = lock_in(trace.channel("ccw_error_w"), trace.sample_rate(), li);
      slot.reading = r.magnitude;
      slot.quadrature_rms = r.settled_quadrature_rms;
      slot.discriminator = run.report.discriminator_w_per_hz;
    } catch (const LockLossError&) {
      slot.lost = true;
    }
  });

  if (slots[0].lost) throw ValidationError("zero-injection run lost lock; the scenario does not hold");

  SensitivityScan out;
  out.lockin = li;
  out.discriminator_w_per_hz = slots[0].discriminator;
  out.measurement_time_s = scenario_template.run.duration_s;
  const double d = out.discriminator_w_per_hz;
  out.floor_reading_w = slots[0].quadrature_rms;
  out.floor_equivalent_hz = out.floor_reading_w / d;
  out.floor_at_measurement_time_hz =
      floor_for_measurement_time(out.floor_reading_w, d, li, out.measurement_time_s);
  out.floor_extrapolated_1000s_hz = out.floor_at_measurement_time_hz * std::sqrt(out.measurement_time_s / 1000.0);

  std::vector<double> x, y, w;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& slot = slots[k + 1];
    SensitivityPoint p;
    p.drive_amplitude_v = drive_amplitudes_v[k];
    InjectionConfig inj = base;
    inj.drive_amplitude_v = p.drive_amplitude_v;
    p.fm_amplitude_hz = inj.fm_amplitude_hz();
    p.lock_lost = slot.lost;
    if (!slot.lost) {
      p.lockin_reading_w = slot.reading;
      p.equivalent_frequency_hz = slot.reading / d;
      if (p.fm_amplitude_hz > 0.0 && p.lockin_reading_w > 0.0) {
        p.used_in_fit = true;
        x.push_back(std::log10(p.fm_amplitude_hz));
        y.push_back(std::log10(p.equivalent_frequency_hz));
        // Log-space error ~ floor / reading; uniform without a floor.
        const double snr = out.floor_reading_w > 0.0 ? p.lockin_reading_w / out.floor_reading_w : 1.0;
        w.push_back(snr * snr);
      }
      if (p.lockin_reading_w > 3.0 * out.floor_reading_w && p.fm_amplitude_hz > 0.0 &&
          (out.smallest_resolved_fm_hz == 0.0 || p.fm_amplitude_hz < out.smallest_resolved_fm_hz))
        out.smallest_resolved_fm_hz = p.fm_amplitude_hz;
    }
    out.points.push_back(p);
  }
  if (x.size() < 2) throw ValidationError("sensitivity scan: fewer than two usable points (lock lost or zero reading)");
  out.fit = weighted_line_fit(x, y, w);
  out.points_in_fit = x.size();
  return out;
}

}  // namespace ringlock
