#include "ringlock/loop_sim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "ringlock/constants.hpp"
#include "ringlock/errors.hpp"

namespace ringlock {

namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }
bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

// Bilinear single pole 1/(1 + s/wp), the cavity storage seen by the demodulated error.
class CavityPole {
 public:
  CavityPole(double pole_hz, double sample_rate_hz) {
    const double k = 2.0 * sample_rate_hz;
    const double wp = kTwoPi * pole_hz;
    b_ = wp / (k + wp);
    a_ = (wp - k) / (k + wp);
  }
  double step(double x) {
    const double y = b_ * (x + x1_) - a_ * y1_;
    x1_ = x;
    y1_ = y;
    return y;
  }

 private:
  double b_ = 0.0, a_ = 0.0, x1_ = 0.0, y1_ = 0.0;
};

class DelayLine {
 public:
  explicit DelayLine(std::size_t n) : buffer_(n, 0.0) {}
  double push(double x) {
    if (buffer_.empty()) return x;
    const double out = buffer_[head_];
    buffer_[head_] = x;
    head_ = (head_ + 1) % buffer_.size();
    return out;
  }

 private:
  std::vector<double> buffer_;
  std::size_t head_ = 0;
};

struct BlockRecorder {
  explicit BlockRecorder(std::size_t channels) : sums(channels, 0.0) {}
  std::vector<double> sums;
  std::size_t filled = 0;
};

enum Channel : std::size_t {
  kCwError,
  kCcwError,
  kAom,
  kPzt,
  kTec,
  kCwDetuning,
  kCcwDetuning,
  kReflected,
  kTransmitted,
  kChannelCount
};

constexpr const char* kChannelNames[kChannelCount] = {
    "cw_error_w",          "ccw_error_w",          "aom_cmd_hz",
    "pzt_cmd_hz",          "tec_cmd_hz",           "true_cw_detuning_hz",
    "true_ccw_detuning_hz", "reflected_cw_w",      "transmitted_cw_w"};

struct Outcome {
  LockRun run;
  bool lost = false;
  double lost_at_s = 0.0;
};

void check_sample_rate(const Scenario& sc, const LoopReport& loop) {
  const double fs = sc.run.sample_rate_hz;
  if (fs < 10.0 * loop.resonance_frequency_hz)
    throw ValidationError(fmt::format(
        "sample rate {:.6g} Hz does not resolve the loop resonance at {:.6g} Hz (need 10x)", fs,
        loop.resonance_frequency_hz));
  if (fs < 5.0 * loop.unity_gain_frequency_hz)
    throw ValidationError(fmt::format("sample rate {:.6g} Hz is below 5x the unity-gain frequency {:.6g} Hz", fs,
                                      loop.unity_gain_frequency_hz));
  auto check_stage = [&](const FilterStage& st) {
    double corner = 0.0;
    if (st.kind == StageKind::pi) corner = st.integrator_corner_hz;
    if (st.kind == StageKind::pid) corner = std::max(st.integrator_corner_hz, st.differentiator_corner_hz);
    if (st.kind == StageKind::lead) corner = st.lead_zero_hz;
    if (fs < 10.0 * corner)
      throw ValidationError(fmt::format("sample rate {:.6g} Hz is below 10x the stage corner {:.6g} Hz",
                                        fs, corner));
  };
  for (const auto& st : sc.servo.fast_stages) check_stage(st);
  if (sc.servo.pzt_stage) check_stage(*sc.servo.pzt_stage);
  if (sc.servo.tec_stage) check_stage(*sc.servo.tec_stage);
}

// One closed-loop run. Lock loss ends the run early and is reported through the outcome.
Outcome simulate(const Scenario& sc) {
  sc.validate();
  const auto params = derive_params(sc.cavity);
  const auto powers = sideband_powers(sc.modulation);
  const double d = discriminator_slope(powers, params.linewidth_hz);
  const double pole = params.cavity_pole_hz();
  const auto loop = loop_report(sc.servo, pole);
  check_sample_rate(sc, loop);

  const double fs = sc.run.sample_rate_hz;
  const auto total = static_cast<std::size_t>(std::ceil(sc.run.duration_s * fs - 1e-9));
  const std::size_t dec = sc.run.record_decimation;
  const std::size_t recorded = total / dec;
  if (recorded < 1) throw ValidationError("run too short for one recorded sample");

  // Shape of the demodulated error rescaled so its slope at resonance is exactly D.
  const PdhModel pdh(params, powers, sc.modulation.mod_frequency_hz, sc.modulation.demod_phase_rad);
  const double h = 1e-3 * params.linewidth_hz;
  const double raw_slope = (pdh(h).error_raw_w - pdh(-h).error_raw_w) / (2.0 * h);
  if (!(std::abs(raw_slope) > 0.0)) throw ValidationError("error signal has no slope at resonance");
  const double shape = d / raw_slope;

  NoiseConfig noise = sc.noise;
  if (noise.shot_noise_enabled && noise.detector_psd_w_rthz == 0.0) {
    noise.detector_psd_w_rthz =
        noise_budget(powers, params.linewidth_hz, sc.cavity.optical_frequency_hz()).shot_power_psd_w_rthz;
  }
  noise.validate(fs);
  NoiseGenerator laser_noise(noise, fs, 0);
  NoiseGenerator cw_detector(noise, fs, 1);
  NoiseGenerator ccw_detector(noise, fs, 2);

  const auto delay_total = static_cast<std::size_t>(std::max(1.0, std::round(sc.servo.loop_delay_s * fs)));
  DelayLine delay(delay_total - 1);

  std::vector<StageFilter> fast;
  fast.reserve(sc.servo.fast_stages.size());
  for (const auto& st : sc.servo.fast_stages) fast.emplace_back(st, fs);
  const auto& lim = sc.run.limits;
  std::optional<StageFilter> pzt, tec;
  if (sc.servo.pzt_stage) pzt.emplace(*sc.servo.pzt_stage, fs, lim.pzt_range_hz);
  if (sc.servo.tec_stage) tec.emplace(*sc.servo.tec_stage, fs, lim.tec_range_hz);

  CavityPole cw_pole(pole, fs), ccw_pole(pole, fs);

  double fm_amp = 0.0, fm_w = 0.0;
  if (sc.injection) {
    fm_amp = sc.injection->fm_amplitude_hz();
    fm_w = kTwoPi * sc.injection->drive_frequency_hz;
  }
  const double anisotropy = sc.cavity.anisotropy_detuning_hz;
  const double gain_over_d = sc.servo.overall_gain / d;
  const double half_lw = 0.5 * params.linewidth_hz;
  const double lock_band = params.linewidth_hz / 100.0;
  const auto dwell = static_cast<std::size_t>(std::ceil(sc.run.lock_loss_dwell_s * fs));

  Trace trace(fs / static_cast<double>(dec), recorded);
  std::vector<double>* ch[kChannelCount];
  for (std::size_t c = 0; c < kChannelCount; ++c) ch[c] = &trace.add_channel(kChannelNames[c]);
  BlockRecorder block(kChannelCount);
  std::size_t out_index = 0;

  Outcome outcome{LockRun{std::move(trace), RunReport{}}, false, 0.0};
  auto& report = outcome.run.report;

  double correction = 0.0;
  std::size_t outside = 0;
  std::size_t last_unlocked = 0;
  bool ever_out = false;
  const std::size_t half = total / 2;
  double sum_sq = 0.0, sum_ccw = 0.0, max_aom = 0.0;

  for (std::size_t n = 0; n < total; ++n) {
    const double t = static_cast<double>(n) / fs;
    const double laser = sc.run.initial_detuning_hz + laser_noise.next_frequency() + correction;
    const double cw_det = laser + (fm_amp != 0.0 ? fm_amp * std::cos(fm_w * t) : 0.0);
    const double ccw_det = laser - anisotropy;

    const auto cw = pdh(cw_det);
    const auto ccw = pdh(ccw_det);
    const double e_cw = cw_pole.step(shape * cw.error_raw_w) + cw_detector.next_detector();
    const double e_ccw = ccw_pole.step(shape * ccw.error_raw_w) + ccw_detector.next_detector();

    double x = gain_over_d * delay.push(e_cw);
    for (auto& f : fast) x = f.step(x);
    const double u_f = std::clamp(x, -lim.aom_range_hz, lim.aom_range_hz);
    const double u_p = pzt ? std::clamp(pzt->step(u_f), -lim.pzt_range_hz, lim.pzt_range_hz) : 0.0;
    const double u_t = tec ? std::clamp(tec->step(u_p), -lim.tec_range_hz, lim.tec_range_hz) : 0.0;
    correction = -(u_f + u_p + u_t);

    const double vals[kChannelCount] = {e_cw, e_ccw, u_f, u_p, u_t, cw_det, ccw_det, cw.reflected_w,
                                        cw.transmitted_w};
    if (out_index < recorded) {
      for (std::size_t c = 0; c < kChannelCount; ++c) block.sums[c] += vals[c];
      if (++block.filled == dec) {
        for (std::size_t c = 0; c < kChannelCount; ++c) {
          (*ch[c])[out_index] = block.sums[c] / static_cast<double>(dec);
          block.sums[c] = 0.0;
        }
        block.filled = 0;
        ++out_index;
      }
    }

    if (std::abs(cw_det) > lock_band) {
      last_unlocked = n + 1;
      ever_out = true;
    }
    if (n >= half) {
      sum_sq += cw_det * cw_det;
      sum_ccw += e_ccw;
    }
    max_aom = std::max(max_aom, std::abs(u_f));

    if (std::abs(cw_det) > half_lw) {
      if (++outside > dwell) {
        outcome.lost = true;
        outcome.lost_at_s = t;
        break;
      }
    } else {
      outside = 0;
    }
  }

  report.duration_s = static_cast<double>(total) / fs;
  report.sample_rate_hz = fs;
  report.samples = total;
  report.record_rate_hz = fs / static_cast<double>(dec);
  report.delay_samples = delay_total;
  report.requested_delay_s = sc.servo.loop_delay_s;
  report.effective_delay_s = static_cast<double>(delay_total) / fs;
  report.discriminator_w_per_hz = d;
  report.detector_psd_w_rthz = noise.shot_noise_enabled ? noise.detector_psd_w_rthz : 0.0;
  report.loop = loop;
  report.time_to_lock_s = ever_out ? static_cast<double>(last_unlocked) / fs : 0.0;
  const auto tail = static_cast<double>(total - half);
  report.residual_rms_cw_detuning_hz = std::sqrt(sum_sq / tail);
  report.mean_ccw_error_w = sum_ccw / tail;
  report.max_abs_aom_cmd_hz = max_aom;
  return outcome;
}

}  // namespace

double InjectionConfig::fm_amplitude_hz() const {
  return eom_depth_rad_per_v * drive_amplitude_v * drive_frequency_hz;
}

void InjectionConfig::validate() const {
  if (!finite_nonneg(drive_amplitude_v)) throw ValidationError("injection drive_amplitude_v must be non-negative");
  if (!finite_nonneg(drive_frequency_hz)) throw ValidationError("injection drive_frequency_hz must be non-negative");
  if (!finite_nonneg(eom_depth_rad_per_v)) throw ValidationError("injection eom_depth_rad_per_v must be non-negative");
}

void ActuatorLimits::validate() const {
  if (!finite_positive(aom_range_hz) || !finite_positive(pzt_range_hz) || !finite_positive(tec_range_hz))
    throw ValidationError("actuator ranges must be positive and finite");
}

void RunConfig::validate() const {
  if (!finite_positive(duration_s)) throw ValidationError("run duration_s must be positive");
  if (!finite_positive(sample_rate_hz)) throw ValidationError("run sample_rate_hz must be positive");
  if (!std::isfinite(initial_detuning_hz)) throw ValidationError("run initial_detuning_hz must be finite");
  if (!finite_nonneg(lock_loss_dwell_s)) throw ValidationError("run lock_loss_dwell_s must be non-negative");
  if (record_decimation < 1) throw ValidationError("run record_decimation must be at least 1");
  limits.validate();
}

void Scenario::validate() const {
  cavity.validate();
  modulation.validate();
  servo.validate();
  run.validate();
  noise.validate(run.sample_rate_hz);
  if (injection) {
    injection->validate();
    if (!(injection->drive_frequency_hz < 0.5 * run.sample_rate_hz))
      throw ValidationError("injection frequency must lie below the Nyquist frequency");
  }
  const double fsr = derive_params(cavity).fsr_hz;
  if (std::abs(run.initial_detuning_hz) > 0.5 * fsr)
    throw ValidationError("initial detuning must lie within half a free spectral range");
}

LockRun run_lock(const Scenario& scenario) {
  auto outcome = simulate(scenario);
  if (outcome.lost) {
    throw LockLossError(fmt::format("lock lost at t = {:.9g} s: |cw detuning| exceeded half a linewidth",
                                    outcome.lost_at_s),
                        outcome.lost_at_s);
  }
  return std::move(outcome.run);
}

AcquisitionReport acquire_and_hold(const Scenario& scenario, double initial_detuning_hz) {
  Scenario sc = scenario;
  sc.run.initial_detuning_hz = initial_detuning_hz;
  const auto outcome = simulate(sc);
  AcquisitionReport out;
  if (outcome.lost) {
    out.failure = fmt::format("lock lost at t = {:.9g} s", outcome.lost_at_s);
    out.failure_time_s = outcome.lost_at_s;
    return out;
  }
  const auto& r = outcome.run.report;
  out.time_to_lock_s = r.time_to_lock_s;
  out.residual_rms_detuning_hz = r.residual_rms_cw_detuning_hz;
  // Holding within the lock band over the second half counts as converged.
  if (r.time_to_lock_s > 0.5 * r.duration_s) {
    out.failure = fmt::format("did not settle within linewidth/100 before t = {:.9g} s", 0.5 * r.duration_s);
    out.failure_time_s = r.duration_s;
    return out;
  }
  out.locked = true;
  return out;
}

}  // namespace ringlock
