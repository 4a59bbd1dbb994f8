#include "ringlock/servo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "ringlock/constants.hpp"
#include "ringlock/errors.hpp"

namespace ringlock {

namespace {

constexpr double kDeg = 180.0 / kPi;

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

std::complex<double> s_of(double f) { return {0.0, kTwoPi * f}; }

// Bilinear coefficients of (n0 + n1 s) / (d0 + d1 s) with s = K (1 - z^-1)/(1 + z^-1).
void first_order_bilinear(double n0, double n1, double d0, double d1, double k, double& b0,
                          double& b1, double& a1) {
  const double a0 = d0 + d1 * k;
  b0 = (n0 + n1 * k) / a0;
  b1 = (n0 - n1 * k) / a0;
  a1 = (d0 - d1 * k) / a0;
}

}  // namespace

std::string_view to_string(StageKind kind) {
  switch (kind) {
    case StageKind::pi: return "pi";
    case StageKind::pid: return "pid";
    case StageKind::pure_gain: return "gain";
    case StageKind::lead: return "lead";
  }
  return "gain";
}

StageKind stage_kind_from_string(std::string_view name) {
  if (name == "pi") return StageKind::pi;
  if (name == "pid") return StageKind::pid;
  if (name == "gain") return StageKind::pure_gain;
  if (name == "lead") return StageKind::lead;
  throw ValidationError("unknown stage kind '" + std::string(name) + "'");
}

FilterStage FilterStage::gain(double k) {
  FilterStage s;
  s.kind = StageKind::pure_gain;
  s.proportional_gain = k;
  return s;
}

FilterStage FilterStage::pi(double kp, double integrator_corner_hz) {
  FilterStage s;
  s.kind = StageKind::pi;
  s.proportional_gain = kp;
  s.integrator_corner_hz = integrator_corner_hz;
  return s;
}

FilterStage FilterStage::pid(double kp, double integrator_corner_hz, double differentiator_corner_hz,
                             double derivative_rolloff) {
  FilterStage s;
  s.kind = StageKind::pid;
  s.proportional_gain = kp;
  s.integrator_corner_hz = integrator_corner_hz;
  s.differentiator_corner_hz = differentiator_corner_hz;
  s.derivative_rolloff = derivative_rolloff;
  return s;
}

FilterStage FilterStage::lead(double zero_hz, double pole_hz, double kp) {
  FilterStage s;
  s.kind = StageKind::lead;
  s.proportional_gain = kp;
  s.lead_zero_hz = zero_hz;
  s.lead_pole_hz = pole_hz;
  return s;
}

void FilterStage::validate() const {
  if (!std::isfinite(proportional_gain)) throw ValidationError("stage gain must be finite");
  switch (kind) {
    case StageKind::pure_gain: break;
    case StageKind::pi:
      if (!positive(integrator_corner_hz)) throw ValidationError("PI stage needs a positive integrator corner");
      break;
    case StageKind::pid:
      if (!positive(integrator_corner_hz) || !positive(differentiator_corner_hz))
        throw ValidationError("PID stage needs positive integrator and differentiator corners");
      if (!positive(derivative_rolloff)) throw ValidationError("PID derivative roll-off must be positive");
      break;
    case StageKind::lead:
      if (!positive(lead_zero_hz) || !positive(lead_pole_hz))
        throw ValidationError("lead stage needs positive zero and pole frequencies");
      break;
  }
}

std::complex<double> FilterStage::response(double frequency_hz) const {
  const auto s = s_of(frequency_hz);
  const double kp = proportional_gain;
  switch (kind) {
    case StageKind::pure_gain: return kp;
    case StageKind::pi: return kp * (1.0 + kTwoPi * integrator_corner_hz / s);
    case StageKind::pid: {
      const double wd = kTwoPi * differentiator_corner_hz;
      const double wp = derivative_rolloff * wd;
      return kp * (1.0 + kTwoPi * integrator_corner_hz / s + (s / wd) / (1.0 + s / wp));
    }
    case StageKind::lead:
      return kp * (1.0 + s / (kTwoPi * lead_zero_hz)) / (1.0 + s / (kTwoPi * lead_pole_hz));
  }
  return kp;
}

double FilterStage::highest_corner_hz() const {
  switch (kind) {
    case StageKind::pure_gain: return 0.0;
    case StageKind::pi: return integrator_corner_hz;
    case StageKind::pid: return std::max(integrator_corner_hz, differentiator_corner_hz);
    case StageKind::lead: return std::max(lead_zero_hz, lead_pole_hz);
  }
  return 0.0;
}

StageFilter::StageFilter(const FilterStage& stage, double sample_rate_hz, double integrator_limit)
    : kind_(stage.kind), kp_(stage.proportional_gain), limit_(integrator_limit) {
  stage.validate();
  if (!positive(sample_rate_hz)) throw ValidationError("filter sample rate must be positive");
  if (!(integrator_limit > 0.0)) throw ValidationError("integrator limit must be positive");
  const double k = 2.0 * sample_rate_hz;
  const double dt = 1.0 / sample_rate_hz;
  if (kind_ == StageKind::pi || kind_ == StageKind::pid) {
    integral_gain_ = kp_ * kTwoPi * stage.integrator_corner_hz * 0.5 * dt;
  }
  if (kind_ == StageKind::pid) {
    const double wd = kTwoPi * stage.differentiator_corner_hz;
    const double wp = stage.derivative_rolloff * wd;
    first_order_bilinear(0.0, kp_ / wd, 1.0, 1.0 / wp, k, section_.b0, section_.b1, section_.a1);
    has_section_ = true;
  } else if (kind_ == StageKind::lead) {
    // Prewarped so both corners land at their continuous-time frequencies.
    auto warp = [&](double f) { return k * std::tan(kPi * f / sample_rate_hz); };
    if (!(stage.lead_pole_hz < 0.5 * sample_rate_hz))
      throw ValidationError("lead pole must lie below the Nyquist frequency");
    const double wz = warp(stage.lead_zero_hz);
    const double wp = warp(stage.lead_pole_hz);
    first_order_bilinear(kp_, kp_ / wz, 1.0, 1.0 / wp, k, section_.b0, section_.b1, section_.a1);
    has_section_ = true;
  }
}

double StageFilter::step(double input) {
  if (!std::isfinite(input)) throw ValidationError("non-finite sample rejected by stage filter");
  double out = 0.0;
  switch (kind_) {
    case StageKind::pure_gain: out = kp_ * input; break;
    case StageKind::lead: out = section_.step(input); break;
    case StageKind::pi:
    case StageKind::pid:
      integral_ = std::clamp(integral_ + integral_gain_ * (input + last_input_), -limit_, limit_);
      out = kp_ * input + integral_;
      if (has_section_) out += section_.step(input);
      break;
  }
  last_input_ = input;
  return out;
}

void StageFilter::reset() {
  integral_ = 0.0;
  last_input_ = 0.0;
  section_.x1 = 0.0;
  section_.y1 = 0.0;
}

// Values produced by calibrate_loop() for the default cavity pole; see tests/test_servo.cpp.
ServoChain ServoChain::reference_default() {
  ServoChain c;
  c.fast_stages = {FilterStage::pi(1.0, 30e3), FilterStage::pi(1.0, 5e3), FilterStage::pi(1.0, 3e3),
                   FilterStage::lead(50e3, 250e3)};
  c.pzt_stage = FilterStage::pid(handover_gain(100.0, 0.1), 100.0, 1e3);
  c.tec_stage = FilterStage::pid(handover_gain(15e-3, 100.0), 15e-3, 150e-3);
  c.overall_gain = 15.26603877;
  c.loop_delay_s = 1.764060788e-6;
  return c;
}

void ServoChain::validate() const {
  for (const auto& s : fast_stages) s.validate();
  if (pzt_stage) pzt_stage->validate();
  if (tec_stage) tec_stage->validate();
  if (!(std::isfinite(loop_delay_s) && loop_delay_s >= 0.0))
    throw ValidationError("servo loop_delay_s must be non-negative");
  if (!std::isfinite(overall_gain)) throw ValidationError("servo overall_gain must be finite");
}

double handover_gain(double integrator_corner_hz, double time_constant_s) {
  if (!positive(integrator_corner_hz) || !positive(time_constant_s))
    throw ValidationError("handover gain needs positive corner and time constant");
  const double x = 1.0 / (time_constant_s * kTwoPi * integrator_corner_hz);
  if (!(x < 1.0)) throw ValidationError("handover time constant shorter than the integrator allows");
  return x / (1.0 - x);
}

std::complex<double> fast_path_response(const ServoChain& chain, double frequency_hz) {
  std::complex<double> h = chain.overall_gain;
  for (const auto& s : chain.fast_stages) h *= s.response(frequency_hz);
  return h;
}

std::complex<double> actuator_factor(const ServoChain& chain, double frequency_hz) {
  if (!chain.pzt_stage) return 1.0;
  std::complex<double> inner = 1.0;
  if (chain.tec_stage) inner += chain.tec_stage->response(frequency_hz);
  return 1.0 + chain.pzt_stage->response(frequency_hz) * inner;
}

std::complex<double> open_loop_transfer(const ServoChain& chain, double plant_pole_hz,
                                        double frequency_hz) {
  if (!positive(frequency_hz)) throw ValidationError("open-loop transfer needs a positive frequency");
  if (!positive(plant_pole_hz)) throw ValidationError("plant pole must be positive");
  const auto plant = 1.0 / (1.0 + s_of(frequency_hz) / (kTwoPi * plant_pole_hz));
  const auto delay = std::polar(1.0, -kTwoPi * frequency_hz * chain.loop_delay_s);
  return fast_path_response(chain, frequency_hz) * actuator_factor(chain, frequency_hz) * plant * delay;
}

double open_loop_phase_deg(const ServoChain& chain, double plant_pole_hz, double frequency_hz) {
  double phase = std::arg(std::complex<double>(chain.overall_gain));
  for (const auto& s : chain.fast_stages) phase += std::arg(s.response(frequency_hz));
  phase += std::arg(actuator_factor(chain, frequency_hz));
  phase -= std::atan(frequency_hz / plant_pole_hz);
  phase -= kTwoPi * frequency_hz * chain.loop_delay_s;
  return phase * kDeg;
}

double suppression_db(const ServoChain& chain, double plant_pole_hz, double frequency_hz) {
  return 20.0 * std::log10(std::abs(1.0 + open_loop_transfer(chain, plant_pole_hz, frequency_hz)));
}

std::vector<double> log_frequency_grid(double f_min_hz, double f_max_hz, std::size_t points) {
  if (!positive(f_min_hz) || !(f_max_hz > f_min_hz) || points < 2)
    throw ValidationError("log grid needs 0 < f_min < f_max and at least 2 points");
  std::vector<double> f(points);
  const double a = std::log(f_min_hz);
  const double b = std::log(f_max_hz);
  for (std::size_t i = 0; i < points; ++i)
    f[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  return f;
}

LoopReport loop_report_unchecked(const ServoChain& chain, double plant_pole_hz) {
  chain.validate();
  auto mag = [&](double f) { return std::abs(open_loop_transfer(chain, plant_pole_hz, f)); };
  auto log_mag = [&](double lf) { return std::log(mag(std::exp(lf))); };

  // Unity-gain: first downward crossing of |G| = 1 on a log scan.
  constexpr double kScanMin = 1e-3, kScanMax = 1e9;
  constexpr int kPerDecade = 200;
  const int n = static_cast<int>(std::log10(kScanMax / kScanMin) * kPerDecade);
  const double step = std::log(kScanMax / kScanMin) / n;
  double prev_lf = std::log(kScanMin);
  double prev = log_mag(prev_lf);
  double ugf = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double lf = std::log(kScanMin) + step * i;
    const double v = log_mag(lf);
    if (prev > 0.0 && v <= 0.0) {
      boost::uintmax_t iters = 100;
      const auto [a, b] = boost::math::tools::toms748_solve(
          log_mag, prev_lf, lf, prev, v, boost::math::tools::eps_tolerance<double>(50), iters);
      ugf = std::exp(0.5 * (a + b));
      break;
    }
    prev = v;
    prev_lf = lf;
  }
  if (ugf == 0.0) throw LoopInactiveError("loop inactive: |G| never crosses unity");

  LoopReport r;
  r.unity_gain_frequency_hz = ugf;
  const double phase_at_ugf = open_loop_phase_deg(chain, plant_pole_hz, ugf);
  r.phase_margin_deg = std::remainder(phase_at_ugf + 180.0, 360.0);

  // Phase crossover: first frequency above the UGF where the phase reaches -180 (mod 360).
  // The wrapped margin phi = remainder(phase + 180, 360) crosses 0 going downwards.
  auto wrapped = [&](double lf) {
    return std::remainder(open_loop_phase_deg(chain, plant_pole_hz, std::exp(lf)) + 180.0, 360.0);
  };
  {
    const double lf0 = std::log(ugf);
    const double lf1 = std::log(std::min(kScanMax, ugf * 1e4));
    const int m = 4000;
    double pl = lf0;
    double pv = wrapped(lf0);
    r.gain_margin_db = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= m; ++i) {
      const double lf = lf0 + (lf1 - lf0) * i / m;
      const double v = wrapped(lf);
      if (pv > 0.0 && v <= 0.0 && pv - v < 180.0) {
        boost::uintmax_t iters = 100;
        const auto [a, b] = boost::math::tools::toms748_solve(
            wrapped, pl, lf, pv, v, boost::math::tools::eps_tolerance<double>(50), iters);
        r.phase_crossover_hz = std::exp(0.5 * (a + b));
        r.gain_margin_db = -20.0 * std::log10(mag(r.phase_crossover_hz));
        break;
      }
      pv = v;
      pl = lf;
    }
  }

  // Resonance: maximum of |S| = 1/|1+G| above the UGF.
  {
    auto neg_s = [&](double lf) {
      return std::abs(1.0 + open_loop_transfer(chain, plant_pole_hz, std::exp(lf)));
    };
    const double lf0 = std::log(ugf);
    const double lf1 = std::log(std::min(kScanMax, ugf * 100.0));
    const int m = 4000;
    int best = 0;
    double best_v = neg_s(lf0);
    for (int i = 1; i <= m; ++i) {
      const double v = neg_s(lf0 + (lf1 - lf0) * i / m);
      if (v < best_v) {
        best_v = v;
        best = i;
      }
    }
    const double h = (lf1 - lf0) / m;
    const double c = lf0 + h * best;
    const auto [lf, v] = boost::math::tools::brent_find_minima(
        neg_s, std::max(lf0, c - h), std::min(lf1, c + h), 50);
    r.resonance_frequency_hz = std::exp(lf);
    r.resonance_peak_db = -20.0 * std::log10(v);
  }
  r.stable = r.phase_margin_deg > 0.0 && r.gain_margin_db > 0.0;
  return r;
}

LoopReport loop_report(const ServoChain& chain, double plant_pole_hz) {
  auto r = loop_report_unchecked(chain, plant_pole_hz);
  if (!r.stable) {
    throw UnstableLoopError("closed loop unstable: phase margin " + std::to_string(r.phase_margin_deg) +
                            " deg, gain margin " + std::to_string(r.gain_margin_db) + " dB");
  }
  return r;
}

std::vector<BodePoint> bode(const ServoChain& chain, double plant_pole_hz,
                            std::span<const double> frequencies_hz, Execution exec) {
  chain.validate();
  std::vector<BodePoint> out(frequencies_hz.size());
  for_each_index(exec, static_cast<std::ptrdiff_t>(out.size()), [&](std::ptrdiff_t i) {
    const auto k = static_cast<std::size_t>(i);
    const double f = frequencies_hz[k];
    out[k] = {f, 20.0 * std::log10(std::abs(open_loop_transfer(chain, plant_pole_hz, f))),
              open_loop_phase_deg(chain, plant_pole_hz, f)};
  });
  return out;
}

namespace {

struct Probe {
  bool ok = false;
  LoopReport report;
};

Probe probe(ServoChain chain, double pole, double gain, double delay) {
  chain.overall_gain = gain;
  chain.loop_delay_s = delay;
  try {
    return {true, loop_report_unchecked(chain, pole)};
  } catch (const LoopInactiveError&) {
    return {};
  }
}

// Gain (log-bisection) at which the loop, once inside its stable region, reaches the
// target peak. The low-gain end of a cascaded-integrator loop is conditionally unstable,
// so the scan first waits for a stable point below the target.
std::optional<double> gain_for_peak(const ServoChain& chain, double pole, double delay,
                                    double target_peak_db) {
  constexpr double kMinGain = 1e-3, kMaxGain = 1e6;
  constexpr int kSteps = 180;
  auto reached = [&](const Probe& p) {
    return p.ok && (!p.report.stable || p.report.resonance_peak_db >= target_peak_db);
  };
  bool entered = false;
  double prev = kMinGain;
  for (int i = 0; i <= kSteps; ++i) {
    const double g = kMinGain * std::pow(kMaxGain / kMinGain, static_cast<double>(i) / kSteps);
    const auto p = probe(chain, pole, g, delay);
    if (!entered) {
      entered = p.ok && p.report.stable && p.report.resonance_peak_db < target_peak_db;
    } else if (reached(p)) {
      double lo = std::log(prev), hi = std::log(g);
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (reached(probe(chain, pole, std::exp(mid), delay)))
          hi = mid;
        else
          lo = mid;
      }
      return std::exp(lo);
    }
    prev = g;
  }
  return std::nullopt;
}

}  // namespace

LoopCalibration calibrate_loop(ServoChain chain, double plant_pole_hz, double target_peak_db,
                               double target_resonance_hz) {
  chain.validate();
  if (!positive(target_resonance_hz)) throw ValidationError("calibration target frequency must be positive");
  auto resonance_for = [&](double delay, double& gain) -> double {
    const auto g = gain_for_peak(chain, plant_pole_hz, delay, target_peak_db);
    if (!g) return std::numeric_limits<double>::quiet_NaN();
    gain = *g;
    return probe(chain, plant_pole_hz, gain, delay).report.resonance_frequency_hz;
  };

  // The resonance falls as the delay grows; bracket the first crossing of the target.
  constexpr double kMinDelay = 1e-8, kMaxDelay = 2e-5;
  constexpr int kSteps = 60;
  double prev_delay = kMinDelay, gain = 0.0;
  double prev_res = resonance_for(prev_delay, gain);
  for (int i = 1; i <= kSteps; ++i) {
    const double d = kMinDelay * std::pow(kMaxDelay / kMinDelay, static_cast<double>(i) / kSteps);
    const double res = resonance_for(d, gain);
    if (std::isfinite(prev_res) && std::isfinite(res) && prev_res > target_resonance_hz &&
        res <= target_resonance_hz) {
      double lo = prev_delay, hi = d;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = resonance_for(mid, gain);
        if (std::isfinite(r) && r > target_resonance_hz)
          lo = mid;
        else
          hi = mid;
      }
      LoopCalibration cal;
      cal.loop_delay_s = 0.5 * (lo + hi);
      resonance_for(cal.loop_delay_s, gain);
      cal.overall_gain = gain;
      chain.overall_gain = gain;
      chain.loop_delay_s = cal.loop_delay_s;
      cal.report = loop_report_unchecked(chain, plant_pole_hz);
      return cal;
    }
    prev_delay = d;
    prev_res = res;
  }
  throw ValidationError("calibration failed: no delay reaches the target resonance");
}

}  // namespace ringlock
