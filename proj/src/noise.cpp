#include "ringlock/noise.hpp"

#include <cmath>

#include "ringlock/constants.hpp"
#include "ringlock/errors.hpp"

namespace ringlock {

double reflected_power_at_resonance(const SidebandPowers& powers) {
  return 2.0 * powers.sideband_w + 0.25 * powers.carrier_w;
}

NoiseBudget noise_budget(const SidebandPowers& powers, double linewidth_hz, double optical_frequency_hz) {
  if (!(powers.carrier_w > 0.0) || !(powers.sideband_w > 0.0))
    throw ValidationError("noise budget needs non-zero carrier and sideband power");
  if (!(linewidth_hz > 0.0) || !(optical_frequency_hz > 0.0))
    throw ValidationError("noise budget needs positive linewidth and optical frequency");
  NoiseBudget b;
  const double photon_energy = kPlanck * optical_frequency_hz;
  b.reflected_power_w = reflected_power_at_resonance(powers);
  b.shot_power_psd_w_rthz = std::sqrt(2.0 * photon_energy * b.reflected_power_w);
  b.discriminator_w_per_hz = discriminator_slope(powers, linewidth_hz);
  b.shot_freq_psd_hz_rthz = b.shot_power_psd_w_rthz / b.discriminator_w_per_hz;
  const double pc = powers.carrier_w;
  const double ps = powers.sideband_w;
  b.shot_freq_psd_closed_form_hz_rthz = std::sqrt(photon_energy) / (2.0 * std::sqrt(2.0)) *
                                        linewidth_hz * std::sqrt((pc / 4.0 + 2.0 * ps) / (pc * ps));
  b.shot_birefringence_psd_rthz = b.shot_freq_psd_hz_rthz / optical_frequency_hz;
  return b;
}

void NoiseConfig::validate(double sample_rate_hz) const {
  auto nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };
  if (!(sample_rate_hz > 0.0)) throw ValidationError("noise sample rate must be positive");
  if (!nonneg(detector_psd_w_rthz) || !nonneg(white_frequency_noise_hz_rthz) ||
      !nonneg(flicker_level_hz_rthz) || !nonneg(flicker_corner_hz))
    throw ValidationError("noise levels must be non-negative");
  if (flicker_level_hz_rthz > 0.0 && !(flicker_min_hz > 0.0 && flicker_min_hz < 0.5 * sample_rate_hz))
    throw ValidationError("flicker_min_hz must lie in (0, Nyquist)");
  for (const auto& line : technical_lines) {
    if (!nonneg(line.amplitude_hz_rms) || !(line.frequency_hz > 0.0))
      throw ValidationError("technical lines need positive frequency and non-negative amplitude");
    if (line.frequency_hz >= 0.5 * sample_rate_hz)
      throw ValidationError("technical line at " + std::to_string(line.frequency_hz) +
                            " Hz aliases at this sample rate");
  }
}

bool NoiseConfig::any_laser_noise() const {
  if (white_frequency_noise_hz_rthz > 0.0) return true;
  if (flicker_level_hz_rthz > 0.0 && flicker_corner_hz > 0.0) return true;
  for (const auto& l : technical_lines)
    if (l.amplitude_hz_rms > 0.0) return true;
  return false;
}

NoiseGenerator::NoiseGenerator(const NoiseConfig& config, double sample_rate_hz, std::uint64_t stream)
    : config_(config),
      sample_rate_hz_(sample_rate_hz),
      white_rng_(config.rng_seed, 4 * stream + 0),
      flicker_rng_(config.rng_seed, 4 * stream + 1),
      detector_rng_(config.rng_seed, 4 * stream + 2) {
  config.validate(sample_rate_hz);
  // White one-sided density g -> per-sample std g * sqrt(fs / 2).
  white_sigma_ = config.white_frequency_noise_hz_rthz * std::sqrt(0.5 * sample_rate_hz);
  if (config.shot_noise_enabled)
    detector_sigma_ = config.detector_psd_w_rthz * std::sqrt(0.5 * sample_rate_hz);

  if (config.flicker_level_hz_rthz > 0.0 && config.flicker_corner_hz > 0.0) {
    // Sum of Lorentzians with log-spaced corners (ratio r). Equal variance per pole,
    // L^2 f_c ln r, sums to L^2 f_c / f between the lowest and highest corner.
    constexpr double kRatio = 3.1622776601683795;  // half a decade
    const double variance = config.flicker_level_hz_rthz * config.flicker_level_hz_rthz *
                            config.flicker_corner_hz * std::log(kRatio);
    const double sigma = std::sqrt(variance);
    const CounterRng init_rng(config.rng_seed, 4 * stream + 3);
    std::uint64_t k = 0;
    for (double fc = config.flicker_min_hz; fc < 0.5 * sample_rate_hz; fc *= kRatio, ++k) {
      Pole p;
      p.a = std::exp(-kTwoPi * fc / sample_rate_hz);
      p.b = sigma * std::sqrt(1.0 - p.a * p.a);
      p.state = sigma * init_rng.normal(k);  // start from the stationary distribution
      poles_.push_back(p);
    }
  }
  const CounterRng phase_rng(config.rng_seed, 0x544F4E45 + stream);
  std::uint64_t k = 0;
  for (const auto& line : config.technical_lines) {
    tones_.push_back({kTwoPi * line.frequency_hz / sample_rate_hz, std::sqrt(2.0) * line.amplitude_hz_rms,
                      kTwoPi * phase_rng.uniform(k++)});
  }
}

double NoiseGenerator::next_frequency() {
  const std::uint64_t n = freq_counter_++;
  double v = 0.0;
  if (white_sigma_ > 0.0) v += white_sigma_ * white_rng_.normal(n);
  if (!poles_.empty()) {
    const std::uint64_t base = n * poles_.size();
    for (std::size_t i = 0; i < poles_.size(); ++i) {
      auto& p = poles_[i];
      p.state = p.a * p.state + p.b * flicker_rng_.normal(base + i);
      v += p.state;
    }
  }
  for (const auto& t : tones_) v += t.amplitude * std::sin(t.omega_dt * static_cast<double>(n) + t.phase);
  return v;
}

double NoiseGenerator::next_detector() {
  const std::uint64_t n = det_counter_++;
  return detector_sigma_ > 0.0 ? detector_sigma_ * detector_rng_.normal(n) : 0.0;
}

NoiseSeries sample_noise(const NoiseConfig& config, std::size_t count, double sample_rate_hz) {
  if (count == 0) throw ValidationError("sample_noise needs count > 0");
  NoiseGenerator gen(config, sample_rate_hz);
  NoiseSeries s;
  s.frequency_hz.resize(count);
  s.detector_w.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    s.frequency_hz[i] = gen.next_frequency();
    s.detector_w[i] = gen.next_detector();
  }
  return s;
}

double illustrative_flicker_level(const NoiseBudget& budget, double suppression_db, double corner_hz,
                                  double at_frequency_hz, double margin_db) {
  if (!(corner_hz > 0.0) || !(at_frequency_hz > 0.0))
    throw ValidationError("illustrative profile needs positive corner and frequency");
  // residual(f) = L sqrt(fc/f) / |1+G(f)| = 10^(margin/20) * shot_freq_psd
  const double target = budget.shot_freq_psd_hz_rthz * std::pow(10.0, margin_db / 20.0);
  return target * std::pow(10.0, suppression_db / 20.0) / std::sqrt(corner_hz / at_frequency_hz);
}

}  // namespace ringlock
