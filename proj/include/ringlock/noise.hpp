#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ringlock/pdh.hpp"
#include "ringlock/rng.hpp"

namespace ringlock {

/// Shot-noise limit of the reflection photodiode at resonance.
struct NoiseBudget {
  double reflected_power_w = 0.0;           // 2 Ps + Pc/4
  double shot_power_psd_w_rthz = 0.0;       // sqrt(2 h nu P_R)
  double shot_freq_psd_hz_rthz = 0.0;       // shot_power_psd / D
  double shot_birefringence_psd_rthz = 0.0; // shot_freq_psd / nu
  double discriminator_w_per_hz = 0.0;
  /// The closed-form frequency limit evaluated directly (not via D); agrees with
  /// shot_freq_psd_hz_rthz to rounding.
  double shot_freq_psd_closed_form_hz_rthz = 0.0;
};

double reflected_power_at_resonance(const SidebandPowers& powers);

NoiseBudget noise_budget(const SidebandPowers& powers, double linewidth_hz, double optical_frequency_hz);

struct ToneLine {
  double frequency_hz = 0.0;
  double amplitude_hz_rms = 0.0;
};

/// Stochastic sources for time-domain runs. Levels are user choices, not measurements.
struct NoiseConfig {
  /// White detector noise on each error channel at detector_psd_w_rthz.
  bool shot_noise_enabled = false;
  /// One-sided amplitude density of detector noise. 0 means "use the shot-noise budget".
  double detector_psd_w_rthz = 0.0;
  /// White laser frequency noise.
  double white_frequency_noise_hz_rthz = 0.0;
  /// Flicker frequency noise: PSD = level^2 * corner / f, between flicker_min_hz and Nyquist.
  double flicker_level_hz_rthz = 0.0;
  double flicker_corner_hz = 0.0;
  double flicker_min_hz = 0.1;
  std::vector<ToneLine> technical_lines;
  std::uint64_t rng_seed = 1;

  void validate(double sample_rate_hz) const;
  bool any_laser_noise() const;
};

/// Per-stream generator of laser frequency noise (Hz) and detector noise (W).
/// Streams with different ids are independent; a stream is single-owner.
class NoiseGenerator {
 public:
  NoiseGenerator(const NoiseConfig& config, double sample_rate_hz, std::uint64_t stream = 0);

  /// Laser frequency noise at the next sample.
  double next_frequency();
  /// Detector noise at the next sample (independent counter from next_frequency()).
  double next_detector();

 private:
  struct Pole {
    double a = 0.0;
    double b = 0.0;
    double state = 0.0;
  };
  struct Tone {
    double omega_dt = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;
  };

  NoiseConfig config_;
  double sample_rate_hz_;
  CounterRng white_rng_;
  CounterRng flicker_rng_;
  CounterRng detector_rng_;
  std::vector<Pole> poles_;
  std::vector<Tone> tones_;
  double white_sigma_ = 0.0;
  double detector_sigma_ = 0.0;
  std::uint64_t freq_counter_ = 0;
  std::uint64_t det_counter_ = 0;
};

struct NoiseSeries {
  std::vector<double> frequency_hz;
  std::vector<double> detector_w;
};

NoiseSeries sample_noise(const NoiseConfig& config, std::size_t count, double sample_rate_hz);

/// Flicker level that puts the in-loop residual at `margin_db` above the shot-noise
/// frequency floor at `at_frequency_hz`, given the loop suppression there (dB).
/// Illustrative only; not a measured laser.
double illustrative_flicker_level(const NoiseBudget& budget, double suppression_db,
                                  double corner_hz, double at_frequency_hz, double margin_db = 15.0);

}  // namespace ringlock
