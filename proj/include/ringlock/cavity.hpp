#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "ringlock/execution.hpp"
#include "ringlock/trace.hpp"

namespace ringlock {

/// Square (or N-mirror) ring cavity. Defaults are the 4 x 400 mm, F = 50000 ring at 1064 nm.
struct CavityConfig {
  double arm_length_m = 0.4;
  int mirror_count = 4;
  double finesse = 50000.0;
  double vacuum_wavelength_m = 1064e-9;
  /// Offset of the ccw resonance relative to the cw one. This is the measurand.
  double anisotropy_detuning_hz = 0.0;
  /// Input-coupler imbalance in (-1, 1); 0 is impedance matched (zero reflection on resonance).
  double coupler_mismatch = 0.0;

  double perimeter_m() const noexcept { return mirror_count * arm_length_m; }
  double optical_frequency_hz() const noexcept;
  void validate() const;
};

/// Spectral parameters derived from a CavityConfig.
struct CavityParams {
  double fsr_hz = 0.0;
  double linewidth_hz = 0.0;
  double photon_lifetime_s = 0.0;
  /// Field amplitude left after one round trip, all losses lumped.
  double roundtrip_amplitude = 0.0;
  double coupler_mismatch = 0.0;

  double finesse() const noexcept { return fsr_hz / linewidth_hz; }
  /// Field storage pole (half width at half maximum).
  double cavity_pole_hz() const noexcept { return 0.5 * linewidth_hz; }
};

CavityParams derive_params(const CavityConfig& config);

/// Solves pi*sqrt(rho)/(1 - rho) = finesse for rho in (0, 1) by bisection.
double roundtrip_amplitude_for_finesse(double finesse);
double finesse_from_roundtrip_amplitude(double rho);

/// Precomputed reflection evaluator for repeated calls on one cavity.
class ReflectionModel {
 public:
  explicit ReflectionModel(const CavityParams& params);
  std::complex<double> operator()(double detuning_hz) const;

 private:
  double fsr_hz_;
  double rho_;
  double r_in_;
  double r_back_;
};

/// Complex field reflection of the two-port ring resonator at the given laser-cavity detuning.
/// Periodic in the FSR; for a matched coupler it vanishes on resonance.
std::complex<double> reflection_coefficient(const CavityParams& params, double detuning_hz);

struct RingdownConfig {
  double duration_s = 0.0;
  double sample_rate_hz = 0.0;
  double initial_power_w = 1.0;
  /// Std-dev of additive white noise as a fraction of initial_power_w; 0 disables.
  double relative_noise = 0.0;
  std::uint64_t seed = 1;
};

/// Exponential intracavity power decay after the input is switched off. Channel "power_w".
Trace ringdown_trace(const CavityParams& params, const RingdownConfig& config);

struct RingdownFit {
  double tau_s = 0.0;
  double finesse = 0.0;
  double initial_power_w = 0.0;
  std::size_t samples_used = 0;
};

/// Least-squares decay-time fit. A log-linear fit (weighted by power^2, so that samples
/// buried in additive noise count little) seeds a Gauss-Newton refinement of
/// P0*exp(-t/tau) in linear space. Finesse follows as 2*pi*fsr*tau.
RingdownFit fit_ringdown(const Trace& trace, double fsr_hz);

/// Synthesize and refit one ringdown per seed.
std::vector<RingdownFit> ringdown_monte_carlo(const CavityParams& params, RingdownConfig config,
                                              std::span<const std::uint64_t> seeds,
                                              Execution exec = Execution::parallel);

}  // namespace ringlock
