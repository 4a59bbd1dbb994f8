#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ringlock/cavity.hpp"
#include "ringlock/execution.hpp"

namespace ringlock {

/// Phase modulation applied for the Pound-Drever-Hall lock.
struct ModulationConfig {
  double mod_frequency_hz = 10e6;
  double mod_depth_rad = 1.0;
  /// Power reaching the cavity; 17.08 mW puts 10 mW in the carrier at beta = 1.
  double input_power_w = 17.08e-3;
  /// Demodulation phase. 0 selects the dispersive (maximal-slope) quadrature.
  double demod_phase_rad = 0.0;

  void validate() const;
};

struct SidebandPowers {
  double carrier_w = 0.0;
  /// Power in each first-order sideband.
  double sideband_w = 0.0;
};

/// Carrier J0^2(beta) P0 and first-order sideband J1^2(beta) P0.
SidebandPowers sideband_powers(const ModulationConfig& mod);

/// Error-signal slope at resonance, 4 sqrt(Pc Ps) / linewidth, in W/Hz.
double discriminator_slope(const SidebandPowers& powers, double linewidth_hz);

/// The three-wave demodulated reflection signal without normalization:
///   -2 sqrt(Pc Ps) Im{ [F(d) F*(d + fm) - F*(d) F(d - fm)] exp(-i phase) }
/// Positive detuning gives a positive signal at phase 0. Its resonance slope is
/// 2 D in the fast-modulation limit.
double pdh_error_raw(const CavityParams& params, const SidebandPowers& powers,
                     double mod_frequency_hz, double demod_phase_rad, double detuning_hz);

/// Raw error plus the detected reflected and transmitted (coupled-in) powers at one detuning.
struct PdhSample {
  double error_raw_w = 0.0;
  double reflected_w = 0.0;
  double transmitted_w = 0.0;
};

/// Repeated evaluation on a fixed cavity and modulation (time-domain engine).
class PdhModel {
 public:
  PdhModel(const CavityParams& params, const SidebandPowers& powers, double mod_frequency_hz,
           double demod_phase_rad);
  PdhSample operator()(double detuning_hz) const;

 private:
  ReflectionModel reflection_;
  SidebandPowers powers_;
  double mod_frequency_hz_;
  std::complex<double> rotation_;
  double amplitude_;
};

/// Scale applied to pdh_error_raw so that the small-detuning slope equals discriminator_slope.
inline constexpr double kErrorNormalization = 0.5;

/// Normalized error signal (W) at each detuning.
std::vector<double> error_signal_sweep(const CavityParams& params, const ModulationConfig& mod,
                                       std::span<const double> detunings_hz,
                                       Execution exec = Execution::parallel);

/// Central finite-difference slope of the normalized error at resonance (W/Hz).
double numeric_slope_at_resonance(const CavityParams& params, const ModulationConfig& mod);

/// Demodulation phase maximizing the error-signal peak-to-peak amplitude across
/// resonance, found numerically; returned in (-pi, pi] with positive resonance slope.
double auto_demod_phase(const CavityParams& params, const ModulationConfig& mod);

/// Warns when the modulation frequency is not well separated from the linewidth.
std::optional<std::string> regime_warning(const CavityParams& params, const ModulationConfig& mod);

}  // namespace ringlock
