#include "ringlock/pdh.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "ringlock/constants.hpp"
#include "ringlock/errors.hpp"

namespace ringlock {

void ModulationConfig::validate() const {
  if (!(std::isfinite(mod_frequency_hz) && mod_frequency_hz > 0.0))
    throw ValidationError("modulation mod_frequency_hz must be positive and finite");
  if (!(std::isfinite(mod_depth_rad) && mod_depth_rad >= 0.0))
    throw ValidationError("modulation mod_depth_rad must be non-negative");
  if (!(std::isfinite(input_power_w) && input_power_w >= 0.0))
    throw ValidationError("modulation input_power_w must be non-negative");
  if (!std::isfinite(demod_phase_rad)) throw ValidationError("modulation demod_phase_rad must be finite");
}

SidebandPowers sideband_powers(const ModulationConfig& mod) {
  mod.validate();
  const double j0 = std::cyl_bessel_j(0.0, mod.mod_depth_rad);
  const double j1 = std::cyl_bessel_j(1.0, mod.mod_depth_rad);
  return {j0 * j0 * mod.input_power_w, j1 * j1 * mod.input_power_w};
}

double discriminator_slope(const SidebandPowers& powers, double linewidth_hz) {
  if (!(std::isfinite(linewidth_hz) && linewidth_hz > 0.0))
    throw ValidationError("discriminator needs a positive linewidth");
  if (powers.carrier_w < 0.0 || powers.sideband_w < 0.0)
    throw ValidationError("discriminator needs non-negative powers");
  return 4.0 * std::sqrt(powers.carrier_w * powers.sideband_w) / linewidth_hz;
}

PdhModel::PdhModel(const CavityParams& params, const SidebandPowers& powers, double mod_frequency_hz,
                   double demod_phase_rad)
    : reflection_(params),
      powers_(powers),
      mod_frequency_hz_(mod_frequency_hz),
      rotation_(std::polar(1.0, -demod_phase_rad)),
      amplitude_(-2.0 * std::sqrt(powers.carrier_w * powers.sideband_w)) {}

PdhSample PdhModel::operator()(double detuning_hz) const {
  const auto f0 = reflection_(detuning_hz);
  const auto fu = reflection_(detuning_hz + mod_frequency_hz_);
  const auto fl = reflection_(detuning_hz - mod_frequency_hz_);
  const auto beat = f0 * std::conj(fu) - std::conj(f0) * fl;
  PdhSample out;
  out.error_raw_w = amplitude_ * (beat * rotation_).imag();
  const double r0 = std::norm(f0);
  out.reflected_w = powers_.carrier_w * r0 + powers_.sideband_w * (std::norm(fu) + std::norm(fl));
  out.transmitted_w = powers_.carrier_w * (1.0 - r0) +
                      powers_.sideband_w * (2.0 - std::norm(fu) - std::norm(fl));
  return out;
}

double pdh_error_raw(const CavityParams& params, const SidebandPowers& powers,
                     double mod_frequency_hz, double demod_phase_rad, double detuning_hz) {
  if (!std::isfinite(detuning_hz)) throw ValidationError("detuning must be finite");
  return PdhModel(params, powers, mod_frequency_hz, demod_phase_rad)(detuning_hz).error_raw_w;
}

std::vector<double> error_signal_sweep(const CavityParams& params, const ModulationConfig& mod,
                                       std::span<const double> detunings_hz, Execution exec) {
  if (detunings_hz.empty()) throw ValidationError("error_signal_sweep needs at least one detuning");
  const auto powers = sideband_powers(mod);
  std::vector<double> out(detunings_hz.size());
  for_each_index(exec, static_cast<std::ptrdiff_t>(out.size()), [&](std::ptrdiff_t i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = kErrorNormalization * pdh_error_raw(params, powers, mod.mod_frequency_hz,
                                                 mod.demod_phase_rad, detunings_hz[k]);
  });
  return out;
}

double numeric_slope_at_resonance(const CavityParams& params, const ModulationConfig& mod) {
  const auto powers = sideband_powers(mod);
  const double h = 1e-3 * params.linewidth_hz;
  auto e = [&](double d) {
    return kErrorNormalization *
           pdh_error_raw(params, powers, mod.mod_frequency_hz, mod.demod_phase_rad, d);
  };
  return (e(h) - e(-h)) / (2.0 * h);
}

double auto_demod_phase(const CavityParams& params, const ModulationConfig& mod) {
  const auto powers = sideband_powers(mod);
  constexpr int kSweepPoints = 81;
  auto peak_to_peak = [&](double phase) {
    double lo = 0.0, hi = 0.0;
    for (int i = 0; i < kSweepPoints; ++i) {
      const double d = params.linewidth_hz * (-1.0 + 2.0 * i / (kSweepPoints - 1));
      const double v = pdh_error_raw(params, powers, mod.mod_frequency_hz, phase, d);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return hi - lo;
  };
  // Coarse grid over a half turn (amplitude is pi-periodic), then Brent refinement.
  constexpr int kGrid = 36;
  int best = 0;
  double best_value = -1.0;
  for (int i = 0; i < kGrid; ++i) {
    const double v = peak_to_peak(-0.5 * kPi + kPi * i / kGrid);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  const double step = kPi / kGrid;
  const double centre = -0.5 * kPi + step * best;
  const auto [phase, neg] = boost::math::tools::brent_find_minima(
      [&](double p) { return -peak_to_peak(p); }, centre - step, centre + step, 40);
  (void)neg;
  double result = std::remainder(phase, kTwoPi);
  const double h = 1e-3 * params.linewidth_hz;
  const double slope = pdh_error_raw(params, powers, mod.mod_frequency_hz, result, h) -
                       pdh_error_raw(params, powers, mod.mod_frequency_hz, result, -h);
  if (slope < 0.0) result = std::remainder(result + kPi, kTwoPi);
  return result;
}

std::optional<std::string> regime_warning(const CavityParams& params, const ModulationConfig& mod) {
  const double ratio = mod.mod_frequency_hz / params.linewidth_hz;
  if (ratio < 100.0) {
    return fmt::format(
        "modulation frequency is only {:.3g} linewidths; the error slope departs from "
        "4 sqrt(Pc Ps)/linewidth outside the fast-modulation regime",
        ratio);
  }
  return std::nullopt;
}

}  // namespace ringlock
