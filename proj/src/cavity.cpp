#include "ringlock/cavity.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "ringlock/constants.hpp"
#include "ringlock/errors.hpp"
#include "ringlock/rng.hpp"

namespace ringlock {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

double CavityConfig::optical_frequency_hz() const noexcept {
  return kSpeedOfLight / vacuum_wavelength_m;
}

void CavityConfig::validate() const {
  require(finite_positive(arm_length_m), "cavity arm_length_m must be positive and finite");
  require(mirror_count >= 3, "cavity mirror_count must be at least 3");
  require(std::isfinite(finesse) && finesse > 1.0, "cavity finesse must be finite and > 1");
  require(finite_positive(vacuum_wavelength_m), "cavity vacuum_wavelength_m must be positive and finite");
  require(std::isfinite(anisotropy_detuning_hz), "cavity anisotropy_detuning_hz must be finite");
  require(std::isfinite(coupler_mismatch) && std::abs(coupler_mismatch) < 1.0,
          "cavity coupler_mismatch must lie in (-1, 1)");
}

double finesse_from_roundtrip_amplitude(double rho) {
  return kPi * std::sqrt(rho) / (1.0 - rho);
}

double roundtrip_amplitude_for_finesse(double finesse) {
  require(std::isfinite(finesse) && finesse > 1.0, "finesse must be finite and > 1");
  // The finesse relation is strictly increasing on (0, 1).
  auto f = [finesse](double rho) { return finesse_from_roundtrip_amplitude(rho) - finesse; };
  double lo = 0.0;
  double hi = std::nextafter(1.0, 0.0);
  auto [a, b] = boost::math::tools::bisect(
      f, lo, hi, [](double x, double y) { return x == y || std::nextafter(x, 1.0) == y; });
  return 0.5 * (a + b);
}

CavityParams derive_params(const CavityConfig& config) {
  config.validate();
  CavityParams p;
  p.fsr_hz = kSpeedOfLight / config.perimeter_m();
  p.linewidth_hz = p.fsr_hz / config.finesse;
  p.photon_lifetime_s = 1.0 / (kTwoPi * p.linewidth_hz);
  p.roundtrip_amplitude = roundtrip_amplitude_for_finesse(config.finesse);
  p.coupler_mismatch = config.coupler_mismatch;
  return p;
}

ReflectionModel::ReflectionModel(const CavityParams& params)
    : fsr_hz_(params.fsr_hz),
      rho_(params.roundtrip_amplitude),
      r_in_(std::pow(rho_, 0.5 * (1.0 - params.coupler_mismatch))),
      r_back_(std::pow(rho_, 0.5 * (1.0 + params.coupler_mismatch))) {
  require(finite_positive(fsr_hz_), "reflection model needs a positive fsr");
  require(rho_ > 0.0 && rho_ < 1.0, "round-trip amplitude must lie in (0, 1)");
}

std::complex<double> ReflectionModel::operator()(double detuning_hz) const {
  // Round-trip phase reduced to (-pi, pi] so the response is exactly fsr-periodic.
  const double half_phi = kPi * std::remainder(detuning_hz, fsr_hz_) / fsr_hz_;
  const double s = std::sin(half_phi);
  const double c = std::cos(half_phi);
  // 1 - exp(i phi) = 2 sin^2(phi/2) - i sin(phi), exact for tiny phi.
  const std::complex<double> one_minus_e(2.0 * s * s, -2.0 * s * c);
  const std::complex<double> num = (r_in_ - r_back_) + r_back_ * one_minus_e;
  const std::complex<double> den = (1.0 - rho_) + rho_ * one_minus_e;
  return num / den;
}

std::complex<double> reflection_coefficient(const CavityParams& params, double detuning_hz) {
  require(std::isfinite(detuning_hz), "detuning must be finite");
  return ReflectionModel(params)(detuning_hz);
}

Trace ringdown_trace(const CavityParams& params, const RingdownConfig& config) {
  require(finite_positive(config.duration_s), "ringdown duration must be positive");
  require(finite_positive(config.sample_rate_hz), "ringdown sample rate must be positive");
  require(config.sample_rate_hz * params.photon_lifetime_s >= 10.0,
          "ringdown undersampled: sample_rate must be at least 10/photon_lifetime");
  require(std::isfinite(config.initial_power_w) && config.initial_power_w >= 0.0,
          "ringdown initial power must be non-negative");
  require(std::isfinite(config.relative_noise) && config.relative_noise >= 0.0,
          "ringdown relative noise must be non-negative");

  const auto n = static_cast<std::size_t>(std::floor(config.duration_s * config.sample_rate_hz)) + 1;
  Trace trace(config.sample_rate_hz, n);
  auto& power = trace.add_channel("power_w");
  const CounterRng rng(config.seed, /*stream=*/0x52494E47);
  const double sigma = config.relative_noise * config.initial_power_w;
  for (std::size_t i = 0; i < n; ++i) {
    power[i] = config.initial_power_w * std::exp(-trace.time(i) / params.photon_lifetime_s);
    if (sigma > 0.0) power[i] += sigma * rng.normal(i);
  }
  return trace;
}

RingdownFit fit_ringdown(const Trace& trace, double fsr_hz) {
  require(finite_positive(fsr_hz), "fit_ringdown needs a positive fsr");
  const auto& y = trace.channel("power_w");
  require(y.size() >= 3, "ringdown trace too short to fit");

  // Weighted log-linear fit over positive samples: var(log y) ~ sigma^2 / y^2.
  double sw = 0, st = 0, sl = 0, stt = 0, stl = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) continue;
    const double w = y[i] * y[i];
    const double t = trace.time(i);
    const double l = std::log(y[i]);
    sw += w;
    st += w * t;
    sl += w * l;
    stt += w * t * t;
    stl += w * t * l;
    ++used;
  }
  require(used >= 3, "ringdown trace has fewer than 3 positive samples");
  const double det = sw * stt - st * st;
  require(det > 0.0, "ringdown trace degenerate: no time spread");
  const double slope = (sw * stl - st * sl) / det;
  const double intercept = (sl - slope * st) / sw;
  require(std::isfinite(slope) && slope < 0.0, "ringdown trace does not decay");

  // Gauss-Newton on y = a*exp(-k t) over all samples.
  double a = std::exp(intercept);
  double k = -slope;
  for (int iter = 0; iter < 50; ++iter) {
    double jaa = 0, jak = 0, jkk = 0, ra = 0, rk = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double t = trace.time(i);
      const double e = std::exp(-k * t);
      const double r = y[i] - a * e;
      const double da = e;
      const double dk = -a * t * e;
      jaa += da * da;
      jak += da * dk;
      jkk += dk * dk;
      ra += da * r;
      rk += dk * r;
    }
    const double d = jaa * jkk - jak * jak;
    if (!(d > 0.0)) break;
    const double step_a = (jkk * ra - jak * rk) / d;
    const double step_k = (jaa * rk - jak * ra) / d;
    if (!(k + step_k > 0.0)) break;
    a += step_a;
    k += step_k;
    if (std::abs(step_k) <= 1e-13 * k) break;
  }

  RingdownFit fit;
  fit.tau_s = 1.0 / k;
  fit.finesse = kTwoPi * fsr_hz * fit.tau_s;
  fit.initial_power_w = a;
  fit.samples_used = used;
  return fit;
}

std::vector<RingdownFit> ringdown_monte_carlo(const CavityParams& params, RingdownConfig config,
                                              std::span<const std::uint64_t> seeds,
                                              Execution exec) {
  std::vector<RingdownFit> fits(seeds.size());
  for_each_index(exec, static_cast<std::ptrdiff_t>(seeds.size()), [&](std::ptrdiff_t i) {
    const auto k = static_cast<std::size_t>(i);
    RingdownConfig c = config;
    c.seed = seeds[k];
    fits[k] = fit_ringdown(ringdown_trace(params, c), params.fsr_hz);
  });
  return fits;
}

}  // namespace ringlock
