#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "ringlock/cavity.hpp"
#include "ringlock/errors.hpp"

using namespace ringlock;

namespace {

// F = pi q / (1 - q^2) with q = sqrt(rho) is a quadratic in q.
double rho_closed_form(double finesse) {
  const double pi = std::acos(-1.0);
  const double q = (-pi + std::sqrt(pi * pi + 4.0 * finesse * finesse)) / (2.0 * finesse);
  return q * q;
}

}  // namespace

TEST_CASE("spectral constants of the default square ring") {
  const auto p = derive_params(CavityConfig{});
  const double fsr = 299792458.0 / 1.6;
  CHECK(p.fsr_hz == doctest::Approx(fsr).epsilon(1e-14));
  CHECK(p.fsr_hz == doctest::Approx(1.8737e8).epsilon(1e-4));
  CHECK(p.linewidth_hz == doctest::Approx(fsr / 50000.0).epsilon(1e-14));
  CHECK(p.photon_lifetime_s == doctest::Approx(50000.0 / (2.0 * std::acos(-1.0) * fsr)).epsilon(1e-14));
  CHECK(p.photon_lifetime_s == doctest::Approx(4.247e-5).epsilon(1e-3));
  CHECK(p.photon_lifetime_s * 2.0 * std::acos(-1.0) * p.linewidth_hz == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("rounded 188 MHz fsr gives a 42.3 us lifetime") {
  const double lw = 188e6 / 50000.0;
  CHECK(1.0 / (2.0 * std::acos(-1.0) * lw) == doctest::Approx(4.23e-5).epsilon(2e-3));
}

TEST_CASE("perimeter of one light-second gives a 1 Hz fsr") {
  CavityConfig c;
  c.arm_length_m = 299792458.0 / 4.0;
  CHECK(derive_params(c).fsr_hz == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("round-trip amplitude matches the closed-form root") {
  for (double f : {1.5, 10.0, 300.0, 15000.0, 50000.0, 1e6}) {
    CAPTURE(f);
    const double rho = roundtrip_amplitude_for_finesse(f);
    CHECK(rho == doctest::Approx(rho_closed_form(f)).epsilon(1e-12));
    CHECK(finesse_from_roundtrip_amplitude(rho) == doctest::Approx(f).epsilon(1e-10));
  }
  CHECK(roundtrip_amplitude_for_finesse(50000.0) == doctest::Approx(0.9999372).epsilon(1e-7));
}

TEST_CASE("invalid cavity configurations are rejected") {
  CavityConfig c;
  c.arm_length_m = -1.0;
  CHECK_THROWS_AS(derive_params(c), ValidationError);
  c = {};
  c.mirror_count = 2;
  CHECK_THROWS_AS(derive_params(c), ValidationError);
  c = {};
  c.finesse = 1.0;
  CHECK_THROWS_AS(derive_params(c), ValidationError);
  c = {};
  c.vacuum_wavelength_m = std::nan("");
  CHECK_THROWS_AS(derive_params(c), ValidationError);
}

TEST_CASE("reflection: dip at resonance, peak at antiresonance, symmetric, periodic") {
  const auto p = derive_params(CavityConfig{});
  const double r0 = std::abs(reflection_coefficient(p, 0.0));
  CHECK(r0 < 1e-9);
  double rmax = 0.0;
  for (int i = -200; i <= 200; ++i) {
    const double d = p.fsr_hz * i / 400.0;
    const double r = std::abs(reflection_coefficient(p, d));
    CHECK(r >= r0);
    rmax = std::max(rmax, r);
    CHECK(std::abs(reflection_coefficient(p, -d)) == doctest::Approx(r).epsilon(1e-12));
    CHECK(std::abs(reflection_coefficient(p, d) - reflection_coefficient(p, d + p.fsr_hz)) < 1e-9);
  }
  CHECK(std::abs(reflection_coefficient(p, 0.5 * p.fsr_hz)) == doctest::Approx(rmax).epsilon(1e-6));
  CHECK(std::abs(reflection_coefficient(p, 0.5 * p.fsr_hz)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("reflection at half a linewidth has the Lorentzian value") {
  // Matched coupler: |r|^2 = x^2/(1+x^2), x = 2 delta / linewidth, near resonance.
  const auto p = derive_params(CavityConfig{});
  const double r = std::norm(reflection_coefficient(p, 0.5 * p.linewidth_hz));
  CHECK(r == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("ringdown trace follows the exponential") {
  const auto p = derive_params(CavityConfig{});
  RingdownConfig rc{10 * p.photon_lifetime_s, 100.0 / p.photon_lifetime_s, 2.0, 0.0, 1};
  const auto t = ringdown_trace(p, rc);
  const auto& y = t.channel("power_w");
  CHECK(y[0] == doctest::Approx(2.0));
  CHECK(y[100] == doctest::Approx(2.0 / std::exp(1.0)).epsilon(1e-9));
  CHECK(t.time_step() == doctest::Approx(p.photon_lifetime_s / 100.0));
}

TEST_CASE("ringdown rejects undersampling") {
  const auto p = derive_params(CavityConfig{});
  RingdownConfig rc{1e-3, 5.0 / p.photon_lifetime_s, 1.0, 0.0, 1};
  CHECK_THROWS_AS(ringdown_trace(p, rc), ValidationError);
}

TEST_CASE("finesse 15000 decays with its own lifetime") {
  CavityConfig c;
  c.finesse = 15000;
  const auto p = derive_params(c);
  CHECK(p.photon_lifetime_s == doctest::Approx(1.274e-5).epsilon(1e-3));
  RingdownConfig rc{8 * p.photon_lifetime_s, 2e7, 1.0, 0.0, 1};
  const auto fit = fit_ringdown(ringdown_trace(p, rc), p.fsr_hz);
  CHECK(fit.tau_s == doctest::Approx(p.photon_lifetime_s).epsilon(1e-3));
  CHECK(fit.finesse == doctest::Approx(15000).epsilon(1e-3));
}

TEST_CASE("noiseless ringdown round trip recovers tau within 0.1%") {
  const auto p = derive_params(CavityConfig{});
  RingdownConfig rc{400e-6, 10e6, 1e-3, 0.0, 1};
  const auto fit = fit_ringdown(ringdown_trace(p, rc), p.fsr_hz);
  CHECK(fit.tau_s == doctest::Approx(p.photon_lifetime_s).epsilon(1e-3));
}

TEST_CASE("ringdown fit rejects degenerate traces") {
  Trace constant(1e6, 100);
  auto& y = constant.add_channel("power_w");
  std::fill(y.begin(), y.end(), 1.0);
  CHECK_THROWS_AS(fit_ringdown(constant, 1e8), ValidationError);

  Trace negative(1e6, 100);
  auto& z = negative.add_channel("power_w");
  std::fill(z.begin(), z.end(), -1.0);
  CHECK_THROWS_AS(fit_ringdown(negative, 1e8), ValidationError);

  Trace tiny(1e6, 2);
  tiny.add_channel("power_w") = {1.0, 0.5};
  CHECK_THROWS_AS(fit_ringdown(tiny, 1e8), ValidationError);
}

TEST_CASE("ringdown Monte Carlo: serial and parallel agree exactly") {
  const auto p = derive_params(CavityConfig{});
  RingdownConfig rc{400e-6, 10e6, 1e-3, 0.01, 0};
  std::vector<std::uint64_t> seeds(16);
  std::iota(seeds.begin(), seeds.end(), 100);
  const auto a = ringdown_monte_carlo(p, rc, seeds, Execution::serial);
  const auto b = ringdown_monte_carlo(p, rc, seeds, Execution::parallel);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].tau_s == b[i].tau_s);
}
