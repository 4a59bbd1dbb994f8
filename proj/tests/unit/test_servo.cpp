#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "ringlock/cavity.hpp"
#include "ringlock/errors.hpp"
#include "ringlock/servo.hpp"

using namespace ringlock;

namespace {

const double kPiLocal = std::acos(-1.0);

// Drives a discrete stage with a sine and projects the settled output onto sin/cos over
// whole periods; DC offsets from the start transient drop out of the projection.
std::complex<double> measured_response(const FilterStage& stage, double fs, double f) {
  StageFilter filt(stage, fs);
  const int per_period = static_cast<int>(std::lround(fs / f));
  REQUIRE(std::abs(per_period * f - fs) < 1e-9 * fs);
  const int settle = 50 * per_period, measure = 20 * per_period;
  std::complex<double> acc = 0.0;
  for (int n = 0; n < settle + measure; ++n) {
    const double ph = 2 * kPiLocal * f * n / fs;
    const double y = filt.step(std::sin(ph));
    if (n >= settle) acc += y * std::complex<double>(std::sin(ph), std::cos(ph));
  }
  return acc * (2.0 / measure);
}

double plant_pole() { return derive_params(CavityConfig{}).cavity_pole_hz(); }

}  // namespace

TEST_CASE("stage kinds parse and print") {
  for (auto k : {StageKind::pi, StageKind::pid, StageKind::pure_gain, StageKind::lead})
    CHECK(stage_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(stage_kind_from_string("pdi"), ValidationError);
}

TEST_CASE("continuous stage responses") {
  const auto pi = FilterStage::pi(2.0, 1000.0);
  CHECK(std::abs(pi.response(1000.0)) == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(std::arg(pi.response(1000.0)) == doctest::Approx(-kPiLocal / 4));
  CHECK(std::abs(pi.response(1e7)) == doctest::Approx(2.0).epsilon(1e-4));
  const auto pid = FilterStage::pid(1.0, 10.0, 1000.0);
  CHECK(std::abs(pid.response(1e6)) == doctest::Approx(11.0).epsilon(1e-3));
  const auto lead = FilterStage::lead(50e3, 250e3);
  CHECK(std::abs(lead.response(1e9)) == doctest::Approx(5.0).epsilon(1e-3));
  CHECK(std::abs(lead.response(1.0)) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(FilterStage::pi(1.0, 0.0).validate(), ValidationError);
  CHECK_THROWS_AS(FilterStage::pid(1.0, 1.0, -1.0).validate(), ValidationError);
  CHECK_THROWS_AS(FilterStage::gain(std::nan("")).validate(), ValidationError);
}

TEST_CASE("discrete stages match their continuous response within 2% up to fs/40") {
  const double fs = 2e6;
  const std::vector<FilterStage> stages = {FilterStage::pi(1.0, 30e3), FilterStage::pi(1.0, 3e3),
                                           FilterStage::pid(0.5, 100.0, 1e3), FilterStage::lead(50e3, 250e3),
                                           FilterStage::gain(3.0)};
  for (const auto& s : stages) {
    for (double f : {1e3, 1e4, 2.5e4, 5e4}) {
      CAPTURE(to_string(s.kind));
      CAPTURE(f);
      const auto want = s.response(f);
      const auto got = measured_response(s, fs, f);
      CHECK(std::abs(got - want) / std::abs(want) < 0.02);
    }
  }
}

TEST_CASE("PI output ramps at Kp * wi * x for a constant input") {
  const double fs = 1e6, kp = 0.7, fi = 50.0, x = 0.3;
  StageFilter f(FilterStage::pi(kp, fi), fs);
  double y0 = f.step(x), y = y0;
  const int n = 10000;
  for (int i = 1; i <= n; ++i) y = f.step(x);
  CHECK((y - y0) / (n / fs) == doctest::Approx(kp * 2 * kPiLocal * fi * x).epsilon(1e-9));
}

TEST_CASE("integrator clamp and non-finite input") {
  StageFilter f(FilterStage::pi(1.0, 1e3), 1e5, 0.5);
  for (int i = 0; i < 100000; ++i) f.step(1.0);
  CHECK(f.integrator_state() == doctest::Approx(0.5));
  const double before = f.integrator_state();
  CHECK_THROWS_AS(f.step(std::nan("")), ValidationError);
  CHECK(f.integrator_state() == before);
  f.reset();
  CHECK(f.integrator_state() == 0.0);
}

TEST_CASE("handover gain solves Kp/(1+Kp) = 1/(tau 2 pi fi)") {
  for (auto [fi, tau] : {std::pair{100.0, 0.1}, std::pair{15e-3, 100.0}}) {
    const double kp = handover_gain(fi, tau);
    CHECK(kp / (1 + kp) == doctest::Approx(1.0 / (tau * 2 * kPiLocal * fi)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(handover_gain(1.0, 0.01), ValidationError);
}

TEST_CASE("pure-gain loop without delay") {
  ServoChain c;
  c.fast_stages = {FilterStage::gain(5.0)};
  c.overall_gain = 1.0;
  const double pole = 1e4;
  CHECK(std::abs(open_loop_transfer(c, pole, 1.0)) == doctest::Approx(5.0).epsilon(1e-3));
  const auto r = loop_report(c, pole);
  // |5 / (1 + i f / pole)| = 1  ->  f = pole sqrt(24)
  CHECK(r.unity_gain_frequency_hz == doctest::Approx(pole * std::sqrt(24.0)).epsilon(1e-6));
  CHECK(r.phase_margin_deg == doctest::Approx(180.0 - std::atan(std::sqrt(24.0)) * 180 / kPiLocal).epsilon(1e-6));
  CHECK(std::isinf(r.gain_margin_db));
}

TEST_CASE("delay adds linear phase") {
  ServoChain c;
  c.fast_stages = {FilterStage::gain(1.0)};
  c.loop_delay_s = 1e-6;
  const double f = 1e5;
  const double no_delay = std::atan(f / 1e9) * 180 / kPiLocal;
  CHECK(open_loop_phase_deg(c, 1e9, f) == doctest::Approx(-no_delay - 360 * f * 1e-6).epsilon(1e-9));
}

TEST_CASE("loop without crossing is inactive; a too-hot loop is unstable") {
  ServoChain c;
  c.fast_stages = {FilterStage::gain(0.1)};
  CHECK_THROWS_AS(loop_report(c, 1e3), LoopInactiveError);
  auto hot = ServoChain::reference_default();
  hot.overall_gain *= 10;
  CHECK_THROWS_AS(loop_report(hot, plant_pole()), UnstableLoopError);
}

TEST_CASE("default chain has the target loop shape") {
  const auto r = loop_report(ServoChain::reference_default(), plant_pole());
  CHECK(r.stable);
  CHECK(r.resonance_peak_db == doctest::Approx(10.0).epsilon(1e-3));
  CHECK(r.resonance_frequency_hz == doctest::Approx(180e3).epsilon(1e-3));
  CHECK(r.unity_gain_frequency_hz > 60e3);
  CHECK(r.unity_gain_frequency_hz < 90e3);
  CHECK(r.phase_margin_deg > 30.0);
  CHECK(r.gain_margin_db > 0.0);
  // Closed-loop resonance is the minimum of |1 + G| above the crossover.
  const auto c = ServoChain::reference_default();
  const double at = std::abs(1.0 + open_loop_transfer(c, plant_pole(), r.resonance_frequency_hz));
  CHECK(-20 * std::log10(at) == doctest::Approx(r.resonance_peak_db).epsilon(1e-6));
  for (double f = 1.1 * r.unity_gain_frequency_hz; f < 10 * r.unity_gain_frequency_hz; f *= 1.01)
    CHECK(std::abs(1.0 + open_loop_transfer(c, plant_pole(), f)) >= at * (1 - 1e-9));
}

TEST_CASE("suppression at the injection frequencies exceeds 60 dB") {
  const auto c = ServoChain::reference_default();
  for (double f : {217.0, 276.0}) CHECK(suppression_db(c, plant_pole(), f) > 60.0);
}

TEST_CASE("bode: serial equals parallel, consistent with the transfer function") {
  const auto c = ServoChain::reference_default();
  const auto grid = log_frequency_grid(1.0, 1e7, 301);
  CHECK(grid.front() == doctest::Approx(1.0));
  CHECK(grid.back() == doctest::Approx(1e7));
  const auto a = bode(c, plant_pole(), grid, Execution::serial);
  const auto b = bode(c, plant_pole(), grid, Execution::parallel);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].magnitude_db == b[i].magnitude_db);
    CHECK(a[i].phase_deg == b[i].phase_deg);
    const auto g = open_loop_transfer(c, plant_pole(), grid[i]);
    CHECK(a[i].magnitude_db == doctest::Approx(20 * std::log10(std::abs(g))).epsilon(1e-12));
    const double wrapped = std::remainder(a[i].phase_deg - std::arg(g) * 180 / kPiLocal, 360.0);
    CHECK(std::abs(wrapped) < 1e-6);
  }
}

TEST_CASE("calibration reproduces the shipped defaults") {
  auto chain = ServoChain::reference_default();
  const auto cal = calibrate_loop(chain, plant_pole(), 10.0, 180e3);
  CHECK(cal.overall_gain == doctest::Approx(chain.overall_gain).epsilon(1e-6));
  CHECK(cal.loop_delay_s == doctest::Approx(chain.loop_delay_s).epsilon(1e-6));
  CHECK(cal.report.resonance_peak_db == doctest::Approx(10.0).epsilon(1e-4));
}

TEST_CASE("discrete magnitude matches the continuous magnitude within 2% up to fs/20") {
  const double fs = 2e6;
  for (const auto& s : {FilterStage::pi(1.0, 30e3), FilterStage::pid(0.5, 100.0, 1e3), FilterStage::lead(50e3, 250e3),
                        FilterStage::gain(2.0)}) {
    CAPTURE(to_string(s.kind));
    CHECK(std::abs(measured_response(s, fs, fs / 20)) == doctest::Approx(std::abs(s.response(fs / 20))).epsilon(0.02));
  }
}

TEST_CASE("zero input gives zero output; high-frequency PI gain is Kp") {
  StageFilter f(FilterStage::pid(2.0, 10.0, 100.0), 1e5);
  for (int i = 0; i < 1000; ++i) REQUIRE(f.step(0.0) == 0.0);
  const auto pi = FilterStage::pi(0.8, 100.0);
  CHECK(std::abs(measured_response(pi, 1e6, 5e4)) == doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("margins do not depend on the order of fast stages") {
  const double pole = plant_pole();
  auto c = ServoChain::reference_default();
  const auto a = loop_report(c, pole);
  std::reverse(c.fast_stages.begin(), c.fast_stages.end());
  const auto b = loop_report(c, pole);
  CHECK(a.unity_gain_frequency_hz == doctest::Approx(b.unity_gain_frequency_hz).epsilon(1e-12));
  CHECK(a.phase_margin_deg == doctest::Approx(b.phase_margin_deg).epsilon(1e-9));
  CHECK(a.gain_margin_db == doctest::Approx(b.gain_margin_db).epsilon(1e-9));
  CHECK(a.resonance_peak_db == doctest::Approx(b.resonance_peak_db).epsilon(1e-9));
}

TEST_CASE("suppression: large in band, negative at the bounce, zero without gain") {
  const double pole = plant_pole();
  const auto c = ServoChain::reference_default();
  CHECK(std::abs(open_loop_transfer(c, pole, 217.0)) >= 1e3);
  const auto r = loop_report(c, pole);
  CHECK(suppression_db(c, pole, r.resonance_frequency_hz) < 0.0);
  auto off = c;
  off.overall_gain = 0.0;
  CHECK(suppression_db(off, pole, 217.0) == 0.0);
  CHECK_THROWS_AS(loop_report(off, pole), LoopInactiveError);
}
