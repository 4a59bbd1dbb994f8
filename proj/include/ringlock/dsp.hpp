#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "ringlock/execution.hpp"

namespace ringlock {

struct LockInConfig {
  double reference_frequency_hz = 217.0;
  double time_constant_s = 100.0 / 217.0;
  int filter_order = 2;

  /// time_constant = 100 / reference_frequency.
  static LockInConfig for_reference(double reference_frequency_hz);
  void validate() const;
};

struct LockInResult {
  double magnitude = 0.0;  // amplitude of the tone (peak), sqrt(I^2 + Q^2) * 2
  double phase_rad = 0.0;  // phase of the tone relative to cos(2 pi f t)
  double in_phase = 0.0;
  double quadrature = 0.0;
  /// RMS per quadrature of the output over the settled part (t > 10 time constants).
  /// For a noise-only input this is the lock-in noise floor.
  double settled_quadrature_rms = 0.0;
};

/// Dual-phase demodulation with `filter_order` cascaded single-pole low-pass sections.
/// Reads the filter outputs at the end of the series.
LockInResult lock_in(std::span<const double> series, double sample_rate_hz, const LockInConfig& config);

/// One-sided equivalent noise bandwidth of the lock-in output filter (Hz).
double lock_in_enbw_hz(const LockInConfig& config);

enum class Window { rectangular, hann, hamming, blackman };

std::string_view to_string(Window w);
Window window_from_string(std::string_view name);
/// Periodic window of length n.
std::vector<double> make_window(Window w, std::size_t n);

struct WelchConfig {
  std::size_t segment_length = 0;  // 0 = default_segment_length(series length)
  double overlap_fraction = 0.5;
  Window window = Window::hann;
};

/// Power of two nearest to n/64 (at least 8).
std::size_t default_segment_length(std::size_t n);

struct Psd {
  std::vector<double> frequency_hz;
  std::vector<double> density;  // units^2 / Hz, one-sided
  std::size_t segments = 0;
  double resolution_hz = 0.0;
};

/// Averaged windowed periodogram with per-segment mean removal. Density scaling: the
/// integral of the PSD over frequency equals the variance of the series.
Psd welch_psd(std::span<const double> series, double sample_rate_hz, WelchConfig config = {},
              Execution exec = Execution::parallel);

/// Integral of a PSD over [f_lo, f_hi] (rectangle rule on the bin grid).
double integrate_psd(const Psd& psd, double f_lo_hz, double f_hi_hz);
/// Mean density over [f_lo, f_hi].
double mean_density(const Psd& psd, double f_lo_hz, double f_hi_hz);

/// delta_n = delta_nu / nu.
double birefringence_from_frequency(double delta_nu_hz, double optical_frequency_hz);
/// gamma_n = delta_n * sqrt(4 tau).
double noise_equivalent_birefringence(double delta_n, double measurement_time_s);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Weighted least-squares line. Weights must be positive; at least two points.
LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                          std::span<const double> w);

}  // namespace ringlock
