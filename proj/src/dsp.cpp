#include "ringlock/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "ringlock/constants.hpp"
#include "ringlock/errors.hpp"

namespace ringlock {

LockInConfig LockInConfig::for_reference(double reference_frequency_hz) {
  return {reference_frequency_hz, 100.0 / reference_frequency_hz, 2};
}

void LockInConfig::validate() const {
  if (!(std::isfinite(reference_frequency_hz) && reference_frequency_hz > 0.0))
    throw ValidationError("lock-in reference frequency must be positive");
  if (!(time_constant_s > 1.0 / reference_frequency_hz))
    throw ValidationError("lock-in time constant must exceed one reference period");
  if (filter_order < 1) throw ValidationError("lock-in filter order must be at least 1");
}

double lock_in_enbw_hz(const LockInConfig& config) {
  // One-sided ENBW of n cascaded RC poles: Gamma(n - 1/2) / (4 sqrt(pi) tau Gamma(n)).
  const double n = config.filter_order;
  return std::tgamma(n - 0.5) / (4.0 * std::sqrt(kPi) * config.time_constant_s * std::tgamma(n));
}

LockInResult lock_in(std::span<const double> series, double sample_rate_hz, const LockInConfig& config) {
  config.validate();
  if (!(sample_rate_hz > 0.0)) throw ValidationError("lock-in sample rate must be positive");
  if (config.reference_frequency_hz >= 0.5 * sample_rate_hz)
    throw ValidationError("lock-in reference above Nyquist");
  const double needed = 10.0 * config.time_constant_s * sample_rate_hz;
  if (static_cast<double>(series.size()) < needed)
    throw ValidationError("lock-in series too short: need at least 10 time constants of data");

  const auto order = static_cast<std::size_t>(config.filter_order);
  std::vector<double> si(order, 0.0), sq(order, 0.0);
  const double alpha = -std::expm1(-1.0 / (config.time_constant_s * sample_rate_hz));
  const double w = kTwoPi * config.reference_frequency_hz / sample_rate_hz;
  const auto settle = static_cast<std::size_t>(std::ceil(needed));
  double acc = 0.0;
  std::size_t acc_n = 0;
  for (std::size_t n = 0; n < series.size(); ++n) {
    const double ph = w * static_cast<double>(n);
    double xi = series[n] * std::cos(ph);
    double xq = -series[n] * std::sin(ph);
    for (std::size_t k = 0; k < order; ++k) {
      si[k] += alpha * (xi - si[k]);
      sq[k] += alpha * (xq - sq[k]);
      xi = si[k];
      xq = sq[k];
    }
    if (n >= settle) {
      acc += 4.0 * (xi * xi + xq * xq);
      ++acc_n;
    }
  }
  LockInResult r;
  r.in_phase = 2.0 * si.back();
  r.quadrature = 2.0 * sq.back();
  r.magnitude = std::hypot(r.in_phase, r.quadrature);
  r.phase_rad = std::atan2(r.quadrature, r.in_phase);
  r.settled_quadrature_rms = acc_n > 0 ? std::sqrt(acc / (2.0 * static_cast<double>(acc_n))) : 0.0;
  return r;
}

std::string_view to_string(Window w) {
  switch (w) {
    case Window::rectangular: return "rectangular";
    case Window::hann: return "hann";
    case Window::hamming: return "hamming";
    case Window::blackman: return "blackman";
  }
  return "hann";
}

Window window_from_string(std::string_view name) {
  if (name == "rectangular") return Window::rectangular;
  if (name == "hann") return Window::hann;
  if (name == "hamming") return Window::hamming;
  if (name == "blackman") return Window::blackman;
  throw ValidationError("unknown window '" + std::string(name) + "'");
}

std::vector<double> make_window(Window w, std::size_t n) {
  std::vector<double> out(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
    switch (w) {
      case Window::rectangular: break;
      case Window::hann: out[i] = 0.5 - 0.5 * std::cos(x); break;
      case Window::hamming: out[i] = 0.54 - 0.46 * std::cos(x); break;
      case Window::blackman: out[i] = 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x); break;
    }
  }
  return out;
}

std::size_t default_segment_length(std::size_t n) {
  const double target = std::max(8.0, static_cast<double>(n) / 64.0);
  const double p = std::round(std::log2(target));
  return static_cast<std::size_t>(std::ldexp(1.0, static_cast<int>(p)));
}

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex g_plan_mutex;

struct R2cPlan {
  fftw_plan plan = nullptr;
  explicit R2cPlan(std::size_t n) {
    std::vector<double> in(n);
    std::vector<std::complex<double>> out(n / 2 + 1);
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  ~R2cPlan() {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    fftw_destroy_plan(plan);
  }
  R2cPlan(const R2cPlan&) = delete;
  R2cPlan& operator=(const R2cPlan&) = delete;
};

}  // namespace

Psd welch_psd(std::span<const double> series, double sample_rate_hz, WelchConfig config, Execution exec) {
  if (!(sample_rate_hz > 0.0)) throw ValidationError("welch_psd sample rate must be positive");
  if (series.size() < 8) throw ValidationError("welch_psd needs at least 8 samples");
  if (config.segment_length == 0) config.segment_length = default_segment_length(series.size());
  const std::size_t nseg = config.segment_length;
  if (nseg < 8 || nseg > series.size())
    throw ValidationError("welch_psd segment length must lie in [8, series length]");
  if (!(config.overlap_fraction >= 0.0 && config.overlap_fraction < 1.0))
    throw ValidationError("welch_psd overlap must lie in [0, 1)");
  const auto overlap = static_cast<std::size_t>(std::floor(config.overlap_fraction * static_cast<double>(nseg)));
  const std::size_t hop = nseg - overlap;
  const std::size_t count = (series.size() - nseg) / hop + 1;

  const auto window = make_window(config.window, nseg);
  double u = 0.0;
  for (double v : window) u += v * v;
  const std::size_t nbins = nseg / 2 + 1;
  const R2cPlan plan(nseg);

  // Per-segment periodograms are summed afterwards in index order, so the result does
  // not depend on the thread schedule.
  std::vector<std::vector<double>> parts(count);
  for_each_index(exec, static_cast<std::ptrdiff_t>(count), [&](std::ptrdiff_t s) {
    const std::size_t start = static_cast<std::size_t>(s) * hop;
    double mean = 0.0;
    for (std::size_t i = 0; i < nseg; ++i) mean += series[start + i];
    mean /= static_cast<double>(nseg);
    std::vector<double> buf(nseg);
    for (std::size_t i = 0; i < nseg; ++i) buf[i] = (series[start + i] - mean) * window[i];
    std::vector<std::complex<double>> spec(nbins);
    fftw_execute_dft_r2c(plan.plan, buf.data(), reinterpret_cast<fftw_complex*>(spec.data()));
    auto& p = parts[static_cast<std::size_t>(s)];
    p.resize(nbins);
    for (std::size_t k = 0; k < nbins; ++k) p[k] = std::norm(spec[k]);
  });

  Psd psd;
  psd.segments = count;
  psd.resolution_hz = sample_rate_hz / static_cast<double>(nseg);
  psd.frequency_hz.resize(nbins);
  psd.density.assign(nbins, 0.0);
  for (const auto& p : parts)
    for (std::size_t k = 0; k < nbins; ++k) psd.density[k] += p[k];
  const double scale = 1.0 / (sample_rate_hz * u * static_cast<double>(count));
  for (std::size_t k = 0; k < nbins; ++k) {
    psd.frequency_hz[k] = psd.resolution_hz * static_cast<double>(k);
    const bool edge = k == 0 || (nseg % 2 == 0 && k == nbins - 1);
    psd.density[k] *= scale * (edge ? 1.0 : 2.0);
  }
  return psd;
}

double integrate_psd(const Psd& psd, double f_lo_hz, double f_hi_hz) {
  double sum = 0.0;
  for (std::size_t k = 0; k < psd.density.size(); ++k)
    if (psd.frequency_hz[k] >= f_lo_hz && psd.frequency_hz[k] <= f_hi_hz) sum += psd.density[k];
  return sum * psd.resolution_hz;
}

double mean_density(const Psd& psd, double f_lo_hz, double f_hi_hz) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < psd.density.size(); ++k) {
    if (psd.frequency_hz[k] >= f_lo_hz && psd.frequency_hz[k] <= f_hi_hz) {
      sum += psd.density[k];
      ++n;
    }
  }
  if (n == 0) throw ValidationError("no PSD bins in the requested band");
  return sum / static_cast<double>(n);
}

double birefringence_from_frequency(double delta_nu_hz, double optical_frequency_hz) {
  if (!(optical_frequency_hz > 0.0)) throw ValidationError("optical frequency must be positive");
  return delta_nu_hz / optical_frequency_hz;
}

double noise_equivalent_birefringence(double delta_n, double measurement_time_s) {
  if (!(measurement_time_s > 0.0)) throw ValidationError("measurement time must be positive");
  return delta_n * std::sqrt(4.0 * measurement_time_s);
}

LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  if (x.size() != y.size() || x.size() != w.size()) throw ValidationError("line fit size mismatch");
  if (x.size() < 2) throw ValidationError("line fit needs at least two points");
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(w[i] > 0.0)) throw ValidationError("line fit weights must be positive");
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) throw ValidationError("line fit degenerate: x has no spread");
  LineFit f;
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / sw;
  return f;
}

}  // namespace ringlock
