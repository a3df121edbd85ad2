#include "rrforge/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "rrforge/error.hpp"
#include "rrforge/signal.hpp"

namespace rrforge::spectral {
namespace {

// FFTW's planner is not re-entrant; execution with a private plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t n_fft) {
  require(n_fft >= 1, Errc::invalid_argument, "FFT length must be positive");
  double* in = fftw_alloc_real(n_fft);
  fftw_complex* out = fftw_alloc_complex(n_fft / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), in, out, FFTW_ESTIMATE);
  }
  const std::size_t n = std::min(n_fft, x.size());
  std::copy_n(x.begin(), n, in);
  std::fill(in + n, in + n_fft, 0.0);
  fftw_execute(plan);

  std::vector<std::complex<double>> bins(n_fft / 2 + 1);
  for (std::size_t k = 0; k < bins.size(); ++k) bins[k] = {out[k][0], out[k][1]};
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return bins;
}

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return w;
}

Psd welch(std::span<const double> x, double rate, std::size_t segment_len) {
  require(!x.empty(), Errc::invalid_argument, "welch on empty input");
  const std::size_t seg = std::clamp<std::size_t>(segment_len, 1, x.size());
  const std::size_t step = std::max<std::size_t>(1, seg / 2);
  const auto win = hann(seg);
  double win_energy = 0.0;
  for (const double w : win) win_energy += w * w;

  Psd psd;
  const std::size_t n_bins = seg / 2 + 1;
  psd.freqs.resize(n_bins);
  psd.power.assign(n_bins, 0.0);
  for (std::size_t k = 0; k < n_bins; ++k) psd.freqs[k] = static_cast<double>(k) * rate / static_cast<double>(seg);

  std::size_t n_segments = 0;
  std::vector<double> buf(seg);
  for (std::size_t off = 0; off + seg <= x.size(); off += step) {
    const double m = mean(x.subspan(off, seg));
    for (std::size_t i = 0; i < seg; ++i) buf[i] = (x[off + i] - m) * win[i];
    const auto bins = rfft(buf, seg);
    for (std::size_t k = 0; k < n_bins; ++k) psd.power[k] += std::norm(bins[k]);
    ++n_segments;
  }
  const double scale = 1.0 / (rate * win_energy * static_cast<double>(n_segments));
  for (std::size_t k = 0; k < n_bins; ++k) {
    const bool edge = k == 0 || (seg % 2 == 0 && k == n_bins - 1);
    psd.power[k] *= scale * (edge ? 1.0 : 2.0);
  }
  return psd;
}

double band_power(const Psd& psd, double lo, double hi) {
  double acc = 0.0;
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    if (psd.freqs[k] >= lo && psd.freqs[k] <= hi) acc += psd.power[k];
  }
  return acc;
}

double band_power_fraction(std::span<const double> x, double rate, double lo, double hi) {
  require(!x.empty(), Errc::invalid_argument, "band power of empty input");
  const auto win = hann(x.size());
  const double m = mean(x);
  std::vector<double> buf(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) buf[i] = (x[i] - m) * win[i];
  const auto bins = rfft(buf, x.size());
  double total = 0.0, in_band = 0.0;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const double f = static_cast<double>(k) * rate / static_cast<double>(x.size());
    const double p = std::norm(bins[k]);
    total += p;
    if (f >= lo && f <= hi) in_band += p;
  }
  if (!(total > 0.0)) return 0.0;
  return std::clamp(in_band / total, 0.0, 1.0);
}

SpectralPeak dominant_peak(std::span<const double> x, double rate, double lo, double hi, std::size_t pad_factor) {
  require(x.size() >= 2, Errc::invalid_argument, "spectral peak needs at least two samples");
  require(rate > 0.0 && lo >= 0.0 && hi > lo, Errc::invalid_argument, "bad band for spectral peak");
  const std::size_t n = x.size();
  const std::size_t n_fft = next_pow2(std::max<std::size_t>(1, pad_factor) * n);
  const auto win = hann(n);
  const double m = mean(x);
  std::vector<double> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = (x[i] - m) * win[i];
  const auto bins = rfft(buf, n_fft);

  const double df = rate / static_cast<double>(n_fft);
  const auto k_lo = static_cast<std::size_t>(std::ceil(lo / df));
  const auto k_hi = std::min(bins.size() - 1, static_cast<std::size_t>(std::floor(hi / df)));
  SpectralPeak peak;
  if (k_lo > k_hi) return peak;

  std::vector<double> power(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) power[k] = std::norm(bins[k]);

  double total = 0.0;
  std::size_t k_max = k_lo;
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    total += power[k];
    if (power[k] > power[k_max]) k_max = k;
  }
  if (!(total > 0.0) || !std::isfinite(total)) return peak;

  double delta = 0.0;
  if (k_max > 0 && k_max + 1 < bins.size()) {
    const double a = std::sqrt(power[k_max - 1]);
    const double b = std::sqrt(power[k_max]);
    const double c = std::sqrt(power[k_max + 1]);
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) delta = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  }
  peak.frequency = (static_cast<double>(k_max) + delta) * df;
  peak.found = true;

  const double duration = static_cast<double>(n) / rate;
  const double half_lobe = 1.5 / duration;
  double lobe = 0.0;
  std::size_t lobe_bins = 0;
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    if (std::abs(static_cast<double>(k) * df - peak.frequency) <= half_lobe) {
      lobe += power[k];
      ++lobe_bins;
    }
  }
  const double band_bins = static_cast<double>(k_hi - k_lo + 1);
  const double width_frac = static_cast<double>(lobe_bins) / band_bins;
  double kappa = 1.0;
  if (width_frac < 1.0) kappa = (lobe / total - width_frac) / (1.0 - width_frac);
  kappa = std::clamp(kappa, 0.0, 1.0);
  peak.confidence = kappa * kappa;
  return peak;
}

std::vector<Biquad> butter_bandpass(std::size_t prototype_order, double lo, double hi, double rate) {
  require(prototype_order >= 1, Errc::invalid_argument, "filter order must be positive");
  require(lo > 0.0 && hi > lo && hi < rate / 2.0, Errc::invalid_argument, "band edges must satisfy 0 < lo < hi < rate/2");
  using cd = std::complex<double>;
  const double fs2 = 2.0 * rate;
  const double w1 = fs2 * std::tan(std::numbers::pi * lo / rate);
  const double w2 = fs2 * std::tan(std::numbers::pi * hi / rate);
  const double w0_sq = w1 * w2;
  const double bw = w2 - w1;

  // Analog band-pass poles from the low-pass prototype, then bilinear map.
  std::vector<cd> digital;
  const auto n = static_cast<double>(prototype_order);
  for (std::size_t k = 0; k < prototype_order; ++k) {
    const double theta = std::numbers::pi * (2.0 * static_cast<double>(k) + n + 1.0) / (2.0 * n);
    const cd p = std::polar(1.0, theta) * bw;
    const cd disc = std::sqrt(p * p - 4.0 * w0_sq);
    for (const cd s : {(p + disc) / 2.0, (p - disc) / 2.0}) {
      digital.push_back((fs2 + s) / (fs2 - s));
    }
  }

  std::vector<Biquad> sos;
  for (const cd z : digital) {
    if (z.imag() <= 0.0) continue;  // one representative of each conjugate pair
    Biquad q;
    q.b0 = 1.0;
    q.b1 = 0.0;
    q.b2 = -1.0;  // zeros at z = +1 and z = -1
    q.a1 = -2.0 * z.real();
    q.a2 = std::norm(z);
    sos.push_back(q);
  }
  require(sos.size() == prototype_order, Errc::numeric_failure, "band-pass pole pairing failed");

  const double centre = rate / std::numbers::pi * std::atan(std::sqrt(w0_sq) / fs2);
  const double g = std::abs(response(sos, centre, rate));
  sos.front().b0 /= g;
  sos.front().b1 /= g;
  sos.front().b2 /= g;
  return sos;
}

std::complex<double> response(const std::vector<Biquad>& sos, double freq, double rate) {
  const std::complex<double> zi = std::polar(1.0, -2.0 * std::numbers::pi * freq / rate);
  std::complex<double> h = 1.0;
  for (const auto& q : sos) {
    h *= (q.b0 + q.b1 * zi + q.b2 * zi * zi) / (1.0 + q.a1 * zi + q.a2 * zi * zi);
  }
  return h;
}

namespace {

void run_sections(const std::vector<Biquad>& sos, std::vector<double>& x, double x0) {
  double stage_in = x0;  // steady-state input level of the current section
  for (const auto& q : sos) {
    const double dc = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double y_ss = dc * stage_in;
    double s2 = q.b2 * stage_in - q.a2 * y_ss;
    double s1 = y_ss - q.b0 * stage_in;
    for (double& v : x) {
      const double in = v;
      const double out = q.b0 * in + s1;
      s1 = q.b1 * in - q.a1 * out + s2;
      s2 = q.b2 * in - q.a2 * out;
      v = out;
    }
    stage_in = y_ss;
  }
}

}  // namespace

std::vector<double> sosfilt(const std::vector<Biquad>& sos, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& q : sos) {
    double s1 = 0.0, s2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = q.b0 * in + s1;
      s1 = q.b1 * in - q.a1 * out + s2;
      s2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<double> sosfiltfilt(const std::vector<Biquad>& sos, std::span<const double> x, std::size_t padlen) {
  require(!x.empty(), Errc::invalid_argument, "filtfilt on empty input");
  const std::size_t n = x.size();
  const std::size_t pad = std::min(padlen, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  run_sections(sos, ext, ext.front());
  std::reverse(ext.begin(), ext.end());
  run_sections(sos, ext, ext.front());
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> detrend_linear(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> y(x.begin(), x.end());
  if (n < 2) return detrend_constant(x);
  const double t_mean = static_cast<double>(n - 1) / 2.0;
  const double y_mean = mean(x);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - t_mean;
    sxy += dt * (x[i] - y_mean);
    sxx += dt * dt;
  }
  const double slope = sxy / sxx;
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] - y_mean - slope * (static_cast<double>(i) - t_mean);
  return y;
}

std::vector<double> detrend_constant(std::span<const double> x) {
  const double m = mean(x);
  std::vector<double> y(x.begin(), x.end());
  for (double& v : y) v -= m;
  return y;
}

}  // namespace rrforge::spectral
