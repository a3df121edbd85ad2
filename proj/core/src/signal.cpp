#include "rrforge/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rrforge/error.hpp"

namespace rrforge {

double SampledSignal::duration() const noexcept {
  if (samples.size() < 2) return 0.0;
  return static_cast<double>(samples.size() - 1) / rate;
}

void TriaxialWindow::validate() const {
  require(!x.empty(), Errc::invalid_shape, "triaxial window is empty");
  require(x.size() == y.size() && x.size() == z.size(), Errc::invalid_shape,
          "triaxial axes differ in length");
  require(rate > 0.0, Errc::invalid_argument, "triaxial window rate must be positive");
}

SampledSignal resample_linear(const SampledSignal& signal, double target_rate) {
  require(target_rate > 0.0, Errc::invalid_argument, "target rate must be positive");
  require(signal.rate > 0.0, Errc::invalid_argument, "source rate must be positive");
  require(signal.samples.size() >= 2, Errc::invalid_argument, "resampling needs at least two samples");

  const auto& in = signal.samples;
  const std::size_t n_in = in.size();
  const double ratio = signal.rate / target_rate;  // input-index step per output sample
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_in - 1) * target_rate / signal.rate)) + 1;

  SampledSignal out;
  out.rate = target_rate;
  out.start_time = signal.start_time;
  out.samples.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    if (pos >= static_cast<double>(n_in - 1)) {
      out.samples[i] = in.back();
      continue;
    }
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    out.samples[i] = frac == 0.0 ? in[k] : in[k] + frac * (in[k + 1] - in[k]);
  }
  return out;
}

namespace {

std::size_t common_length(const std::map<std::string, SampledSignal>& signals, double& rate) {
  std::size_t len = 0;
  bool first = true;
  for (const auto& [name, sig] : signals) {
    require(sig.rate > 0.0, Errc::invalid_argument, "channel '" + name + "' has non-positive rate");
    if (first) {
      len = sig.size();
      rate = sig.rate;
      first = false;
      continue;
    }
    require(sig.rate == rate, Errc::invalid_argument, "channel '" + name + "' rate differs");
    require(sig.size() == len, Errc::invalid_shape, "channel '" + name + "' length differs");
  }
  return len;
}

std::size_t samples_for(double seconds, double rate, const char* what) {
  const double n = seconds * rate;
  const double rounded = std::round(n);
  require(rounded >= 1.0 && std::abs(n - rounded) < 1e-9, Errc::invalid_argument,
          std::string(what) + " * rate must be a positive integer");
  return static_cast<std::size_t>(rounded);
}

}  // namespace

std::vector<RawWindow> segment(const std::map<std::string, SampledSignal>& signals, double window_s,
                               double stride_s) {
  if (signals.empty()) return {};
  double rate = 0.0;
  const std::size_t len = common_length(signals, rate);
  const std::size_t win = samples_for(window_s, rate, "window_s");
  const std::size_t stride = samples_for(stride_s, rate, "stride_s");
  if (len < win) return {};

  std::vector<std::size_t> offsets;
  for (std::size_t off = 0; off + win <= len; off += stride) offsets.push_back(off);
  return segment_at(signals, offsets, win);
}

std::vector<std::size_t> random_window_offsets(std::size_t n_samples, std::size_t window_len,
                                               std::size_t count, std::uint64_t seed) {
  if (n_samples < window_len || window_len == 0) return {};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n_samples - window_len);
  std::vector<std::size_t> offsets(count);
  for (auto& o : offsets) o = pick(rng);
  std::sort(offsets.begin(), offsets.end());
  return offsets;
}

std::vector<RawWindow> segment_at(const std::map<std::string, SampledSignal>& signals,
                                  std::span<const std::size_t> offsets, std::size_t window_len) {
  if (signals.empty()) return {};
  double rate = 0.0;
  const std::size_t len = common_length(signals, rate);
  std::vector<RawWindow> windows;
  windows.reserve(offsets.size());
  for (const std::size_t off : offsets) {
    require(off + window_len <= len, Errc::invalid_argument, "window extends past the end of the signal");
    RawWindow w;
    w.offset = off;
    for (const auto& [name, sig] : signals) {
      const auto first = sig.samples.begin() + static_cast<std::ptrdiff_t>(off);
      w.channels.emplace(name, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(window_len)));
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

std::vector<double> minmax_normalize(std::span<const double> window) {
  require(!window.empty(), Errc::invalid_argument, "cannot normalize an empty window");
  const auto [lo_it, hi_it] = std::minmax_element(window.begin(), window.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(window.size(), 0.0);
  if (!(hi > lo)) return out;
  const double span = hi - lo;
  for (std::size_t i = 0; i < window.size(); ++i) {
    out[i] = 2.0 * (window[i] - lo) / span - 1.0;
  }
  // Pin the extremes; the division above can land one ulp inside or outside.
  out[static_cast<std::size_t>(lo_it - window.begin())] = -1.0;
  out[static_cast<std::size_t>(hi_it - window.begin())] = 1.0;
  for (auto& v : out) v = std::clamp(v, -1.0, 1.0);
  return out;
}

std::vector<double> fit_length(std::span<const double> samples, std::size_t n) {
  require(!samples.empty(), Errc::invalid_argument, "cannot fit an empty channel");
  std::vector<double> out(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(std::min(n, samples.size())));
  out.resize(n, samples.back());
  return out;
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double acc = 0.0;
  for (const double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && !a.empty(), Errc::invalid_shape, "pearson needs equal non-empty inputs");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double quantile(std::vector<double> x, double q) {
  require(!x.empty(), Errc::invalid_argument, "quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return x[lo] + frac * (x[hi] - x[lo]);
}

}  // namespace rrforge
