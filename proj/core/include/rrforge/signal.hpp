#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace rrforge {

/// Analysis rate every channel is brought to before windowing.
inline constexpr double kAnalysisRate = 100.0;
inline constexpr double kWindowSeconds = 32.0;
inline constexpr std::size_t kWindowSamples = 3200;

/// A uniformly sampled real-valued channel. Samples sit on knots t = start_time + i / rate.
struct SampledSignal {
  std::vector<double> samples;
  double rate = 1.0;
  double start_time = 0.0;

  std::size_t size() const noexcept { return samples.size(); }
  /// (len - 1) / rate; zero for empty or single-sample signals.
  double duration() const noexcept;
};

/// Three aligned axes of an accelerometer or gyroscope.
struct TriaxialWindow {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;
  double rate = kAnalysisRate;

  std::size_t size() const noexcept { return x.size(); }
  /// Throws invalid-shape unless all axes share one non-zero length.
  void validate() const;
};

/// Linear interpolation onto a new rate. The output keeps the first knot and
/// holds round((N - 1) * target_rate / rate) + 1 samples; knots past the last
/// input knot (possible through rounding) clamp to the final sample.
SampledSignal resample_linear(const SampledSignal& signal, double target_rate);

/// One aligned window cut from every channel handed to `segment`.
struct RawWindow {
  std::size_t offset = 0;  // first sample index in the source channels
  std::map<std::string, std::vector<double>> channels;
};

/// Fixed-stride windowing. Yields floor((duration - window_s) / stride_s) + 1
/// windows when the channels are at least one window long, otherwise none.
std::vector<RawWindow> segment(const std::map<std::string, SampledSignal>& signals,
                               double window_s = kWindowSeconds, double stride_s = kWindowSeconds);

/// Seeded random window placement: `count` offsets drawn uniformly from the
/// valid range [0, n_samples - window_len], sorted ascending.
std::vector<std::size_t> random_window_offsets(std::size_t n_samples, std::size_t window_len,
                                               std::size_t count, std::uint64_t seed);

/// Windows at explicit offsets (as produced by `random_window_offsets`).
std::vector<RawWindow> segment_at(const std::map<std::string, SampledSignal>& signals,
                                  std::span<const std::size_t> offsets, std::size_t window_len);

/// Maps min to -1 and max to +1. A flat window maps to all zeros.
std::vector<double> minmax_normalize(std::span<const double> window);

/// Crop, or pad by repeating the last sample, to exactly `n` samples.
std::vector<double> fit_length(std::span<const double> samples, std::size_t n);

double mean(std::span<const double> x);
/// Population variance (divides by N).
double variance(std::span<const double> x);
double pearson(std::span<const double> a, std::span<const double> b);
/// Quantile by linear interpolation between order statistics (numpy "linear").
double quantile(std::vector<double> x, double q);

}  // namespace rrforge
