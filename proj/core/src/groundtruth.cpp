#include "rrforge/groundtruth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rrforge/error.hpp"
#include "rrforge/spectral.hpp"

namespace rrforge::gt {
namespace {

std::vector<double> band_pass(std::span<const double> axis, double rate) {
  static thread_local double cached_rate = 0.0;
  static thread_local std::vector<spectral::Biquad> sos;
  if (cached_rate != rate) {
    sos = spectral::butter_bandpass(2, kBandLow, kBandHigh, rate);
    cached_rate = rate;
  }
  const auto centred = spectral::detrend_constant(axis);
  // Pad by up to 20 s so the 0.1 Hz edge settles outside the window.
  return spectral::sosfiltfilt(sos, centred, static_cast<std::size_t>(20.0 * rate));
}

}  // namespace

TriaxialWindow preprocess_chest(const TriaxialWindow& window) {
  window.validate();
  return TriaxialWindow{band_pass(window.x, window.rate), band_pass(window.y, window.rate),
                        band_pass(window.z, window.rate), window.rate};
}

AxisEstimate rr_fft_axis(std::span<const double> axis, double rate) {
  const auto peak = spectral::dominant_peak(axis, rate, kBandLow, kBandHigh, 8);
  AxisEstimate est;
  if (!peak.found) {
    est.flagged = true;
    return est;
  }
  est.rr = std::clamp(60.0 * peak.frequency, kMinRr, kMaxRr);
  est.confidence = peak.confidence;
  return est;
}

FuseResult kalman_fuse(KalmanState& state, std::span<const AxisEstimate, 3> estimates, const KalmanParams& params) {
  // Weighted offsets from the first usable estimate, so a consensus stays exact.
  double weight_sum = 0.0;
  double weighted_offset = 0.0;
  double anchor = 0.0;
  for (const auto& e : estimates) {
    if (e.confidence > 0.0) {
      if (weight_sum == 0.0) anchor = e.rr;
      const double w = (e.confidence + params.eps) / params.r0;  // 1 / r_i
      weight_sum += w;
      weighted_offset += w * (e.rr - anchor);
    }
  }
  if (weight_sum == 0.0) return {state.rr_mean, state.initialized};

  if (!state.initialized) {
    state.rr_mean = anchor + weighted_offset / weight_sum;
    state.rr_var = 1.0 / weight_sum;
    state.initialized = true;
    return {state.rr_mean, true};
  }

  state.rr_var += params.q;
  for (const auto& e : estimates) {
    if (e.confidence <= 0.0) continue;
    const double r = params.r0 / (e.confidence + params.eps);
    const double gain = state.rr_var / (state.rr_var + r);
    state.rr_mean += gain * (e.rr - state.rr_mean);
    state.rr_var *= (1.0 - gain);
  }
  return {state.rr_mean, true};
}

double posterior_variance(const KalmanState& state, std::span<const AxisEstimate> estimates, const KalmanParams& params) {
  double info = 0.0;
  for (const auto& e : estimates) {
    if (e.confidence > 0.0) info += (e.confidence + params.eps) / params.r0;
  }
  if (!state.initialized) return info > 0.0 ? 1.0 / info : std::numeric_limits<double>::infinity();
  return 1.0 / (1.0 / (state.rr_var + params.q) + info);
}

WindowLabel GroundTruthExtractor::next(const TriaxialWindow& window) {
  const auto filtered = preprocess_chest(window);
  WindowLabel label;
  label.axes = {rr_fft_axis(filtered.x, filtered.rate), rr_fft_axis(filtered.y, filtered.rate),
                rr_fft_axis(filtered.z, filtered.rate)};
  const auto fused = kalman_fuse(state_, std::span<const AxisEstimate, 3>(label.axes), params_);
  label.available = fused.available;
  label.rr = fused.available ? std::clamp(fused.rr, kMinRr, kMaxRr) : kSentinelRr;
  for (const auto& a : label.axes) label.confidence = std::max(label.confidence, a.confidence);
  return label;
}

}  // namespace rrforge::gt
