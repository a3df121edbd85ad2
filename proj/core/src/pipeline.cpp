#include "rrforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <limits>
#include <numeric>
#include <random>

#include "rrforge/error.hpp"
#include "rrforge/hash.hpp"

namespace rrforge::pipeline {
namespace {

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

TriaxialWindow take_axes(const RawWindow& w, const std::string& prefix) {
  return {w.channels.at(prefix + "x"), w.channels.at(prefix + "y"), w.channels.at(prefix + "z"), kAnalysisRate};
}

}  // namespace

std::vector<WindowInput> window_recording(const std::string& subject_id, const std::string& recording_id,
                                          const WristRecording& wrist, const ChestRecording* chest,
                                          const PrepareOptions& opts) {
  std::map<std::string, SampledSignal> channels;
  const auto put = [&](const std::string& name, const std::vector<double>& v, double rate) {
    channels[name] = resample_linear(SampledSignal{v, rate, 0.0}, kAnalysisRate);
  };
  put("ppg", wrist.ppg.samples, wrist.ppg.rate);
  put("acc_x", wrist.acc.x, wrist.acc.rate);
  put("acc_y", wrist.acc.y, wrist.acc.rate);
  put("acc_z", wrist.acc.z, wrist.acc.rate);
  put("gyr_x", wrist.gyr.x, wrist.gyr.rate);
  put("gyr_y", wrist.gyr.y, wrist.gyr.rate);
  put("gyr_z", wrist.gyr.z, wrist.gyr.rate);
  if (chest != nullptr) {
    put("chest_x", chest->acc.x, chest->acc.rate);
    put("chest_y", chest->acc.y, chest->acc.rate);
    put("chest_z", chest->acc.z, chest->acc.rate);
  }
  // Channels of slightly different lengths (rounding at resampling) are
  // trimmed to the shortest so every window is fully populated.
  std::size_t shortest = std::numeric_limits<std::size_t>::max();
  for (const auto& [name, sig] : channels) shortest = std::min(shortest, sig.size());
  for (auto& [name, sig] : channels) sig.samples.resize(shortest);
  // A recording one window long loses a few samples to the endpoint
  // convention (640 samples at 20 Hz become 3196 at 100 Hz); edge-pad those.
  const auto win = static_cast<std::size_t>(std::llround(opts.window_s * kAnalysisRate));
  if (shortest < win && shortest + static_cast<std::size_t>(kAnalysisRate) >= win) {
    for (auto& [name, sig] : channels) sig.samples = fit_length(sig.samples, win);
  }

  std::vector<WindowInput> out;
  std::vector<RawWindow> windows;
  if (opts.random_windows > 0) {
    if (shortest >= win) {
      const auto offsets = random_window_offsets(shortest, win, opts.random_windows,
                                                 mix_seed(opts.window_seed, fnv1a64(recording_id)));
      windows = segment_at(channels, offsets, win);
    }
  } else {
    windows = segment(channels, opts.window_s, opts.stride_s);
  }
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto& w = windows[k];
    WindowInput in;
    in.subject_id = subject_id;
    in.segment_id = recording_id + "/w" + std::to_string(k);
    in.ppg = w.channels.at("ppg");
    in.acc = take_axes(w, "acc_");
    in.gyr = take_axes(w, "gyr_");
    if (chest != nullptr) in.chest = take_axes(w, "chest_");
    out.push_back(std::move(in));
  }
  return out;
}

ProcessedWindow process_window(const WindowInput& w, const PrepareOptions& opts) {
  require(w.ppg.size() == kWindowSamples && w.acc.size() == kWindowSamples && w.gyr.size() == kWindowSamples,
          Errc::invalid_shape, "window " + w.segment_id + " is not 3200 samples long");
  ProcessedWindow p;
  const auto ppg_norm = minmax_normalize(w.ppg);
  p.features = quality::extract_quality_features(ppg_norm, kAnalysisRate);
  const auto acc = resp::extract_respiration(w.acc, opts.ica);
  const auto gyr = resp::extract_respiration(w.gyr, opts.ica);
  p.acc_low_confidence = acc.low_confidence;
  p.gyr_low_confidence = gyr.low_confidence;

  auto& b = p.bundle;
  b.subject_id = w.subject_id;
  b.segment_id = w.segment_id;
  const auto ppg = to_float(ppg_norm);
  std::copy(ppg.begin(), ppg.end(), b.channel(0).begin());
  std::copy(acc.waveform.begin(), acc.waveform.end(), b.channel(1).begin());
  std::copy(gyr.waveform.begin(), gyr.waveform.end(), b.channel(2).begin());
  return p;
}

std::vector<ProcessedWindow> process_recording(std::span<const WindowInput> windows, const PrepareOptions& opts) {
  std::vector<ProcessedWindow> out;
  gt::GroundTruthExtractor labeller(opts.kalman);
  for (const auto& w : windows) {
    auto p = process_window(w, opts);
    if (w.chest) {
      p.label = labeller.next(*w.chest);
      if (p.label->available) p.bundle.label = static_cast<float>(p.label->rr);
    }
    out.push_back(std::move(p));
  }
  return out;
}

quality::QualityModel fit_quality_gate(std::span<const quality::QualityFeatures> clean,
                                       const quality::TrainOptions& opts, std::size_t max_windows,
                                       std::uint64_t seed) {
  require(max_windows >= 2, Errc::invalid_argument, "max_windows must be at least 2");
  if (clean.size() <= max_windows) return quality::train_quality_model(clean, opts);
  std::vector<std::size_t> idx(clean.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(max_windows);
  std::sort(idx.begin(), idx.end());
  std::vector<quality::QualityFeatures> subset;
  subset.reserve(max_windows);
  for (const auto i : idx) subset.push_back(clean[i]);
  return quality::train_quality_model(subset, opts);
}

}  // namespace rrforge::pipeline
