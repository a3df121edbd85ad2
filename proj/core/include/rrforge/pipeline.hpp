#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rrforge/bundle.hpp"
#include "rrforge/groundtruth.hpp"
#include "rrforge/quality.hpp"
#include "rrforge/recording.hpp"
#include "rrforge/respiration.hpp"

namespace rrforge::pipeline {

struct PrepareOptions {
  double window_s = kWindowSeconds;
  double stride_s = kWindowSeconds;
  /// When > 0, this many windows per recording are placed at seeded random
  /// offsets instead of at a fixed stride.
  std::size_t random_windows = 0;
  std::uint64_t window_seed = 0;
  resp::IcaOptions ica{};
  gt::KalmanParams kalman{};
};

/// One 32 s window of a wrist recording (plus chest, when present) at the
/// analysis rate.
struct WindowInput {
  std::string subject_id;
  std::string segment_id;  // "<recording>/w<k>"
  std::vector<double> ppg;
  TriaxialWindow acc;
  TriaxialWindow gyr;
  std::optional<TriaxialWindow> chest;
};

/// Resamples every channel to 100 Hz and cuts aligned fixed-stride windows.
std::vector<WindowInput> window_recording(const std::string& subject_id, const std::string& recording_id,
                                          const WristRecording& wrist, const ChestRecording* chest,
                                          const PrepareOptions& opts = {});

struct ProcessedWindow {
  SegmentBundle bundle;  // label set when a chest label is available
  quality::QualityFeatures features;
  std::optional<gt::WindowLabel> label;
  bool acc_low_confidence = false;
  bool gyr_low_confidence = false;
};

/// Builds the model input (normalized PPG, ICA respiration from ACC and GYR)
/// and the quality features of one window. Does not touch labels.
ProcessedWindow process_window(const WindowInput& w, const PrepareOptions& opts = {});

/// Processes the windows of one recording in order, threading one Kalman
/// state through the chest labels.
std::vector<ProcessedWindow> process_recording(std::span<const WindowInput> windows, const PrepareOptions& opts = {});

/// Fits the gate on at most `max_windows` feature rows, drawn by a seeded
/// shuffle when there are more.
quality::QualityModel fit_quality_gate(std::span<const quality::QualityFeatures> clean,
                                       const quality::TrainOptions& opts, std::size_t max_windows = 3000,
                                       std::uint64_t seed = 0);

}  // namespace rrforge::pipeline
