#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rrforge/signal.hpp"

namespace rrforge {

inline constexpr std::size_t kBundleChannels = 3;

/// One prepared 32 s segment: normalized PPG, ACC respiration and GYR
/// respiration at the analysis rate, plus the reference label if known.
struct SegmentBundle {
  std::string subject_id;
  std::string segment_id;
  std::vector<float> channels = std::vector<float>(kBundleChannels * kWindowSamples);  // channel-major
  float label = std::nanf("");

  bool has_label() const noexcept { return !std::isnan(label); }
  std::span<float> channel(std::size_t c) { return {channels.data() + c * kWindowSamples, kWindowSamples}; }
  std::span<const float> channel(std::size_t c) const {
    return {channels.data() + c * kWindowSamples, kWindowSamples};
  }
};

// segments.bin layout, little-endian:
//   "RRS1"
//   repeated until EOF:
//     u32 subject_length, subject bytes,
//     u32 segment_length, segment bytes,
//     f32 channels[3 * 3200], f32 label (NaN when missing)
void write_bundles(std::ostream& out, std::span<const SegmentBundle> bundles);
std::vector<SegmentBundle> read_bundles(std::istream& in);
void save_bundles(const std::filesystem::path& path, std::span<const SegmentBundle> bundles);
std::vector<SegmentBundle> load_bundles(const std::filesystem::path& path);

}  // namespace rrforge
