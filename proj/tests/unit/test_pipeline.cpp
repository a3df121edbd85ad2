#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "rrforge/error.hpp"
#include "rrforge/pipeline.hpp"
#include "rrforge/synth.hpp"
#include "test_corpus.hpp"

using namespace rrforge;
using namespace rrforge::pipeline;

namespace {

synth::SynthSegment long_segment(double seconds, std::uint64_t seed) {
  synth::SynthSpec s;
  s.duration_s = seconds;
  s.seed = seed;
  return synth::gen_segment(s);
}

}  // namespace

TEST(WindowRecording, OneWindowSegmentIsPadded) {
  const auto seg = long_segment(32.0, 1);
  const auto w = window_recording("S01", "seg0001", seg.wrist, &seg.chest);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].segment_id, "seg0001/w0");
  EXPECT_EQ(w[0].subject_id, "S01");
  EXPECT_EQ(w[0].ppg.size(), kWindowSamples);
  EXPECT_EQ(w[0].acc.size(), kWindowSamples);
  EXPECT_EQ(w[0].gyr.size(), kWindowSamples);
  ASSERT_TRUE(w[0].chest.has_value());
  EXPECT_EQ(w[0].chest->size(), kWindowSamples);
}

TEST(WindowRecording, LongRecordingWindowsAndStride) {
  const auto seg = long_segment(100.0, 2);
  EXPECT_EQ(window_recording("S", "r", seg.wrist, nullptr).size(), 3u);
  PrepareOptions half;
  half.stride_s = 16.0;
  const auto w = window_recording("S", "r", seg.wrist, nullptr, half);
  ASSERT_EQ(w.size(), 5u);
  // Overlapping windows share their samples.
  EXPECT_EQ(w[1].ppg[0], w[0].ppg[1600]);
  EXPECT_FALSE(w[0].chest.has_value());
}

TEST(WindowRecording, RandomPlacementIsSeeded) {
  const auto seg = long_segment(100.0, 4);
  PrepareOptions opts;
  opts.random_windows = 4;
  opts.window_seed = 12;
  const auto a = window_recording("S", "r", seg.wrist, nullptr, opts);
  const auto b = window_recording("S", "r", seg.wrist, nullptr, opts);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].ppg, b[k].ppg);
    EXPECT_EQ(a[k].ppg.size(), kWindowSamples);
  }
  opts.window_seed = 13;
  EXPECT_NE(window_recording("S", "r", seg.wrist, nullptr, opts)[0].ppg, a[0].ppg);
}

TEST(WindowRecording, TooShortGivesNothing) {
  const auto seg = long_segment(20.0, 3);
  EXPECT_TRUE(window_recording("S", "r", seg.wrist, nullptr).empty());
}

TEST(ProcessWindow, BundleChannelsAreNormalized) {
  const auto w = rrforge::testing::first_window(rrforge::testing::varied_spec(5));
  const auto p = process_window(w);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto ch = p.bundle.channel(c);
    const auto [lo, hi] = std::minmax_element(ch.begin(), ch.end());
    EXPECT_NEAR(*lo, -1.0f, 1e-6f) << c;
    EXPECT_NEAR(*hi, 1.0f, 1e-6f) << c;
  }
  EXPECT_FALSE(p.bundle.has_label());
  EXPECT_FALSE(p.features.fallback);
  EXPECT_GT(p.features.template_corr, 0.5);
}

TEST(ProcessWindow, RejectsShortWindow) {
  auto w = rrforge::testing::first_window(rrforge::testing::varied_spec(6));
  w.ppg.pop_back();
  try {
    process_window(w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_shape);
  }
}

TEST(ProcessRecording, LabelsFollowOneKalmanState) {
  synth::SynthSpec s;
  s.rr = 14.0;
  s.duration_s = 128.0;
  s.seed = 8;
  const auto seg = synth::gen_segment(s);
  const auto windows = window_recording("S", "r", seg.wrist, &seg.chest);
  ASSERT_EQ(windows.size(), 4u);
  const auto processed = process_recording(windows);
  gt::GroundTruthExtractor manual;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto label = manual.next(*windows[k].chest);
    ASSERT_TRUE(processed[k].label.has_value());
    EXPECT_EQ(processed[k].label->rr, label.rr);
    EXPECT_EQ(processed[k].bundle.label, static_cast<float>(label.rr));
    EXPECT_NEAR(label.rr, 14.0, 0.5);
  }
}

TEST(QualityGate, SubsampledFitIsSeeded) {
  std::vector<quality::QualityFeatures> f;
  for (std::uint64_t s = 0; s < 60; ++s) {
    const auto w = rrforge::testing::first_window(rrforge::testing::varied_spec(900 + s));
    f.push_back(quality::extract_quality_features(minmax_normalize(w.ppg), kAnalysisRate));
  }
  const auto a = fit_quality_gate(f, {}, 40, 3);
  const auto b = fit_quality_gate(f, {}, 40, 3);
  EXPECT_EQ(a.support, b.support);
  EXPECT_EQ(a.coef, b.coef);
  EXPECT_DOUBLE_EQ(a.upper_bound, 1.0 / (a.nu * 40.0));
  const auto full = fit_quality_gate(f, {}, 3000, 3);
  EXPECT_DOUBLE_EQ(full.upper_bound, 1.0 / (full.nu * 60.0));
  EXPECT_THROW(fit_quality_gate(f, {}, 1, 3), Error);
}
