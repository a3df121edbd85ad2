#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "rrforge/error.hpp"
#include "rrforge/signal.hpp"
#include "test_signals.hpp"

using namespace rrforge;
using rrforge::testing::tone;

namespace {

// Direct evaluation of the knot-based linear interpolant.
std::vector<double> interp_oracle(const std::vector<double>& x, double r1, double r2) {
  const auto n = static_cast<std::size_t>(std::llround((x.size() - 1) * r2 / r1)) + 1;
  std::vector<double> y(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double pos = std::min(static_cast<double>(j) * r1 / r2, static_cast<double>(x.size() - 1));
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, x.size() - 1);
    y[j] = x[lo] * (1.0 - (pos - lo)) + x[hi] * (pos - lo);
  }
  return y;
}

SampledSignal sig(std::vector<double> v, double rate) { return {std::move(v), rate, 0.0}; }

}  // namespace

TEST(Resample, UpsampledWristWindowLength) {
  const auto out = resample_linear(sig(std::vector<double>(640, 1.0), 20.0), 100.0);
  EXPECT_EQ(out.size(), 3196u);
  EXPECT_DOUBLE_EQ(out.rate, 100.0);
}

TEST(Resample, MidpointOfLine) {
  const auto out = resample_linear(sig({0.0, 2.0}, 1.0), 2.0);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_DOUBLE_EQ(out.samples[0], 0.0);
  EXPECT_DOUBLE_EQ(out.samples[1], 1.0);
  EXPECT_DOUBLE_EQ(out.samples[2], 2.0);
}

TEST(Resample, ConstantStaysConstant) {
  for (const double rate : {20.0, 512.0, 7.0}) {
    const auto out = resample_linear(sig(std::vector<double>(333, -4.25), rate), 100.0);
    for (const double v : out.samples) EXPECT_DOUBLE_EQ(v, -4.25);
  }
}

TEST(Resample, RejectsBadInput) {
  EXPECT_THROW(resample_linear(sig({1.0, 2.0}, 1.0), 0.0), Error);
  EXPECT_THROW(resample_linear(sig({1.0, 2.0}, -1.0), 2.0), Error);
  EXPECT_THROW(resample_linear(sig({1.0}, 1.0), 2.0), Error);
}

TEST(Resample, MatchesInterpolationOracle) {
  const auto x = rrforge::testing::gaussian(1000, 1.0, 3);
  for (const auto& [r1, r2] : std::vector<std::pair<double, double>>{{20, 100}, {512, 100}, {100, 33}, {7, 13}}) {
    const auto got = resample_linear(sig(x, r1), r2).samples;
    const auto want = interp_oracle(x, r1, r2);
    ASSERT_EQ(got.size(), want.size());
    EXPECT_LT(rrforge::testing::max_abs_diff(got, want), 1e-12) << r1 << " -> " << r2;
  }
}

TEST(Resample, SamplesLieBetweenBracketingInputs) {
  const auto x = rrforge::testing::gaussian(500, 1.0, 9);
  const auto out = resample_linear(sig(x, 20.0), 100.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const auto lo = std::min<std::size_t>(j / 5, x.size() - 1);
    const auto hi = std::min(lo + 1, x.size() - 1);
    EXPECT_GE(out.samples[j], std::min(x[lo], x[hi]) - 1e-12);
    EXPECT_LE(out.samples[j], std::max(x[lo], x[hi]) + 1e-12);
  }
}

TEST(Resample, IdentityRate) {
  const auto x = rrforge::testing::gaussian(257, 2.0, 4);
  const auto out = resample_linear(sig(x, 64.0), 64.0);
  ASSERT_EQ(out.size(), x.size());
  EXPECT_LT(rrforge::testing::max_abs_diff(out.samples, x), 1e-12);
}

TEST(Resample, RoundTripLowFrequencyTone) {
  for (const auto& [r1, r2] : std::vector<std::pair<double, double>>{{100, 20}, {100, 512}, {20, 100}}) {
    const auto x = tone(0.2, r1, 2000, 1.0, 0.3);
    auto back = resample_linear(resample_linear(sig(x, r1), r2), r1).samples;
    ASSERT_LE(std::max(back.size(), x.size()) - std::min(back.size(), x.size()), 1u);
    const auto n = std::min(back.size(), x.size());
    back.resize(n);
    EXPECT_LT(rrforge::testing::max_abs_diff(back, {x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n)}), 0.01)
        << r1 << " <-> " << r2;
  }
}

TEST(Resample, DurationPreservedWithinOnePeriod) {
  const auto in = sig(std::vector<double>(641, 0.0), 20.0);
  for (const double r : {100.0, 512.0, 33.0}) {
    EXPECT_LE(std::abs(resample_linear(in, r).duration() - in.duration()), 1.0 / r);
  }
}

TEST(Segment, WindowCounts) {
  const auto make = [](std::size_t n) {
    return std::map<std::string, SampledSignal>{{"a", sig(std::vector<double>(n, 1.0), 100.0)},
                                                {"b", sig(std::vector<double>(n, 2.0), 100.0)}};
  };
  const auto three = segment(make(12000));
  ASSERT_EQ(three.size(), 3u);
  for (const auto& w : three) {
    EXPECT_EQ(w.channels.at("a").size(), 3200u);
    EXPECT_EQ(w.channels.at("b").size(), 3200u);
  }
  EXPECT_EQ(segment(make(3200)).size(), 1u);
  EXPECT_EQ(segment(make(3100)).size(), 0u);
}

TEST(Segment, DisjointAndInsideInput) {
  std::vector<double> ramp(10000);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
  const auto wins = segment({{"x", sig(ramp, 100.0)}});
  ASSERT_EQ(wins.size(), 3u);
  for (std::size_t k = 0; k < wins.size(); ++k) {
    EXPECT_EQ(wins[k].offset, k * 3200);
    EXPECT_DOUBLE_EQ(wins[k].channels.at("x").front(), static_cast<double>(k * 3200));
    EXPECT_LE(wins[k].offset + 3200, ramp.size());
  }
}

TEST(Segment, OverlappingStride) {
  const auto wins = segment({{"x", sig(std::vector<double>(6400, 0.0), 100.0)}}, 32.0, 16.0);
  EXPECT_EQ(wins.size(), 3u);
}

TEST(Segment, RejectsMisalignedChannels) {
  EXPECT_THROW(segment({{"a", sig(std::vector<double>(4000, 0.0), 100.0)},
                        {"b", sig(std::vector<double>(3999, 0.0), 100.0)}}),
               Error);
  EXPECT_THROW(segment({{"a", sig(std::vector<double>(4000, 0.0), 100.0)},
                        {"b", sig(std::vector<double>(4000, 0.0), 50.0)}}),
               Error);
}

TEST(RandomOffsets, SeededSortedAndValid) {
  const auto a = random_window_offsets(10000, 3200, 20, 42);
  const auto b = random_window_offsets(10000, 3200, 20, 42);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  for (const auto o : a) EXPECT_LE(o + 3200, 10000u);
  EXPECT_NE(a, random_window_offsets(10000, 3200, 20, 43));
  EXPECT_TRUE(random_window_offsets(100, 3200, 5, 1).empty());

  std::vector<double> ramp(10000);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
  const auto wins = segment_at({{"x", sig(ramp, 100.0)}}, a, 3200);
  for (std::size_t k = 0; k < wins.size(); ++k) EXPECT_DOUBLE_EQ(wins[k].channels.at("x")[0], a[k]);
}

TEST(MinMax, Examples) {
  EXPECT_EQ(minmax_normalize(std::vector<double>{0, 5, 10}), (std::vector<double>{-1, 0, 1}));
  EXPECT_EQ(minmax_normalize(std::vector<double>{-3, -3, -3}), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(minmax_normalize(std::vector<double>{1, 2}), (std::vector<double>{-1, 1}));
  EXPECT_THROW(minmax_normalize(std::vector<double>{}), Error);
}

TEST(MinMax, RangeAndIdempotence) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = rrforge::testing::gaussian(3200, 1e3, seed);
    const auto y = minmax_normalize(x);
    EXPECT_DOUBLE_EQ(*std::min_element(y.begin(), y.end()), -1.0);
    EXPECT_DOUBLE_EQ(*std::max_element(y.begin(), y.end()), 1.0);
    EXPECT_LT(rrforge::testing::max_abs_diff(minmax_normalize(y), y), 1e-12);
  }
}

TEST(FitLength, PadsWithLastAndCrops) {
  EXPECT_EQ(fit_length(std::vector<double>{1, 2, 3}, 5), (std::vector<double>{1, 2, 3, 3, 3}));
  EXPECT_EQ(fit_length(std::vector<double>{1, 2, 3}, 2), (std::vector<double>{1, 2}));
}

TEST(Stats, QuantileAndPearson) {
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5}, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.75), 7.0);
  EXPECT_DOUBLE_EQ(variance(std::vector<double>{1, 3}), 1.0);
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> b{2, 4, 6, 8};
  const std::vector<double> c{8, 6, 4, 2};
  EXPECT_NEAR(pearson(a, b), 1.0, 1e-15);
  EXPECT_NEAR(pearson(a, c), -1.0, 1e-15);
}

TEST(Triaxial, ValidateShapes) {
  TriaxialWindow w{{1, 2}, {1, 2}, {1}, 100.0};
  EXPECT_THROW(w.validate(), Error);
  w.z = {3, 4};
  EXPECT_NO_THROW(w.validate());
}
