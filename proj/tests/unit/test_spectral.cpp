#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "rrforge/error.hpp"
#include "rrforge/spectral.hpp"
#include "test_signals.hpp"

using namespace rrforge;
using namespace rrforge::spectral;
using rrforge::testing::tone;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<std::complex<double>> naive_dft(const std::vector<double>& x, std::size_t n_fft) {
  std::vector<std::complex<double>> out(n_fft / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < std::min(n_fft, x.size()); ++i) {
      acc += x[i] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * i) / static_cast<double>(n_fft));
    }
    out[k] = acc;
  }
  return out;
}

// Squared magnitude of a prewarped Butterworth band-pass built from an
// order-n low-pass prototype.
double butter_bp_gain2(double f, double lo, double hi, double rate, int n) {
  const auto warp = [&](double hz) { return 2.0 * rate * std::tan(kPi * hz / rate); };
  const double w = warp(f), wl = warp(lo), wh = warp(hi);
  const double ratio = (w * w - wl * wh) / (w * (wh - wl));
  return 1.0 / (1.0 + std::pow(ratio * ratio, n));
}

// Cascade of biquads in direct form I.
std::vector<double> df1(const std::vector<Biquad>& sos, std::vector<double> x) {
  for (const auto& s : sos) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double x1 = i >= 1 ? x[i - 1] : 0.0, x2 = i >= 2 ? x[i - 2] : 0.0;
      const double y1 = i >= 1 ? y[i - 1] : 0.0, y2 = i >= 2 ? y[i - 2] : 0.0;
      y[i] = s.b0 * x[i] + s.b1 * x1 + s.b2 * x2 - s.a1 * y1 - s.a2 * y2;
    }
    x = std::move(y);
  }
  return x;
}

}  // namespace

TEST(Fft, MatchesNaiveDft) {
  const auto x = rrforge::testing::gaussian(100, 1.0, 5);
  for (const std::size_t n : {100u, 128u, 256u, 77u}) {
    const auto got = rfft(x, n);
    const auto want = naive_dft(x, n);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_LT(std::abs(got[k] - want[k]), 1e-9) << n << ":" << k;
  }
}

TEST(Fft, Helpers) {
  EXPECT_EQ(next_pow2(1), 1u);
  EXPECT_EQ(next_pow2(3200), 4096u);
  EXPECT_EQ(next_pow2(4096), 4096u);
  const auto w = hann(5);
  EXPECT_DOUBLE_EQ(w[0], 0.0);
  EXPECT_DOUBLE_EQ(w[2], 1.0);
  EXPECT_DOUBLE_EQ(w[4], 0.0);
}

TEST(Welch, WhiteNoiseIntegratesToVariance) {
  const auto x = rrforge::testing::gaussian(20000, 2.0, 8);
  const auto psd = welch(x, 100.0, 800);
  const double df = psd.freqs[1] - psd.freqs[0];
  double total = 0.0;
  for (const double p : psd.power) total += p * df;
  EXPECT_NEAR(total, 4.0, 0.3);
}

TEST(Welch, ToneConcentratesInBand) {
  const auto psd = welch(tone(1.2, 100.0, 3200), 100.0, 800);
  double all = 0.0;
  for (const double p : psd.power) all += p;
  EXPECT_GT(band_power(psd, 0.6, 3.0) / all, 0.95);
}

TEST(BandPowerFraction, ToneAndSilence) {
  EXPECT_GT(band_power_fraction(tone(0.25, 100.0, 3200), 100.0, 0.1, 0.5), 0.99);
  EXPECT_LT(band_power_fraction(tone(5.0, 100.0, 3200), 100.0, 0.1, 0.5), 0.01);
  EXPECT_EQ(band_power_fraction(std::vector<double>(3200, 0.0), 100.0, 0.1, 0.5), 0.0);
}

TEST(DominantPeak, PureTones) {
  for (const auto& [f, rr] : std::vector<std::pair<double, double>>{{0.25, 15.0}, {0.30, 18.0}}) {
    const auto p = dominant_peak(tone(f, 100.0, 3200, 1.0, 0.7), 100.0, 0.1, 0.5);
    ASSERT_TRUE(p.found);
    EXPECT_NEAR(60.0 * p.frequency, rr, 0.25);
    EXPECT_GT(p.confidence, 0.9);
  }
}

TEST(DominantPeak, StrongerOfTwoTones) {
  const auto x = rrforge::testing::plus(tone(0.2, 100.0, 3200), tone(0.4, 100.0, 3200, 0.3));
  const auto p = dominant_peak(x, 100.0, 0.1, 0.5);
  EXPECT_NEAR(60.0 * p.frequency, 12.0, 0.25);
}

TEST(DominantPeak, RefinementResolvesBetweenBins) {
  // Sweep across bin boundaries: error must stay well below the 1.875 brpm raw resolution.
  for (double rr = 8.0; rr <= 28.0; rr += 0.37) {
    const auto p = dominant_peak(tone(rr / 60.0, 100.0, 3200, 1.0, 1.1), 100.0, 0.1, 0.5);
    EXPECT_NEAR(60.0 * p.frequency, rr, 0.25) << rr;
  }
}

TEST(DominantPeak, NoiseHasLowConfidence) {
  double sum = 0.0;
  int high = 0;
  constexpr int kTrials = 200;
  for (int s = 0; s < kTrials; ++s) {
    const auto p = dominant_peak(rrforge::testing::gaussian(3200, 1.0, 100 + s), 100.0, 0.1, 0.5);
    sum += p.confidence;
    high += p.confidence >= 0.3;
    EXPECT_GE(p.confidence, 0.0);
    EXPECT_LE(p.confidence, 1.0);
  }
  EXPECT_LT(sum / kTrials, 0.15);
  EXPECT_LT(high, kTrials / 10);
}

TEST(DominantPeak, SilentBandNotFound) {
  const auto p = dominant_peak(std::vector<double>(3200, 0.0), 100.0, 0.1, 0.5);
  EXPECT_FALSE(p.found);
  EXPECT_EQ(p.confidence, 0.0);
}

TEST(Butterworth, MatchesAnalogPrototypeMagnitude) {
  for (const double rate : {100.0, 512.0, 20.0}) {
    const auto sos = butter_bandpass(2, 0.1, 0.5, rate);
    ASSERT_EQ(sos.size(), 2u);
    for (double f = 0.01; f < 0.45 * rate; f *= 1.17) {
      const double got = std::norm(response(sos, f, rate));
      EXPECT_NEAR(got, butter_bp_gain2(f, 0.1, 0.5, rate, 2), 1e-9) << rate << " Hz at " << f;
    }
  }
}

TEST(Butterworth, EdgesAtHalfPower) {
  const auto sos = butter_bandpass(2, 0.1, 0.5, 100.0);
  EXPECT_NEAR(std::norm(response(sos, 0.1, 100.0)), 0.5, 1e-9);
  EXPECT_NEAR(std::norm(response(sos, 0.5, 100.0)), 0.5, 1e-9);
  EXPECT_NEAR(std::abs(response(sos, 0.0, 100.0)), 0.0, 1e-12);
}

TEST(Butterworth, RejectsBadEdges) {
  EXPECT_THROW(butter_bandpass(2, 0.5, 0.1, 100.0), Error);
  EXPECT_THROW(butter_bandpass(2, 0.1, 60.0, 100.0), Error);
}

TEST(SosFilt, MatchesDirectFormOne) {
  const auto sos = butter_bandpass(2, 0.5, 5.0, 100.0);
  const auto x = rrforge::testing::gaussian(2000, 1.0, 4);
  EXPECT_LT(rrforge::testing::max_abs_diff(sosfilt(sos, x), df1(sos, x)), 1e-10);
}

TEST(SosFiltFilt, ZeroPhaseSquaredGain) {
  const double rate = 100.0;
  const auto sos = butter_bandpass(2, 0.1, 0.5, rate);
  const double f = 0.37;
  const auto x = tone(f, rate, 6400, 1.0, 0.4);
  const auto y = sosfiltfilt(sos, x, 2000);
  const double g2 = std::norm(response(sos, f, rate));
  for (std::size_t i = 1600; i < 4800; ++i) EXPECT_NEAR(y[i], g2 * x[i], 0.01);
}

TEST(SosFiltFilt, KillsConstant) {
  const auto sos = butter_bandpass(2, 0.1, 0.5, 100.0);
  const auto y = sosfiltfilt(sos, std::vector<double>(3200, 3.0), 2000);
  for (const double v : y) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(Detrend, RemovesLineAndMean) {
  std::vector<double> x(100);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 3.0 + 0.5 * static_cast<double>(i);
  for (const double v : detrend_linear(x)) EXPECT_NEAR(v, 0.0, 1e-10);
  const auto c = detrend_constant(std::vector<double>{1, 2, 3});
  EXPECT_DOUBLE_EQ(c[0], -1.0);
  EXPECT_DOUBLE_EQ(c[2], 1.0);
}
