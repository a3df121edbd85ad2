#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "rrforge/baseline.hpp"
#include "rrforge/groundtruth.hpp"
#include "test_corpus.hpp"
#include "test_signals.hpp"

using namespace rrforge;
using namespace rrforge::baseline;
using rrforge::testing::gaussian;
using rrforge::testing::tone;

namespace {

constexpr std::size_t kN = 3200;
constexpr double kRate = 100.0;

double variance(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

double corr(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n, mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += (a[i] - ma) * (b[i] - mb);
    aa += (a[i] - ma) * (a[i] - ma);
    bb += (b[i] - mb) * (b[i] - mb);
  }
  return ab / std::sqrt(aa * bb);
}

// Positive pulse train at `hr_hz` with amplitude (1 + depth sin(2 pi f t)).
std::vector<double> am_pulse(double hr_hz, double am_hz, double depth) {
  std::vector<double> x(kN);
  for (std::size_t i = 0; i < kN; ++i) {
    const double t = static_cast<double>(i) / kRate;
    const double pulse = 0.5 * (1.0 + std::sin(2.0 * std::numbers::pi * hr_hz * t));
    x[i] = (1.0 + depth * std::sin(2.0 * std::numbers::pi * am_hz * t)) * pulse;
  }
  return x;
}

TriaxialWindow mixed_window(std::uint64_t seed) {
  const auto a = tone(0.3, kRate, kN, 1.0), b = gaussian(kN, 0.4, seed), c = tone(2.0, kRate, kN, 0.5);
  TriaxialWindow w;
  w.x = rrforge::testing::plus(rrforge::testing::plus(a, b, 0.3), c, 0.2);
  w.y = rrforge::testing::plus(rrforge::testing::plus(a, b, -0.5), c, 0.7);
  w.z = rrforge::testing::plus(rrforge::testing::plus(a, b, 0.9), c, -0.1);
  return w;
}

}  // namespace

TEST(Modulations, AmplitudeModulationFrequency) {
  const auto m = extract_modulations(am_pulse(1.2, 0.25, 0.3), kRate);
  ASSERT_TRUE(m.has_value());
  EXPECT_GE(m->beats, 37u);
  EXPECT_DOUBLE_EQ(m->rate, 4.0);
  const auto est = gt::rr_fft_axis(m->am, m->rate);
  EXPECT_NEAR(est.rr / 60.0, 0.25, 1.0 / 32.0);
}

TEST(Modulations, SteadyPulseIsFlat) {
  const auto m = extract_modulations(am_pulse(1.2, 0.25, 0.0), kRate);
  ASSERT_TRUE(m.has_value());
  EXPECT_LT(std::sqrt(variance(m->am)), 0.01 * m->am_mean);
  EXPECT_LT(std::sqrt(variance(m->fm)), 0.01 * m->fm_mean);
  EXPECT_NEAR(m->fm_mean, 1.0 / 1.2, 0.01);
}

TEST(Modulations, FlatInputUnavailable) {
  EXPECT_FALSE(extract_modulations(std::vector<double>(kN, 0.4), kRate).has_value());
}

TEST(PrincipalAxis, SingleAxisEnergy) {
  const auto x = tone(0.3, kRate, kN);
  TriaxialWindow w{x, std::vector<double>(kN, 0.0), std::vector<double>(kN, 0.0)};
  EXPECT_GT(std::abs(corr(first_principal_axis(w), x)), 0.999999);
}

TEST(PrincipalAxis, EqualTonesTripleVariance) {
  const auto x = tone(0.25, kRate, kN);
  const auto p = first_principal_axis({x, x, x});
  EXPECT_GT(std::abs(corr(p, x)), 0.999999);
  EXPECT_NEAR(variance(p), 3.0 * variance(x), 1e-9);
}

TEST(PrincipalAxis, MatchesEigenOracle) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto w = mixed_window(seed);
    Eigen::MatrixXd d(kN, 3);
    for (std::size_t i = 0; i < kN; ++i) d.row(static_cast<Eigen::Index>(i)) << w.x[i], w.y[i], w.z[i];
    const Eigen::MatrixXd c = d.rowwise() - d.colwise().mean();
    const Eigen::Matrix3d cov = c.transpose() * c / static_cast<double>(kN);
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(cov).eigenvalues()(2);
    const auto p = first_principal_axis(w);
    EXPECT_NEAR(variance(p), top, 1e-9 * top);
    for (const auto* axis : {&w.x, &w.y, &w.z}) EXPECT_GE(variance(p), variance(*axis) - 1e-12);
    const auto peak = std::max_element(p.begin(), p.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    EXPECT_GT(*peak, 0.0);
  }
}

TEST(PrincipalAxis, RotationEquivariant) {
  const auto w = mixed_window(7);
  const auto base = first_principal_axis(w);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Matrix3d g;
    for (int i = 0; i < 9; ++i) g(i / 3, i % 3) = n(rng);
    const Eigen::Matrix3d r = Eigen::HouseholderQR<Eigen::Matrix3d>(g).householderQ();
    TriaxialWindow rw{std::vector<double>(kN), std::vector<double>(kN), std::vector<double>(kN)};
    for (std::size_t i = 0; i < kN; ++i) {
      const Eigen::Vector3d v = r * Eigen::Vector3d(w.x[i], w.y[i], w.z[i]);
      rw.x[i] = v(0);
      rw.y[i] = v(1);
      rw.z[i] = v(2);
    }
    EXPECT_GT(std::abs(corr(first_principal_axis(rw), base)), 0.999);
  }
}

TEST(Fusion, ConfidenceWeightedAndBounded) {
  const std::vector<Candidate> c{{12.0, 0.9}, {18.0, 0.3}, {30.0, 0.1}};
  const auto r = fuse_candidates(c, 0.3);
  ASSERT_TRUE(r.has_value());
  EXPECT_NEAR(*r, (12.0 * 0.9 + 18.0 * 0.3) / 1.2, 1e-12);
  const std::vector<Candidate> only_acc{{0.0, 0.0}, {18.0, 0.8}};
  EXPECT_DOUBLE_EQ(*fuse_candidates(only_acc, 0.3), 18.0);
  const std::vector<Candidate> weak{{15.0, 0.2}, {18.0, 0.1}};
  EXPECT_FALSE(fuse_candidates(weak, 0.3).has_value());
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> rr(6, 30), conf(0.3, 1.0);
  for (int k = 0; k < 200; ++k) {
    const std::vector<Candidate> two{{rr(rng), conf(rng)}, {rr(rng), conf(rng)}};
    const double f = *fuse_candidates(two, 0.3);
    EXPECT_GE(f, std::min(two[0].rr, two[1].rr) - 1e-12);
    EXPECT_LE(f, std::max(two[0].rr, two[1].rr) + 1e-12);
  }
}

TEST(BaselineRr, CleanSegmentAtFifteen) {
  synth::SynthSpec spec;
  spec.rr = 15.0;
  spec.seed = 3;
  const auto w = rrforge::testing::first_window(spec);
  const auto r = baseline_rr(w.ppg, w.acc, kRate);
  ASSERT_TRUE(r.available);
  EXPECT_NEAR(r.rr, 15.0, 1.0);
  EXPECT_GE(r.rr, std::min(r.ppg_rr, r.acc_rr) - 1e-9);
  EXPECT_LE(r.rr, std::max(r.ppg_available ? r.ppg_rr : r.acc_rr, r.acc_rr) + 1e-9);
}

TEST(BaselineRr, AvailabilityCleanVersusNoise) {
  int clean = 0, noise = 0;
  constexpr int kTrials = 40;
  for (int s = 0; s < kTrials; ++s) {
    const auto w = rrforge::testing::first_window(rrforge::testing::varied_spec(700 + s));
    clean += baseline_rr(w.ppg, w.acc, kRate).available;
    TriaxialWindow acc{gaussian(kN, 1.0, 3 * s), gaussian(kN, 1.0, 3 * s + 1), gaussian(kN, 1.0, 3 * s + 2)};
    noise += baseline_rr(gaussian(kN, 1.0, 5000 + s), acc, kRate).available;
  }
  EXPECT_GE(clean, kTrials * 95 / 100);
  EXPECT_LE(noise, kTrials * 20 / 100);
}
