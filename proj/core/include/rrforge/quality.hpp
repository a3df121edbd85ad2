#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rrforge::quality {

inline constexpr std::size_t kFeatureCount = 5;
inline constexpr double kCardiacBandLow = 0.6;   // Hz
inline constexpr double kCardiacBandHigh = 3.0;  // Hz
inline constexpr std::size_t kCycleLength = 100;
inline constexpr double kRefractorySeconds = 0.33;
/// Distance reported when no cycles could be compared.
inline constexpr double kFallbackDistance = 50.0;

using FeatureVector = std::array<double, kFeatureCount>;

struct QualityFeatures {
  double psd_ratio = 0.0;      // 0.6-3 Hz share of the Welch PSD
  double iqr = 0.0;            // of the normalized window
  double cycle_energy = 0.0;   // mean sum(x^2)/rate per peak-to-peak cycle
  double template_corr = -1.0; // mean Pearson r of cycles against their mean
  double template_dist = kFallbackDistance;
  bool fallback = false;       // fewer than 3 beats were found

  FeatureVector as_array() const { return {psd_ratio, iqr, cycle_energy, template_corr, template_dist}; }
};

/// Local maxima above a rolling mean + 0.5 * rolling std threshold (2 s
/// centred window), thinned so peaks are at least 0.33 s apart; within a
/// refractory span the larger peak wins.
std::vector<std::size_t> detect_cardiac_cycles(std::span<const double> ppg, double rate);

QualityFeatures extract_quality_features(std::span<const double> ppg, double rate);

/// RBF one-class SVM over standardized features.
struct QualityModel {
  double gamma = 1.0 / static_cast<double>(kFeatureCount);
  double nu = 0.05;
  double rho = 0.0;
  double upper_bound = 0.0;  // 1 / (nu * n_train)
  FeatureVector mean{};
  FeatureVector scale{};
  std::vector<FeatureVector> support;  // standardized
  std::vector<double> coef;            // sums to 1
};

struct TrainOptions {
  double nu = 0.05;
  double gamma = 1.0 / static_cast<double>(kFeatureCount);
  double tolerance = 1e-4;       // maximal KKT violation at exit
  std::size_t max_iterations = 1'000'000;
};

/// Solves min 1/2 a'Qa s.t. 0 <= a_i <= 1/(nu n), sum a = 1 with a
/// second-order working-set SMO. Throws invalid-training-set when fewer than
/// two rows are given or every row is identical.
QualityModel train_quality_model(std::span<const QualityFeatures> features, const TrainOptions& opts = {});

struct Verdict {
  bool accept = false;
  double score = 0.0;  // sum a_i k(x_i, x) - rho
};

FeatureVector standardize(const FeatureVector& raw, const QualityModel& model);
/// Decision on an already standardized vector.
Verdict assess_standardized(const FeatureVector& z, const QualityModel& model);
Verdict assess(const QualityFeatures& window, const QualityModel& model);

std::string to_json(const QualityModel& model);
QualityModel quality_model_from_json(std::string_view text);
void save(const std::filesystem::path& path, const QualityModel& model);
QualityModel load_quality_model(const std::filesystem::path& path);

}  // namespace rrforge::quality
