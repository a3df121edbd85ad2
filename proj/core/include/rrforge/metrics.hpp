#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rrforge::metrics {

/// Mean absolute error. Throws invalid-argument on empty or mismatched input.
double mae(std::span<const double> est, std::span<const double> ref);
double rmse(std::span<const double> est, std::span<const double> ref);

struct BlandAltman {
  double mean_bias = 0.0;  // mean of est - ref
  double loa_low = 0.0;    // bias - 1.96 sd (sample sd)
  double loa_high = 0.0;
};
/// Needs at least two pairs.
BlandAltman bland_altman(std::span<const double> est, std::span<const double> ref);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};
Quartiles abs_error_quartiles(std::span<const double> est, std::span<const double> ref);

struct SubjectSummary {
  std::string subject_id;
  std::size_t n = 0;
  double mae = 0.0;
  double rmse = 0.0;
};

struct EvalReport {
  std::string method;
  std::size_t n = 0;
  double mae = 0.0;
  double rmse = 0.0;
  BlandAltman bland_altman;
  Quartiles abs_err;
  std::optional<std::size_t> param_count;
  /// Across-subject mean and sample sd of per-subject MAE / RMSE.
  double subject_mae_mean = 0.0, subject_mae_sd = 0.0;
  double subject_rmse_mean = 0.0, subject_rmse_sd = 0.0;
  std::vector<SubjectSummary> subjects;
};

/// Builds a report; `subjects` (optional) tags each pair with its subject.
EvalReport evaluate(std::string method, std::span<const double> est, std::span<const double> ref,
                    std::span<const std::string> subjects = {});

}  // namespace rrforge::metrics
