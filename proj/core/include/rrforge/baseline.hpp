#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rrforge/signal.hpp"

namespace rrforge::baseline {

inline constexpr std::size_t kMinBeats = 10;

/// Beat-indexed respiratory surrogates resampled to a uniform grid and
/// linearly detrended. The raw means are kept for scale comparisons.
struct ModulationSet {
  std::vector<double> am;  // peak - preceding trough
  std::vector<double> bw;  // (peak + trough) / 2
  std::vector<double> fm;  // inter-beat interval, s
  double rate = 4.0;
  double am_mean = 0.0, bw_mean = 0.0, fm_mean = 0.0;
  std::size_t beats = 0;
};

/// Peaks come from the quality gate's detector and are refined with a
/// parabola through the three samples around each maximum. Returns nullopt
/// when fewer than kMinBeats beats are found.
std::optional<ModulationSet> extract_modulations(std::span<const double> ppg, double rate, double mod_rate = 4.0);

/// Centred projection onto the leading eigenvector of the 3x3 axis
/// covariance, signed so the sample of largest magnitude is positive. Falls
/// back to the highest-variance raw axis (centred) when the leading
/// eigenvector is undefined (zero or repeated top eigenvalue).
std::vector<double> first_principal_axis(const TriaxialWindow& window);

struct BaselineOptions {
  double mod_rate = 4.0;
  double min_confidence = 0.3;
};

struct BaselineResult {
  double rr = 0.0;  // brpm, meaningful when available
  double quality = 0.0;
  bool available = false;
  double ppg_rr = 0.0, ppg_quality = 0.0;
  bool ppg_available = false;
  double acc_rr = 0.0, acc_quality = 0.0;
};

/// Candidate estimates that clear min_confidence are fused by a
/// confidence-weighted mean.
struct Candidate {
  double rr = 0.0;
  double confidence = 0.0;
};
std::optional<double> fuse_candidates(std::span<const Candidate> candidates, double min_confidence);

/// PPG side: median of the modulation waveforms' spectral-peak RRs, quality =
/// mean peak confidence. ACC side: band-passed principal-axis projection,
/// spectral RR.
BaselineResult baseline_rr(std::span<const double> ppg, const TriaxialWindow& acc, double rate,
                           const BaselineOptions& opts = {});

}  // namespace rrforge::baseline
