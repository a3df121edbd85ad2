#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "rrforge/signal.hpp"

namespace rrforge::resp {

inline constexpr double kRespBandLow = 0.1;   // Hz, 6 brpm
inline constexpr double kRespBandHigh = 0.5;  // Hz, 30 brpm
inline constexpr double kLowConfidenceFraction = 0.05;
/// Eigenvalues below max_eigenvalue / kMaxCondition are treated as missing rank.
inline constexpr double kMaxCondition = 1e8;

struct IcaOptions {
  int max_iter = 200;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

struct IcaResult {
  /// Rotation applied to the whitened data; rank x rank with unit-norm, orthogonal rows.
  Eigen::MatrixXd rotation;
  /// Full unmixing from centred input axes to components (rank x 3).
  Eigen::MatrixXd unmixing;
  /// Zero-mean, unit (population) variance sources, one row per component.
  std::vector<std::vector<double>> components;
  std::vector<double> band_power_fractions;
  std::size_t selected_index = 0;
  std::size_t rank = 0;
  int iterations = 0;
  bool converged = false;
  bool rank_deficient = false;
};

/// Symmetric FastICA with a tanh contrast on a whitened triaxial window.
/// Input axes are centred and whitened by eigen-decomposition of their
/// covariance; directions with eigenvalue below max / kMaxCondition are
/// dropped. Convergence is max_i (1 - |<w_i_new, w_i_old>|) < tol. The band
/// power fractions and selected_index are filled in for the 0.1-0.5 Hz band.
IcaResult fastica(const TriaxialWindow& window, const IcaOptions& opts = {});

struct SelectedComponent {
  std::vector<double> waveform;  // min-max normalized to [-1, 1]
  std::size_t index = 0;
  double band_fraction = 0.0;
  bool low_confidence = false;  // every band fraction < 0.05
};

/// Picks the component with the largest 0.1-0.5 Hz power fraction (ties go
/// to the lower index).
SelectedComponent select_respiratory_component(const IcaResult& result, double rate);

/// fastica followed by select_respiratory_component.
SelectedComponent extract_respiration(const TriaxialWindow& window, const IcaOptions& opts = {});

}  // namespace rrforge::resp
