#pragma once

#include <array>
#include <span>

#include "rrforge/signal.hpp"

namespace rrforge::gt {

inline constexpr double kBandLow = 0.1;   // Hz
inline constexpr double kBandHigh = 0.5;  // Hz
inline constexpr double kSentinelRr = 17.0;
inline constexpr double kMinRr = 4.0;
inline constexpr double kMaxRr = 60.0;

struct AxisEstimate {
  double rr = kSentinelRr;  // brpm
  double confidence = 0.0;
  bool flagged = false;     // no in-band power
};

struct KalmanParams {
  double q = 1.0;     // brpm^2 per window
  double r0 = 1.0;    // brpm^2
  double eps = 1e-3;
};

struct KalmanState {
  double rr_mean = 0.0;
  double rr_var = 0.0;
  bool initialized = false;
};

struct FuseResult {
  double rr = 0.0;
  bool available = false;  // false only when nothing has ever been observed
};

/// Mean removal then a 4th-order Butterworth 0.1-0.5 Hz band-pass run
/// forward and backward.
TriaxialWindow preprocess_chest(const TriaxialWindow& window);

/// Spectral RR of one preprocessed axis: Hann taper, >= 8x zero padding,
/// strongest 0.1-0.5 Hz bin refined by parabolic interpolation.
AxisEstimate rr_fft_axis(std::span<const double> axis, double rate);

/// One predict/update cycle of a scalar random-walk filter. Each axis is an
/// independent measurement with noise r0 / (confidence + eps), applied in
/// x, y, z order. An uninitialized state starts from the precision-weighted
/// mean of the axes. Axes with zero confidence are ignored; if all are zero
/// the state is left untouched.
FuseResult kalman_fuse(KalmanState& state, std::span<const AxisEstimate, 3> estimates,
                       const KalmanParams& params = {});

/// Posterior variance after fusing a subset of axes (no state mutation);
/// used to check that adding axes never loses information.
double posterior_variance(const KalmanState& state, std::span<const AxisEstimate> estimates,
                          const KalmanParams& params = {});

/// Per-window label with per-axis diagnostics.
struct WindowLabel {
  double rr = kSentinelRr;
  double confidence = 0.0;  // max axis confidence
  bool available = false;
  std::array<AxisEstimate, 3> axes{};
};

/// Chronological labeller for one recording: owns the Kalman state.
class GroundTruthExtractor {
 public:
  explicit GroundTruthExtractor(KalmanParams params = {}) : params_(params) {}

  /// `window` must already be at the analysis rate.
  WindowLabel next(const TriaxialWindow& window);

  const KalmanState& state() const noexcept { return state_; }
  void reset() noexcept { state_ = {}; }

 private:
  KalmanParams params_;
  KalmanState state_;
};

}  // namespace rrforge::gt
