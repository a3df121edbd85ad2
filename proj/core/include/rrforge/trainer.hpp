#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "rrforge/bundle.hpp"
#include "rrforge/model.hpp"

namespace rrforge::model {

inline constexpr std::size_t kNoEarlyStop = std::numeric_limits<std::size_t>::max();

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t steps_per_epoch = 60;
  std::size_t batch_size = 32;
  double lr0 = 1e-3;
  std::size_t early_stop_patience = 10;  // kNoEarlyStop disables stopping
  std::uint64_t seed = 0;
  /// Start the output bias at the mean training label.
  bool init_output_bias = true;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;      // 1-based
  double train_loss = 0.0;    // mean per-segment SmoothL1 over the epoch's steps
  double val_mae = 0.0;       // brpm, eval mode
  double lr = 0.0;            // rate used by the epoch's last step
};

struct History {
  std::vector<EpochRecord> epochs;
  std::size_t steps_executed = 0;
  std::size_t best_epoch = 0;
  double best_val_mae = std::numeric_limits<double>::infinity();
  bool stopped_early = false;
};

/// Stacks bundles into a (batch, 3, 3200) float64 tensor.
nn::Tensor batch_tensor(std::span<const SegmentBundle> bundles, std::span<const std::size_t> indices);

/// Eval-mode predictions in chunks.
std::vector<double> predict(RrModel& model, std::span<const SegmentBundle> bundles, std::size_t chunk = 64);

/// Mean per-segment SmoothL1 loss in eval mode.
double evaluate_loss(RrModel& model, std::span<const SegmentBundle> bundles);

/// Throws invalid-split if any subject appears on both sides.
void check_disjoint_subjects(std::span<const SegmentBundle> train, std::span<const SegmentBundle> val);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam under cosine decay over epochs * steps_per_epoch steps, validation
/// after each epoch, early stopping on validation MAE, and restoration of the
/// best parameters. The training order is canonicalized by (subject, segment)
/// before the seeded shuffle, so input order never matters.
History train(RrModel& model, std::span<const SegmentBundle> train_set, std::span<const SegmentBundle> val_set,
              const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace rrforge::model
