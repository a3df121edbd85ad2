#include "rrforge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <tuple>

#include "rrforge/error.hpp"
#include "rrforge/nn/optim.hpp"

namespace rrforge::model {

void TrainConfig::validate() const {
  require(epochs > 0 && steps_per_epoch > 0 && batch_size > 0 && early_stop_patience > 0, Errc::invalid_config,
          "epochs, steps_per_epoch, batch_size and early_stop_patience must be positive");
  require(std::isfinite(lr0) && lr0 > 0.0, Errc::invalid_config, "lr0 must be positive");
}

nn::Tensor batch_tensor(std::span<const SegmentBundle> bundles, std::span<const std::size_t> indices) {
  nn::Tensor t({indices.size(), kBundleChannels, kWindowSamples});
  double* dst = t.data();
  for (const std::size_t i : indices) {
    const auto& ch = bundles[i].channels;
    require(ch.size() == kBundleChannels * kWindowSamples, Errc::invalid_shape, "malformed bundle " + bundles[i].segment_id);
    dst = std::copy(ch.begin(), ch.end(), dst);
  }
  return t;
}

std::vector<double> predict(RrModel& model, std::span<const SegmentBundle> bundles, std::size_t chunk) {
  std::vector<double> out;
  out.reserve(bundles.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < bundles.size(); start += chunk) {
    idx.resize(std::min(chunk, bundles.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const auto y = model.predict(batch_tensor(bundles, idx));
    out.insert(out.end(), y.begin(), y.end());
  }
  return out;
}

double evaluate_loss(RrModel& model, std::span<const SegmentBundle> bundles) {
  require(!bundles.empty(), Errc::invalid_argument, "empty evaluation set");
  const auto y = predict(model, bundles);
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += nn::smooth_l1_value(bundles[i].label - y[i]);
  return sum / static_cast<double>(y.size());
}

void check_disjoint_subjects(std::span<const SegmentBundle> train, std::span<const SegmentBundle> val) {
  std::set<std::string> subjects;
  for (const auto& b : train) subjects.insert(b.subject_id);
  for (const auto& b : val) {
    require(!subjects.contains(b.subject_id), Errc::invalid_split,
            "subject " + b.subject_id + " appears in both training and validation sets");
  }
}

namespace {

void require_labels(std::span<const SegmentBundle> set, const char* which) {
  for (const auto& b : set) {
    require(b.has_label(), Errc::invalid_argument,
            std::string(which) + " segment " + b.segment_id + " has no reference label");
  }
}

double mae_of(const std::vector<double>& pred, std::span<const SegmentBundle> set) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - set[i].label);
  return sum / static_cast<double>(pred.size());
}

}  // namespace

History train(RrModel& model, std::span<const SegmentBundle> train_set, std::span<const SegmentBundle> val_set,
              const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  require(!train_set.empty() && !val_set.empty(), Errc::invalid_argument, "training and validation sets must be non-empty");
  require(train_set.size() >= 2, Errc::invalid_argument, "batch normalization needs at least two training segments");
  require_labels(train_set, "training");
  require_labels(val_set, "validation");

  // Same-object sets are the overfit check; anything else must be subject-disjoint.
  const bool same_set = train_set.data() == val_set.data() && train_set.size() == val_set.size();
  if (!same_set) check_disjoint_subjects(train_set, val_set);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = train_set[a];
    const auto& y = train_set[b];
    return std::tie(x.subject_id, x.segment_id) < std::tie(y.subject_id, y.segment_id);
  });

  if (cfg.init_output_bias) {
    double sum = 0.0;
    for (const auto& b : train_set) sum += b.label;
    model.output_bias().value[0] = sum / static_cast<double>(train_set.size());
  }

  const std::size_t batch = std::min(cfg.batch_size, train_set.size());
  const std::size_t total_steps = cfg.epochs * cfg.steps_per_epoch;
  nn::Adam opt(model.trainable());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> perm = order;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::size_t cursor = 0;

  History hist;
  std::vector<nn::Tensor> best = model.snapshot();
  std::size_t since_best = 0;
  std::vector<std::size_t> idx(batch);
  nn::Tensor target({batch, 1});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t s = 0; s < cfg.steps_per_epoch; ++s) {
      for (std::size_t j = 0; j < batch; ++j) {
        if (cursor == perm.size()) {
          perm = order;
          std::shuffle(perm.begin(), perm.end(), rng);
          cursor = 0;
        }
        idx[j] = perm[cursor++];
        target[j] = train_set[idx[j]].label;
      }
      nn::Tape tape;
      const auto out = model.forward(tape, tape.constant(batch_tensor(train_set, idx)), nn::Mode::train);
      const auto loss = nn::smooth_l1(tape, out, target);
      loss_sum += tape.value(loss)[0] / static_cast<double>(batch);
      opt.zero_grad();
      tape.backward(loss);
      lr = nn::cosine_decay(cfg.lr0, hist.steps_executed, total_steps);
      opt.step(++hist.steps_executed, lr);
    }

    EpochRecord rec{epoch, loss_sum / static_cast<double>(cfg.steps_per_epoch), 0.0, lr};
    rec.val_mae = mae_of(predict(model, val_set), val_set);
    hist.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_mae < hist.best_val_mae) {
      hist.best_val_mae = rec.val_mae;
      hist.best_epoch = epoch;
      best = model.snapshot();
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      hist.stopped_early = epoch < cfg.epochs;
      break;
    }
  }
  model.restore(best);
  return hist;
}

}  // namespace rrforge::model
