#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "rrforge/error.hpp"
#include "rrforge/nn/optim.hpp"
#include "rrforge/trainer.hpp"

using namespace rrforge;
using namespace rrforge::model;

namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.stem_filters = 4;
  c.max_filters = 8;
  c.head_hidden = 16;
  return c;
}

// Respiration channels carry a tone at the label rate; PPG is a fixed pulse.
std::vector<SegmentBundle> bundles(const std::string& subject, std::size_t n, std::uint64_t seed,
                                   double fixed_label = -1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rr_dist(8.0, 25.0), phase(0.0, 6.28);
  std::vector<SegmentBundle> out;
  for (std::size_t k = 0; k < n; ++k) {
    SegmentBundle b;
    b.subject_id = subject;
    b.segment_id = "seg" + std::to_string(k);
    const double rr = fixed_label > 0 ? fixed_label : rr_dist(rng);
    // A constant-label corpus is one repeated segment.
    const double p1 = fixed_label > 0 ? 0.0 : phase(rng);
    const double p2 = fixed_label > 0 ? 0.0 : phase(rng);
    for (std::size_t i = 0; i < kWindowSamples; ++i) {
      const double t = static_cast<double>(i) / 100.0;
      b.channel(0)[i] = static_cast<float>(std::sin(2.0 * std::numbers::pi * 1.2 * t));
      b.channel(1)[i] = static_cast<float>(std::sin(2.0 * std::numbers::pi * rr / 60.0 * t + p1));
      b.channel(2)[i] = static_cast<float>(std::cos(2.0 * std::numbers::pi * rr / 60.0 * t + p2));
    }
    b.label = static_cast<float>(rr);
    out.push_back(std::move(b));
  }
  return out;
}

TrainConfig quick(std::size_t epochs, std::size_t steps) {
  TrainConfig c;
  c.epochs = epochs;
  c.steps_per_epoch = steps;
  c.batch_size = 4;
  c.lr0 = 3e-3;
  c.early_stop_patience = kNoEarlyStop;
  c.seed = 11;
  return c;
}

}  // namespace

TEST(Trainer, RejectsSharedSubjects) {
  const auto a = bundles("S01", 4, 1);
  auto b = bundles("S02", 2, 2);
  b.push_back(a[0]);
  auto m = build_model(tiny());
  try {
    train(m, a, b, quick(1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_split);
  }
  EXPECT_NO_THROW(check_disjoint_subjects(a, bundles("S02", 2, 2)));
}

TEST(Trainer, RejectsEmptySets) {
  auto m = build_model(tiny());
  const std::vector<SegmentBundle> none;
  try {
    train(m, none, bundles("S02", 2, 2), quick(1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_argument);
  }
  EXPECT_THROW(train(m, bundles("S01", 4, 1), none, quick(1, 1)), Error);
}

TEST(Trainer, RejectsInvalidConfig) {
  auto cfg = quick(0, 5);
  EXPECT_THROW(cfg.validate(), Error);
  cfg = quick(1, 1);
  cfg.lr0 = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Trainer, NoPatienceRunsEveryStep) {
  auto m = build_model(tiny());
  const auto h = train(m, bundles("S01", 8, 1), bundles("S02", 4, 2), quick(3, 4));
  EXPECT_EQ(h.steps_executed, 12u);
  EXPECT_EQ(h.epochs.size(), 3u);
  EXPECT_FALSE(h.stopped_early);
  EXPECT_NEAR(h.epochs.back().lr, nn::cosine_decay(3e-3, 11, 12), 1e-15);
}

TEST(Trainer, SeededRunsAreIdentical) {
  const auto tr = bundles("S01", 8, 1);
  const auto va = bundles("S02", 4, 2);
  auto a = build_model(tiny());
  auto b = build_model(tiny());
  const auto ha = train(a, tr, va, quick(2, 3));
  const auto hb = train(b, tr, va, quick(2, 3));
  ASSERT_EQ(ha.epochs.size(), hb.epochs.size());
  for (std::size_t e = 0; e < ha.epochs.size(); ++e) {
    EXPECT_EQ(ha.epochs[e].train_loss, hb.epochs[e].train_loss);
    EXPECT_EQ(ha.epochs[e].val_mae, hb.epochs[e].val_mae);
  }
}

TEST(Trainer, InputOrderDoesNotMatter) {
  auto tr = bundles("S01", 8, 1);
  const auto va = bundles("S02", 4, 2);
  auto a = build_model(tiny());
  const auto ha = train(a, tr, va, quick(2, 3));
  std::reverse(tr.begin(), tr.end());
  std::rotate(tr.begin(), tr.begin() + 3, tr.end());
  auto b = build_model(tiny());
  const auto hb = train(b, tr, va, quick(2, 3));
  for (std::size_t e = 0; e < ha.epochs.size(); ++e) EXPECT_EQ(ha.epochs[e].val_mae, hb.epochs[e].val_mae);
  EXPECT_EQ(ha.best_epoch, hb.best_epoch);
}

TEST(Trainer, EarlyStopRestoresBest) {
  auto m = build_model(tiny());
  auto cfg = quick(30, 2);
  cfg.early_stop_patience = 2;
  cfg.lr0 = 0.05;
  const auto va = bundles("S02", 4, 2);
  const auto h = train(m, bundles("S01", 8, 1), va, cfg);
  ASSERT_FALSE(h.epochs.empty());
  double best = 1e300;
  for (const auto& r : h.epochs) best = std::min(best, r.val_mae);
  EXPECT_EQ(h.best_val_mae, best);
  if (h.stopped_early) EXPECT_EQ(h.epochs.size(), h.best_epoch + 2);
  const auto pred = predict(m, va);
  double mae = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) mae += std::abs(pred[i] - va[i].label);
  EXPECT_NEAR(mae / static_cast<double>(va.size()), best, 1e-5);
}

TEST(Trainer, OverfitsSixteenSegments) {
  const auto set = bundles("S01", 16, 5);
  auto m = build_model(tiny());
  auto cfg = quick(40, 10);
  cfg.lr0 = 1e-2;
  const auto h = train(m, set, set, cfg);
  EXPECT_LT(h.best_val_mae, 0.5);
  EXPECT_LT(h.best_val_mae, h.epochs.front().val_mae);
}

TEST(Trainer, ConstantLabelsInBrpm) {
  const auto tr = bundles("S01", 8, 1, 17.0);
  const auto va = bundles("S02", 4, 2, 17.0);
  auto cfg = quick(3, 5);
  cfg.init_output_bias = false;
  auto m = build_model(tiny());
  cfg.lr0 = 1e-2;
  cfg.epochs = 20;
  train(m, tr, va, cfg);
  for (const double p : predict(m, va)) EXPECT_NEAR(p, 17.0, 0.1);
}

TEST(Trainer, FirstEpochLowersTrainingLoss) {
  const auto tr = bundles("S01", 16, 3);
  auto m = build_model(tiny());
  const double before = evaluate_loss(m, tr);
  train(m, tr, bundles("S02", 4, 4), quick(1, 10));
  EXPECT_LT(evaluate_loss(m, tr), before);
}

TEST(Bundles, RoundTripThroughStream) {
  auto set = bundles("S07", 3, 9);
  set[1].label = std::nanf("");
  std::stringstream buf;
  write_bundles(buf, set);
  const auto back = read_bundles(buf);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[2].segment_id, "seg2");
  EXPECT_EQ(back[0].channels, set[0].channels);
  EXPECT_FALSE(back[1].has_label());
  EXPECT_EQ(back[2].label, set[2].label);
  std::stringstream bad("RRSX");
  EXPECT_THROW(read_bundles(bad), Error);
}
