#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "rrforge/error.hpp"
#include "rrforge/model.hpp"

using namespace rrforge;
using namespace rrforge::model;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.input_length = 64;
  c.stem_filters = 8;
  c.max_filters = 16;
  return c;
}

nn::Tensor random_batch(std::size_t b, std::size_t c, std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  nn::Tensor t({b, c, len});
  for (auto& v : t.values()) v = d(rng);
  return t;
}

std::size_t conv_params(std::size_t in, std::size_t out, std::size_t k) { return in * out * k + out; }

}  // namespace

TEST(ModelConfig, RejectsInvalid) {
  auto expect_invalid = [](ModelConfig c) {
    try {
      c.validate();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::invalid_config);
    }
  };
  ModelConfig c;
  c.max_filters = 24;
  expect_invalid(c);
  c = {};
  c.branch_kernels = {3};
  c.branch_dilations = {1};
  expect_invalid(c);
  c = {};
  c.branch_dilations = {1, 2};
  expect_invalid(c);
  c = {};
  c.input_length = 3;
  expect_invalid(c);
  c = {};
  c.max_filters = 4;
  expect_invalid(c);
}

TEST(ModelConfig, StageLengthsFollowConvFormula) {
  const auto plan = plan_stages(small_config());
  ASSERT_EQ(plan.size(), 4u);
  std::size_t len = 64;
  for (const auto& s : plan) {
    EXPECT_EQ(s.in_length, len);
    EXPECT_EQ(s.out_length, (len + 2 * 1 - 1 * (3 - 1) - 1) / 2 + 1);
    len = s.out_length;
  }
  EXPECT_LE(plan.back().out_length, 4u);
  EXPECT_EQ(plan[0].out_channels, 8u);
  EXPECT_EQ(plan[1].out_channels, 16u);
  EXPECT_EQ(plan[3].out_channels, 16u);
}

TEST(ModelParams, HandCountedSmallNetwork) {
  // Branches: 8 filters each over 3 input channels plus BN(8).
  const std::size_t branches = (conv_params(3, 8, 3) + 16) + (conv_params(3, 8, 5) + 16) + (conv_params(3, 8, 7) + 16);
  const std::size_t project = conv_params(24, 3, 1);
  const std::size_t stack = (conv_params(3, 8, 3) + 16) + (conv_params(8, 16, 3) + 32) + 2 * (conv_params(16, 16, 3) + 32);
  const std::size_t head = (16 * 64 + 64) + 65;
  EXPECT_EQ(branches + project + stack + head, 3820u);
  const auto m = build_model(small_config());
  EXPECT_EQ(count_params(m), 3820u);
  EXPECT_EQ(expected_param_count(small_config()), 3820u);
}

TEST(ModelParams, LayerCountExamples) {
  EXPECT_EQ(conv_params(3, 8, 3), 80u);
  EXPECT_EQ(conv_params(64, 1, 1) - 64 + 64, 65u);
  nn::BatchNorm bn("bn", 12);
  EXPECT_EQ(bn.gamma.value.size() + bn.beta.value.size(), 24u);
}

TEST(ModelParams, FullScaleRegressionValues) {
  EXPECT_EQ(expected_param_count(ModelConfig{}), 8'466'988u);
  ModelConfig desk;
  desk.max_filters = 128;
  EXPECT_EQ(expected_param_count(desk), 289'964u);
  EXPECT_EQ(count_params(build_model(desk)), 289'964u);
}

TEST(RrModel, ZeroHeadGivesZero) {
  auto m = build_model(small_config());
  m.output_weight().value.fill(0.0);
  m.output_bias().value.fill(0.0);
  for (const auto v : m.predict(random_batch(3, 3, 64, 1))) EXPECT_EQ(v, 0.0);
}

TEST(RrModel, EvalIsDeterministic) {
  auto m = build_model(small_config());
  const auto x = random_batch(4, 3, 64, 2);
  EXPECT_EQ(m.predict(x), m.predict(x));
  auto m2 = build_model(small_config());
  EXPECT_EQ(m.predict(x), m2.predict(x));
}

TEST(RrModel, RejectsWrongInputShape) {
  auto m = build_model(small_config());
  EXPECT_THROW(m.predict(random_batch(2, 2, 64, 1)), Error);
  EXPECT_THROW(m.predict(random_batch(2, 3, 65, 1)), Error);
}

TEST(RrModel, NonFiniteInputReported) {
  auto m = build_model(small_config());
  auto x = random_batch(2, 3, 64, 1);
  x[5] = std::nan("");
  try {
    m.predict(x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::numeric_failure);
  }
}

TEST(RrModel, SnapshotRestore) {
  auto m = build_model(small_config());
  const auto x = random_batch(2, 3, 64, 3);
  const auto before = m.predict(x);
  const auto snap = m.snapshot();
  for (auto* p : m.trainable()) p->value.fill(0.01);
  EXPECT_NE(m.predict(x), before);
  m.restore(snap);
  EXPECT_EQ(m.predict(x), before);
}

TEST(RrModel, FileRoundTrip) {
  auto m = build_model(small_config());
  const auto path = std::filesystem::temp_directory_path() / "rrforge_model_rt.rrf1";
  save_model(path, m, 0xabcdef0123456789ull);
  auto back = load_model(path);
  const auto x = random_batch(3, 3, 64, 4);
  EXPECT_EQ(m.predict(x), back.predict(x));
  EXPECT_EQ(config_hash_of(nn::load_rrf1(path)), 0xabcdef0123456789ull);
  EXPECT_EQ(back.config().max_filters, 16u);
  std::filesystem::remove(path);
}
