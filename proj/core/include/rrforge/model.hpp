#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rrforge/nn/serialize.hpp"
#include "rrforge/nn/tape.hpp"
#include "rrforge/signal.hpp"

namespace rrforge::model {

struct ModelConfig {
  std::size_t input_length = kWindowSamples;
  std::size_t input_channels = 3;
  std::vector<std::size_t> branch_kernels{3, 5, 7};
  std::vector<std::size_t> branch_dilations{1, 2, 4};
  std::size_t stem_filters = 8;
  std::size_t max_filters = 1024;
  std::size_t conv_kernel = 3;
  std::size_t conv_stride = 2;
  std::size_t head_hidden = 64;
  double leaky_slope = 0.2;
  /// The strided stack stops once the sequence is this short.
  std::size_t min_length = 4;
  std::uint64_t init_seed = 0;

  /// Throws invalid-config on any violated invariant.
  void validate() const;
};

/// Shape of one strided conv stage.
struct StagePlan {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t in_length = 0;
  std::size_t out_length = 0;
};

/// Filters double from stem_filters up to max_filters, then stay constant;
/// stages are added until the length is <= min_length.
std::vector<StagePlan> plan_stages(const ModelConfig& cfg);

/// Multi-scale residual front end, strided convolution stack, global
/// average pooling and a two-layer dense head producing one RR value.
class RrModel {
 public:
  explicit RrModel(const ModelConfig& cfg);

  const ModelConfig& config() const noexcept { return cfg_; }
  const std::vector<StagePlan>& stages() const noexcept { return plan_; }

  /// input (batch, input_channels, input_length) -> (batch, 1), in brpm.
  nn::Var forward(nn::Tape& tape, nn::Var input, nn::Mode mode);

  /// Eval-mode inference on a prepared batch tensor.
  std::vector<double> predict(const nn::Tensor& batch);

  /// Every learned tensor and buffer, in a fixed order.
  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;
  std::vector<nn::Parameter*> trainable();

  /// Head output layer, exposed for initialization.
  nn::Parameter& output_weight() noexcept { return fc2_w_; }
  nn::Parameter& output_bias() noexcept { return fc2_b_; }

  std::vector<nn::Tensor> snapshot() const;
  void restore(const std::vector<nn::Tensor>& values);

 private:
  struct ConvBn {
    nn::Parameter w, b;
    nn::BatchNorm bn;
    nn::Conv1dOptions opts;
  };

  ModelConfig cfg_;
  std::vector<StagePlan> plan_;
  std::vector<ConvBn> branches_;
  nn::Parameter proj_w_, proj_b_;
  std::vector<ConvBn> stages_;
  nn::Parameter fc1_w_, fc1_b_, fc2_w_, fc2_b_;
};

RrModel build_model(const ModelConfig& cfg);

/// Weights, biases and batch-norm affine terms; running statistics excluded.
std::size_t count_params(const RrModel& model);

/// Parameter count from the layer shapes alone (no allocation).
std::size_t expected_param_count(const ModelConfig& cfg);

/// Tensors for an RRF1 file. The config is stored as a numeric record
/// `meta.model_config`; an optional 64-bit config hash as `meta.config_hash`
/// (four 16-bit limbs).
std::vector<nn::NamedTensor> to_tensors(const RrModel& model, std::uint64_t config_hash = 0);
RrModel from_tensors(const std::vector<nn::NamedTensor>& tensors);
std::uint64_t config_hash_of(const std::vector<nn::NamedTensor>& tensors);

void save_model(const std::filesystem::path& path, const RrModel& model, std::uint64_t config_hash = 0);
RrModel load_model(const std::filesystem::path& path);

}  // namespace rrforge::model
