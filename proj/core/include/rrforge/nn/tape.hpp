#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rrforge/nn/tensor.hpp"

namespace rrforge::nn {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Records a forward pass and replays it backwards. Activations live on the
/// tape; Parameters live outside and receive their gradients through the
/// op closures, so a Parameter must outlive every tape that references it.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Input that needs no gradient.
  Var constant(Tensor value);
  /// Input whose gradient is kept (for gradient checks w.r.t. inputs).
  Var input(Tensor value);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient of the last backward() target with respect to `v`.
  const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }

  /// Seeds d(target)/d(target) = 1; the target must hold a single element.
  void backward(Var target);

  /// Label attached to subsequent ops for non-finite diagnostics.
  void set_label(std::string label) { label_ = std::move(label); }
  const std::string& label() const noexcept { return label_; }

  std::size_t size() const noexcept { return nodes_.size(); }

  // Used by op implementations.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;
  Var push(Tensor value, bool requires_grad, BackwardFn backward, const char* op);
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  /// Gradient buffer of `v`, allocated on first use.
  Tensor& grad_buffer(Var v);
  const Tensor& grad_of(std::size_t id) const { return nodes_.at(id).grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::string label_;
};

struct Conv1dOptions {
  std::size_t stride = 1;
  std::size_t dilation = 1;
  std::size_t padding = 0;
};

/// L_out = floor((L_in + 2 p - d (k - 1) - 1) / s) + 1; throws invalid-shape when < 1.
std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, const Conv1dOptions& opts);

/// Cross-correlation of x (b, c_in, L) with weight (c_out, c_in, k) plus an
/// optional per-channel bias.
Var conv1d(Tape& tape, Var x, Parameter& weight, Parameter* bias, const Conv1dOptions& opts);

enum class Mode { train, eval };

/// Batch normalization over every axis but the channel axis (1).
struct BatchNorm {
  Parameter gamma;
  Parameter beta;
  Parameter running_mean;
  Parameter running_var;
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
  double eps = 1e-5;

  BatchNorm() = default;
  BatchNorm(const std::string& name, std::size_t channels);
};

Var batch_norm(Tape& tape, Var x, BatchNorm& bn, Mode mode);

Var leaky_relu(Tape& tape, Var x, double slope = 0.2);

/// Concatenates rank-3 tensors along the channel axis.
Var concat_channels(Tape& tape, std::span<const Var> parts);

Var add(Tape& tape, Var a, Var b);

/// (b, c, L) -> (b, c)
Var global_avg_pool(Tape& tape, Var x);

/// x (b, f_in), weight (f_out, f_in), bias (f_out) -> (b, f_out)
Var dense(Tape& tape, Var x, Parameter& weight, Parameter* bias);

/// Per-element 0.5 d^2 if |d| < 1 else |d| - 0.5 with d = target - pred,
/// summed over the batch. Returns a single-element tensor.
Var smooth_l1(Tape& tape, Var pred, const Tensor& target);

/// Scalar SmoothL1 of a difference.
double smooth_l1_value(double diff) noexcept;

}  // namespace rrforge::nn
