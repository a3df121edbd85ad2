#pragma once

#include <cstddef>
#include <vector>

#include "rrforge/nn/tensor.hpp"

namespace rrforge::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected adaptive-moment optimizer. Holds first/second moments for
/// every trainable parameter it was constructed with.
class Adam {
 public:
  explicit Adam(std::vector<Parameter*> params, AdamOptions opts = {});

  /// Applies one update with step counter `t` (>= 1) and learning rate `lr`,
  /// reading each parameter's accumulated gradient.
  void step(std::size_t t, double lr);
  void zero_grad();

  const std::vector<Parameter*>& params() const noexcept { return params_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamOptions opts_;
};

/// lr0 * 0.5 * (1 + cos(pi * step / total_steps)); 0 once step > total_steps.
double cosine_decay(double lr0, std::size_t step, std::size_t total_steps);

}  // namespace rrforge::nn
