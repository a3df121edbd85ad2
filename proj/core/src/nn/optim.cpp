#include "rrforge/nn/optim.hpp"

#include <cmath>
#include <numbers>

#include "rrforge/error.hpp"

namespace rrforge::nn {

Adam::Adam(std::vector<Parameter*> params, AdamOptions opts) : opts_(opts) {
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    params_.push_back(p);
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

void Adam::step(std::size_t t, double lr) {
  require(t >= 1, Errc::invalid_argument, "Adam step counter starts at 1");
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    if (!p.grad.all_finite()) fail(Errc::numeric_failure, "non-finite gradient in " + p.name);
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g;
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + opts_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

double cosine_decay(double lr0, std::size_t step, std::size_t total_steps) {
  if (total_steps == 0 || step > total_steps) return 0.0;
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace rrforge::nn
