#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rrforge/nn/tape.hpp"

namespace rrforge::testing {

using namespace rrforge::nn;

inline Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = d(rng);
  return t;
}

// sum_i r_i y_i, so every output coordinate gets a distinct random weight.
inline Var weighted_sum(Tape& tape, Var y, const Tensor& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * tape.value(y)[i];
  auto backward = [y, r](Tape& t, std::size_t self) {
    const double g = t.grad_of(self)[0];
    Tensor& dy = t.grad_buffer(y);
    for (std::size_t i = 0; i < r.size(); ++i) dy[i] += g * r[i];
  };
  return tape.push(Tensor({1}, s), tape.requires_grad(y), std::move(backward), "weighted_sum");
}

using Graph = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheck {
  double max_rel = 0.0;
  std::size_t checked = 0;
};

// Central differences (h = 1e-5) against the tape, over every input and
// parameter coordinate. `skip` excludes coordinates near kinks.
inline GradCheck grad_check(const Graph& f, std::vector<Tensor> inputs, const std::vector<Parameter*>& params,
                     std::uint64_t seed, const std::function<bool(double)>& skip = {}) {
  constexpr double h = 1e-5;
  Tensor r;
  auto eval = [&](bool backward, std::vector<Tensor>* input_grads) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.input(t));
    const Var y = f(tape, vars);
    if (r.empty()) r = random_tensor(tape.value(y).shape(), seed + 99);
    const Var s = weighted_sum(tape, y, r);
    if (backward) {
      for (auto* p : params) p->zero_grad();
      tape.backward(s);
      for (const auto& v : vars) input_grads->push_back(tape.grad(v));
    }
    return tape.value(s)[0];
  };
  std::vector<Tensor> analytic_in;
  eval(true, &analytic_in);
  std::vector<Tensor> analytic_param;
  for (auto* p : params) analytic_param.push_back(p->grad);

  GradCheck out;
  auto compare = [&](double& coord, double analytic) {
    if (skip && skip(coord)) return;
    const double saved = coord;
    coord = saved + h;
    const double up = eval(false, nullptr);
    coord = saved - h;
    const double down = eval(false, nullptr);
    coord = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-2});
    out.max_rel = std::max(out.max_rel, std::abs(numeric - analytic) / denom);
    ++out.checked;
  };
  for (std::size_t k = 0; k < inputs.size(); ++k)
    for (std::size_t i = 0; i < inputs[k].size(); ++i) compare(inputs[k][i], analytic_in[k][i]);
  for (std::size_t k = 0; k < params.size(); ++k)
    for (std::size_t i = 0; i < params[k]->value.size(); ++i) compare(params[k]->value[i], analytic_param[k][i]);
  return out;
}

}  // namespace rrforge::testing
