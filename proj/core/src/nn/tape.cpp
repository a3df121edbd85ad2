#include "rrforge/nn/tape.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "rrforge/error.hpp"

namespace rrforge::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;
using Index = Eigen::Index;

Index ix(std::size_t v) { return static_cast<Index>(v); }

void accumulate(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

Var Tape::push(Tensor value, bool requires_grad, BackwardFn backward, const char* op) {
  if (!value.all_finite()) {
    fail(Errc::numeric_failure, std::string("non-finite output from ") + op + " at '" + label_ + "' shape " +
                                    value.shape_string());
  }
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, requires_grad ? std::move(backward) : BackwardFn{}});
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, {}, "constant"); }

Var Tape::input(Tensor value) {
  return push(std::move(value), true, [](Tape&, std::size_t) {}, "input");
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.grad.size() != n.value.size()) n.grad = Tensor::zeros_like(n.value);
  return n.grad;
}

void Tape::backward(Var target) {
  require(nodes_.at(target.id).value.size() == 1, Errc::invalid_shape, "backward target must be a scalar");
  for (auto& n : nodes_) {
    if (n.grad.size()) n.grad.fill(0.0);
  }
  grad_buffer(target)[0] = 1.0;
  for (std::size_t i = target.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, i);
  }
  for (std::size_t i = 0; i <= target.id; ++i) {
    if (nodes_[i].grad.size() && !nodes_[i].grad.all_finite()) {
      fail(Errc::numeric_failure, "non-finite gradient at tape node " + std::to_string(i));
    }
  }
}

// ---------------------------------------------------------------------------
// conv1d

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, const Conv1dOptions& opts) {
  require(kernel >= 1 && opts.stride >= 1 && opts.dilation >= 1, Errc::invalid_argument,
          "conv1d needs kernel, stride and dilation >= 1");
  const auto span = static_cast<long long>(opts.dilation * (kernel - 1) + 1);
  const auto padded = static_cast<long long>(length + 2 * opts.padding);
  const long long out = padded >= span ? (padded - span) / static_cast<long long>(opts.stride) + 1 : 0;
  require(out >= 1, Errc::invalid_shape,
          "conv1d output length < 1 for input length " + std::to_string(length) + ", kernel " + std::to_string(kernel));
  return static_cast<std::size_t>(out);
}

Var conv1d(Tape& tape, Var x_var, Parameter& weight, Parameter* bias, const Conv1dOptions& opts) {
  const Tensor& x = tape.value(x_var);
  require(x.rank() == 3, Errc::invalid_shape, "conv1d input must be (batch, channels, length), got " + x.shape_string());
  require(weight.value.rank() == 3, Errc::invalid_shape, "conv1d weight must be (out, in, k)");
  const std::size_t batch = x.dim(0), c_in = x.dim(1), l_in = x.dim(2);
  const std::size_t c_out = weight.value.dim(0), k = weight.value.dim(2);
  require(weight.value.dim(1) == c_in, Errc::invalid_shape,
          "conv1d weight expects " + std::to_string(weight.value.dim(1)) + " input channels, got " + std::to_string(c_in));
  if (bias) require(bias->value.size() == c_out, Errc::invalid_shape, "conv1d bias size mismatch");
  const std::size_t l_out = conv1d_output_length(l_in, k, opts);

  const std::size_t cols = batch * l_out;
  RowMat col = RowMat::Zero(ix(c_in * k), ix(cols));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const double* src = x.data() + (b * c_in + ci) * l_in;
      for (std::size_t j = 0; j < k; ++j) {
        double* dst = col.data() + (ci * k + j) * cols + b * l_out;
        const auto shift = static_cast<long long>(j * opts.dilation) - static_cast<long long>(opts.padding);
        for (std::size_t t = 0; t < l_out; ++t) {
          const long long pos = static_cast<long long>(t * opts.stride) + shift;
          if (pos >= 0 && pos < static_cast<long long>(l_in)) dst[t] = src[pos];
        }
      }
    }
  }

  const ConstRowMap w(weight.value.data(), ix(c_out), ix(c_in * k));
  const RowMat y = w * col;
  Tensor out({batch, c_out, l_out});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t co = 0; co < c_out; ++co) {
      const double* src = y.data() + co * cols + b * l_out;
      double* dst = out.data() + (b * c_out + co) * l_out;
      const double shift = bias ? bias->value[co] : 0.0;
      for (std::size_t t = 0; t < l_out; ++t) dst[t] = src[t] + shift;
    }
  }

  const bool x_grad = tape.requires_grad(x_var);
  auto backward = [x_var, x_grad, &weight, bias, opts, batch, c_in, l_in, c_out, k, l_out,
                   col = std::move(col)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    const std::size_t cols = batch * l_out;
    RowMat dy(ix(c_out), ix(cols));
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t co = 0; co < c_out; ++co) {
        std::copy_n(g.data() + (b * c_out + co) * l_out, l_out, dy.data() + co * cols + b * l_out);
      }
    }
    if (weight.trainable) {
      RowMap dw(weight.grad.data(), ix(c_out), ix(c_in * k));
      dw.noalias() += dy * col.transpose();
    }
    if (bias && bias->trainable) {
      const Eigen::VectorXd db = dy.rowwise().sum();
      for (std::size_t co = 0; co < c_out; ++co) bias->grad[co] += db(ix(co));
    }
    if (!x_grad) return;
    const ConstRowMap w(weight.value.data(), ix(c_out), ix(c_in * k));
    const RowMat dcol = w.transpose() * dy;
    Tensor& dx = t.grad_buffer(x_var);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        double* dst = dx.data() + (b * c_in + ci) * l_in;
        for (std::size_t j = 0; j < k; ++j) {
          const double* src = dcol.data() + (ci * k + j) * cols + b * l_out;
          const auto shift = static_cast<long long>(j * opts.dilation) - static_cast<long long>(opts.padding);
          for (std::size_t tt = 0; tt < l_out; ++tt) {
            const long long pos = static_cast<long long>(tt * opts.stride) + shift;
            if (pos >= 0 && pos < static_cast<long long>(l_in)) dst[pos] += src[tt];
          }
        }
      }
    }
  };
  return tape.push(std::move(out), true, std::move(backward), "conv1d");
}

// ---------------------------------------------------------------------------
// batch_norm

BatchNorm::BatchNorm(const std::string& name, std::size_t channels)
    : gamma(name + ".gamma", Tensor({channels}, 1.0)),
      beta(name + ".beta", Tensor({channels}, 0.0)),
      running_mean(name + ".running_mean", Tensor({channels}, 0.0), false),
      running_var(name + ".running_var", Tensor({channels}, 1.0), false) {}

Var batch_norm(Tape& tape, Var x_var, BatchNorm& bn, Mode mode) {
  const Tensor& x = tape.value(x_var);
  require(x.rank() == 2 || x.rank() == 3, Errc::invalid_shape, "batch_norm expects rank 2 or 3 input");
  const std::size_t batch = x.dim(0), channels = x.dim(1), len = x.rank() == 3 ? x.dim(2) : 1;
  require(bn.gamma.value.size() == channels, Errc::invalid_shape, "batch_norm channel mismatch");
  const std::size_t count = batch * len;

  Tensor xhat(x.shape());
  Tensor out(x.shape());
  std::vector<double> inv_std(channels);

  if (mode == Mode::train) {
    require(batch >= 2, Errc::invalid_argument, "batch_norm in train mode needs batch >= 2");
    for (std::size_t c = 0; c < channels; ++c) {
      double m = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* p = x.data() + (b * channels + c) * len;
        for (std::size_t l = 0; l < len; ++l) m += p[l];
      }
      m /= static_cast<double>(count);
      double v = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* p = x.data() + (b * channels + c) * len;
        for (std::size_t l = 0; l < len; ++l) v += (p[l] - m) * (p[l] - m);
      }
      v /= static_cast<double>(count);
      inv_std[c] = 1.0 / std::sqrt(v + bn.eps);
      const double unbiased = count > 1 ? v * static_cast<double>(count) / static_cast<double>(count - 1) : v;
      bn.running_mean.value[c] = bn.momentum * bn.running_mean.value[c] + (1.0 - bn.momentum) * m;
      bn.running_var.value[c] = bn.momentum * bn.running_var.value[c] + (1.0 - bn.momentum) * unbiased;
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * channels + c) * len;
        for (std::size_t l = 0; l < len; ++l) {
          xhat[off + l] = (x[off + l] - m) * inv_std[c];
          out[off + l] = bn.gamma.value[c] * xhat[off + l] + bn.beta.value[c];
        }
      }
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      inv_std[c] = 1.0 / std::sqrt(std::max(0.0, bn.running_var.value[c]) + bn.eps);
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * channels + c) * len;
        for (std::size_t l = 0; l < len; ++l) {
          xhat[off + l] = (x[off + l] - bn.running_mean.value[c]) * inv_std[c];
          out[off + l] = bn.gamma.value[c] * xhat[off + l] + bn.beta.value[c];
        }
      }
    }
  }

  const bool x_grad = tape.requires_grad(x_var);
  auto backward = [x_var, x_grad, &bn, mode, batch, channels, len, count, xhat = std::move(xhat),
                   inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor* dx = x_grad ? &t.grad_buffer(x_var) : nullptr;
    for (std::size_t c = 0; c < channels; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * channels + c) * len;
        for (std::size_t l = 0; l < len; ++l) {
          sum_g += g[off + l];
          sum_gx += g[off + l] * xhat[off + l];
        }
      }
      if (bn.gamma.trainable) bn.gamma.grad[c] += sum_gx;
      if (bn.beta.trainable) bn.beta.grad[c] += sum_g;
      if (!dx) continue;
      const double gamma = bn.gamma.value[c];
      if (mode == Mode::eval) {
        for (std::size_t b = 0; b < batch; ++b) {
          const std::size_t off = (b * channels + c) * len;
          for (std::size_t l = 0; l < len; ++l) (*dx)[off + l] += g[off + l] * gamma * inv_std[c];
        }
        continue;
      }
      // dx = inv_std / N * (N dxhat - sum(dxhat) - xhat * sum(dxhat * xhat)), dxhat = g * gamma
      const double n = static_cast<double>(count);
      const double scale = gamma * inv_std[c] / n;
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * channels + c) * len;
        for (std::size_t l = 0; l < len; ++l) {
          (*dx)[off + l] += scale * (n * g[off + l] - sum_g - xhat[off + l] * sum_gx);
        }
      }
    }
  };
  return tape.push(std::move(out), true, std::move(backward), "batch_norm");
}

// ---------------------------------------------------------------------------
// elementwise and reshaping ops

Var leaky_relu(Tape& tape, Var x_var, double slope) {
  const Tensor& x = tape.value(x_var);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] >= 0.0 ? x[i] : slope * x[i];
  if (!tape.requires_grad(x_var)) return tape.push(std::move(out), false, {}, "leaky_relu");
  auto backward = [x_var, slope](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& xv = t.value(x_var);
    Tensor& dx = t.grad_buffer(x_var);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += xv[i] > 0.0 ? g[i] : slope * g[i];
  };
  return tape.push(std::move(out), true, std::move(backward), "leaky_relu");
}

Var concat_channels(Tape& tape, std::span<const Var> parts) {
  require(!parts.empty(), Errc::invalid_argument, "concat of nothing");
  const Tensor& first = tape.value(parts.front());
  require(first.rank() == 3, Errc::invalid_shape, "concat_channels expects rank-3 inputs");
  const std::size_t batch = first.dim(0), len = first.dim(2);
  std::size_t channels = 0;
  std::vector<std::size_t> widths;
  bool any_grad = false;
  for (const Var p : parts) {
    const Tensor& v = tape.value(p);
    require(v.rank() == 3 && v.dim(0) == batch && v.dim(2) == len, Errc::invalid_shape,
            "concat_channels shape mismatch: " + v.shape_string() + " vs " + first.shape_string());
    widths.push_back(v.dim(1));
    channels += v.dim(1);
    any_grad = any_grad || tape.requires_grad(p);
  }
  Tensor out({batch, channels, len});
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t c0 = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const Tensor& v = tape.value(parts[p]);
      std::copy_n(v.data() + b * widths[p] * len, widths[p] * len, out.data() + (b * channels + c0) * len);
      c0 += widths[p];
    }
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  auto backward = [ids, widths, batch, channels, len](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    std::size_t c0 = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (t.requires_grad(ids[p])) {
        Tensor& dx = t.grad_buffer(ids[p]);
        for (std::size_t b = 0; b < batch; ++b) {
          const double* src = g.data() + (b * channels + c0) * len;
          double* dst = dx.data() + b * widths[p] * len;
          for (std::size_t i = 0; i < widths[p] * len; ++i) dst[i] += src[i];
        }
      }
      c0 += widths[p];
    }
  };
  return tape.push(std::move(out), any_grad, std::move(backward), "concat_channels");
}

Var add(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require(av.shape() == bv.shape(), Errc::invalid_shape, "add shape mismatch " + av.shape_string() + " vs " + bv.shape_string());
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  auto backward = [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    if (t.requires_grad(a)) accumulate(t.grad_buffer(a), g);
    if (t.requires_grad(b)) accumulate(t.grad_buffer(b), g);
  };
  return tape.push(std::move(out), tape.requires_grad(a) || tape.requires_grad(b), std::move(backward), "add");
}

Var global_avg_pool(Tape& tape, Var x_var) {
  const Tensor& x = tape.value(x_var);
  require(x.rank() == 3 && x.dim(2) >= 1, Errc::invalid_shape, "global_avg_pool expects (b, c, L >= 1)");
  const std::size_t batch = x.dim(0), channels = x.dim(1), len = x.dim(2);
  Tensor out({batch, channels});
  for (std::size_t i = 0; i < batch * channels; ++i) {
    double s = 0.0;
    for (std::size_t l = 0; l < len; ++l) s += x[i * len + l];
    out[i] = s / static_cast<double>(len);
  }
  auto backward = [x_var, batch, channels, len](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor& dx = t.grad_buffer(x_var);
    const double inv = 1.0 / static_cast<double>(len);
    for (std::size_t i = 0; i < batch * channels; ++i) {
      for (std::size_t l = 0; l < len; ++l) dx[i * len + l] += g[i] * inv;
    }
  };
  return tape.push(std::move(out), tape.requires_grad(x_var), std::move(backward), "global_avg_pool");
}

Var dense(Tape& tape, Var x_var, Parameter& weight, Parameter* bias) {
  const Tensor& x = tape.value(x_var);
  require(x.rank() == 2, Errc::invalid_shape, "dense input must be (batch, features), got " + x.shape_string());
  require(weight.value.rank() == 2 && weight.value.dim(1) == x.dim(1), Errc::invalid_shape,
          "dense weight " + weight.value.shape_string() + " does not accept input " + x.shape_string());
  const std::size_t batch = x.dim(0), f_in = x.dim(1), f_out = weight.value.dim(0);
  if (bias) require(bias->value.size() == f_out, Errc::invalid_shape, "dense bias size mismatch");

  Tensor out({batch, f_out});
  {
    const ConstRowMap xm(x.data(), ix(batch), ix(f_in));
    const ConstRowMap wm(weight.value.data(), ix(f_out), ix(f_in));
    RowMap ym(out.data(), ix(batch), ix(f_out));
    ym.noalias() = xm * wm.transpose();
    if (bias) {
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < f_out; ++o) out[b * f_out + o] += bias->value[o];
      }
    }
  }
  const bool x_grad = tape.requires_grad(x_var);
  auto backward = [x_var, x_grad, &weight, bias, batch, f_in, f_out](Tape& t, std::size_t self) {
    const ConstRowMap dy(t.grad_of(self).data(), ix(batch), ix(f_out));
    const ConstRowMap xm(t.value(x_var).data(), ix(batch), ix(f_in));
    if (weight.trainable) {
      RowMap dw(weight.grad.data(), ix(f_out), ix(f_in));
      dw.noalias() += dy.transpose() * xm;
    }
    if (bias && bias->trainable) {
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < f_out; ++o) bias->grad[o] += dy(ix(b), ix(o));
      }
    }
    if (x_grad) {
      const ConstRowMap wm(weight.value.data(), ix(f_out), ix(f_in));
      RowMap dx(t.grad_buffer(x_var).data(), ix(batch), ix(f_in));
      dx.noalias() += dy * wm;
    }
  };
  return tape.push(std::move(out), true, std::move(backward), "dense");
}

double smooth_l1_value(double diff) noexcept {
  const double a = std::abs(diff);
  return a < 1.0 ? 0.5 * diff * diff : a - 0.5;
}

Var smooth_l1(Tape& tape, Var pred_var, const Tensor& target) {
  const Tensor& pred = tape.value(pred_var);
  require(pred.size() == target.size(), Errc::invalid_shape,
          "smooth_l1 shape mismatch " + pred.shape_string() + " vs " + target.shape_string());
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) loss += smooth_l1_value(target[i] - pred[i]);
  auto backward = [pred_var, target](Tape& t, std::size_t self) {
    const double g = t.grad_of(self)[0];
    const Tensor& p = t.value(pred_var);
    Tensor& dp = t.grad_buffer(pred_var);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = target[i] - p[i];
      // d loss / d pred = -d inside the quadratic zone, -sign(d) outside.
      const double local = std::abs(d) < 1.0 ? -d : (d > 0.0 ? -1.0 : 1.0);
      dp[i] += g * local;
    }
  };
  return tape.push(Tensor({1}, loss), tape.requires_grad(pred_var), std::move(backward), "smooth_l1");
}

}  // namespace rrforge::nn
