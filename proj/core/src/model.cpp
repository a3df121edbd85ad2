#include "rrforge/model.hpp"

#include <cmath>
#include <random>

#include "rrforge/error.hpp"

namespace rrforge::model {
namespace {

using nn::Parameter;
using nn::Tensor;

constexpr double kConfigVersion = 1.0;

void init_uniform(Tensor& t, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.storage()) v = dist(rng);
}

// He-uniform scaled for a leaky rectifier.
double he_bound(std::size_t fan_in, double slope) {
  return std::sqrt(6.0 / ((1.0 + slope * slope) * static_cast<double>(fan_in)));
}

bool is_power_of_two_multiple(std::size_t big, std::size_t small) {
  if (small == 0 || big < small || big % small != 0) return false;
  const std::size_t r = big / small;
  return (r & (r - 1)) == 0;
}

}  // namespace

void ModelConfig::validate() const {
  require(input_length >= 2 && input_channels >= 1, Errc::invalid_config, "input shape must be positive");
  require(branch_kernels.size() >= 2 && branch_kernels.size() == branch_dilations.size(), Errc::invalid_config,
          "branch kernel and dilation lists need equal length >= 2");
  for (std::size_t i = 0; i < branch_kernels.size(); ++i) {
    require(branch_kernels[i] >= 1 && branch_kernels[i] % 2 == 1, Errc::invalid_config, "branch kernels must be odd");
    require(branch_dilations[i] >= 1, Errc::invalid_config, "branch dilations must be >= 1");
  }
  require(stem_filters >= 1, Errc::invalid_config, "stem_filters must be positive");
  require(is_power_of_two_multiple(max_filters, stem_filters), Errc::invalid_config,
          "max_filters must equal stem_filters * 2^m");
  require(conv_kernel >= 1 && conv_kernel % 2 == 1 && conv_stride >= 2, Errc::invalid_config,
          "stack convolutions need an odd kernel and stride >= 2");
  require(head_hidden >= 1, Errc::invalid_config, "head_hidden must be positive");
  require(leaky_slope >= 0.0 && leaky_slope < 1.0, Errc::invalid_config, "leaky_slope must lie in [0, 1)");
  require(min_length >= 1, Errc::invalid_config, "min_length must be positive");
  require(input_length > min_length, Errc::invalid_config, "input shorter than the stack's stopping length");
}

std::vector<StagePlan> plan_stages(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<StagePlan> plan;
  std::size_t length = cfg.input_length;
  std::size_t channels = cfg.input_channels;
  std::size_t filters = cfg.stem_filters;
  const nn::Conv1dOptions opts{cfg.conv_stride, 1, (cfg.conv_kernel - 1) / 2};
  while (length > cfg.min_length) {
    std::size_t next = 0;
    try {
      next = nn::conv1d_output_length(length, cfg.conv_kernel, opts);
    } catch (const Error& e) {
      fail(Errc::invalid_config, std::string("downsampling chain underflows: ") + e.what());
    }
    plan.push_back({channels, filters, length, next});
    channels = filters;
    length = next;
    if (filters < cfg.max_filters) filters *= 2;
  }
  require(!plan.empty(), Errc::invalid_config, "configuration yields no convolution stages");
  return plan;
}

RrModel::RrModel(const ModelConfig& cfg) : cfg_(cfg), plan_(plan_stages(cfg)) {
  std::mt19937_64 rng(cfg.init_seed);
  const std::size_t c_in = cfg.input_channels;
  const std::size_t width = cfg.stem_filters;

  for (std::size_t i = 0; i < cfg.branch_kernels.size(); ++i) {
    const std::size_t k = cfg.branch_kernels[i];
    const std::size_t d = cfg.branch_dilations[i];
    const std::string name = "inception.branch" + std::to_string(i);
    ConvBn br{Parameter(name + ".weight", Tensor({width, c_in, k})), Parameter(name + ".bias", Tensor({width})),
              nn::BatchNorm(name + ".bn", width), nn::Conv1dOptions{1, d, d * (k - 1) / 2}};
    init_uniform(br.w.value, he_bound(c_in * k, cfg.leaky_slope), rng);
    branches_.push_back(std::move(br));
  }
  const std::size_t concat = width * cfg.branch_kernels.size();
  proj_w_ = Parameter("inception.project.weight", Tensor({c_in, concat, 1}));
  proj_b_ = Parameter("inception.project.bias", Tensor({c_in}));
  init_uniform(proj_w_.value, std::sqrt(6.0 / static_cast<double>(concat + c_in)), rng);

  for (std::size_t s = 0; s < plan_.size(); ++s) {
    const auto& p = plan_[s];
    const std::string name = "stack" + std::to_string(s);
    ConvBn st{Parameter(name + ".weight", Tensor({p.out_channels, p.in_channels, cfg.conv_kernel})),
              Parameter(name + ".bias", Tensor({p.out_channels})), nn::BatchNorm(name + ".bn", p.out_channels),
              nn::Conv1dOptions{cfg.conv_stride, 1, (cfg.conv_kernel - 1) / 2}};
    init_uniform(st.w.value, he_bound(p.in_channels * cfg.conv_kernel, cfg.leaky_slope), rng);
    stages_.push_back(std::move(st));
  }

  const std::size_t features = plan_.back().out_channels;
  fc1_w_ = Parameter("head.dense0.weight", Tensor({cfg.head_hidden, features}));
  fc1_b_ = Parameter("head.dense0.bias", Tensor({cfg.head_hidden}));
  init_uniform(fc1_w_.value, he_bound(features, cfg.leaky_slope), rng);
  fc2_w_ = Parameter("head.dense1.weight", Tensor({1, cfg.head_hidden}));
  fc2_b_ = Parameter("head.dense1.bias", Tensor({1}));
  init_uniform(fc2_w_.value, std::sqrt(6.0 / static_cast<double>(cfg.head_hidden + 1)), rng);
}

nn::Var RrModel::forward(nn::Tape& tape, nn::Var input, nn::Mode mode) {
  const auto& x = tape.value(input);
  require(x.rank() == 3 && x.dim(1) == cfg_.input_channels && x.dim(2) == cfg_.input_length, Errc::invalid_shape,
          "model expects (batch, " + std::to_string(cfg_.input_channels) + ", " + std::to_string(cfg_.input_length) +
              ") input, got " + x.shape_string());
  const double slope = cfg_.leaky_slope;

  std::vector<nn::Var> outs;
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    auto& br = branches_[i];
    tape.set_label("inception.branch" + std::to_string(i));
    auto h = nn::conv1d(tape, input, br.w, &br.b, br.opts);
    h = nn::batch_norm(tape, h, br.bn, mode);
    outs.push_back(nn::leaky_relu(tape, h, slope));
  }
  tape.set_label("inception.project");
  auto h = nn::concat_channels(tape, outs);
  h = nn::conv1d(tape, h, proj_w_, &proj_b_, {});
  h = nn::add(tape, h, input);

  for (std::size_t s = 0; s < stages_.size(); ++s) {
    auto& st = stages_[s];
    tape.set_label("stack" + std::to_string(s));
    h = nn::conv1d(tape, h, st.w, &st.b, st.opts);
    h = nn::batch_norm(tape, h, st.bn, mode);
    h = nn::leaky_relu(tape, h, slope);
  }
  tape.set_label("head");
  h = nn::global_avg_pool(tape, h);
  h = nn::dense(tape, h, fc1_w_, &fc1_b_);
  h = nn::leaky_relu(tape, h, slope);
  return nn::dense(tape, h, fc2_w_, &fc2_b_);
}

std::vector<double> RrModel::predict(const nn::Tensor& batch) {
  nn::Tape tape;
  const auto out = forward(tape, tape.constant(batch), nn::Mode::eval);
  const auto& v = tape.value(out);
  return {v.values().begin(), v.values().end()};
}

std::vector<nn::Parameter*> RrModel::parameters() {
  std::vector<Parameter*> ps;
  const auto add_conv = [&](ConvBn& c) {
    for (Parameter* p : {&c.w, &c.b, &c.bn.gamma, &c.bn.beta, &c.bn.running_mean, &c.bn.running_var}) ps.push_back(p);
  };
  for (auto& br : branches_) add_conv(br);
  ps.push_back(&proj_w_);
  ps.push_back(&proj_b_);
  for (auto& st : stages_) add_conv(st);
  for (Parameter* p : {&fc1_w_, &fc1_b_, &fc2_w_, &fc2_b_}) ps.push_back(p);
  return ps;
}

std::vector<const nn::Parameter*> RrModel::parameters() const {
  auto ps = const_cast<RrModel*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

std::vector<nn::Parameter*> RrModel::trainable() {
  std::vector<Parameter*> out;
  for (Parameter* p : parameters()) {
    if (p->trainable) out.push_back(p);
  }
  return out;
}

std::vector<nn::Tensor> RrModel::snapshot() const {
  std::vector<Tensor> values;
  for (const Parameter* p : parameters()) values.push_back(p->value);
  return values;
}

void RrModel::restore(const std::vector<nn::Tensor>& values) {
  auto ps = parameters();
  require(values.size() == ps.size(), Errc::invalid_argument, "snapshot does not match the model");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    require(values[i].shape() == ps[i]->value.shape(), Errc::invalid_shape, "snapshot shape mismatch for " + ps[i]->name);
    ps[i]->value = values[i];
  }
}

RrModel build_model(const ModelConfig& cfg) { return RrModel(cfg); }

std::size_t count_params(const RrModel& model) {
  std::size_t n = 0;
  for (const Parameter* p : model.parameters()) {
    if (p->trainable) n += p->value.size();
  }
  return n;
}

std::size_t expected_param_count(const ModelConfig& cfg) {
  const auto plan = plan_stages(cfg);
  const std::size_t c_in = cfg.input_channels;
  const std::size_t w = cfg.stem_filters;
  std::size_t n = 0;
  for (const std::size_t k : cfg.branch_kernels) n += w * c_in * k + w + 2 * w;  // conv + bias + BN affine
  n += c_in * w * cfg.branch_kernels.size() + c_in;                            // 1x1 projection
  for (const auto& s : plan) n += s.out_channels * s.in_channels * cfg.conv_kernel + s.out_channels + 2 * s.out_channels;
  n += cfg.head_hidden * plan.back().out_channels + cfg.head_hidden;
  n += cfg.head_hidden + 1;
  return n;
}

namespace {

std::vector<double> encode_config(const ModelConfig& c) {
  std::vector<double> v{kConfigVersion,
                        static_cast<double>(c.input_length),
                        static_cast<double>(c.input_channels),
                        static_cast<double>(c.stem_filters),
                        static_cast<double>(c.max_filters),
                        static_cast<double>(c.conv_kernel),
                        static_cast<double>(c.conv_stride),
                        static_cast<double>(c.head_hidden),
                        c.leaky_slope,
                        static_cast<double>(c.min_length),
                        static_cast<double>(c.branch_kernels.size())};
  for (const auto k : c.branch_kernels) v.push_back(static_cast<double>(k));
  for (const auto d : c.branch_dilations) v.push_back(static_cast<double>(d));
  return v;
}

ModelConfig decode_config(const Tensor& t) {
  const auto& v = t.values();
  require(v.size() >= 11 && v[0] == kConfigVersion, Errc::invalid_argument, "unsupported model config record");
  const auto u = [](double x) { return static_cast<std::size_t>(x); };
  ModelConfig c;
  c.input_length = u(v[1]);
  c.input_channels = u(v[2]);
  c.stem_filters = u(v[3]);
  c.max_filters = u(v[4]);
  c.conv_kernel = u(v[5]);
  c.conv_stride = u(v[6]);
  c.head_hidden = u(v[7]);
  c.leaky_slope = v[8];
  c.min_length = u(v[9]);
  const std::size_t nb = u(v[10]);
  require(v.size() == 11 + 2 * nb, Errc::invalid_argument, "truncated model config record");
  c.branch_kernels.assign(nb, 0);
  c.branch_dilations.assign(nb, 0);
  for (std::size_t i = 0; i < nb; ++i) {
    c.branch_kernels[i] = u(v[11 + i]);
    c.branch_dilations[i] = u(v[11 + nb + i]);
  }
  return c;
}

}  // namespace

std::vector<nn::NamedTensor> to_tensors(const RrModel& model, std::uint64_t config_hash) {
  std::vector<nn::NamedTensor> out;
  auto cfg = encode_config(model.config());
  const std::size_t n = cfg.size();
  out.push_back({"meta.model_config", Tensor({n}, std::move(cfg))});
  std::vector<double> limbs(4);
  for (std::size_t i = 0; i < 4; ++i) limbs[i] = static_cast<double>((config_hash >> (16 * i)) & 0xFFFFu);
  out.push_back({"meta.config_hash", Tensor({4}, std::move(limbs))});
  for (const Parameter* p : model.parameters()) out.push_back({p->name, p->value});
  return out;
}

RrModel from_tensors(const std::vector<nn::NamedTensor>& tensors) {
  const nn::NamedTensor* cfg_rec = nullptr;
  for (const auto& t : tensors) {
    if (t.name == "meta.model_config") cfg_rec = &t;
  }
  require(cfg_rec != nullptr, Errc::invalid_argument, "model file lacks meta.model_config");
  RrModel model(decode_config(cfg_rec->tensor));
  for (Parameter* p : model.parameters()) {
    const nn::NamedTensor* rec = nullptr;
    for (const auto& t : tensors) {
      if (t.name == p->name) rec = &t;
    }
    require(rec != nullptr, Errc::invalid_argument, "model file lacks tensor " + p->name);
    require(rec->tensor.shape() == p->value.shape(), Errc::invalid_shape, "tensor " + p->name + " has the wrong shape");
    p->value = rec->tensor;
  }
  return model;
}

std::uint64_t config_hash_of(const std::vector<nn::NamedTensor>& tensors) {
  for (const auto& t : tensors) {
    if (t.name == "meta.config_hash" && t.tensor.size() == 4) {
      std::uint64_t h = 0;
      for (std::size_t i = 0; i < 4; ++i) h |= static_cast<std::uint64_t>(t.tensor[i]) << (16 * i);
      return h;
    }
  }
  return 0;
}

void save_model(const std::filesystem::path& path, const RrModel& model, std::uint64_t config_hash) {
  nn::save_rrf1(path, to_tensors(model, config_hash));
}

RrModel load_model(const std::filesystem::path& path) { return from_tensors(nn::load_rrf1(path)); }

}  // namespace rrforge::model
