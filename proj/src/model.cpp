// SPDX-License-Identifier: Apache-2.0

#include "ogc/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace ogc {

MlpModel::MlpModel(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw std::invalid_argument("model needs at least input and output dims");
  for (std::size_t d : dims_) {
    if (d == 0) throw std::invalid_argument("layer width must be positive");
  }
  layers_.resize(dims_.size() - 1);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    layers_[l].weight.assign(dims_[l] * dims_[l + 1], 0.0);
    layers_[l].bias.assign(dims_[l + 1], 0.0);
  }
}

MlpModel MlpModel::zeros(std::vector<std::size_t> dims) { return MlpModel(std::move(dims)); }

MlpModel MlpModel::he_uniform(std::vector<std::size_t> dims, std::uint64_t seed) {
  MlpModel m(std::move(dims));
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < m.layers_.size(); ++l) {
    const double bound = std::sqrt(6.0 / static_cast<double>(m.dims_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& w : m.layers_[l].weight) w = u(rng);
  }
  return m;
}

std::size_t MlpModel::num_params() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

ParamGrads MlpModel::zero_grads() const {
  ParamGrads g(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    g[l].weight.assign(layers_[l].weight.size(), 0.0);
    g[l].bias.assign(layers_[l].bias.size(), 0.0);
  }
  return g;
}

std::span<const double> forward(const MlpModel& model, std::span<const double> features, ForwardCache& cache) {
  const auto& dims = model.dims();
  if (features.size() != dims.front()) throw std::invalid_argument("feature dimension mismatch");
  for (double v : features) {
    if (std::isnan(v)) throw std::domain_error("NaN in model input");
  }
  const std::size_t nl = model.num_layers();
  cache.acts.resize(nl + 1);
  cache.acts[0].assign(features.begin(), features.end());
  for (std::size_t l = 0; l < nl; ++l) {
    const auto& layer = model.layers()[l];
    const std::size_t in = dims[l];
    const std::size_t out = dims[l + 1];
    const std::vector<double>& x = cache.acts[l];
    std::vector<double>& y = cache.acts[l + 1];
    y.resize(out);
    const bool hidden = l + 1 < nl;
    for (std::size_t o = 0; o < out; ++o) {
      const double* w = layer.weight.data() + o * in;
      double s = layer.bias[o];
      for (std::size_t i = 0; i < in; ++i) s += w[i] * x[i];
      y[o] = hidden ? std::max(s, 0.0) : s;
    }
  }
  return cache.acts.back();
}

std::vector<double> forward(const MlpModel& model, std::span<const double> features) {
  ForwardCache cache;
  const auto logits = forward(model, features, cache);
  return {logits.begin(), logits.end()};
}

void backward(const MlpModel& model, const ForwardCache& cache, std::span<const double> grad_logits,
              ParamGrads& grads) {
  const auto& dims = model.dims();
  const std::size_t nl = model.num_layers();
  if (grad_logits.size() != dims.back()) throw std::invalid_argument("logit gradient size mismatch");
  if (cache.acts.size() != nl + 1) throw std::invalid_argument("forward cache does not match model");
  std::vector<double> delta(grad_logits.begin(), grad_logits.end());
  std::vector<double> prev;
  for (std::size_t l = nl; l-- > 0;) {
    const auto& layer = model.layers()[l];
    auto& g = grads[l];
    const std::size_t in = dims[l];
    const std::size_t out = dims[l + 1];
    const std::vector<double>& x = cache.acts[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      g.bias[o] += d;
      if (d == 0.0) continue;
      double* gw = g.weight.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) gw[i] += d * x[i];
    }
    if (l == 0) break;
    prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = layer.weight.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += w[i] * d;
    }
    // ReLU derivative; x is this layer's (post-ReLU) input.
    for (std::size_t i = 0; i < in; ++i) {
      if (x[i] <= 0.0) prev[i] = 0.0;
    }
    delta.swap(prev);
  }
}

ParamGrads backward(const MlpModel& model, std::span<const double> features, std::span<const double> grad_logits) {
  ForwardCache cache;
  forward(model, features, cache);
  ParamGrads g = model.zero_grads();
  backward(model, cache, grad_logits, g);
  return g;
}

double global_norm(const ParamGrads& grads) {
  double s = 0.0;
  for (const auto& l : grads) {
    for (double v : l.weight) s += v * v;
    for (double v : l.bias) s += v * v;
  }
  return std::sqrt(s);
}

OptimizerState OptimizerState::for_model(const MlpModel& model, double lr, double momentum, double weight_decay,
                                         double param_clip) {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (!(param_clip > 0.0)) throw std::invalid_argument("parameter clip must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be >= 0");
  OptimizerState s;
  s.momentum_buf = model.zero_grads();
  s.lr = lr;
  s.momentum = momentum;
  s.weight_decay = weight_decay;
  s.param_clip = param_clip;
  return s;
}

StepReport sgd_step(MlpModel& model, OptimizerState& opt, const ParamGrads& grads) {
  if (grads.size() != model.num_layers()) throw std::invalid_argument("gradient shape mismatch");
  StepReport rep;
  rep.grad_norm = global_norm(grads);
  if (!std::isfinite(rep.grad_norm)) throw NonFiniteGradientError("non-finite parameter gradient");
  double scale = 1.0;
  if (rep.grad_norm >= opt.param_clip && rep.grad_norm > 0.0) {
    scale = opt.param_clip / rep.grad_norm;
    rep.clipped = true;
  }
  auto update = [&](std::vector<double>& param, const std::vector<double>& grad, std::vector<double>& buf) {
    if (param.size() != grad.size()) throw std::invalid_argument("gradient shape mismatch");
    for (std::size_t i = 0; i < param.size(); ++i) {
      buf[i] = opt.momentum * buf[i] + scale * grad[i] + opt.weight_decay * param[i];
      param[i] -= opt.lr * buf[i];
    }
  };
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    update(model.layers()[l].weight, grads[l].weight, opt.momentum_buf[l].weight);
    update(model.layers()[l].bias, grads[l].bias, opt.momentum_buf[l].bias);
  }
  return rep;
}

double LrSchedule::at(int epoch) const {
  double lr = initial;
  for (int m : milestones) {
    if (epoch >= m) lr *= decay_factor;
  }
  return lr;
}

void LrSchedule::validate() const {
  if (!(initial > 0.0)) throw std::invalid_argument("initial learning rate must be positive");
  if (!(decay_factor > 0.0)) throw std::invalid_argument("decay factor must be positive");
  for (std::size_t i = 1; i < milestones.size(); ++i) {
    if (milestones[i] <= milestones[i - 1]) throw std::invalid_argument("milestones must be strictly increasing");
  }
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  put_u64(out, model.dims().size());
  for (std::size_t d : model.dims()) put_u64(out, d);
  for (const auto& l : model.layers()) {
    for (double v : l.weight) put_f64(out, v);
    for (double v : l.bias) put_f64(out, v);
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

MlpModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::uint64_t n = get_u64(in);
  if (n < 2 || n > 64) throw std::runtime_error("implausible layer count in checkpoint");
  std::vector<std::size_t> dims(n);
  for (auto& d : dims) d = get_u64(in);
  MlpModel m = MlpModel::zeros(dims);
  for (auto& l : m.layers()) {
    for (double& v : l.weight) v = get_f64(in);
    for (double& v : l.bias) v = get_f64(in);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes in checkpoint");
  return m;
}

}  // namespace ogc
