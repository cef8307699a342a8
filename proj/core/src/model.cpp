// Copyright 2026 The dflab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dflab/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dflab/error.hpp"
#include "dflab/random.hpp"

namespace dflab {
namespace {

double leaky(double z, double slope) { return z > 0.0 ? z : slope * z; }
double leaky_grad(double z, double slope) { return z > 0.0 ? 1.0 : slope; }

void check_index(const Feature& f, std::size_t input_dim) {
  if (f.index >= input_dim) {
    throw ConfigError("feature index " + std::to_string(f.index) +
                      " outside input dimension " + std::to_string(input_dim));
  }
}

void check_logit(double s) {
  if (!std::isfinite(s)) throw NumericFault("non-finite model output", 0);
}

}  // namespace

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double clamp_probability(double p) {
  return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
}

double loss_value(const LossTerm& term, double f) {
  const double p = clamp_probability(f);
  double loss = 0.0;
  if (term.pos != 0.0) loss -= term.pos * std::log(p);
  if (term.neg != 0.0) loss -= term.neg * std::log1p(-p);
  return loss;
}

double logit_gradient(const LossTerm& term, double f) {
  return (term.pos + term.neg) * f - term.pos;
}

// ---------------------------------------------------------------------------
// Predictor

Predictor::Predictor(Architecture architecture)
    : architecture_(std::move(architecture)) {
  if (architecture_.input_dim == 0) {
    throw ConfigError("predictor input dimension must be positive");
  }
  std::size_t offset = 0;
  std::size_t in = architecture_.input_dim;
  const std::size_t n_layers = architecture_.hidden.size() + 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t out =
        l < architecture_.hidden.size() ? architecture_.hidden[l] : 1;
    if (out == 0) throw ConfigError("hidden layer width must be positive");
    layers_.push_back({in, out, offset, offset + in * out});
    offset += in * out + out;
    in = out;
  }
  params_.assign(offset, 0.0);
}

Predictor Predictor::random(Architecture architecture, std::uint64_t seed,
                            double init_scale) {
  Predictor model(std::move(architecture));
  Rng rng(seed);
  for (std::size_t l = 0; l < model.layers_.size(); ++l) {
    const auto& layer = model.layers_[l];
    const double scale =
        l == 0 ? init_scale
               : std::sqrt(2.0 / static_cast<double>(layer.in));
    for (std::size_t i = 0; i < layer.in * layer.out; ++i) {
      model.params_[layer.weight_offset + i] = scale * rng.normal();
    }
  }
  return model;
}

std::vector<std::uint8_t> Predictor::decay_mask() const {
  std::vector<std::uint8_t> mask(params_.size(), 0);
  for (const auto& layer : layers_) {
    std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(layer.weight_offset),
                layer.in * layer.out, 1);
  }
  return mask;
}

void Predictor::forward_layers(const FeatureVector& x,
                               std::vector<std::vector<double>>& pre,
                               std::vector<std::vector<double>>& act) const {
  const double slope = architecture_.leaky_slope;
  pre.resize(layers_.size());
  act.resize(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    auto& z = pre[l];
    z.assign(params_.begin() + static_cast<std::ptrdiff_t>(layer.bias_offset),
             params_.begin() +
                 static_cast<std::ptrdiff_t>(layer.bias_offset + layer.out));
    const double* w = params_.data() + layer.weight_offset;
    if (l == 0) {
      for (const auto& f : x) {
        check_index(f, layer.in);
        const double* row = w + static_cast<std::size_t>(f.index) * layer.out;
        for (std::size_t o = 0; o < layer.out; ++o) z[o] += f.value * row[o];
      }
    } else {
      const auto& input = act[l - 1];
      for (std::size_t i = 0; i < layer.in; ++i) {
        const double* row = w + i * layer.out;
        for (std::size_t o = 0; o < layer.out; ++o) z[o] += input[i] * row[o];
      }
    }
    auto& a = act[l];
    a.resize(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) a[o] = leaky(z[o], slope);
  }
}

double Predictor::logit(const FeatureVector& x) const {
  if (layers_.size() == 1) {
    const auto& layer = layers_[0];
    double s = params_[layer.bias_offset];
    for (const auto& f : x) {
      check_index(f, layer.in);
      s += f.value * params_[layer.weight_offset + f.index];
    }
    check_logit(s);
    return s;
  }
  std::vector<std::vector<double>> pre, act;
  forward_layers(x, pre, act);
  const double s = pre.back()[0];
  check_logit(s);
  return s;
}

double Predictor::forward(const FeatureVector& x) const {
  return clamp_probability(sigmoid(logit(x)));
}

double Predictor::backward(const FeatureVector& x, const LossTerm& term,
                           std::span<double> grad) const {
  if (grad.size() != params_.size()) {
    throw ConfigError("gradient buffer does not match parameter count");
  }
  if (layers_.size() == 1) {
    const double s = logit(x);
    const double f = sigmoid(s);
    const double delta = logit_gradient(term, f);
    const auto& layer = layers_[0];
    grad[layer.bias_offset] += delta;
    for (const auto& f_i : x) {
      grad[layer.weight_offset + f_i.index] += f_i.value * delta;
    }
    return loss_value(term, f);
  }

  std::vector<std::vector<double>> pre, act;
  forward_layers(x, pre, act);
  const double s = pre.back()[0];
  check_logit(s);
  const double f = sigmoid(s);
  const double slope = architecture_.leaky_slope;

  std::vector<double> delta{logit_gradient(term, f)};
  std::vector<double> delta_prev;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const double* w = params_.data() + layer.weight_offset;
    for (std::size_t o = 0; o < layer.out; ++o) {
      grad[layer.bias_offset + o] += delta[o];
    }
    if (l == 0) {
      for (const auto& f_i : x) {
        const std::size_t row = layer.weight_offset +
                                static_cast<std::size_t>(f_i.index) * layer.out;
        for (std::size_t o = 0; o < layer.out; ++o) {
          grad[row + o] += f_i.value * delta[o];
        }
      }
      break;
    }
    const auto& input = act[l - 1];
    const auto& input_pre = pre[l - 1];
    delta_prev.assign(layer.in, 0.0);
    for (std::size_t i = 0; i < layer.in; ++i) {
      const std::size_t row = layer.weight_offset + i * layer.out;
      double back = 0.0;
      for (std::size_t o = 0; o < layer.out; ++o) {
        grad[row + o] += input[i] * delta[o];
        back += w[i * layer.out + o] * delta[o];
      }
      delta_prev[i] = back * leaky_grad(input_pre[i], slope);
    }
    delta.swap(delta_prev);
  }
  return loss_value(term, f);
}

// ---------------------------------------------------------------------------
// BiDefuseNet

double HeadOutputs::cvr() const { return clamp_probability(ip + dp); }

BiDefuseNet::BiDefuseNet(BiDefuseArchitecture architecture)
    : architecture_(architecture) {
  if (architecture_.input_dim == 0 || architecture_.expert_units == 0) {
    throw ConfigError("bi-defuse network needs positive dimensions");
  }
  params_.assign(offset(Block::kHeadDpB) + 1, 0.0);
}

std::size_t BiDefuseNet::block_size(Block b) const {
  const std::size_t d = architecture_.input_dim;
  const std::size_t h = architecture_.expert_units;
  switch (b) {
    case Block::kExpertInW:
    case Block::kExpertSharedW:
    case Block::kExpertOutW:
      return d * h;
    case Block::kExpertInB:
    case Block::kExpertSharedB:
    case Block::kExpertOutB:
    case Block::kHeadIpW:
    case Block::kHeadDpW:
      return h;
    case Block::kGateInW:
    case Block::kGateOutW:
      return d * 2;
    case Block::kGateInB:
    case Block::kGateOutB:
      return 2;
    case Block::kHeadIpB:
    case Block::kHeadDpB:
      return 1;
  }
  return 0;
}

std::size_t BiDefuseNet::offset(Block b) const {
  std::size_t total = 0;
  for (int i = 0; i < static_cast<int>(b); ++i) {
    total += block_size(static_cast<Block>(i));
  }
  return total;
}

std::span<double> BiDefuseNet::block(Block b) {
  return std::span<double>(params_).subspan(offset(b), block_size(b));
}

BiDefuseNet BiDefuseNet::random(BiDefuseArchitecture architecture,
                                std::uint64_t seed, double init_scale) {
  BiDefuseNet net(architecture);
  Rng rng(seed);
  const double head_scale =
      1.0 / std::sqrt(static_cast<double>(architecture.expert_units));
  for (auto b : {Block::kExpertInW, Block::kExpertSharedW, Block::kExpertOutW,
                 Block::kGateInW, Block::kGateOutW}) {
    for (double& w : net.block(b)) w = init_scale * rng.normal();
  }
  for (auto b : {Block::kHeadIpW, Block::kHeadDpW}) {
    for (double& w : net.block(b)) w = head_scale * rng.normal();
  }
  return net;
}

std::vector<std::uint8_t> BiDefuseNet::decay_mask() const {
  std::vector<std::uint8_t> mask(params_.size(), 0);
  for (auto b : {Block::kExpertInW, Block::kExpertSharedW, Block::kExpertOutW,
                 Block::kGateInW, Block::kGateOutW, Block::kHeadIpW,
                 Block::kHeadDpW}) {
    std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(offset(b)),
                block_size(b), 1);
  }
  return mask;
}

BiDefuseTrace BiDefuseNet::trace(const FeatureVector& x) const {
  const std::size_t d = architecture_.input_dim;
  const std::size_t h = architecture_.expert_units;
  const double slope = architecture_.leaky_slope;
  const double* p = params_.data();

  auto expert = [&](Block w_block, Block b_block) {
    std::vector<double> z(p + offset(b_block), p + offset(b_block) + h);
    const double* w = p + offset(w_block);
    for (const auto& f : x) {
      check_index(f, d);
      const double* row = w + static_cast<std::size_t>(f.index) * h;
      for (std::size_t u = 0; u < h; ++u) z[u] += f.value * row[u];
    }
    for (double& v : z) v = leaky(v, slope);
    return z;
  };
  auto gate = [&](Block w_block, Block b_block) {
    std::array<double, 2> u{p[offset(b_block)], p[offset(b_block) + 1]};
    const double* w = p + offset(w_block);
    for (const auto& f : x) {
      u[0] += f.value * w[f.index * 2];
      u[1] += f.value * w[f.index * 2 + 1];
    }
    const double m = std::max(u[0], u[1]);
    const double e0 = std::exp(u[0] - m);
    const double e1 = std::exp(u[1] - m);
    return std::array<double, 2>{e0 / (e0 + e1), e1 / (e0 + e1)};
  };

  BiDefuseTrace t;
  t.expert_in = expert(Block::kExpertInW, Block::kExpertInB);
  t.expert_shared = expert(Block::kExpertSharedW, Block::kExpertSharedB);
  t.expert_out = expert(Block::kExpertOutW, Block::kExpertOutB);
  t.gate_in = gate(Block::kGateInW, Block::kGateInB);
  t.gate_out = gate(Block::kGateOutW, Block::kGateOutB);
  t.rep_in.resize(h);
  t.rep_out.resize(h);
  for (std::size_t u = 0; u < h; ++u) {
    t.rep_in[u] =
        t.gate_in[0] * t.expert_in[u] + t.gate_in[1] * t.expert_shared[u];
    t.rep_out[u] =
        t.gate_out[0] * t.expert_out[u] + t.gate_out[1] * t.expert_shared[u];
  }
  t.logit_ip = p[offset(Block::kHeadIpB)];
  t.logit_dp = p[offset(Block::kHeadDpB)];
  const double* a_ip = p + offset(Block::kHeadIpW);
  const double* a_dp = p + offset(Block::kHeadDpW);
  for (std::size_t u = 0; u < h; ++u) {
    t.logit_ip += a_ip[u] * t.rep_in[u];
    t.logit_dp += a_dp[u] * t.rep_out[u];
  }
  check_logit(t.logit_ip);
  check_logit(t.logit_dp);
  return t;
}

HeadOutputs BiDefuseNet::forward(const FeatureVector& x) const {
  const auto t = trace(x);
  return {clamp_probability(sigmoid(t.logit_ip)),
          clamp_probability(sigmoid(t.logit_dp))};
}

double BiDefuseNet::backward(const FeatureVector& x, const LossTerm& ip_term,
                             const LossTerm& dp_term,
                             std::span<double> grad) const {
  if (grad.size() != params_.size()) {
    throw ConfigError("gradient buffer does not match parameter count");
  }
  const std::size_t h = architecture_.expert_units;
  const double slope = architecture_.leaky_slope;
  const double* p = params_.data();
  const auto t = trace(x);
  const double f_ip = sigmoid(t.logit_ip);
  const double f_dp = sigmoid(t.logit_dp);
  const double d_ip = logit_gradient(ip_term, f_ip);
  const double d_dp = logit_gradient(dp_term, f_dp);

  // Heads.
  grad[offset(Block::kHeadIpB)] += d_ip;
  grad[offset(Block::kHeadDpB)] += d_dp;
  const double* a_ip = p + offset(Block::kHeadIpW);
  const double* a_dp = p + offset(Block::kHeadDpW);
  std::vector<double> d_rep_in(h), d_rep_out(h);
  for (std::size_t u = 0; u < h; ++u) {
    grad[offset(Block::kHeadIpW) + u] += d_ip * t.rep_in[u];
    grad[offset(Block::kHeadDpW) + u] += d_dp * t.rep_out[u];
    d_rep_in[u] = d_ip * a_ip[u];
    d_rep_out[u] = d_dp * a_dp[u];
  }

  // Mixtures.
  std::array<double, 2> d_gate_in{}, d_gate_out{};
  std::vector<double> d_in(h), d_shared(h), d_out(h);
  for (std::size_t u = 0; u < h; ++u) {
    d_gate_in[0] += d_rep_in[u] * t.expert_in[u];
    d_gate_in[1] += d_rep_in[u] * t.expert_shared[u];
    d_gate_out[0] += d_rep_out[u] * t.expert_out[u];
    d_gate_out[1] += d_rep_out[u] * t.expert_shared[u];
    d_in[u] = t.gate_in[0] * d_rep_in[u];
    d_out[u] = t.gate_out[0] * d_rep_out[u];
    d_shared[u] = t.gate_in[1] * d_rep_in[u] + t.gate_out[1] * d_rep_out[u];
  }

  // Softmax gates: du_j = g_j * (dg_j - sum_k g_k dg_k).
  auto gate_backward = [&](const std::array<double, 2>& g,
                           const std::array<double, 2>& dg, Block w_block,
                           Block b_block) {
    const double dot = g[0] * dg[0] + g[1] * dg[1];
    const double du0 = g[0] * (dg[0] - dot);
    const double du1 = g[1] * (dg[1] - dot);
    grad[offset(b_block)] += du0;
    grad[offset(b_block) + 1] += du1;
    const std::size_t w = offset(w_block);
    for (const auto& f : x) {
      grad[w + f.index * 2] += f.value * du0;
      grad[w + f.index * 2 + 1] += f.value * du1;
    }
  };
  gate_backward(t.gate_in, d_gate_in, Block::kGateInW, Block::kGateInB);
  gate_backward(t.gate_out, d_gate_out, Block::kGateOutW, Block::kGateOutB);

  // Experts: recover pre-activations from the activations' sign.
  auto expert_backward = [&](const std::vector<double>& act,
                             const std::vector<double>& d_act, Block w_block,
                             Block b_block) {
    const std::size_t w = offset(w_block);
    const std::size_t b = offset(b_block);
    for (std::size_t u = 0; u < h; ++u) {
      const double dz = d_act[u] * leaky_grad(act[u], slope);
      grad[b + u] += dz;
      for (const auto& f : x) {
        grad[w + static_cast<std::size_t>(f.index) * h + u] += f.value * dz;
      }
    }
  };
  expert_backward(t.expert_in, d_in, Block::kExpertInW, Block::kExpertInB);
  expert_backward(t.expert_shared, d_shared, Block::kExpertSharedW,
                  Block::kExpertSharedB);
  expert_backward(t.expert_out, d_out, Block::kExpertOutW, Block::kExpertOutB);

  return loss_value(ip_term, f_ip) + loss_value(dp_term, f_dp);
}

// ---------------------------------------------------------------------------
// Batch gradients

double gradient(const Predictor& model, std::span<const BatchItem> batch,
                std::vector<double>& grad) {
  if (batch.empty()) throw ConfigError("gradient of an empty batch");
  grad.assign(model.size(), 0.0);
  double total = 0.0;
  for (const auto& item : batch) {
    double loss = 0.0;
    try {
      loss = model.backward(*item.features, item.term, grad);
    } catch (const NumericFault& e) {
      throw NumericFault(e.what(), item.sample_id);
    }
    if (!std::isfinite(loss)) {
      throw NumericFault("non-finite loss", item.sample_id);
    }
    total += loss;
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad) g *= scale;
  return total * scale;
}

double gradient(const BiDefuseNet& model, std::span<const BiBatchItem> batch,
                std::vector<double>& grad) {
  if (batch.empty()) throw ConfigError("gradient of an empty batch");
  grad.assign(model.size(), 0.0);
  double total = 0.0;
  for (const auto& item : batch) {
    double loss = 0.0;
    try {
      loss = model.backward(*item.features, item.ip, item.dp, grad);
    } catch (const NumericFault& e) {
      throw NumericFault(e.what(), item.sample_id);
    }
    if (!std::isfinite(loss)) {
      throw NumericFault("non-finite loss", item.sample_id);
    }
    total += loss;
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad) g *= scale;
  return total * scale;
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(std::size_t n_params, AdamOptions options,
           std::vector<std::uint8_t> decay_mask)
    : options_(options),
      decay_mask_(std::move(decay_mask)),
      m_(n_params, 0.0),
      v_(n_params, 0.0) {
  if (!decay_mask_.empty() && decay_mask_.size() != n_params) {
    throw ConfigError("decay mask does not match parameter count");
  }
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw ConfigError("Adam step shape mismatch");
  }
  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = options_.learning_rate;
  const double wd = options_.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
    double update = (m_[i] / c1) / (std::sqrt(v_[i] / c2) + options_.epsilon);
    if (wd != 0.0 && (decay_mask_.empty() || decay_mask_[i] != 0)) {
      update += wd * params[i];
    }
    params[i] -= lr * update;
  }
}

}  // namespace dflab
