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

#ifndef DFLAB_MODEL_HPP_
#define DFLAB_MODEL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dflab/types.hpp"

namespace dflab {

// Probability clamp applied wherever a log is taken.
inline constexpr double kProbEpsilon = 1e-7;

double sigmoid(double s);
double clamp_probability(double p);

// Every loss in the library is, per sample and per output head, of the form
//   L = -(pos * ln f + neg * ln(1 - f))
// with non-negative coefficients that are constants w.r.t. the parameters
// (importance weights and z are detached). The gradient w.r.t. the head's
// logit is then (pos + neg) * f - pos.
struct LossTerm {
  double pos = 0.0;
  double neg = 0.0;

  bool empty() const { return pos == 0.0 && neg == 0.0; }
};

double loss_value(const LossTerm& term, double f);
double logit_gradient(const LossTerm& term, double f);

// Multi-layer perceptron over a sparse input with leaky-rectifier hidden
// layers and a sigmoid output. No hidden layers is logistic regression.
struct Architecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  double leaky_slope = 0.01;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

class Predictor {
 public:
  // All-zero parameters.
  explicit Predictor(Architecture architecture);

  // Gaussian weights (std `init_scale` on the sparse input layer,
  // sqrt(2 / fan_in) deeper), zero biases.
  static Predictor random(Architecture architecture, std::uint64_t seed,
                          double init_scale = 0.1);

  const Architecture& architecture() const { return architecture_; }
  std::size_t size() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // 1 for weights, 0 for biases.
  std::vector<std::uint8_t> decay_mask() const;

  // Throws NumericFault on a non-finite logit and ConfigError on an
  // out-of-range feature index.
  double logit(const FeatureVector& x) const;
  // sigmoid(logit) clamped to [eps, 1 - eps].
  double forward(const FeatureVector& x) const;

  // Adds d loss / d params into `grad` and returns the loss.
  double backward(const FeatureVector& x, const LossTerm& term,
                  std::span<double> grad) const;

 private:
  struct Layer {
    std::size_t in;
    std::size_t out;
    std::size_t weight_offset;  // in x out, row-major by input unit
    std::size_t bias_offset;
  };

  void forward_layers(const FeatureVector& x,
                      std::vector<std::vector<double>>& pre,
                      std::vector<std::vector<double>>& act) const;

  Architecture architecture_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

// Two-head multi-expert network: in-window, shared and out-window
// single-layer experts; an in-gate mixes (in-window, shared) into the IP
// head and an out-gate mixes (out-window, shared) into the DP head.
struct BiDefuseArchitecture {
  std::size_t input_dim = 0;
  std::size_t expert_units = 8;
  double leaky_slope = 0.01;

  friend bool operator==(const BiDefuseArchitecture&,
                         const BiDefuseArchitecture&) = default;
};

struct HeadOutputs {
  double ip = 0.0;  // F_IP(x), clamped
  double dp = 0.0;  // F_DP(x), clamped

  // F_IP + F_DP clamped to [eps, 1 - eps].
  double cvr() const;
};

struct BiDefuseTrace {
  double logit_ip = 0.0;
  double logit_dp = 0.0;
  std::array<double, 2> gate_in{};   // weights on (in-window, shared)
  std::array<double, 2> gate_out{};  // weights on (out-window, shared)
  std::vector<double> expert_in, expert_shared, expert_out;
  std::vector<double> rep_in, rep_out;  // head inputs
};

class BiDefuseNet {
 public:
  explicit BiDefuseNet(BiDefuseArchitecture architecture);
  static BiDefuseNet random(BiDefuseArchitecture architecture,
                            std::uint64_t seed, double init_scale = 0.1);

  const BiDefuseArchitecture& architecture() const { return architecture_; }
  std::size_t size() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::vector<std::uint8_t> decay_mask() const;

  BiDefuseTrace trace(const FeatureVector& x) const;
  HeadOutputs forward(const FeatureVector& x) const;

  double backward(const FeatureVector& x, const LossTerm& ip_term,
                  const LossTerm& dp_term, std::span<double> grad) const;

  // Parameter blocks, exposed for tests that pin gates or experts.
  enum class Block {
    kExpertInW, kExpertInB, kExpertSharedW, kExpertSharedB,
    kExpertOutW, kExpertOutB, kGateInW, kGateInB, kGateOutW, kGateOutB,
    kHeadIpW, kHeadIpB, kHeadDpW, kHeadDpB,
  };
  std::span<double> block(Block b);

 private:
  std::size_t offset(Block b) const;
  std::size_t block_size(Block b) const;

  BiDefuseArchitecture architecture_;
  std::vector<double> params_;
};

struct BatchItem {
  const FeatureVector* features = nullptr;
  LossTerm term;
  std::uint64_t sample_id = 0;
};

struct BiBatchItem {
  const FeatureVector* features = nullptr;
  LossTerm ip;
  LossTerm dp;
  std::uint64_t sample_id = 0;
};

// Mean loss over the batch; `grad` is resized and overwritten with the mean
// gradient. Reduction order is the batch order. Throws NumericFault naming
// the offending sample when a loss is not finite.
double gradient(const Predictor& model, std::span<const BatchItem> batch,
                std::vector<double>& grad);
double gradient(const BiDefuseNet& model, std::span<const BiBatchItem> batch,
                std::vector<double>& grad);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Decoupled weight decay, applied where the decay mask is set.
  double weight_decay = 0.0;
};

class Adam {
 public:
  Adam(std::size_t n_params, AdamOptions options,
       std::vector<std::uint8_t> decay_mask = {});

  void step(std::span<double> params, std::span<const double> grad);

  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  const AdamOptions& options() const { return options_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  std::uint64_t steps() const { return t_; }

 private:
  AdamOptions options_;
  std::vector<std::uint8_t> decay_mask_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

}  // namespace dflab

#endif  // DFLAB_MODEL_HPP_
