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

#ifndef DFLAB_TRAINER_HPP_
#define DFLAB_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>

#include "dflab/losses.hpp"
#include "dflab/model.hpp"
#include "dflab/pipelines.hpp"
#include "dflab/synthgen.hpp"
#include "dflab/types.hpp"

namespace dflab {

// Where the delayed-mass estimate f_dp(x) comes from.
enum class FdpSource { kLearned, kOracle };

std::string_view to_string(FdpSource source);
FdpSource parse_fdp_source(std::string_view name);

// Ground-truth rates of a context under the stream's effective windows.
// Only synthetic runs can provide one.
using TruthFn = std::function<ContextRates(const FeatureVector&)>;

struct ArmOptions {
  LossKind loss = LossKind::kDefuse;
  Mechanism mechanism = Mechanism::kEsdfm;
  ZSource z = ZSource::kZ1;
  FdpSource fdp = FdpSource::kLearned;
  AdamOptions optimizer{.learning_rate = 1e-3, .weight_decay = 1e-4};
  std::size_t batch = 256;
};

// Every estimate the arm can report for one x.
struct PredictionBundle {
  double f_theta = 0.0;    // served CVR
  double f_dp = 0.0;       // delayed-conversion mass
  double f_rn = 0.0;       // P(real negative | observed negative)
  double f_ip = 0.0;       // in-window head (two-head model only)
  double f_dp_head = 0.0;  // out-window head (two-head model only)
  double p_win = 0.0;      // f_theta - f_dp, floored at 0
};

// Auxiliary classifiers are trained on stream-level targets and mapped back:
//   f_dp classifier target: DP ingestion -> 1, any other -> 0, so
//     g -> f_dp / (1 + f_dp) and f_dp = g / (1 - g);
//   f_rn classifier target: observed negative -> 1, DP -> 0, IP excluded, so
//     r -> (p0 + f_dp) / (p0 + 2 f_dp) and f_rn = 2 - 1 / r.
double fdp_from_classifier(double g);
double frn_from_classifier(double r);

// Per-slice bookkeeping of what each model was trained on.
struct TrainCounts {
  std::size_t n_train = 0;          // ingestions seen by f_theta
  std::size_t n_dp_positive = 0;    // DP ingestions (f_dp positives)
  std::size_t n_fdp_train = 0;      // f_dp training set
  std::size_t n_rn_train = 0;       // f_rn training set
  std::size_t n_rn_excluded = 0;    // observed immediate positives skipped

  TrainCounts& operator+=(const TrainCounts& other);
};

// Initial parameters for an arm.
struct ArmModels {
  std::optional<Predictor> theta;
  std::optional<BiDefuseNet> bidefuse;
  std::optional<Predictor> fdp;
  std::optional<Predictor> frn;
};

// Whether the mechanism's stream carries delayed replays, i.e. whether the
// auxiliary models are co-trained.
bool has_aux_models(Mechanism mechanism);

// One streaming learner: f_theta (or the two-head model) plus the co-trained
// auxiliaries, each with its own Adam state. Single writer.
class ArmTrainer {
 public:
  // Throws ConfigError for incompatible loss/pipeline pairs, missing models,
  // or an oracle source without `truth` where one is required.
  ArmTrainer(ArmOptions options, ArmModels models, TruthFn truth = {});

  const ArmOptions& options() const { return options_; }
  const ArmModels& models() const { return models_; }

  // Loss coefficients of one sample under the current (detached) models.
  LossTerm theta_term(const ObservedSample& sample) const;
  BiDefuseTerms bidefuse_terms_for(const ObservedSample& sample) const;

  // Estimates used inside the losses.
  double fdp_estimate(const FeatureVector& x) const;
  double z_estimate(const ObservedSample& sample) const;

  // Consecutive minibatches in the given order; one Adam step per model per
  // batch.
  TrainCounts train(std::span<const ObservedSample> samples);

  // Applies to f_theta and the auxiliaries alike.
  void set_learning_rate(double lr);

  PredictionBundle predict(const FeatureVector& x) const;
  double serve(const FeatureVector& x) const;

 private:
  double theta_forward(const FeatureVector& x) const;
  double aux_fdp(const FeatureVector& x) const;
  double aux_frn(const FeatureVector& x) const;
  ContextRates truth_of(const FeatureVector& x) const;

  ArmOptions options_;
  ArmModels models_;
  TruthFn truth_;
  std::optional<Adam> theta_opt_;
  std::optional<Adam> fdp_opt_;
  std::optional<Adam> frn_opt_;
  std::vector<double> grad_;
};

// Plain minibatch fitting used for pretraining. Items are visited in order.
void fit(Predictor& model, Adam& optimizer, std::span<const BatchItem> items,
         std::size_t batch);
void fit(BiDefuseNet& model, Adam& optimizer,
         std::span<const BiBatchItem> items, std::size_t batch);

}  // namespace dflab

#endif  // DFLAB_TRAINER_HPP_
