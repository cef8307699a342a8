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

#include "dflab/trainer.hpp"

#include <algorithm>
#include <string>

#include "dflab/error.hpp"
#include "dflab/labels.hpp"

namespace dflab {
namespace {

bool needs_fdp(const ArmOptions& o) {
  return uses_fdp(o.loss) || (uses_z(o.loss) && o.z == ZSource::kZ2) ||
         (o.loss == LossKind::kBiDefuse && o.z == ZSource::kZ1);
}

bool needs_frn(const ArmOptions& o) {
  return uses_z(o.loss) && o.loss != LossKind::kBiDefuse &&
         o.z == ZSource::kZ1;
}

}  // namespace

std::string_view to_string(FdpSource source) {
  return source == FdpSource::kOracle ? "oracle" : "learned";
}

FdpSource parse_fdp_source(std::string_view name) {
  if (name == "learned") return FdpSource::kLearned;
  if (name == "oracle") return FdpSource::kOracle;
  throw ConfigError("unknown f_dp source '" + std::string(name) + "'");
}

double fdp_from_classifier(double g) {
  const double c = std::min(g, 0.5);
  return c / (1.0 - c);
}

double frn_from_classifier(double r) {
  if (r <= 0.5) return 0.0;
  return std::clamp(2.0 - 1.0 / r, 0.0, 1.0);
}

TrainCounts& TrainCounts::operator+=(const TrainCounts& other) {
  n_train += other.n_train;
  n_dp_positive += other.n_dp_positive;
  n_fdp_train += other.n_fdp_train;
  n_rn_train += other.n_rn_train;
  n_rn_excluded += other.n_rn_excluded;
  return *this;
}

bool has_aux_models(Mechanism mechanism) {
  return mechanism == Mechanism::kVanillaWin ||
         mechanism == Mechanism::kEsdfm || mechanism == Mechanism::kFnw ||
         mechanism == Mechanism::kDefer;
}

ArmTrainer::ArmTrainer(ArmOptions options, ArmModels models, TruthFn truth)
    : options_(options), models_(std::move(models)), truth_(std::move(truth)) {
  check_compatible(options_.loss, options_.mechanism);
  if (options_.batch == 0) throw ConfigError("batch size must be positive");
  const bool bi = options_.loss == LossKind::kBiDefuse;
  if (bi && !models_.bidefuse) {
    throw ConfigError("bi-defuse needs a two-head model");
  }
  if (!bi && !models_.theta) throw ConfigError("arm needs a predictor");
  if (options_.fdp == FdpSource::kOracle && !truth_ && needs_fdp(options_)) {
    throw ConfigError("oracle f_dp needs ground truth (synthetic data only)");
  }
  if (has_aux_models(options_.mechanism)) {
    if (!models_.fdp || !models_.frn) {
      throw ConfigError("pipeline co-trains f_dp and f_rn; models missing");
    }
  } else if ((needs_fdp(options_) && options_.fdp == FdpSource::kLearned) ||
             needs_frn(options_)) {
    throw ConfigError("loss needs auxiliary models the pipeline cannot train");
  }

  if (bi) {
    theta_opt_.emplace(models_.bidefuse->size(), options_.optimizer,
                       models_.bidefuse->decay_mask());
  } else {
    theta_opt_.emplace(models_.theta->size(), options_.optimizer,
                       models_.theta->decay_mask());
  }
  if (models_.fdp) {
    fdp_opt_.emplace(models_.fdp->size(), options_.optimizer,
                     models_.fdp->decay_mask());
  }
  if (models_.frn) {
    frn_opt_.emplace(models_.frn->size(), options_.optimizer,
                     models_.frn->decay_mask());
  }
}

ContextRates ArmTrainer::truth_of(const FeatureVector& x) const {
  if (!truth_) throw ConfigError("ground truth is not available");
  return truth_(x);
}

double ArmTrainer::theta_forward(const FeatureVector& x) const {
  if (models_.bidefuse) return models_.bidefuse->forward(x).cvr();
  return models_.theta->forward(x);
}

double ArmTrainer::aux_fdp(const FeatureVector& x) const {
  if (!models_.fdp) throw ConfigError("no f_dp model on this pipeline");
  return fdp_from_classifier(models_.fdp->forward(x));
}

double ArmTrainer::aux_frn(const FeatureVector& x) const {
  if (!models_.frn) throw ConfigError("no f_rn model on this pipeline");
  return frn_from_classifier(models_.frn->forward(x));
}

double ArmTrainer::fdp_estimate(const FeatureVector& x) const {
  if (options_.fdp == FdpSource::kOracle) return truth_of(x).f_dp;
  return aux_fdp(x);
}

double ArmTrainer::z_estimate(const ObservedSample& sample) const {
  if (sample.label == 1) return 0.0;
  switch (options_.z) {
    case ZSource::kOracle:
      if (truth_) {
        const auto r = truth_of(sample.features);
        return z_oracle(r.f_dp, r.p0());
      }
      return sample.kind == SampleKind::kFakeNegative ? 1.0 : 0.0;
    case ZSource::kZ1:
      return z1(aux_frn(sample.features));
    case ZSource::kZ2:
      return z2(fdp_estimate(sample.features),
                theta_forward(sample.features));
  }
  return 0.0;
}

LossTerm ArmTrainer::theta_term(const ObservedSample& sample) const {
  const Observation obs = observe(sample);
  const auto& x = sample.features;
  switch (options_.loss) {
    case LossKind::kIdeal:
      return ideal_term(attributed_label(sample.kind));
    case LossKind::kVanilla:
    case LossKind::kFnc:
      return ideal_term(obs.v);
    case LossKind::kFnw:
      return baseline_term(options_.mechanism, obs.v, theta_forward(x), 0.0);
    case LossKind::kEsdfm:
    case LossKind::kDefer:
      return baseline_term(options_.mechanism, obs.v, theta_forward(x),
                           fdp_estimate(x));
    case LossKind::kDefuse:
      return defuse_term(obs, z_estimate(sample),
                         esdfm_weights(fdp_estimate(x)));
    case LossKind::kFnwDefuse:
      return defuse_fnw_term(obs, theta_forward(x), z_estimate(sample));
    case LossKind::kDeferDefuse:
      return defuse_defer_term(obs, z_estimate(sample));
    case LossKind::kBiDefuse:
      throw ConfigError("two-head loss has no single f_theta term");
  }
  return {};
}

BiDefuseTerms ArmTrainer::bidefuse_terms_for(
    const ObservedSample& sample) const {
  const Observation obs = observe(sample);
  const auto& x = sample.features;
  const double f_dp = fdp_estimate(x);
  double z_prime = 0.0;
  if (!obs.delayed_positive) {
    switch (options_.z) {
      case ZSource::kOracle:
        if (truth_) {
          z_prime = truth_of(x).f_dp;
        } else {
          z_prime = sample.kind == SampleKind::kFakeNegative ? 1.0 : 0.0;
        }
        break;
      case ZSource::kZ1:
        z_prime = f_dp;
        break;
      case ZSource::kZ2:
        z_prime = z2(f_dp, models_.bidefuse->forward(x).dp);
        break;
    }
  }
  return bidefuse_terms(obs, f_dp, std::clamp(z_prime, 0.0, 1.0));
}

TrainCounts ArmTrainer::train(std::span<const ObservedSample> samples) {
  TrainCounts counts;
  const bool bi = options_.loss == LossKind::kBiDefuse;
  const bool aux = has_aux_models(options_.mechanism);
  std::vector<BatchItem> theta_items, fdp_items, frn_items;
  std::vector<BiBatchItem> bi_items;

  for (std::size_t start = 0; start < samples.size();
       start += options_.batch) {
    const auto batch = samples.subspan(
        start, std::min(options_.batch, samples.size() - start));
    theta_items.clear();
    fdp_items.clear();
    frn_items.clear();
    bi_items.clear();

    // All coefficients are computed before any model moves.
    for (const auto& s : batch) {
      if (bi) {
        const auto t = bidefuse_terms_for(s);
        bi_items.push_back({&s.features, t.ip, t.dp, s.click_id});
      } else {
        theta_items.push_back({&s.features, theta_term(s), s.click_id});
      }
      ++counts.n_train;
      if (!aux || s.replay) continue;
      const bool dp = s.kind == SampleKind::kDelayedPositive;
      fdp_items.push_back({&s.features, ideal_term(dp ? 1 : 0), s.click_id});
      ++counts.n_fdp_train;
      if (dp) ++counts.n_dp_positive;
      if (s.label == 1 && !dp) {
        ++counts.n_rn_excluded;
      } else {
        frn_items.push_back(
            {&s.features, ideal_term(dp ? 0 : 1), s.click_id});
        ++counts.n_rn_train;
      }
    }

    if (bi) {
      gradient(*models_.bidefuse, bi_items, grad_);
      theta_opt_->step(models_.bidefuse->params(), grad_);
    } else {
      gradient(*models_.theta, theta_items, grad_);
      theta_opt_->step(models_.theta->params(), grad_);
    }
    if (!fdp_items.empty()) {
      gradient(*models_.fdp, fdp_items, grad_);
      fdp_opt_->step(models_.fdp->params(), grad_);
    }
    if (!frn_items.empty()) {
      gradient(*models_.frn, frn_items, grad_);
      frn_opt_->step(models_.frn->params(), grad_);
    }
  }
  return counts;
}

void ArmTrainer::set_learning_rate(double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  options_.optimizer.learning_rate = lr;
  for (auto* opt : {&theta_opt_, &fdp_opt_, &frn_opt_}) {
    if (*opt) (*opt)->set_learning_rate(lr);
  }
}

PredictionBundle ArmTrainer::predict(const FeatureVector& x) const {
  PredictionBundle b;
  if (models_.bidefuse) {
    const auto heads = models_.bidefuse->forward(x);
    b.f_ip = heads.ip;
    b.f_dp_head = heads.dp;
  }
  b.f_theta = serve(x);
  if (models_.fdp) b.f_dp = aux_fdp(x);
  if (models_.frn) b.f_rn = aux_frn(x);
  b.p_win = std::max(b.f_theta - b.f_dp, 0.0);
  return b;
}

double ArmTrainer::serve(const FeatureVector& x) const {
  const double f = theta_forward(x);
  if (options_.loss == LossKind::kFnc) return fnc_calibrate(f);
  return f;
}

void fit(Predictor& model, Adam& optimizer, std::span<const BatchItem> items,
         std::size_t batch) {
  if (batch == 0) throw ConfigError("batch size must be positive");
  std::vector<double> grad;
  for (std::size_t start = 0; start < items.size(); start += batch) {
    gradient(model, items.subspan(start, std::min(batch, items.size() - start)),
             grad);
    optimizer.step(model.params(), grad);
  }
}

void fit(BiDefuseNet& model, Adam& optimizer,
         std::span<const BiBatchItem> items, std::size_t batch) {
  if (batch == 0) throw ConfigError("batch size must be positive");
  std::vector<double> grad;
  for (std::size_t start = 0; start < items.size(); start += batch) {
    gradient(model, items.subspan(start, std::min(batch, items.size() - start)),
             grad);
    optimizer.step(model.params(), grad);
  }
}

}  // namespace dflab
