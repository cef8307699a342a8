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

#ifndef DFLAB_LOSSES_HPP_
#define DFLAB_LOSSES_HPP_

#include <string_view>

#include "dflab/model.hpp"
#include "dflab/pipelines.hpp"
#include "dflab/types.hpp"

namespace dflab {

enum class LossKind {
  kIdeal,        // cross-entropy on the attributed label (oracle stream)
  kVanilla,      // cross-entropy on the observed label
  kFnw,          // importance-weighted, FNW ratios
  kFnc,          // cross-entropy on the FNW stream, calibrated at serving
  kEsdfm,        // importance-weighted, ES-DFM ratios
  kDefer,        // importance-weighted, DEFER ratios
  kDefuse,       // label-corrected importance weighting, ES-DFM stream
  kBiDefuse,     // two-head in-window / out-window model
  kFnwDefuse,    // label-corrected weighting on the FNW stream
  kDeferDefuse,  // label-corrected weighting on the DEFER stream
};

std::string_view to_string(LossKind loss);
// CLI spellings: ideal, vanilla, fnw, fnc, esdfm, defer, defuse, bi-defuse,
// fnw-defuse, defer-defuse.
LossKind parse_loss(std::string_view name);

// Whether `loss` is defined on streams produced by `mechanism`.
bool compatible(LossKind loss, Mechanism mechanism);
// Throws ConfigError naming both when incompatible.
void check_compatible(LossKind loss, Mechanism mechanism);

bool uses_z(LossKind loss);
// Losses whose weights depend on the delayed-mass model f_dp.
bool uses_fdp(LossKind loss);

enum class ZSource { kZ1, kZ2, kOracle };

std::string_view to_string(ZSource z);
ZSource parse_z_source(std::string_view name);

struct ImportanceWeights {
  double w_ip = 1.0;
  double w_fn = 0.0;
  double w_rn = 1.0;
  double w_dp = 1.0;
};

// Constraint sets, checked on construction (DomainError on violation):
//   ES-DFM: w_ip = w_rn = 1 + f_dp, w_dp = 1, w_fn = f_dp
//   FNW:    w_rn = 1 + f_theta, w_dp = 1, w_fn = f_theta (no IP samples)
//   DEFER:  w_ip = w_rn = 2, w_dp = w_fn = 1
ImportanceWeights esdfm_weights(double f_dp);
ImportanceWeights fnw_weights(double f_theta);
ImportanceWeights defer_weights();

// What a learner may see of an ingested sample: the observed label, whether
// it is a delayed-positive replay (arrives at conversion time) and whether
// it is an attribution-complete replay. FN and RN are indistinguishable.
struct Observation {
  int v = 0;
  bool delayed_positive = false;
  bool replay = false;

  bool immediate_positive() const {
    return v == 1 && !delayed_positive && !replay;
  }
};

// Throws InvalidSampleError when kind and label disagree.
Observation observe(const ObservedSample& sample);

// -(y ln p + (1 - y) ln(1 - p)), p clamped.
double ideal_loss(int y, double p);
LossTerm ideal_term(int y);

// Observed-negative probability of a mechanism's stream, given the
// ground-truth p(y=0|x), p(y=1|x) and delayed mass f_dp. Throws DomainError
// for arguments outside [0, 1], p0 + p1 != 1, or f_dp > p1.
double q_negative(Mechanism mechanism, double p0, double p1, double f_dp);

// Importance-weighted cross-entropy with ratios p(y|x) / q(y|x) computed
// from the model's own (detached) p = f_theta and the delayed mass f_dp.
// Only FNW, ES-DFM and DEFER have such ratios; other mechanisms throw
// ConfigError.
LossTerm baseline_term(Mechanism mechanism, int v, double f_theta,
                       double f_dp);
double baseline_is_loss(Mechanism mechanism, int v, double f_theta,
                        double f_dp);

// Fake-negative probability among observed negatives.
double z_oracle(double p_fn_mass, double p0);
double z1(double f_rn);
double z2(double f_dp, double f_theta);

// Label-corrected importance weighting on the ES-DFM stream.
LossTerm defuse_term(const Observation& obs, double z,
                     const ImportanceWeights& w);
double defuse_loss(const Observation& obs, double f_theta, double z,
                   const ImportanceWeights& w);

// FNW stream: DP -> -ln f; v = 0 -> -(z f ln f + (1 - z)(1 + f) ln(1 - f))
// with the f inside the weights detached.
LossTerm defuse_fnw_term(const Observation& obs, double f_theta, double z);
double defuse_fnw_loss(const Observation& obs, double f_theta, double z);

// DEFER stream: IP -> -2 ln f; DP -> -ln f;
// v = 0 -> -(z ln f + 2 (1 - z) ln(1 - f)). Attribution replays carry no
// loss of their own: the doubled IP/RN weights already account for them.
LossTerm defuse_defer_term(const Observation& obs, double z);
double defuse_defer_loss(const Observation& obs, double f_theta, double z);

struct BiDefuseTerms {
  LossTerm ip;
  LossTerm dp;
};

// Two-head loss on the ES-DFM stream. The IP head sees each click once, at
// its first ingestion, with the in-window label. The DP head sees the same
// first ingestion as an out-window negative and the DP replay as an
// out-window positive, weighted as in the FNW stream with w'_dp = 1,
// w'_fn = f_dp, w'_rn = 1 + f_dp:
//   v_DP = 1: -ln F_DP
//   v_DP = 0: -(z' f_dp ln F_DP + (1 - z')(1 + f_dp) ln(1 - F_DP))
BiDefuseTerms bidefuse_terms(const Observation& obs, double f_dp,
                             double z_prime);
struct BiDefuseLoss {
  double ip = 0.0;
  double dp = 0.0;
};
BiDefuseLoss bidefuse_loss(const Observation& obs, double f_ip, double f_dp_head,
                           double f_dp, double z_prime);

// Serving-time calibration of a model trained with plain cross-entropy on
// the FNW stream: q / (1 - q), clamped to a probability.
double fnc_calibrate(double q);

}  // namespace dflab

#endif  // DFLAB_LOSSES_HPP_
