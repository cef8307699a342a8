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

#include "dflab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dflab/error.hpp"

namespace dflab {
namespace {

constexpr double kConstraintTol = 1e-12;

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError(std::string(name) + " must be a probability, got " +
                      std::to_string(p));
  }
}

void check_weights(const ImportanceWeights& w) {
  for (double x : {w.w_ip, w.w_fn, w.w_rn, w.w_dp}) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw DomainError("importance weights must be finite and non-negative");
    }
  }
}

void check_z(double z) { check_probability(z, "z"); }

double clamp_denominator(double d) { return std::max(d, kProbEpsilon); }

}  // namespace

std::string_view to_string(LossKind loss) {
  switch (loss) {
    case LossKind::kIdeal:
      return "ideal";
    case LossKind::kVanilla:
      return "vanilla";
    case LossKind::kFnw:
      return "fnw";
    case LossKind::kFnc:
      return "fnc";
    case LossKind::kEsdfm:
      return "esdfm";
    case LossKind::kDefer:
      return "defer";
    case LossKind::kDefuse:
      return "defuse";
    case LossKind::kBiDefuse:
      return "bi-defuse";
    case LossKind::kFnwDefuse:
      return "fnw-defuse";
    case LossKind::kDeferDefuse:
      return "defer-defuse";
  }
  return "?";
}

LossKind parse_loss(std::string_view name) {
  for (auto l : {LossKind::kIdeal, LossKind::kVanilla, LossKind::kFnw,
                 LossKind::kFnc, LossKind::kEsdfm, LossKind::kDefer,
                 LossKind::kDefuse, LossKind::kBiDefuse, LossKind::kFnwDefuse,
                 LossKind::kDeferDefuse}) {
    if (to_string(l) == name) return l;
  }
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

bool compatible(LossKind loss, Mechanism mechanism) {
  switch (loss) {
    case LossKind::kIdeal:
      return mechanism == Mechanism::kOracle;
    case LossKind::kVanilla:
      return true;
    case LossKind::kFnw:
    case LossKind::kFnc:
    case LossKind::kFnwDefuse:
      return mechanism == Mechanism::kFnw;
    case LossKind::kEsdfm:
    case LossKind::kDefuse:
    case LossKind::kBiDefuse:
      return mechanism == Mechanism::kEsdfm ||
             mechanism == Mechanism::kVanillaWin;
    case LossKind::kDefer:
    case LossKind::kDeferDefuse:
      return mechanism == Mechanism::kDefer;
  }
  return false;
}

void check_compatible(LossKind loss, Mechanism mechanism) {
  if (!compatible(loss, mechanism)) {
    throw ConfigError("loss '" + std::string(to_string(loss)) +
                      "' is not defined on the '" +
                      std::string(to_string(mechanism)) + "' pipeline");
  }
}

bool uses_z(LossKind loss) {
  return loss == LossKind::kDefuse || loss == LossKind::kBiDefuse ||
         loss == LossKind::kFnwDefuse || loss == LossKind::kDeferDefuse;
}

bool uses_fdp(LossKind loss) {
  return loss == LossKind::kEsdfm || loss == LossKind::kDefer ||
         loss == LossKind::kDefuse || loss == LossKind::kBiDefuse;
}

std::string_view to_string(ZSource z) {
  switch (z) {
    case ZSource::kZ1:
      return "z1";
    case ZSource::kZ2:
      return "z2";
    case ZSource::kOracle:
      return "oracle";
  }
  return "?";
}

ZSource parse_z_source(std::string_view name) {
  for (auto z : {ZSource::kZ1, ZSource::kZ2, ZSource::kOracle}) {
    if (to_string(z) == name) return z;
  }
  throw ConfigError("unknown z source '" + std::string(name) + "'");
}

ImportanceWeights esdfm_weights(double f_dp) {
  check_probability(f_dp, "f_dp");
  const ImportanceWeights w{1.0 + f_dp, f_dp, 1.0 + f_dp, 1.0};
  check_weights(w);
  if (w.w_ip != w.w_rn ||
      std::abs(w.w_dp + w.w_fn - (1.0 + f_dp)) > kConstraintTol) {
    throw DomainError("ES-DFM weight constraints violated");
  }
  return w;
}

ImportanceWeights fnw_weights(double f_theta) {
  check_probability(f_theta, "f_theta");
  // No sample is ever immediate when w_o = 0; w_ip is unused.
  const ImportanceWeights w{0.0, f_theta, 1.0 + f_theta, 1.0};
  check_weights(w);
  if (std::abs(w.w_dp + w.w_fn - w.w_rn) > kConstraintTol) {
    throw DomainError("FNW weight constraints violated");
  }
  return w;
}

ImportanceWeights defer_weights() { return {2.0, 1.0, 2.0, 1.0}; }

Observation observe(const ObservedSample& sample) {
  validate(sample);
  const bool positive_kind = sample.kind == SampleKind::kImmediatePositive ||
                             sample.kind == SampleKind::kDelayedPositive;
  if (sample.label == 1 && !positive_kind) {
    throw InvalidSampleError("observed positive with a negative kind");
  }
  if (sample.kind == SampleKind::kDelayedPositive && sample.label != 1) {
    throw InvalidSampleError("delayed positive carries label 0");
  }
  return Observation{.v = sample.label,
                     .delayed_positive =
                         sample.kind == SampleKind::kDelayedPositive,
                     .replay = sample.replay};
}

double ideal_loss(int y, double p) { return loss_value(ideal_term(y), p); }

LossTerm ideal_term(int y) {
  if (y != 0 && y != 1) throw DomainError("label must be 0 or 1");
  return y == 1 ? LossTerm{1.0, 0.0} : LossTerm{0.0, 1.0};
}

double q_negative(Mechanism mechanism, double p0, double p1, double f_dp) {
  check_probability(p0, "p0");
  check_probability(p1, "p1");
  check_probability(f_dp, "f_dp");
  if (std::abs(p0 + p1 - 1.0) > 1e-12) {
    throw DomainError("p0 + p1 must equal 1");
  }
  if (f_dp > p1 + 1e-12) throw DomainError("f_dp cannot exceed p1");
  switch (mechanism) {
    case Mechanism::kOracle:
      return p0;
    case Mechanism::kVanilla:
      return p0 + f_dp;
    case Mechanism::kFnw:
      return 1.0 / (1.0 + p1);
    case Mechanism::kVanillaWin:
    case Mechanism::kEsdfm:
      return (p0 + f_dp) / (1.0 + f_dp);
    case Mechanism::kDefer:
      return p0 + 0.5 * f_dp;
  }
  return 0.0;
}

LossTerm baseline_term(Mechanism mechanism, int v, double f_theta,
                       double f_dp) {
  check_probability(f_theta, "f_theta");
  check_probability(f_dp, "f_dp");
  const double p1 = f_theta;
  const double p0 = 1.0 - f_theta;
  double pos_ratio = 1.0;
  double neg_ratio = 1.0;
  switch (mechanism) {
    case Mechanism::kFnw:
      // q(1|x) = p1 / (1 + p1), q(0|x) = 1 / (1 + p1)
      pos_ratio = 1.0 + p1;
      neg_ratio = p0 * (1.0 + p1);
      break;
    case Mechanism::kEsdfm:
    case Mechanism::kVanillaWin:
      // q(1|x) = p1 / (1 + f_dp), q(0|x) = (p0 + f_dp) / (1 + f_dp)
      pos_ratio = 1.0 + f_dp;
      neg_ratio = p0 * (1.0 + f_dp) / clamp_denominator(p0 + f_dp);
      break;
    case Mechanism::kDefer:
      // q(1|x) = p1 - f_dp / 2, q(0|x) = p0 + f_dp / 2
      pos_ratio = p1 / clamp_denominator(p1 - 0.5 * f_dp);
      neg_ratio = p0 / clamp_denominator(p0 + 0.5 * f_dp);
      break;
    default:
      throw ConfigError("no importance ratios for the '" +
                        std::string(to_string(mechanism)) + "' pipeline");
  }
  return v == 1 ? LossTerm{pos_ratio, 0.0} : LossTerm{0.0, neg_ratio};
}

double baseline_is_loss(Mechanism mechanism, int v, double f_theta,
                        double f_dp) {
  return loss_value(baseline_term(mechanism, v, f_theta, f_dp), f_theta);
}

double z_oracle(double p_fn_mass, double p0) {
  check_probability(p_fn_mass, "p_fn_mass");
  check_probability(p0, "p0");
  const double denom = p0 + p_fn_mass;
  if (denom <= 0.0) throw DomainError("z oracle with no negative mass");
  return p_fn_mass / denom;
}

double z1(double f_rn) {
  check_probability(f_rn, "f_rn");
  return 1.0 - f_rn;
}

double z2(double f_dp, double f_theta) {
  check_probability(f_dp, "f_dp");
  check_probability(f_theta, "f_theta");
  return std::clamp(f_dp / clamp_denominator(f_dp + 1.0 - f_theta), 0.0, 1.0);
}

LossTerm defuse_term(const Observation& obs, double z,
                     const ImportanceWeights& w) {
  check_z(z);
  check_weights(w);
  if (obs.replay) {
    throw InvalidSampleError("attribution replays do not occur on this stream");
  }
  if (obs.v == 1) {
    return {obs.delayed_positive ? w.w_dp : w.w_ip, 0.0};
  }
  return {z * w.w_fn, (1.0 - z) * w.w_rn};
}

double defuse_loss(const Observation& obs, double f_theta, double z,
                   const ImportanceWeights& w) {
  return loss_value(defuse_term(obs, z, w), f_theta);
}

LossTerm defuse_fnw_term(const Observation& obs, double f_theta, double z) {
  check_z(z);
  if (obs.v == 1 && !obs.delayed_positive) {
    throw InvalidSampleError("immediate positive on a zero-window stream");
  }
  return defuse_term(obs, z, fnw_weights(f_theta));
}

double defuse_fnw_loss(const Observation& obs, double f_theta, double z) {
  return loss_value(defuse_fnw_term(obs, f_theta, z), f_theta);
}

LossTerm defuse_defer_term(const Observation& obs, double z) {
  check_z(z);
  if (obs.replay) return {};
  return defuse_term(obs, z, defer_weights());
}

double defuse_defer_loss(const Observation& obs, double f_theta, double z) {
  return loss_value(defuse_defer_term(obs, z), f_theta);
}

BiDefuseTerms bidefuse_terms(const Observation& obs, double f_dp,
                             double z_prime) {
  check_probability(f_dp, "f_dp");
  check_z(z_prime);
  if (obs.replay) {
    throw InvalidSampleError("attribution replays do not occur on this stream");
  }
  if (obs.delayed_positive) return {{}, {1.0, 0.0}};
  return {ideal_term(obs.v), {z_prime * f_dp, (1.0 - z_prime) * (1.0 + f_dp)}};
}

BiDefuseLoss bidefuse_loss(const Observation& obs, double f_ip,
                           double f_dp_head, double f_dp, double z_prime) {
  const auto terms = bidefuse_terms(obs, f_dp, z_prime);
  return {loss_value(terms.ip, f_ip), loss_value(terms.dp, f_dp_head)};
}

double fnc_calibrate(double q) {
  check_probability(q, "q");
  return clamp_probability(q / clamp_denominator(1.0 - q));
}

}  // namespace dflab
