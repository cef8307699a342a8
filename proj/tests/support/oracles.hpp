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

#ifndef DFLAB_TESTS_SUPPORT_ORACLES_HPP_
#define DFLAB_TESTS_SUPPORT_ORACLES_HPP_

// Independent reference implementations used only by tests. They are
// deliberately naive: brute force over pairs or thresholds, dense matrix
// math, closed-form enumeration.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dflab/model.hpp"
#include "dflab/synthgen.hpp"
#include "dflab/types.hpp"

namespace dflab::testing {

// AUC by counting every (positive, negative) pair; ties count 1/2.
double auc_by_pairs(std::span<const double> scores,
                    std::span<const std::uint8_t> labels);

// Average precision by sweeping every distinct score as a threshold
// (predict positive iff score >= threshold), from high to low, summing
// precision * recall increment.
double ap_by_sweep(std::span<const double> scores,
                   std::span<const std::uint8_t> labels);

// Central finite differences of f at x.
std::vector<double> numeric_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::vector<double> x, double h);

// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor)
double max_relative_error(std::span<const double> analytic,
                          std::span<const double> numeric,
                          double floor = 1e-6);

// Dense re-implementation of the MLP forward pass from the documented
// parameter layout (per layer: in x out weights, row-major by input unit,
// then out biases). Returns the logit; `pre` receives every hidden
// pre-activation.
double mlp_logit_oracle(const Architecture& arch, std::span<const double> params,
                        const FeatureVector& x,
                        std::vector<double>* pre = nullptr);

// Two-head network forward from the documented block layout.
struct BiHeadsOracle {
  double logit_ip;
  double logit_dp;
  std::vector<double> expert_pre;  // all experts' pre-activations
  double gate_in_sum;
  double gate_out_sum;
};
BiHeadsOracle bidefuse_oracle(const BiDefuseArchitecture& arch,
                              std::span<const double> params,
                              const FeatureVector& x);

// One possible ingestion of a click of a given context on the ES-DFM
// stream, with its probability per click.
struct EnumeratedIngestion {
  SampleKind kind;
  std::uint8_t v;
  double mass;  // per click; sums to 1 + f_dp
};

// IP (p_win), FN-at-ingest (f_dp), DP replay (f_dp), RN (p0).
std::vector<EnumeratedIngestion> enumerate_esdfm(const ContextRates& r);

// Stream-normalized observed-negative probability and DP share computed by
// summing the enumeration.
double enumerated_q_negative(const ContextRates& r);
double enumerated_dp_share(const ContextRates& r);

// Dense feature vector from values.
FeatureVector dense(std::span<const double> values);

}  // namespace dflab::testing

#endif  // DFLAB_TESTS_SUPPORT_ORACLES_HPP_
