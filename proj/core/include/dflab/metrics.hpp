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

#ifndef DFLAB_METRICS_HPP_
#define DFLAB_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

namespace dflab {

// Undefined metrics (single-class AUC, PR-AUC without positives, a zero RI
// denominator) are std::nullopt.

// Mann-Whitney rank-sum AUC, tied scores count 1/2.
std::optional<double> auc(std::span<const double> scores,
                          std::span<const std::uint8_t> labels);

// Average precision with tied scores pooled into one threshold step:
// sum over distinct thresholds of precision * recall increment.
std::optional<double> pr_auc(std::span<const double> scores,
                             std::span<const std::uint8_t> labels);

// Mean cross-entropy with scores clamped to [eps, 1 - eps].
double nll(std::span<const double> scores,
           std::span<const std::uint8_t> labels);

// (m - pre) / (oracle - pre) * 100. For lower-is-better metrics both
// differences are negated, which leaves the ratio unchanged.
std::optional<double> relative_improvement(double m, double m_pretrained,
                                           double m_oracle,
                                           bool higher_is_better = true);

struct MetricsReport {
  std::optional<double> auc;
  std::optional<double> pr_auc;
  double nll = 0.0;
  std::size_t n_samples = 0;
  std::optional<double> ri_auc;
  std::optional<double> ri_pr_auc;
  std::optional<double> ri_nll;
};

MetricsReport evaluate(std::span<const double> scores,
                       std::span<const std::uint8_t> labels);

// Sample-count-weighted mean of each defined metric; undefined entries drop
// out together with their weight.
MetricsReport weighted_aggregate(std::span<const MetricsReport> reports);

}  // namespace dflab

#endif  // DFLAB_METRICS_HPP_
