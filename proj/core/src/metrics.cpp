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

#include "dflab/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "dflab/error.hpp"
#include "dflab/model.hpp"

namespace dflab {
namespace {

void check_lengths(std::span<const double> scores,
                   std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw DomainError("scores and labels differ in length");
  }
}

// Indices sorted by descending score.
std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

}  // namespace

std::optional<double> auc(std::span<const double> scores,
                          std::span<const std::uint8_t> labels) {
  check_lengths(scores, labels);
  const auto order = descending(scores);
  // Walk tie groups from the top; each positive beats every negative below
  // its group and ties half of those inside it.
  double wins = 0.0;
  double negatives_above = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t pos = 0, neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? pos : neg) += 1;
      ++j;
    }
    // Positives in this group lose to negatives_above and tie with neg.
    wins -= static_cast<double>(pos) * negatives_above;
    wins -= 0.5 * static_cast<double>(pos) * static_cast<double>(neg);
    negatives_above += static_cast<double>(neg);
    n_pos += pos;
    n_neg += neg;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double pairs = static_cast<double>(n_pos) * static_cast<double>(n_neg);
  return (pairs + wins) / pairs;
}

std::optional<double> pr_auc(std::span<const double> scores,
                             std::span<const std::uint8_t> labels) {
  check_lengths(scores, labels);
  const double n_pos = static_cast<double>(
      std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
  if (n_pos == 0.0) return std::nullopt;
  const auto order = descending(scores);
  double ap = 0.0;
  double tp = 0.0;
  double seen = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double group_tp = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      group_tp += labels[order[j]] ? 1.0 : 0.0;
      ++j;
    }
    tp += group_tp;
    seen += static_cast<double>(j - i);
    ap += (tp / seen) * (group_tp / n_pos);
    i = j;
  }
  return ap;
}

double nll(std::span<const double> scores,
           std::span<const std::uint8_t> labels) {
  check_lengths(scores, labels);
  if (scores.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    total += loss_value(labels[i] ? LossTerm{1.0, 0.0} : LossTerm{0.0, 1.0},
                        scores[i]);
  }
  return total / static_cast<double>(scores.size());
}

std::optional<double> relative_improvement(double m, double m_pretrained,
                                           double m_oracle,
                                           bool higher_is_better) {
  double num = m - m_pretrained;
  double den = m_oracle - m_pretrained;
  if (!higher_is_better) {
    num = -num;
    den = -den;
  }
  if (den == 0.0) return std::nullopt;
  // + 0.0 turns a negative zero into a plain zero in reports.
  return num / den * 100.0 + 0.0;
}

MetricsReport evaluate(std::span<const double> scores,
                       std::span<const std::uint8_t> labels) {
  MetricsReport r;
  r.auc = auc(scores, labels);
  r.pr_auc = pr_auc(scores, labels);
  r.nll = nll(scores, labels);
  r.n_samples = scores.size();
  return r;
}

MetricsReport weighted_aggregate(std::span<const MetricsReport> reports) {
  double auc_sum = 0.0, auc_w = 0.0;
  double pr_sum = 0.0, pr_w = 0.0;
  double nll_sum = 0.0, nll_w = 0.0;
  MetricsReport out;
  for (const auto& r : reports) {
    const double w = static_cast<double>(r.n_samples);
    out.n_samples += r.n_samples;
    if (r.auc) {
      auc_sum += w * *r.auc;
      auc_w += w;
    }
    if (r.pr_auc) {
      pr_sum += w * *r.pr_auc;
      pr_w += w;
    }
    nll_sum += w * r.nll;
    nll_w += w;
  }
  if (auc_w > 0.0) out.auc = auc_sum / auc_w;
  if (pr_w > 0.0) out.pr_auc = pr_sum / pr_w;
  out.nll = nll_w > 0.0 ? nll_sum / nll_w : 0.0;
  return out;
}

}  // namespace dflab
