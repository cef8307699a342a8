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

#ifndef DFLAB_SYNTHGEN_HPP_
#define DFLAB_SYNTHGEN_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "dflab/ingest.hpp"
#include "dflab/random.hpp"
#include "dflab/types.hpp"

namespace dflab {

struct DelayComponent {
  double rate;    // per second
  double weight;  // mixture weight
};

// Mixture of exponentials: F(t) = sum_k pi_k (1 - exp(-lambda_k t)).
class DelayLaw {
 public:
  // Throws ConfigError unless rates > 0 and weights are a distribution.
  explicit DelayLaw(std::vector<DelayComponent> components);

  static DelayLaw exponential(double rate);

  // Least-squares fit to the Criteo cumulative delay profile
  // (42% within 30 min, 61% within a day, 81% within a week).
  static DelayLaw criteo();

  // Rates are scaled by `rate_multiplier`. Throws DomainError for t < 0.
  double cdf(double t, double rate_multiplier = 1.0) const;
  double sample(Rng& rng, double rate_multiplier = 1.0) const;

  const std::vector<DelayComponent>& components() const { return components_; }

 private:
  std::vector<DelayComponent> components_;
};

// K one-hot contexts, drawn uniformly; feature k has value 1.
struct OneHotContexts {
  std::size_t k = 8;
};
// n iid standard-normal features.
struct DenseContexts {
  std::size_t n = 8;
};
using ContextSpec = std::variant<OneHotContexts, DenseContexts>;

struct GroundTruthModel {
  std::vector<double> theta_star;
  DelayLaw delay_law = DelayLaw::criteo();
  ContextSpec contexts = OneHotContexts{};
  // Per one-hot context delay-rate multipliers; empty means delay is
  // independent of x.
  std::vector<double> rate_multipliers;

  std::size_t feature_dim() const;
  double rate_multiplier(const FeatureVector& x) const;
  // Throws ConfigError if shapes are inconsistent.
  void validate() const;
};

// Index of the active one-hot context. Throws DomainError otherwise.
std::size_t context_of(const FeatureVector& x);

FeatureVector one_hot(std::size_t k);

GroundTruthModel make_one_hot_model(std::span<const double> cvrs,
                                    DelayLaw delay_law,
                                    std::vector<double> rate_multipliers = {});

// K = 8 contexts with the Criteo delay law. Plain: CVRs evenly spread over
// [0.05, 0.5], delay independent of x. Coupled: delay rates alternate
// between x10 and x0.1, attributed CVRs (24 h window) are evenly spread over
// [0.04, 0.40], and the in-window ranking of neighbouring contexts is
// reversed.
GroundTruthModel desk_model(bool coupled_delay = false);

// Dense-n model with theta* drawn from N(0, 0.5^2 / n) under `seed`.
GroundTruthModel dense_model(std::size_t n, std::uint64_t seed);

double true_cvr(const GroundTruthModel& model, const FeatureVector& x);
double delay_cdf(const GroundTruthModel& model, double t);

// Ground-truth rates of one context under integer-second delays, after
// canonicalizing delays >= w_a to "never converts":
//   p1    = P(y = 1 | x)
//   p_win = P(y = 1, d <= w_o | x)
//   f_dp  = P(y = 1, d >  w_o | x)
struct ContextRates {
  double p1 = 0.0;
  double p_win = 0.0;
  double f_dp = 0.0;

  double p0() const { return 1.0 - p1; }
};

ContextRates attributed_rates(const GroundTruthModel& model,
                              const FeatureVector& x,
                              const WindowConfig& windows);

struct GenConfig {
  std::size_t n_clicks = 0;
  std::uint64_t seed = 0;
  double clicks_per_hour = 2.0e4;
  GroundTruthModel model;
  WindowConfig windows{1800, 86400};
};

struct GenerationStats {
  std::size_t raw_conversions = 0;  // before canonicalization
  std::size_t censored = 0;         // conversions with delay >= w_a
};

// Click i is stamped at floor(i * 3600 / clicks_per_hour). Every click
// consumes the same number of draws, so output is a pure function of the
// config and seed.
std::vector<ClickEvent> generate(const GenConfig& config,
                                 GenerationStats* stats = nullptr);

// Log layout used when persisting synthetic streams: one categorical
// "ctx<k>" column for one-hot contexts, n numeric columns for dense.
LogSchema synthetic_log_schema(const GroundTruthModel& model);
RawRecord to_raw_record(const ClickEvent& click, const GroundTruthModel& model);

}  // namespace dflab

#endif  // DFLAB_SYNTHGEN_HPP_
