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

#include "dflab/synthgen.hpp"

#include <cmath>
#include <string>

#include "dflab/error.hpp"

namespace dflab {

DelayLaw::DelayLaw(std::vector<DelayComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ConfigError("delay law has no components");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.rate > 0.0) || !std::isfinite(c.rate)) {
      throw ConfigError("delay rates must be positive and finite");
    }
    if (!(c.weight >= 0.0)) throw ConfigError("negative mixture weight");
    total += c.weight;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    throw ConfigError("mixture weights must sum to 1");
  }
}

DelayLaw DelayLaw::exponential(double rate) {
  return DelayLaw({{rate, 1.0}});
}

DelayLaw DelayLaw::criteo() {
  // Mean delays: 13.6 min, 13.3 days, 205.8 days.
  return DelayLaw({{0.001224687841473882, 0.46603548978291937},
                   {2.093749494713578e-05, 0.11801418585205478},
                   {1.349494621835817e-06, 0.41595032436502588}});
}

double DelayLaw::cdf(double t, double rate_multiplier) const {
  if (t < 0.0) throw DomainError("delay_cdf requires t >= 0");
  double f = 0.0;
  for (const auto& c : components_) {
    f += c.weight * -std::expm1(-c.rate * rate_multiplier * t);
  }
  return f;
}

double DelayLaw::sample(Rng& rng, double rate_multiplier) const {
  const double u = rng.uniform();
  const double e = rng.exponential(1.0);
  double acc = 0.0;
  std::size_t chosen = components_.size() - 1;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    acc += components_[k].weight;
    if (u < acc) {
      chosen = k;
      break;
    }
  }
  return e / (components_[chosen].rate * rate_multiplier);
}

std::size_t GroundTruthModel::feature_dim() const {
  if (const auto* oh = std::get_if<OneHotContexts>(&contexts)) return oh->k;
  return std::get<DenseContexts>(contexts).n;
}

double GroundTruthModel::rate_multiplier(const FeatureVector& x) const {
  if (rate_multipliers.empty()) return 1.0;
  return rate_multipliers.at(context_of(x));
}

void GroundTruthModel::validate() const {
  if (theta_star.size() != feature_dim()) {
    throw ConfigError("theta_star dimension does not match the context spec");
  }
  if (!rate_multipliers.empty()) {
    if (!std::holds_alternative<OneHotContexts>(contexts) ||
        rate_multipliers.size() != feature_dim()) {
      throw ConfigError("rate multipliers need one entry per one-hot context");
    }
    for (double m : rate_multipliers) {
      if (!(m > 0.0)) throw ConfigError("rate multipliers must be positive");
    }
  }
}

std::size_t context_of(const FeatureVector& x) {
  if (x.size() != 1 || x[0].value != 1.0) {
    throw DomainError("feature vector is not a one-hot context");
  }
  return x[0].index;
}

FeatureVector one_hot(std::size_t k) {
  return {{static_cast<std::uint32_t>(k), 1.0}};
}

GroundTruthModel make_one_hot_model(std::span<const double> cvrs,
                                    DelayLaw delay_law,
                                    std::vector<double> rate_multipliers) {
  GroundTruthModel model{.theta_star = {},
                         .delay_law = std::move(delay_law),
                         .contexts = OneHotContexts{cvrs.size()},
                         .rate_multipliers = std::move(rate_multipliers)};
  for (double p : cvrs) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("context CVR must be in (0,1)");
    model.theta_star.push_back(std::log(p / (1.0 - p)));
  }
  model.validate();
  return model;
}

GroundTruthModel desk_model(bool coupled_delay) {
  constexpr std::size_t kContexts = 8;
  std::vector<double> cvrs;
  std::vector<double> multipliers;
  if (!coupled_delay) {
    for (std::size_t k = 0; k < kContexts; ++k) {
      cvrs.push_back(0.05 + 0.45 * static_cast<double>(k) / (kContexts - 1));
    }
    return make_one_hot_model(cvrs, DelayLaw::criteo());
  }
  // Alternating fast and slow converters. Base CVRs are chosen so that the
  // attributed CVRs under a 24 h window are evenly spaced over [0.04, 0.40]
  // while the in-window mass of every slow context falls below that of its
  // faster, lower-CVR neighbour.
  const DelayLaw law = DelayLaw::criteo();
  const double horizon = 24.0 * 3600.0 - 1.0;
  for (std::size_t k = 0; k < kContexts; ++k) {
    const double m = k % 2 == 0 ? 10.0 : 0.1;
    const double target =
        0.04 + 0.36 * static_cast<double>(k) / (kContexts - 1);
    multipliers.push_back(m);
    cvrs.push_back(target / law.cdf(horizon, m));
  }
  return make_one_hot_model(cvrs, law, std::move(multipliers));
}

GroundTruthModel dense_model(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("dense model needs n > 0");
  Rng rng(seed);
  GroundTruthModel model{.theta_star = {},
                         .delay_law = DelayLaw::criteo(),
                         .contexts = DenseContexts{n},
                         .rate_multipliers = {}};
  const double scale = 0.5 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    model.theta_star.push_back(scale * rng.normal());
  }
  return model;
}

double true_cvr(const GroundTruthModel& model, const FeatureVector& x) {
  double s = 0.0;
  for (const auto& f : x) {
    if (f.index >= model.theta_star.size()) {
      throw ConfigError("feature index outside the ground-truth model");
    }
    s += model.theta_star[f.index] * f.value;
  }
  return 1.0 / (1.0 + std::exp(-s));
}

double delay_cdf(const GroundTruthModel& model, double t) {
  return model.delay_law.cdf(t);
}

ContextRates attributed_rates(const GroundTruthModel& model,
                              const FeatureVector& x,
                              const WindowConfig& windows) {
  // Stored delays are ceil(D): ceil(D) <= w_o iff D <= w_o, and
  // ceil(D) < w_a iff D <= w_a - 1.
  const double cvr = true_cvr(model, x);
  const double m = model.rate_multiplier(x);
  ContextRates rates;
  rates.p_win =
      cvr * model.delay_law.cdf(static_cast<double>(windows.observation()), m);
  rates.p1 = cvr * model.delay_law.cdf(
                       static_cast<double>(windows.attribution() - 1), m);
  rates.f_dp = rates.p1 - rates.p_win;
  return rates;
}

std::vector<ClickEvent> generate(const GenConfig& config,
                                 GenerationStats* stats) {
  config.model.validate();
  if (!(config.clicks_per_hour > 0.0)) {
    throw ConfigError("clicks_per_hour must be positive");
  }
  Rng rng(config.seed);
  GenerationStats local;
  std::vector<ClickEvent> clicks;
  clicks.reserve(config.n_clicks);
  const double spacing = static_cast<double>(kSecondsPerHour) /
                         config.clicks_per_hour;
  for (std::size_t i = 0; i < config.n_clicks; ++i) {
    ClickEvent click;
    click.click_id = i;
    click.click_time =
        static_cast<Seconds>(std::floor(static_cast<double>(i) * spacing));
    if (const auto* oh = std::get_if<OneHotContexts>(&config.model.contexts)) {
      click.features = one_hot(static_cast<std::size_t>(rng.below(oh->k)));
    } else {
      const std::size_t n = std::get<DenseContexts>(config.model.contexts).n;
      click.features.reserve(n);
      for (std::size_t j = 0; j < n; ++j) {
        click.features.push_back({static_cast<std::uint32_t>(j), rng.normal()});
      }
    }
    const double u_convert = rng.uniform();
    const double delay = config.model.delay_law.sample(
        rng, config.model.rate_multiplier(click.features));
    if (u_convert < true_cvr(config.model, click.features)) {
      ++local.raw_conversions;
      const auto d = static_cast<Seconds>(std::ceil(delay));
      if (d >= config.windows.attribution()) {
        ++local.censored;
      } else {
        click.conversion_delay = d;
      }
    }
    clicks.push_back(std::move(click));
  }
  if (stats != nullptr) *stats = local;
  return clicks;
}

LogSchema synthetic_log_schema(const GroundTruthModel& model) {
  LogSchema schema;
  if (std::holds_alternative<OneHotContexts>(model.contexts)) {
    schema.n_numeric = 0;
    schema.n_categorical = 1;
  } else {
    schema.n_numeric = model.feature_dim();
    schema.n_categorical = 0;
  }
  return schema;
}

RawRecord to_raw_record(const ClickEvent& click,
                        const GroundTruthModel& model) {
  RawRecord record;
  record.click_ts = click.click_time;
  record.conv_ts = click.conversion_time();
  if (std::holds_alternative<OneHotContexts>(model.contexts)) {
    record.categorical.push_back("ctx" +
                                 std::to_string(context_of(click.features)));
  } else {
    record.numeric.assign(model.feature_dim(), std::nullopt);
    for (const auto& f : click.features) record.numeric.at(f.index) = f.value;
  }
  return record;
}

}  // namespace dflab
