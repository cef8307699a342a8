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

#include "dflab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <iterator>
#include <numeric>

#include "dflab/error.hpp"
#include "dflab/labels.hpp"
#include "dflab/random.hpp"

namespace dflab {
namespace {

// Seed tags for the independent random streams of one experiment.
constexpr std::uint64_t kTagGenerate = 1;
constexpr std::uint64_t kTagShuffle = 2;
constexpr std::uint64_t kTagTheta = 3;
constexpr std::uint64_t kTagFdp = 4;
constexpr std::uint64_t kTagFrn = 5;
constexpr std::uint64_t kTagDense = 6;

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  return order;
}

template <typename Item>
std::vector<Item> reorder(const std::vector<Item>& items,
                          const std::vector<std::size_t>& order) {
  std::vector<Item> out;
  out.reserve(items.size());
  for (auto i : order) out.push_back(items[i]);
  return out;
}

AdamOptions adam_options(const ExperimentConfig& c) {
  return AdamOptions{.learning_rate = c.lr, .weight_decay = c.l2};
}

}  // namespace

void ExperimentConfig::validate() const {
  schema.validate();
  if (!(pretrain_fraction > 0.0 && pretrain_fraction < 1.0)) {
    throw ConfigError("pretrain fraction must lie in (0, 1)");
  }
  if (hours < 2) throw ConfigError("need at least 2 hours (one train/test pair)");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
  if (batch == 0) throw ConfigError("batch size must be positive");
  if (!(clicks_per_hour > 0.0)) {
    throw ConfigError("clicks per hour must be positive");
  }
  if (synthetic != "desk" && synthetic != "desk-coupled" &&
      synthetic != "dense") {
    throw ConfigError("unknown synthetic model '" + synthetic + "'");
  }
  if (dense_features == 0) throw ConfigError("dense model needs features");
  if (expert_units == 0) throw ConfigError("expert units must be positive");
  for (auto h : hidden) {
    if (h == 0) throw ConfigError("hidden layer width must be positive");
  }
  if (data && fdp == FdpSource::kOracle) {
    throw ConfigError("oracle f_dp needs synthetic data");
  }
  check_compatible(loss, pipeline);
}

nlohmann::json ExperimentConfig::to_json() const {
  return {
      {"data", data ? nlohmann::json(data->generic_string())
                    : nlohmann::json(nullptr)},
      {"schema",
       {{"n_numeric", schema.n_numeric},
        {"n_categorical", schema.n_categorical},
        {"hash_dim", schema.hash_dim},
        {"delimiter", std::string(1, schema.delimiter)}}},
      {"synthetic", synthetic},
      {"dense_features", dense_features},
      {"clicks_per_hour", clicks_per_hour},
      {"pipeline", std::string(to_string(pipeline))},
      {"loss", std::string(to_string(loss))},
      {"z", std::string(to_string(z))},
      {"fdp", std::string(to_string(fdp))},
      {"wo_seconds", windows.observation()},
      {"wa_seconds", windows.attribution()},
      {"pretrain_fraction", pretrain_fraction},
      {"hours", hours},
      {"pretrain_epochs", pretrain_epochs},
      {"lr", lr},
      {"l2", l2},
      {"batch", batch},
      {"hidden", hidden},
      {"expert_units", expert_units},
      {"seed", seed},
      {"frozen", frozen},
  };
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig c;
    if (!j.at("data").is_null()) c.data = j.at("data").get<std::string>();
    const auto& s = j.at("schema");
    c.schema.n_numeric = s.at("n_numeric").get<std::size_t>();
    c.schema.n_categorical = s.at("n_categorical").get<std::size_t>();
    c.schema.hash_dim = s.at("hash_dim").get<std::uint32_t>();
    const auto delim = s.at("delimiter").get<std::string>();
    if (delim.size() != 1) throw ConfigError("delimiter must be one byte");
    c.schema.delimiter = delim[0];
    c.synthetic = j.at("synthetic").get<std::string>();
    c.dense_features = j.at("dense_features").get<std::size_t>();
    c.clicks_per_hour = j.at("clicks_per_hour").get<double>();
    c.pipeline = parse_mechanism(j.at("pipeline").get<std::string>());
    c.loss = parse_loss(j.at("loss").get<std::string>());
    c.z = parse_z_source(j.at("z").get<std::string>());
    c.fdp = parse_fdp_source(j.at("fdp").get<std::string>());
    c.windows = WindowConfig(j.at("wo_seconds").get<Seconds>(),
                             j.at("wa_seconds").get<Seconds>());
    c.pretrain_fraction = j.at("pretrain_fraction").get<double>();
    c.hours = j.at("hours").get<std::size_t>();
    c.pretrain_epochs = j.at("pretrain_epochs").get<std::size_t>();
    c.lr = j.at("lr").get<double>();
    c.l2 = j.at("l2").get<double>();
    c.batch = j.at("batch").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.expert_units = j.at("expert_units").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.frozen = j.at("frozen").get<bool>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
}

std::string ExperimentConfig::arm_name() const {
  if (frozen) return "pretrained";
  std::string name = std::string(to_string(pipeline)) + "/" +
                     std::string(to_string(loss));
  if (uses_z(loss)) name += "/" + std::string(to_string(z));
  if (fdp == FdpSource::kOracle && uses_fdp(loss)) name += "/fdp-oracle";
  return name;
}

GroundTruthModel synthetic_model(const ExperimentConfig& config) {
  if (config.synthetic == "desk") return desk_model(false);
  if (config.synthetic == "desk-coupled") return desk_model(true);
  if (config.synthetic == "dense") {
    return dense_model(config.dense_features,
                       derive_seed(config.seed, kTagDense));
  }
  throw ConfigError("unknown synthetic model '" + config.synthetic + "'");
}

Dataset load_dataset(const ExperimentConfig& config) {
  config.validate();
  Dataset ds;
  if (!config.data) {
    const auto n_stream = static_cast<std::size_t>(
        std::llround(static_cast<double>(config.hours) * config.clicks_per_hour));
    const auto n_total = static_cast<std::size_t>(std::ceil(
        static_cast<double>(n_stream) / (1.0 - config.pretrain_fraction) -
        1e-9));
    GenConfig gen{.n_clicks = n_total,
                  .seed = derive_seed(config.seed, kTagGenerate),
                  .clicks_per_hour = config.clicks_per_hour,
                  .model = synthetic_model(config),
                  .windows = config.windows};
    ds.clicks = generate(gen);
    ds.input_dim = gen.model.feature_dim();
    ds.truth = gen.model;
    ds.n_pretrain = n_total - n_stream;
  } else {
    auto log = read_log(*config.data, config.schema, &std::cerr);
    ds.n_rejected = log.n_rejected;
    std::stable_sort(log.records.begin(), log.records.end(),
                     [](const RawRecord& a, const RawRecord& b) {
                       return a.click_ts < b.click_ts;
                     });
    ds.n_pretrain = static_cast<std::size_t>(
        std::floor(config.pretrain_fraction *
                   static_cast<double>(log.records.size())));
    FeatureEncoder encoder(config.schema);
    encoder.fit(std::span<const RawRecord>(log.records).first(ds.n_pretrain));
    ds.clicks.reserve(log.records.size());
    for (std::size_t i = 0; i < log.records.size(); ++i) {
      auto click = to_click(log.records[i], encoder);
      click.click_id = i;
      // Conversions past the attribution window never count.
      if (click.conversion_delay &&
          *click.conversion_delay >= config.windows.attribution()) {
        click.conversion_delay.reset();
      }
      ds.clicks.push_back(std::move(click));
    }
    ds.input_dim = config.schema.hash_dim;
  }
  if (ds.n_pretrain == 0 || ds.n_pretrain >= ds.clicks.size()) {
    throw ConfigError("pretrain and streaming splits must both be non-empty");
  }
  return ds;
}

std::vector<ClickEvent> apply_leak_rule(std::span<const ClickEvent> clicks,
                                        Seconds boundary) {
  std::vector<ClickEvent> out(clicks.begin(), clicks.end());
  for (auto& c : out) {
    if (c.conversion_time() && *c.conversion_time() >= boundary) {
      c.conversion_delay.reset();
    }
  }
  return out;
}

Pretrained split_and_pretrain(const Dataset& dataset,
                              const ExperimentConfig& config) {
  config.validate();
  if (dataset.n_pretrain == 0 || dataset.n_pretrain >= dataset.clicks.size()) {
    throw ConfigError("pretrain and streaming splits must both be non-empty");
  }
  const auto all = std::span<const ClickEvent>(dataset.clicks);
  const Seconds boundary = all[dataset.n_pretrain].click_time;
  const auto clicks = apply_leak_rule(all.first(dataset.n_pretrain), boundary);

  Pretrained out;
  out.n_clicks = clicks.size();
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    if (all[i].converts() != clicks[i].converts()) ++out.n_leak_relabelled;
  }

  Rng rng(derive_seed(config.seed, kTagShuffle));
  const Architecture arch{dataset.input_dim, config.hidden};
  const Seconds wo = config.windows.observation();

  if (config.loss == LossKind::kBiDefuse) {
    BiDefuseNet net = BiDefuseNet::random(
        {dataset.input_dim, config.expert_units},
        derive_seed(config.seed, kTagTheta));
    std::vector<BiBatchItem> items;
    items.reserve(clicks.size());
    for (const auto& c : clicks) {
      const bool in_window = c.converts() && *c.conversion_delay <= wo;
      const bool out_window = c.converts() && *c.conversion_delay > wo;
      items.push_back({&c.features, ideal_term(in_window ? 1 : 0),
                       ideal_term(out_window ? 1 : 0), c.click_id});
    }
    Adam opt(net.size(), adam_options(config), net.decay_mask());
    for (std::size_t e = 0; e < config.pretrain_epochs; ++e) {
      fit(net, opt, reorder(items, permutation(items.size(), rng)),
          config.batch);
    }
    out.models.bidefuse = std::move(net);
  } else {
    Predictor theta =
        Predictor::random(arch, derive_seed(config.seed, kTagTheta));
    std::vector<BatchItem> items;
    items.reserve(clicks.size());
    for (const auto& c : clicks) {
      items.push_back({&c.features, ideal_term(c.converts() ? 1 : 0),
                       c.click_id});
    }
    Adam opt(theta.size(), adam_options(config), theta.decay_mask());
    for (std::size_t e = 0; e < config.pretrain_epochs; ++e) {
      fit(theta, opt, reorder(items, permutation(items.size(), rng)),
          config.batch);
    }
    out.models.theta = std::move(theta);
  }

  if (has_aux_models(config.pipeline)) {
    // Same stream shape the arm will see while streaming, replays excluded.
    const auto stream =
        build_observed_stream(clicks, config.pipeline, config.windows);
    std::vector<BatchItem> fdp_items, frn_items;
    for (const auto& s : stream.samples) {
      if (s.replay) continue;
      const bool dp = s.kind == SampleKind::kDelayedPositive;
      fdp_items.push_back({&s.features, ideal_term(dp ? 1 : 0), s.click_id});
      if (s.label == 0 || dp) {
        frn_items.push_back({&s.features, ideal_term(dp ? 0 : 1), s.click_id});
      }
    }
    Predictor fdp = Predictor::random(arch, derive_seed(config.seed, kTagFdp));
    Predictor frn = Predictor::random(arch, derive_seed(config.seed, kTagFrn));
    Adam fdp_opt(fdp.size(), adam_options(config), fdp.decay_mask());
    Adam frn_opt(frn.size(), adam_options(config), frn.decay_mask());
    for (std::size_t e = 0; e < config.pretrain_epochs; ++e) {
      fit(fdp, fdp_opt, reorder(fdp_items, permutation(fdp_items.size(), rng)),
          config.batch);
      fit(frn, frn_opt, reorder(frn_items, permutation(frn_items.size(), rng)),
          config.batch);
    }
    out.models.fdp = std::move(fdp);
    out.models.frn = std::move(frn);
  }
  return out;
}

StreamReport stream_run(const ExperimentConfig& config) {
  const auto dataset = load_dataset(config);
  const auto pretrained = split_and_pretrain(dataset, config);
  return stream_run(config, dataset, pretrained);
}

StreamReport stream_run(const ExperimentConfig& config, const Dataset& dataset,
                        const Pretrained& pretrained,
                        ArmModels* final_models) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const auto clicks =
      std::span<const ClickEvent>(dataset.clicks).subspan(dataset.n_pretrain);
  if (clicks.empty()) throw ConfigError("empty streaming split");
  const Seconds start = clicks.front().click_time;
  const auto hour_of = [start](Seconds t) {
    return static_cast<std::size_t>((t - start) / kSecondsPerHour);
  };
  const std::size_t n_hours =
      std::min(config.hours, hour_of(clicks.back().click_time) + 1);

  // Test clicks per hour, as contiguous index ranges.
  std::vector<std::size_t> click_begin(n_hours + 1, clicks.size());
  for (std::size_t i = clicks.size(); i-- > 0;) {
    const auto h = hour_of(clicks[i].click_time);
    if (h < n_hours) click_begin[h] = i;
  }
  for (std::size_t h = n_hours; h-- > 0;) {
    click_begin[h] = std::min(click_begin[h], click_begin[h + 1]);
  }

  std::vector<ObservedSample> samples;
  if (!config.frozen) {
    // Built over every click so that replays of pretraining-period clicks
    // reach the learner when they happen; earlier ingestions are dropped.
    auto stream =
        build_observed_stream(dataset.clicks, config.pipeline, config.windows);
    for (const auto& w : stream.warnings) std::cerr << "warning: " << w << '\n';
    std::copy_if(std::make_move_iterator(stream.samples.begin()),
                 std::make_move_iterator(stream.samples.end()),
                 std::back_inserter(samples),
                 [start](const ObservedSample& s) {
                   return s.ingestion_time >= start;
                 });
  }

  TruthFn truth;
  if (dataset.truth) {
    const WindowConfig eff = effective_windows(config.pipeline, config.windows);
    truth = [model = *dataset.truth, eff](const FeatureVector& x) {
      return attributed_rates(model, x, eff);
    };
  }
  ArmOptions options{.loss = config.loss,
                     .mechanism = config.pipeline,
                     .z = config.z,
                     .fdp = config.fdp,
                     .optimizer = adam_options(config),
                     .batch = config.batch};
  ArmTrainer trainer(options, pretrained.models, truth);

  StreamReport report;
  report.config = config.to_json();
  std::size_t cursor = 0;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (std::size_t t = 0; t + 1 < n_hours; ++t) {
    HourReport hr{.train_hour = t, .test_hour = t + 1, .metrics = {},
                  .counts = {}};
    const Seconds hour_end =
        start + static_cast<Seconds>(t + 1) * kSecondsPerHour;
    std::size_t end = cursor;
    while (end < samples.size() && samples[end].ingestion_time < hour_end) {
      ++end;
    }
    const auto slice =
        std::span<const ObservedSample>(samples).subspan(cursor, end - cursor);
    if (!slice.empty()) {
      hr.counts = trainer.train(slice);
      const std::size_t dp = static_cast<std::size_t>(
          std::count_if(slice.begin(), slice.end(), [](const auto& s) {
            return s.kind == SampleKind::kDelayedPositive && !s.replay;
          }));
      if (has_aux_models(config.pipeline) &&
          (hr.counts.n_dp_positive != dp ||
           hr.counts.n_rn_train + hr.counts.n_rn_excluded !=
               hr.counts.n_fdp_train)) {
        throw Error("auxiliary training sets violate their label rules");
      }
    }
    cursor = end;

    const auto test = clicks.subspan(click_begin[t + 1],
                                     click_begin[t + 2] - click_begin[t + 1]);
    if (test.empty()) continue;
    if (!slice.empty() && slice.back().ingestion_time >= test.front().click_time) {
      throw Error("test click precedes a training ingestion");
    }
    scores.clear();
    labels.clear();
    for (const auto& c : test) {
      scores.push_back(trainer.serve(c.features));
      labels.push_back(c.converts() ? 1 : 0);
    }
    hr.metrics = evaluate(scores, labels);
    report.hours.push_back(hr);
  }

  std::vector<MetricsReport> per_hour;
  for (const auto& h : report.hours) per_hour.push_back(h.metrics);
  report.aggregate = weighted_aggregate(per_hour);
  report.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  if (final_models) *final_models = trainer.models();
  return report;
}

std::vector<ComparisonRow> compare(std::vector<ComparisonRow> rows,
                                   const MetricsReport& pretrained,
                                   const MetricsReport& oracle) {
  auto ri = [](const std::optional<double>& m, const std::optional<double>& p,
               const std::optional<double>& o,
               bool higher) -> std::optional<double> {
    if (!m || !p || !o) return std::nullopt;
    return relative_improvement(*m, *p, *o, higher);
  };
  for (auto& row : rows) {
    auto& m = row.metrics;
    m.ri_auc = ri(m.auc, pretrained.auc, oracle.auc, true);
    m.ri_pr_auc = ri(m.pr_auc, pretrained.pr_auc, oracle.pr_auc, true);
    m.ri_nll = ri(m.nll, pretrained.nll, oracle.nll, false);
  }
  return rows;
}

std::vector<ComparisonRow> compare_runs(
    const std::vector<StreamReport>& reports, const StreamReport& pretrained,
    const StreamReport& oracle) {
  auto shared = [](nlohmann::json c) {
    for (const char* key : {"pipeline", "loss", "z", "fdp", "frozen"}) {
      c.erase(key);
    }
    return c;
  };
  const auto reference = shared(pretrained.config);
  auto check = [&](const StreamReport& r) {
    if (shared(r.config) != reference) {
      throw ConfigError(
          "reports differ in more than pipeline/loss; refusing to compare");
    }
  };
  check(oracle);
  std::vector<ComparisonRow> rows;
  for (const auto& r : reports) {
    check(r);
    rows.push_back(
        {ExperimentConfig::from_json(r.config).arm_name(), r.aggregate});
  }
  return compare(std::move(rows), pretrained.aggregate, oracle.aggregate);
}

std::vector<GridArm> grid_arms(const std::vector<Mechanism>& pipelines,
                               const std::vector<LossKind>& losses) {
  std::vector<GridArm> arms;
  for (auto p : pipelines) {
    for (auto l : losses) {
      if (compatible(l, p)) arms.push_back({p, l});
    }
  }
  return arms;
}

}  // namespace dflab
