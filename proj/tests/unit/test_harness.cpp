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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dflab/error.hpp"
#include "dflab/harness.hpp"

namespace dflab {
namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.clicks_per_hour = 2000;
  c.hours = 6;
  c.seed = 3;
  return c;
}

ClickEvent click(std::uint64_t id, Seconds t0, std::optional<Seconds> d) {
  return ClickEvent{.features = {}, .click_time = t0, .conversion_delay = d,
                    .click_id = id};
}

TEST(LeakRule, ConversionsAfterTheBoundaryAreDropped) {
  const std::vector<ClickEvent> clicks{click(0, 100, 50), click(1, 100, 5000),
                                       click(2, 200, std::nullopt)};
  const auto out = apply_leak_rule(clicks, 1000);
  EXPECT_EQ(out[0].conversion_delay, Seconds{50});
  EXPECT_FALSE(out[1].conversion_delay.has_value());
  EXPECT_FALSE(out[2].conversion_delay.has_value());
}

TEST(LoadDataset, PretrainFractionSplitsTheClicks) {
  ExperimentConfig c;
  c.hours = 25;
  c.clicks_per_hour = 20000;
  c.pretrain_fraction = 0.5;
  const auto ds = load_dataset(c);
  EXPECT_EQ(ds.clicks.size(), 1000000u);
  EXPECT_EQ(ds.n_pretrain, 500000u);
  EXPECT_EQ(ds.input_dim, 8u);
  ASSERT_TRUE(ds.truth.has_value());
}

TEST(LoadDataset, ReadsALogAndFitsOnThePretrainSplit) {
  ExperimentConfig gen = small_config();
  gen.hours = 2;
  const auto synthetic = load_dataset(gen);
  const auto schema = synthetic_log_schema(*synthetic.truth);
  std::vector<RawRecord> records;
  for (const auto& c : synthetic.clicks) {
    records.push_back(to_raw_record(c, *synthetic.truth));
  }
  const auto path =
      std::filesystem::temp_directory_path() / "dflab_harness_log.tsv.gz";
  write_log(path, records, schema);
  ExperimentConfig c = small_config();
  c.data = path;
  c.schema = schema;
  const auto ds = load_dataset(c);
  std::filesystem::remove(path);
  ASSERT_EQ(ds.clicks.size(), synthetic.clicks.size());
  EXPECT_EQ(ds.n_pretrain, ds.clicks.size() / 2);
  EXPECT_FALSE(ds.truth.has_value());
  for (std::size_t i = 0; i < ds.clicks.size(); ++i) {
    EXPECT_EQ(ds.clicks[i].click_time, synthetic.clicks[i].click_time);
    EXPECT_EQ(ds.clicks[i].conversion_delay,
              synthetic.clicks[i].conversion_delay);
  }
}

TEST(Pretrain, AppliesTheLeakRuleAndBuildsAuxModels) {
  const auto c = small_config();
  const auto ds = load_dataset(c);
  const auto p = split_and_pretrain(ds, c);
  EXPECT_EQ(p.n_clicks, ds.n_pretrain);
  const Seconds boundary = ds.clicks[ds.n_pretrain].click_time;
  std::size_t leaking = 0;
  for (std::size_t i = 0; i < ds.n_pretrain; ++i) {
    const auto t = ds.clicks[i].conversion_time();
    leaking += t && *t >= boundary;
  }
  EXPECT_GT(leaking, 0u);
  EXPECT_EQ(p.n_leak_relabelled, leaking);
  EXPECT_TRUE(p.models.theta.has_value());
  EXPECT_TRUE(p.models.fdp.has_value());
  EXPECT_TRUE(p.models.frn.has_value());
}

TEST(StreamRun, TwoHoursIsOnePair) {
  auto c = small_config();
  c.hours = 2;
  const auto r = stream_run(c);
  ASSERT_EQ(r.hours.size(), 1u);
  EXPECT_EQ(r.hours[0].train_hour, 0u);
  EXPECT_EQ(r.hours[0].test_hour, 1u);
  EXPECT_EQ(r.aggregate.n_samples, 2000u);
}

TEST(StreamRun, IsDeterministic) {
  const auto c = small_config();
  const auto a = to_json(stream_run(c)).dump();
  const auto b = to_json(stream_run(c)).dump();
  EXPECT_EQ(a, b);
}

TEST(StreamRun, EveryArmRunsOnSyntheticData) {
  auto c = small_config();
  c.hours = 3;
  c.lr = 0.05;  // few steps at this size; the default barely moves
  const auto ds = load_dataset(c);
  for (const auto& arm :
       grid_arms({Mechanism::kOracle, Mechanism::kVanilla, Mechanism::kFnw,
                  Mechanism::kEsdfm, Mechanism::kDefer},
                 {LossKind::kIdeal, LossKind::kVanilla, LossKind::kFnw,
                  LossKind::kFnc, LossKind::kEsdfm, LossKind::kDefer,
                  LossKind::kDefuse, LossKind::kBiDefuse,
                  LossKind::kFnwDefuse, LossKind::kDeferDefuse})) {
    auto a = c;
    a.pipeline = arm.pipeline;
    a.loss = arm.loss;
    const auto pre = split_and_pretrain(ds, a);
    const auto r = stream_run(a, ds, pre);
    ASSERT_EQ(r.hours.size(), 2u) << a.arm_name();
    ASSERT_TRUE(r.aggregate.auc.has_value()) << a.arm_name();
    EXPECT_GT(*r.aggregate.auc, 0.55) << a.arm_name();
  }
}

TEST(StreamRun, FrozenArmMatchesThePretrainedModel) {
  auto c = small_config();
  c.frozen = true;
  c.hours = 3;
  const auto ds = load_dataset(c);
  const auto pre = split_and_pretrain(ds, c);
  ArmModels final_models;
  stream_run(c, ds, pre, &final_models);
  ASSERT_TRUE(final_models.theta.has_value());
  EXPECT_TRUE(std::equal(pre.models.theta->params().begin(),
                         pre.models.theta->params().end(),
                         final_models.theta->params().begin()));
}

TEST(Config, JsonRoundTripAndValidation) {
  auto c = small_config();
  c.hidden = {4, 2};
  c.z = ZSource::kZ2;
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());

  auto bad = small_config();
  bad.hours = 1;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = small_config();
  bad.loss = LossKind::kFnwDefuse;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = small_config();
  bad.pretrain_fraction = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = small_config();
  bad.synthetic = "wide";
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Config, ArmNames) {
  auto c = small_config();
  EXPECT_EQ(c.arm_name(), "esdfm/defuse/z1");
  c.fdp = FdpSource::kOracle;
  EXPECT_EQ(c.arm_name(), "esdfm/defuse/z1/fdp-oracle");
  c.loss = LossKind::kVanilla;
  EXPECT_EQ(c.arm_name(), "esdfm/vanilla");
  c.frozen = true;
  EXPECT_EQ(c.arm_name(), "pretrained");
}

TEST(Report, WriteAndReadBack) {
  auto c = small_config();
  c.hours = 3;
  const auto ds = load_dataset(c);
  const auto pre = split_and_pretrain(ds, c);
  ArmModels models;
  const auto r = stream_run(c, ds, pre, &models);
  const auto dir = std::filesystem::temp_directory_path() / "dflab_run_test";
  std::filesystem::remove_all(dir);
  write_run(dir, r, &models);
  for (const char* f : {"report.json", "report.csv", "timing.json",
                        "checkpoints/theta.json", "checkpoints/fdp.json",
                        "checkpoints/frn.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const auto back = read_report(dir / "report.json");
  EXPECT_EQ(to_json(back).dump(), to_json(r).dump());
  std::ifstream csv(dir / "report.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_NE(header.find("auc"), std::string::npos);
  std::filesystem::remove_all(dir);
}

MetricsReport with_auc(double auc) {
  return MetricsReport{.auc = auc, .pr_auc = auc / 2, .nll = 1 - auc,
                       .n_samples = 10};
}

TEST(Compare, RelativeImprovementAgainstPublishedColumn) {
  // AUC column of a published comparison table; RI-AUC must reproduce it.
  const std::vector<std::pair<std::string, std::pair<double, double>>> table{
      {"Vanilla", {0.8098, -108.29}}, {"FNC", {0.8373, 34.20}},
      {"FNW", {0.8376, 35.75}},       {"ES-DFM", {0.8396, 46.11}},
      {"DEFER", {0.8382, 38.86}},     {"DEFUSE", {0.8408, 52.33}},
      {"Bi-DEFUSE", {0.8379, 37.31}}};
  std::vector<ComparisonRow> rows;
  for (const auto& [name, v] : table) rows.push_back({name, with_auc(v.first)});
  const auto out = compare(rows, with_auc(0.8307), with_auc(0.8500));
  for (std::size_t i = 0; i < table.size(); ++i) {
    EXPECT_NEAR(*out[i].metrics.ri_auc, table[i].second.second, 0.01)
        << table[i].first;
  }
}

TEST(Compare, SelfAndPretrainedBounds) {
  const auto pre = with_auc(0.7), oracle = with_auc(0.8);
  const auto out = compare({{"o", oracle}, {"p", pre}}, pre, oracle);
  EXPECT_NEAR(*out[0].metrics.ri_auc, 100.0, 1e-9);
  EXPECT_NEAR(*out[0].metrics.ri_nll, 100.0, 1e-9);
  EXPECT_NEAR(*out[1].metrics.ri_auc, 0.0, 1e-9);
  const auto csv = comparison_csv(out);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "arm,auc,ri_auc,pr_auc,ri_pr_auc,nll,ri_nll");
}

TEST(Compare, RefusesMismatchedConfigs) {
  auto c = small_config();
  StreamReport a{.config = c.to_json()};
  c.loss = LossKind::kEsdfm;  // arms may differ in loss
  StreamReport b{.config = c.to_json()};
  EXPECT_NO_THROW(compare_runs({b}, a, a));
  c.seed = 99;
  StreamReport d{.config = c.to_json()};
  EXPECT_THROW(compare_runs({d}, a, a), ConfigError);
}

TEST(Grid, SkipsIncompatiblePairs) {
  const auto arms = grid_arms({Mechanism::kFnw, Mechanism::kEsdfm},
                              {LossKind::kFnw, LossKind::kDefuse});
  ASSERT_EQ(arms.size(), 2u);
  EXPECT_EQ(arms[0].pipeline, Mechanism::kFnw);
  EXPECT_EQ(arms[0].loss, LossKind::kFnw);
  EXPECT_EQ(arms[1].pipeline, Mechanism::kEsdfm);
  EXPECT_EQ(arms[1].loss, LossKind::kDefuse);
}

}  // namespace
}  // namespace dflab
