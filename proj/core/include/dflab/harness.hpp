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

#ifndef DFLAB_HARNESS_HPP_
#define DFLAB_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dflab/ingest.hpp"
#include "dflab/losses.hpp"
#include "dflab/metrics.hpp"
#include "dflab/pipelines.hpp"
#include "dflab/synthgen.hpp"
#include "dflab/trainer.hpp"

namespace dflab {

struct ExperimentConfig {
  // Data: a log file when `data` is set, otherwise a synthetic stream.
  std::optional<std::filesystem::path> data;
  LogSchema schema;
  std::string synthetic = "desk";  // desk | desk-coupled | dense
  std::size_t dense_features = 8;
  double clicks_per_hour = 2.0e4;

  Mechanism pipeline = Mechanism::kEsdfm;
  LossKind loss = LossKind::kDefuse;
  ZSource z = ZSource::kZ1;
  FdpSource fdp = FdpSource::kLearned;
  WindowConfig windows{1800, 24 * 3600};

  double pretrain_fraction = 0.5;
  std::size_t hours = 48;
  std::size_t pretrain_epochs = 1;
  double lr = 1e-3;
  double l2 = 1e-4;
  std::size_t batch = 256;
  std::vector<std::size_t> hidden;  // empty: logistic regression
  std::size_t expert_units = 8;
  std::uint64_t seed = 1;
  // Evaluate the pretrained model without streaming updates.
  bool frozen = false;

  // Throws ConfigError.
  void validate() const;
  // Every field that shapes the result (no output paths).
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  // Short arm label, e.g. "esdfm/defuse/z1".
  std::string arm_name() const;
};

// Clicks in time order with ids 0..n-1, plus the model the generator used.
struct Dataset {
  std::vector<ClickEvent> clicks;
  std::size_t input_dim = 0;
  std::optional<GroundTruthModel> truth;  // synthetic only
  std::size_t n_pretrain = 0;             // leading clicks used to pretrain
  std::size_t n_rejected = 0;             // log lines that failed to parse
};

GroundTruthModel synthetic_model(const ExperimentConfig& config);

// Synthetic: generates pretrain + `hours` hours of streaming clicks.
// Log: reads, sorts by click time, fits the numeric buckets on the pretrain
// split only and encodes.
Dataset load_dataset(const ExperimentConfig& config);

// Drops conversions observed at or after `boundary` (they belong to the
// streaming period and must not leak into pretraining labels).
std::vector<ClickEvent> apply_leak_rule(std::span<const ClickEvent> clicks,
                                        Seconds boundary);

struct Pretrained {
  ArmModels models;
  std::size_t n_clicks = 0;
  std::size_t n_leak_relabelled = 0;
};

// Pretrains f_theta (or both heads), and f_dp / f_rn when the pipeline
// co-trains them, on the first `dataset.n_pretrain` clicks (shuffled with
// the config seed) with the leak rule applied.
Pretrained split_and_pretrain(const Dataset& dataset,
                              const ExperimentConfig& config);

struct HourReport {
  std::size_t train_hour = 0;
  std::size_t test_hour = 0;
  MetricsReport metrics;
  TrainCounts counts;
};

struct StreamReport {
  nlohmann::json config;
  std::vector<HourReport> hours;
  MetricsReport aggregate;
  double wall_seconds = 0.0;  // not serialized into report.json
};

// Hour t trains on every ingestion timed in hour t (replays of pretraining
// clicks included) and tests on the clicks of hour t + 1.
// Ground-truth rates for oracle arms come from the synthetic model.
StreamReport stream_run(const ExperimentConfig& config);
StreamReport stream_run(const ExperimentConfig& config, const Dataset& dataset,
                        const Pretrained& pretrained,
                        ArmModels* final_models = nullptr);

nlohmann::json to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StreamReport& r);
StreamReport stream_report_from_json(const nlohmann::json& j);
std::string to_csv(const StreamReport& r);

// Writes report.json, report.csv, timing.json and checkpoints/ under `out`.
void write_run(const std::filesystem::path& out, const StreamReport& report,
               const ArmModels* models);
StreamReport read_report(const std::filesystem::path& path);

struct ComparisonRow {
  std::string name;
  MetricsReport metrics;  // RI fields filled
};

// Fills RI-AUC, RI-PR-AUC and RI-NLL of each row against the pretrained
// and oracle rows.
std::vector<ComparisonRow> compare(std::vector<ComparisonRow> rows,
                                   const MetricsReport& pretrained,
                                   const MetricsReport& oracle);

// Same, after checking every report shares the configuration except for
// pipeline, loss, z, f_dp source and the frozen flag. Throws ConfigError.
std::vector<ComparisonRow> compare_runs(
    const std::vector<StreamReport>& reports, const StreamReport& pretrained,
    const StreamReport& oracle);

std::string comparison_csv(const std::vector<ComparisonRow>& rows);

struct GridArm {
  Mechanism pipeline;
  LossKind loss;
};

// Cross product of pipelines and losses, incompatible pairs skipped.
std::vector<GridArm> grid_arms(const std::vector<Mechanism>& pipelines,
                               const std::vector<LossKind>& losses);

}  // namespace dflab

#endif  // DFLAB_HARNESS_HPP_
