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

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "dflab/ingest.hpp"
#include "dflab/losses.hpp"
#include "dflab/metrics.hpp"
#include "dflab/model.hpp"
#include "dflab/pipelines.hpp"
#include "dflab/random.hpp"
#include "dflab/synthgen.hpp"

namespace {

using namespace dflab;

std::vector<ClickEvent> desk_clicks(std::size_t n) {
  GenConfig config{.n_clicks = n, .seed = 1, .model = desk_model(true)};
  return generate(config);
}

void BM_Generate(benchmark::State& state) {
  GenConfig config{.n_clicks = static_cast<std::size_t>(state.range(0)),
                   .seed = 1,
                   .model = desk_model(true)};
  for (auto _ : state) benchmark::DoNotOptimize(generate(config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Generate)->Arg(100000);

void BM_BuildStream(benchmark::State& state) {
  const auto clicks = desk_clicks(100000);
  const auto mech = static_cast<Mechanism>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        build_observed_stream(clicks, mech, WindowConfig{1800, 86400}));
  }
  state.SetLabel(std::string(to_string(mech)));
  state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_BuildStream)
    ->Arg(static_cast<int>(Mechanism::kEsdfm))
    ->Arg(static_cast<int>(Mechanism::kDefer));

void BM_ParseRecord(benchmark::State& state) {
  const LogSchema schema{};
  RawRecord record{.click_ts = 1234567, .conv_ts = 1239999};
  for (std::size_t i = 0; i < schema.n_numeric; ++i) {
    record.numeric.emplace_back(static_cast<double>(i) * 3.25);
  }
  for (std::size_t j = 0; j < schema.n_categorical; ++j) {
    record.categorical.push_back("A7F3C1" + std::to_string(j));
  }
  const std::string line = serialize_record(record, schema);
  FeatureEncoder encoder(schema);
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_line(line, schema, encoder));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ParseRecord);

// Hashed sparse input with 17 active features, as on a real log.
std::vector<FeatureVector> sparse_inputs(std::size_t n, std::uint32_t dim) {
  Rng rng(2);
  std::vector<FeatureVector> xs(n);
  for (auto& x : xs) {
    for (int c = 0; c < 17; ++c) {
      x.push_back({static_cast<std::uint32_t>(rng.below(dim)), 1.0});
    }
  }
  return xs;
}

void BM_PredictorGradient(benchmark::State& state) {
  const std::uint32_t dim = 1u << 18;
  Architecture arch{.input_dim = dim};
  if (state.range(0) > 0) arch.hidden = {32, 16};
  const auto model = Predictor::random(arch, 3);
  const auto xs = sparse_inputs(256, dim);
  std::vector<BatchItem> batch;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    batch.push_back({&xs[i], LossTerm{0.2, 1.1}, i});
  }
  std::vector<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(gradient(model, batch, grad));
  state.SetLabel(state.range(0) > 0 ? "mlp 32-16" : "logistic");
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_PredictorGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BiDefuseGradient(benchmark::State& state) {
  const std::uint32_t dim = 1u << 12;
  const auto net = BiDefuseNet::random({.input_dim = dim, .expert_units = 8}, 4);
  const auto xs = sparse_inputs(256, dim);
  std::vector<BiBatchItem> batch;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    batch.push_back({&xs[i], LossTerm{1.0, 0.0}, LossTerm{0.1, 0.9}, i});
  }
  std::vector<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(gradient(net, batch, grad));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_BiDefuseGradient)->Unit(benchmark::kMillisecond);

void BM_Auc(benchmark::State& state) {
  Rng rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> s(n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = rng.uniform();
    y[i] = rng.uniform() < 0.2 ? 1 : 0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(auc(s, y));
    benchmark::DoNotOptimize(pr_auc(s, y));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auc)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
