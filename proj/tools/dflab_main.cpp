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

// dflab: synthetic delayed-feedback streams, streaming CVR training arms and
// their comparison tables.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dflab/error.hpp"
#include "dflab/harness.hpp"
#include "dflab/ingest.hpp"
#include "dflab/synthgen.hpp"

namespace {

namespace fs = std::filesystem;

struct Flags {
  std::string pipeline = "esdfm";
  std::string loss = "defuse";
  std::string z = "z1";
  std::string fdp = "learned";
  double wo_minutes = 30.0;
  double wa_hours = 24.0;
  std::size_t hours = 48;
  double clicks_per_hour = 2.0e4;
  std::uint64_t seed = 1;
  double lr = 1e-3;
  double l2 = 1e-4;
  std::size_t batch = 256;
  double pretrain_fraction = 0.5;
  std::size_t pretrain_epochs = 1;
  std::string hidden;
  std::size_t expert_units = 8;
  std::string synthetic = "desk";
  std::size_t dense_features = 8;
  std::string data;
  std::size_t n_numeric = 8;
  std::size_t n_categorical = 9;
  std::uint32_t hash_dim = 1u << 18;
  bool frozen = false;
};

void add_data_flags(CLI::App& app, Flags& f) {
  app.add_option("--wo-minutes", f.wo_minutes, "Observation window (minutes)")
      ->capture_default_str();
  app.add_option("--wa-hours", f.wa_hours, "Attribution window (hours)")
      ->capture_default_str();
  app.add_option("--hours", f.hours, "Streaming hours")->capture_default_str();
  app.add_option("--clicks-per-hour", f.clicks_per_hour,
                 "Synthetic click rate")
      ->capture_default_str();
  app.add_option("--seed", f.seed, "Base seed")->capture_default_str();
  app.add_option("--pretrain-fraction", f.pretrain_fraction,
                 "Fraction of clicks used for pretraining")
      ->capture_default_str();
  app.add_option("--synthetic", f.synthetic,
                 "Synthetic model: desk, desk-coupled or dense")
      ->capture_default_str();
  app.add_option("--dense-features", f.dense_features,
                 "Feature count of the dense synthetic model")
      ->capture_default_str();
}

void add_experiment_flags(CLI::App& app, Flags& f) {
  add_data_flags(app, f);
  app.add_option("--pipeline", f.pipeline,
                 "oracle|vanilla|vanilla-win|fnw|esdfm|defer")
      ->capture_default_str();
  app.add_option("--loss", f.loss,
                 "ideal|vanilla|fnw|fnc|esdfm|defer|defuse|bi-defuse|"
                 "fnw-defuse|defer-defuse")
      ->capture_default_str();
  app.add_option("--z", f.z, "z1|z2|oracle")->capture_default_str();
  app.add_option("--fdp", f.fdp, "Delayed-mass source: learned|oracle")
      ->capture_default_str();
  app.add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
  app.add_option("--l2", f.l2, "Decoupled weight decay")->capture_default_str();
  app.add_option("--batch", f.batch, "Minibatch size")->capture_default_str();
  app.add_option("--pretrain-epochs", f.pretrain_epochs, "Pretraining epochs")
      ->capture_default_str();
  app.add_option("--hidden", f.hidden,
                 "Hidden layer widths, e.g. 32,16 (empty: logistic)");
  app.add_option("--expert-units", f.expert_units,
                 "Units per expert of the two-head model")
      ->capture_default_str();
  app.add_option("--data", f.data, "Conversion log (TSV, optionally .gz)");
  app.add_option("--n-numeric", f.n_numeric, "Numeric columns in --data")
      ->capture_default_str();
  app.add_option("--n-categorical", f.n_categorical,
                 "Categorical columns in --data")
      ->capture_default_str();
  app.add_option("--hash-dim", f.hash_dim, "Hashed feature space size")
      ->capture_default_str();
  app.add_flag("--frozen", f.frozen,
               "Evaluate the pretrained model without streaming updates");
}

std::vector<std::size_t> parse_hidden(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto comma = text.find(',', pos);
    const auto token = text.substr(pos, comma - pos);
    if (!token.empty()) {
      try {
        out.push_back(std::stoul(token));
      } catch (const std::exception&) {
        throw dflab::ConfigError("bad hidden layer width '" + token + "'");
      }
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

dflab::Seconds to_seconds(double value, double unit) {
  return static_cast<dflab::Seconds>(std::llround(value * unit));
}

dflab::ExperimentConfig make_config(const Flags& f) {
  dflab::ExperimentConfig c;
  if (!f.data.empty()) c.data = f.data;
  c.schema.n_numeric = f.n_numeric;
  c.schema.n_categorical = f.n_categorical;
  c.schema.hash_dim = f.hash_dim;
  c.synthetic = f.synthetic;
  c.dense_features = f.dense_features;
  c.clicks_per_hour = f.clicks_per_hour;
  c.pipeline = dflab::parse_mechanism(f.pipeline);
  c.loss = dflab::parse_loss(f.loss);
  c.z = dflab::parse_z_source(f.z);
  c.fdp = dflab::parse_fdp_source(f.fdp);
  c.windows = dflab::WindowConfig(to_seconds(f.wo_minutes, 60.0),
                                  to_seconds(f.wa_hours, 3600.0));
  c.pretrain_fraction = f.pretrain_fraction;
  c.hours = f.hours;
  c.pretrain_epochs = f.pretrain_epochs;
  c.lr = f.lr;
  c.l2 = f.l2;
  c.batch = f.batch;
  c.hidden = parse_hidden(f.hidden);
  c.expert_units = f.expert_units;
  c.seed = f.seed;
  c.frozen = f.frozen;
  c.validate();
  return c;
}

void print_summary(const dflab::StreamReport& r, const std::string& name) {
  const auto& a = r.aggregate;
  auto show = [](const std::optional<double>& v) {
    return v ? std::to_string(*v) : std::string("undefined");
  };
  std::cout << name << ": auc " << show(a.auc) << "  pr_auc "
            << show(a.pr_auc) << "  nll " << a.nll << "  (" << a.n_samples
            << " test clicks, " << r.hours.size() << " hours, "
            << r.wall_seconds << " s)\n";
}

int cmd_generate(const Flags& f, const std::string& out) {
  dflab::ExperimentConfig c;
  c.synthetic = f.synthetic;
  c.dense_features = f.dense_features;
  c.clicks_per_hour = f.clicks_per_hour;
  c.windows = dflab::WindowConfig(to_seconds(f.wo_minutes, 60.0),
                                  to_seconds(f.wa_hours, 3600.0));
  c.pretrain_fraction = f.pretrain_fraction;
  c.hours = f.hours;
  c.seed = f.seed;
  c.loss = dflab::LossKind::kVanilla;
  const auto ds = dflab::load_dataset(c);
  const auto model = *ds.truth;
  const auto schema = dflab::synthetic_log_schema(model);
  std::vector<dflab::RawRecord> records;
  records.reserve(ds.clicks.size());
  for (const auto& click : ds.clicks) {
    records.push_back(dflab::to_raw_record(click, model));
  }
  dflab::write_log(out, records, schema);
  std::cout << "wrote " << records.size() << " clicks to " << out
            << " (columns: " << schema.n_numeric << " numeric, "
            << schema.n_categorical << " categorical)\n";
  return 0;
}

int cmd_run(const Flags& f, const std::string& out) {
  const auto config = make_config(f);
  const auto dataset = dflab::load_dataset(config);
  if (dataset.n_rejected > 0) {
    std::cerr << dataset.n_rejected << " log lines rejected\n";
  }
  const auto pretrained = dflab::split_and_pretrain(dataset, config);
  dflab::ArmModels models;
  const auto report =
      dflab::stream_run(config, dataset, pretrained, &models);
  dflab::write_run(out, report, &models);
  print_summary(report, config.arm_name());
  return 0;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    auto token = text.substr(pos, comma - pos);
    if (!token.empty()) out.push_back(token);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string dir_name(const dflab::ExperimentConfig& c) {
  auto name = c.arm_name();
  std::replace(name.begin(), name.end(), '/', '_');
  return name;
}

int cmd_grid(const Flags& f, const std::string& out,
             const std::string& pipelines, const std::string& losses,
             std::size_t jobs) {
  const auto base = make_config(f);
  std::vector<dflab::Mechanism> mechs;
  for (const auto& p : split_list(pipelines)) {
    mechs.push_back(dflab::parse_mechanism(p));
  }
  std::vector<dflab::LossKind> loss_kinds;
  for (const auto& l : split_list(losses)) {
    loss_kinds.push_back(dflab::parse_loss(l));
  }

  // The pretrained and oracle reference arms come first.
  std::vector<dflab::ExperimentConfig> arms;
  auto pretrained_cfg = base;
  pretrained_cfg.pipeline = dflab::Mechanism::kOracle;
  pretrained_cfg.loss = dflab::LossKind::kVanilla;
  pretrained_cfg.frozen = true;
  arms.push_back(pretrained_cfg);
  auto oracle_cfg = base;
  oracle_cfg.pipeline = dflab::Mechanism::kOracle;
  oracle_cfg.loss = dflab::LossKind::kIdeal;
  arms.push_back(oracle_cfg);
  for (const auto& arm : dflab::grid_arms(mechs, loss_kinds)) {
    auto c = base;
    c.pipeline = arm.pipeline;
    c.loss = arm.loss;
    if (c.pipeline == dflab::Mechanism::kOracle &&
        c.loss == dflab::LossKind::kIdeal) {
      continue;
    }
    arms.push_back(c);
  }

  const auto dataset = dflab::load_dataset(base);
  std::vector<dflab::StreamReport> reports(arms.size());
  std::vector<std::exception_ptr> errors(arms.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < arms.size(); i = next++) {
      try {
        const auto pre = dflab::split_and_pretrain(dataset, arms[i]);
        dflab::ArmModels models;
        reports[i] = dflab::stream_run(arms[i], dataset, pre, &models);
        dflab::write_run(fs::path(out) / dir_name(arms[i]), reports[i],
                         &models);
        std::lock_guard lock(io);
        print_summary(reports[i], arms[i].arm_name());
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::max<std::size_t>(jobs, 1); ++t) {
    pool.emplace_back(worker);
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Reference rows stay in the table at 0% and 100%.
  const auto rows = dflab::compare_runs(reports, reports[0], reports[1]);
  const auto csv = dflab::comparison_csv(rows);
  std::ofstream(fs::path(out) / "compare.csv") << csv;
  std::cout << '\n' << csv;
  return 0;
}

int cmd_compare(const std::string& pretrained, const std::string& oracle,
                const std::vector<std::string>& inputs,
                const std::string& out) {
  const auto pre = dflab::read_report(pretrained);
  const auto orc = dflab::read_report(oracle);
  std::vector<dflab::StreamReport> reports;
  for (const auto& p : inputs) reports.push_back(dflab::read_report(p));
  const auto csv =
      dflab::comparison_csv(dflab::compare_runs(reports, pre, orc));
  if (!out.empty()) {
    std::ofstream file(out);
    if (!file) throw dflab::Error("cannot write " + out);
    file << csv;
  }
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed-feedback streaming CVR lab"};
  app.require_subcommand(1);

  Flags gen_flags;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Write a synthetic conversion log");
  add_data_flags(*gen, gen_flags);
  gen->add_option("--out", gen_out, "Output log path (.gz compresses)")
      ->required();
  gen->set_config("--config", "", "Key-value config file mirroring the flags");

  Flags run_flags;
  std::string run_out = "run";
  auto* run = app.add_subcommand("run", "Train and evaluate one arm");
  add_experiment_flags(*run, run_flags);
  run->add_option("--out", run_out, "Output directory")->capture_default_str();
  run->set_config("--config", "", "Key-value config file mirroring the flags");

  Flags grid_flags;
  std::string grid_out = "grid";
  std::string grid_pipelines = "fnw,esdfm,defer,vanilla";
  std::string grid_losses =
      "vanilla,fnw,fnc,esdfm,defer,defuse,bi-defuse,fnw-defuse,defer-defuse";
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* grid = app.add_subcommand(
      "grid", "Run the cross product of pipelines and losses");
  add_experiment_flags(*grid, grid_flags);
  grid->add_option("--pipelines", grid_pipelines, "Comma-separated pipelines")
      ->capture_default_str();
  grid->add_option("--losses", grid_losses, "Comma-separated losses")
      ->capture_default_str();
  grid->add_option("--jobs", jobs, "Arms trained in parallel");
  grid->add_option("--out", grid_out, "Output directory")
      ->capture_default_str();
  grid->set_config("--config", "", "Key-value config file mirroring the flags");

  std::string cmp_pretrained, cmp_oracle, cmp_out;
  std::vector<std::string> cmp_inputs;
  auto* cmp = app.add_subcommand(
      "compare", "Relative-improvement table from report.json files");
  cmp->add_option("--pretrained", cmp_pretrained, "Pretrained report.json")
      ->required();
  cmp->add_option("--oracle", cmp_oracle, "Oracle report.json")->required();
  cmp->add_option("reports", cmp_inputs, "Arm report.json files")->required();
  cmp->add_option("--out", cmp_out, "Write the CSV table here as well");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(gen_flags, gen_out);
    if (run->parsed()) return cmd_run(run_flags, run_out);
    if (grid->parsed()) {
      return cmd_grid(grid_flags, grid_out, grid_pipelines, grid_losses, jobs);
    }
    if (cmp->parsed()) {
      return cmd_compare(cmp_pretrained, cmp_oracle, cmp_inputs, cmp_out);
    }
  } catch (const dflab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
