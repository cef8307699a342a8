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

#include <charconv>
#include <fstream>
#include <sstream>

#include "dflab/checkpoint.hpp"
#include "dflab/error.hpp"
#include "dflab/harness.hpp"

namespace dflab {
namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string format(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string format(const std::optional<double>& v) {
  return v ? format(*v) : std::string();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

nlohmann::json to_json(const MetricsReport& m) {
  nlohmann::json j = {{"auc", optional_json(m.auc)},
                      {"pr_auc", optional_json(m.pr_auc)},
                      {"nll", m.nll},
                      {"n_samples", m.n_samples}};
  if (m.ri_auc) j["ri_auc"] = *m.ri_auc;
  if (m.ri_pr_auc) j["ri_pr_auc"] = *m.ri_pr_auc;
  if (m.ri_nll) j["ri_nll"] = *m.ri_nll;
  return j;
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport m;
  m.auc = optional_from(j, "auc");
  m.pr_auc = optional_from(j, "pr_auc");
  m.nll = j.at("nll").get<double>();
  m.n_samples = j.at("n_samples").get<std::size_t>();
  m.ri_auc = optional_from(j, "ri_auc");
  m.ri_pr_auc = optional_from(j, "ri_pr_auc");
  m.ri_nll = optional_from(j, "ri_nll");
  return m;
}

nlohmann::json to_json(const StreamReport& r) {
  nlohmann::json hours = nlohmann::json::array();
  for (const auto& h : r.hours) {
    hours.push_back({{"train_hour", h.train_hour},
                     {"test_hour", h.test_hour},
                     {"metrics", to_json(h.metrics)},
                     {"n_train", h.counts.n_train},
                     {"n_dp_positive", h.counts.n_dp_positive},
                     {"n_fdp_train", h.counts.n_fdp_train},
                     {"n_rn_train", h.counts.n_rn_train},
                     {"n_rn_excluded", h.counts.n_rn_excluded}});
  }
  return {{"format", "dflab-report"},
          {"version", 1},
          {"config", r.config},
          {"hours", hours},
          {"aggregate", to_json(r.aggregate)}};
}

StreamReport stream_report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "dflab-report") throw ParseError("not a dflab report");
    StreamReport r;
    r.config = j.at("config");
    for (const auto& h : j.at("hours")) {
      HourReport hr;
      hr.train_hour = h.at("train_hour").get<std::size_t>();
      hr.test_hour = h.at("test_hour").get<std::size_t>();
      hr.metrics = metrics_from_json(h.at("metrics"));
      hr.counts.n_train = h.at("n_train").get<std::size_t>();
      hr.counts.n_dp_positive = h.at("n_dp_positive").get<std::size_t>();
      hr.counts.n_fdp_train = h.at("n_fdp_train").get<std::size_t>();
      hr.counts.n_rn_train = h.at("n_rn_train").get<std::size_t>();
      hr.counts.n_rn_excluded = h.at("n_rn_excluded").get<std::size_t>();
      r.hours.push_back(hr);
    }
    r.aggregate = metrics_from_json(j.at("aggregate"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

std::string to_csv(const StreamReport& r) {
  std::ostringstream out;
  out << "hour,n_samples,auc,pr_auc,nll,n_train,n_dp_positive,n_rn_train\n";
  for (const auto& h : r.hours) {
    out << h.test_hour << ',' << h.metrics.n_samples << ','
        << format(h.metrics.auc) << ',' << format(h.metrics.pr_auc) << ','
        << format(h.metrics.nll) << ',' << h.counts.n_train << ','
        << h.counts.n_dp_positive << ',' << h.counts.n_rn_train << '\n';
  }
  const auto& a = r.aggregate;
  out << "aggregate," << a.n_samples << ',' << format(a.auc) << ','
      << format(a.pr_auc) << ',' << format(a.nll) << ",,,\n";
  return out.str();
}

void write_run(const std::filesystem::path& out, const StreamReport& report,
               const ArmModels* models) {
  std::filesystem::create_directories(out);
  write_text(out / "report.json", to_json(report).dump(2) + "\n");
  write_text(out / "report.csv", to_csv(report));
  write_text(out / "timing.json",
             nlohmann::json({{"wall_seconds", report.wall_seconds}}).dump(2) +
                 "\n");
  if (models) {
    const auto dir = out / "checkpoints";
    std::filesystem::create_directories(dir);
    if (models->theta) save_checkpoint(dir / "theta.json", *models->theta);
    if (models->bidefuse) {
      save_checkpoint(dir / "bidefuse.json", *models->bidefuse);
    }
    if (models->fdp) save_checkpoint(dir / "fdp.json", *models->fdp);
    if (models->frn) save_checkpoint(dir / "frn.json", *models->frn);
  }
}

StreamReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read report " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed report " + path.string() + ": " + e.what());
  }
  return stream_report_from_json(j);
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "arm,auc,ri_auc,pr_auc,ri_pr_auc,nll,ri_nll\n";
  for (const auto& row : rows) {
    const auto& m = row.metrics;
    out << row.name << ',' << format(m.auc) << ',' << format(m.ri_auc) << ','
        << format(m.pr_auc) << ',' << format(m.ri_pr_auc) << ','
        << format(m.nll) << ',' << format(m.ri_nll) << '\n';
  }
  return out.str();
}

}  // namespace dflab
