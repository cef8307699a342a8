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

#include "dflab/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "dflab/error.hpp"

namespace dflab {
namespace {

constexpr const char* kFormat = "dflab-checkpoint";
constexpr int kVersion = 1;

nlohmann::json envelope(const char* kind, nlohmann::json architecture,
                        std::span<const double> params) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["kind"] = kind;
  j["architecture"] = std::move(architecture);
  j["params"] = std::vector<double>(params.begin(), params.end());
  return j;
}

template <typename Model>
Model fill(Model model, const nlohmann::json& params) {
  if (!params.is_array() || params.size() != model.size()) {
    throw ParseError("checkpoint parameter count does not match architecture");
  }
  auto dst = model.params();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (!params[i].is_number()) {
      throw ParseError("checkpoint parameter is not a number");
    }
    dst[i] = params[i].get<double>();
  }
  return model;
}

}  // namespace

nlohmann::json to_json(const Predictor& model) {
  const auto& a = model.architecture();
  return envelope("mlp",
                  {{"input_dim", a.input_dim},
                   {"hidden", a.hidden},
                   {"leaky_slope", a.leaky_slope}},
                  model.params());
}

nlohmann::json to_json(const BiDefuseNet& model) {
  const auto& a = model.architecture();
  return envelope("bidefuse",
                  {{"input_dim", a.input_dim},
                   {"expert_units", a.expert_units},
                   {"leaky_slope", a.leaky_slope}},
                  model.params());
}

AnyModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != kFormat) throw ParseError("not a dflab checkpoint");
    if (j.at("version") != kVersion) {
      throw ParseError("unsupported checkpoint version");
    }
    const auto kind = j.at("kind").get<std::string>();
    const auto& a = j.at("architecture");
    if (kind == "mlp") {
      Architecture arch{a.at("input_dim").get<std::size_t>(),
                        a.at("hidden").get<std::vector<std::size_t>>(),
                        a.at("leaky_slope").get<double>()};
      return fill(Predictor(std::move(arch)), j.at("params"));
    }
    if (kind == "bidefuse") {
      BiDefuseArchitecture arch{a.at("input_dim").get<std::size_t>(),
                                a.at("expert_units").get<std::size_t>(),
                                a.at("leaky_slope").get<double>()};
      return fill(BiDefuseNet(arch), j.at("params"));
    }
    throw ParseError("unknown checkpoint kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("invalid checkpoint architecture: ") +
                     e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const AnyModel& model) {
  const auto j = std::visit([](const auto& m) { return to_json(m); }, model);
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

AnyModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace dflab
