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

#ifndef DFLAB_CHECKPOINT_HPP_
#define DFLAB_CHECKPOINT_HPP_

#include <filesystem>
#include <variant>

#include <nlohmann/json.hpp>

#include "dflab/model.hpp"

namespace dflab {

using AnyModel = std::variant<Predictor, BiDefuseNet>;

// JSON checkpoint: {"format": "dflab-checkpoint", "version": 1,
// "kind": "mlp" | "bidefuse", "architecture": {...}, "params": [...]}.
// Doubles are written with round-trip precision.
nlohmann::json to_json(const Predictor& model);
nlohmann::json to_json(const BiDefuseNet& model);

// Throws ParseError on an unknown format/version or when the parameter
// count does not match the architecture.
AnyModel model_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_checkpoint(const std::filesystem::path& path);

}  // namespace dflab

#endif  // DFLAB_CHECKPOINT_HPP_
