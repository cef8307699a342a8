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

#include "dflab/labels.hpp"

#include <cmath>
#include <string>

#include "dflab/error.hpp"

namespace dflab {

void validate(const ClickEvent& click) {
  if (click.click_time < 0) {
    throw InvalidSampleError("click " + std::to_string(click.click_id) +
                             " has negative click_time");
  }
  if (click.conversion_delay && *click.conversion_delay < 0) {
    throw InvalidSampleError("click " + std::to_string(click.click_id) +
                             " has negative conversion delay");
  }
}

WindowConfig::WindowConfig(Seconds observation, Seconds attribution)
    : observation_(observation), attribution_(attribution) {
  if (observation < 0 || attribution <= 0 || observation >= attribution) {
    throw ConfigError("windows require 0 <= w_o < w_a, got w_o=" +
                      std::to_string(observation) +
                      " w_a=" + std::to_string(attribution));
  }
}

std::string_view to_string(SampleKind kind) {
  switch (kind) {
    case SampleKind::kImmediatePositive:
      return "IP";
    case SampleKind::kFakeNegative:
      return "FN";
    case SampleKind::kRealNegative:
      return "RN";
    case SampleKind::kDelayedPositive:
      return "DP";
  }
  return "?";
}

void validate(const ObservedSample& sample) {
  const bool positive_kind = sample.kind == SampleKind::kImmediatePositive ||
                             sample.kind == SampleKind::kDelayedPositive;
  if (sample.label > 1 || positive_kind != (sample.label == 1)) {
    throw InvalidSampleError("sample of click " +
                             std::to_string(sample.click_id) + " has kind " +
                             std::string(to_string(sample.kind)) +
                             " with observed label " +
                             std::to_string(sample.label));
  }
}

int correct_label(int observed_label, std::optional<Seconds> delay,
                  const WindowConfig& windows) {
  if (observed_label == 1) return 1;
  if (observed_label != 0) {
    throw InvalidSampleError("observed label must be 0 or 1");
  }
  if (!delay) return 0;
  if (*delay <= windows.observation()) {
    throw InvalidSampleError(
        "observed negative with conversion inside the observation window");
  }
  return 1;
}

std::vector<Ingestion> classify_ingestions(const ClickEvent& click,
                                           const WindowConfig& windows) {
  const Seconds t0 = click.click_time;
  const Seconds wo = windows.observation();
  if (!click.conversion_delay) {
    return {{SampleKind::kRealNegative, t0 + wo}};
  }
  const Seconds d = *click.conversion_delay;
  if (d <= wo) {
    return {{SampleKind::kImmediatePositive, t0 + wo}};
  }
  return {{SampleKind::kFakeNegative, t0 + wo},
          {SampleKind::kDelayedPositive, t0 + d}};
}

}  // namespace dflab
