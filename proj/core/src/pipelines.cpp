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

#include "dflab/pipelines.hpp"

#include <algorithm>
#include <tuple>

#include "dflab/error.hpp"
#include "dflab/labels.hpp"

namespace dflab {
namespace {

void emit(std::vector<ObservedSample>& out, const ClickEvent& click,
          SampleKind kind, std::uint8_t label, Seconds time,
          bool replay = false) {
  out.push_back(ObservedSample{.features = click.features,
                               .label = label,
                               .ingestion_time = time,
                               .kind = kind,
                               .click_id = click.click_id,
                               .replay = replay});
}

void emit_canonical(std::vector<ObservedSample>& out, const ClickEvent& click,
                    const WindowConfig& windows) {
  for (const auto& ingestion : classify_ingestions(click, windows)) {
    const bool positive = ingestion.kind == SampleKind::kImmediatePositive ||
                          ingestion.kind == SampleKind::kDelayedPositive;
    emit(out, click, ingestion.kind, positive ? 1 : 0, ingestion.time);
  }
}

}  // namespace

std::string_view to_string(Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::kOracle:
      return "oracle";
    case Mechanism::kVanilla:
      return "vanilla";
    case Mechanism::kVanillaWin:
      return "vanilla-win";
    case Mechanism::kFnw:
      return "fnw";
    case Mechanism::kEsdfm:
      return "esdfm";
    case Mechanism::kDefer:
      return "defer";
  }
  return "?";
}

Mechanism parse_mechanism(std::string_view name) {
  for (auto m : {Mechanism::kOracle, Mechanism::kVanilla,
                 Mechanism::kVanillaWin, Mechanism::kFnw, Mechanism::kEsdfm,
                 Mechanism::kDefer}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown pipeline '" + std::string(name) + "'");
}

WindowConfig effective_windows(Mechanism mechanism,
                               const WindowConfig& windows) {
  if (mechanism == Mechanism::kFnw) {
    return WindowConfig(0, windows.attribution());
  }
  return windows;
}

ObservedStream build_observed_stream(std::span<const ClickEvent> clicks,
                                     Mechanism mechanism,
                                     const WindowConfig& windows) {
  ObservedStream stream{.samples = {},
                        .windows = effective_windows(mechanism, windows),
                        .warnings = {}};
  if (mechanism == Mechanism::kFnw && windows.observation() != 0) {
    stream.warnings.push_back("fnw ignores w_o=" +
                              std::to_string(windows.observation()) +
                              "s and ingests every click at click time");
  }
  const WindowConfig& w = stream.windows;
  const Seconds wo = w.observation();
  auto& out = stream.samples;
  out.reserve(clicks.size() * 2);

  Seconds previous_click_time = 0;
  for (const auto& click : clicks) {
    validate(click);
    if (click.click_time < previous_click_time) {
      throw InvalidSampleError("clicks must be ordered by click_time");
    }
    previous_click_time = click.click_time;
    const Seconds t0 = click.click_time;

    switch (mechanism) {
      case Mechanism::kOracle: {
        const auto kind = click.converts() ? SampleKind::kImmediatePositive
                                           : SampleKind::kRealNegative;
        emit(out, click, kind, click.converts() ? 1 : 0, t0 + wo);
        break;
      }
      case Mechanism::kVanilla: {
        const auto first = classify_ingestions(click, w).front();
        emit(out, click, first.kind,
             first.kind == SampleKind::kImmediatePositive ? 1 : 0, first.time);
        break;
      }
      case Mechanism::kVanillaWin:
      case Mechanism::kEsdfm:
        emit_canonical(out, click, w);
        break;
      case Mechanism::kFnw:
        if (click.converts()) {
          emit(out, click, SampleKind::kFakeNegative, 0, t0);
          emit(out, click, SampleKind::kDelayedPositive, 1,
               t0 + *click.conversion_delay);
        } else {
          emit(out, click, SampleKind::kRealNegative, 0, t0);
        }
        break;
      case Mechanism::kDefer: {
        emit_canonical(out, click, w);
        const auto first = classify_ingestions(click, w).front();
        if (first.kind == SampleKind::kImmediatePositive) {
          emit(out, click, first.kind, 1, t0 + w.attribution(), true);
        } else if (first.kind == SampleKind::kRealNegative) {
          emit(out, click, first.kind, 0, t0 + w.attribution(), true);
        }
        break;
      }
    }
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const ObservedSample& a, const ObservedSample& b) {
                     return std::tie(a.ingestion_time, a.click_id, a.kind,
                                     a.replay) <
                            std::tie(b.ingestion_time, b.click_id, b.kind,
                                     b.replay);
                   });
  return stream;
}

std::size_t ingestion_count(Mechanism mechanism, const ClickEvent& click,
                            const WindowConfig& windows) {
  const WindowConfig w = effective_windows(mechanism, windows);
  const bool delayed =
      click.converts() && *click.conversion_delay > w.observation();
  switch (mechanism) {
    case Mechanism::kOracle:
    case Mechanism::kVanilla:
      return 1;
    case Mechanism::kVanillaWin:
    case Mechanism::kEsdfm:
      return delayed ? 2 : 1;
    case Mechanism::kFnw:
      return click.converts() ? 2 : 1;
    case Mechanism::kDefer:
      return 2;
  }
  return 0;
}

}  // namespace dflab
