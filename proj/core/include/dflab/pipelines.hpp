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

#ifndef DFLAB_PIPELINES_HPP_
#define DFLAB_PIPELINES_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dflab/types.hpp"

namespace dflab {

// Duplication mechanism deciding when each click (re)enters training.
enum class Mechanism {
  kOracle,      // one sample at t0 + w_o carrying the attributed label
  kVanilla,     // one sample at t0 + w_o carrying the observed label
  kVanillaWin,  // Vanilla plus a positive replay of delayed conversions
  kFnw,         // w_o = 0: negative at t0, positive replay at conversion
  kEsdfm,       // same stream as VanillaWin
  kDefer,       // ESDFM plus attributed replays of IP and RN at t0 + w_a
};

std::string_view to_string(Mechanism mechanism);
// Accepts the CLI spellings: oracle, vanilla, vanilla-win, fnw, esdfm, defer.
Mechanism parse_mechanism(std::string_view name);

// Windows the mechanism actually uses (FNW forces w_o = 0).
WindowConfig effective_windows(Mechanism mechanism,
                               const WindowConfig& windows);

struct ObservedStream {
  std::vector<ObservedSample> samples;
  WindowConfig windows;  // effective windows
  std::vector<std::string> warnings;
};

// Builds the time-ordered training stream. Ties on ingestion time are
// broken by click_id, then kind, then replay flag. `clicks` must be ordered
// by click_time.
ObservedStream build_observed_stream(std::span<const ClickEvent> clicks,
                                     Mechanism mechanism,
                                     const WindowConfig& windows);

std::size_t ingestion_count(Mechanism mechanism, const ClickEvent& click,
                            const WindowConfig& windows);

}  // namespace dflab

#endif  // DFLAB_PIPELINES_HPP_
