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

#ifndef DFLAB_LABELS_HPP_
#define DFLAB_LABELS_HPP_

#include <optional>
#include <vector>

#include "dflab/types.hpp"

namespace dflab {

// Attributed label y from observed label v and conversion delay d:
//   v = 1            -> 1
//   v = 0, d absent  -> 0
//   v = 0, d > w_o   -> 1
// Throws InvalidSampleError for v = 0 with d <= w_o.
int correct_label(int observed_label, std::optional<Seconds> delay,
                  const WindowConfig& windows);

struct Ingestion {
  SampleKind kind;
  Seconds time;

  friend bool operator==(const Ingestion&, const Ingestion&) = default;
};

// Canonical ingestions of one click when the stream only replays delayed
// positives: IP or RN at t0 + w_o, or FN at t0 + w_o followed by DP at t0 + d.
std::vector<Ingestion> classify_ingestions(const ClickEvent& click,
                                           const WindowConfig& windows);

// Ground-truth label implied by a sample kind. Only simulation and
// evaluation code may look at this; learners see the observed label.
inline int attributed_label(SampleKind kind) {
  return kind == SampleKind::kRealNegative ? 0 : 1;
}

}  // namespace dflab

#endif  // DFLAB_LABELS_HPP_
