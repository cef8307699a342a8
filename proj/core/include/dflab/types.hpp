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

#ifndef DFLAB_TYPES_HPP_
#define DFLAB_TYPES_HPP_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace dflab {

// Simulated time: integer seconds since the per-run epoch.
using Seconds = std::int64_t;

inline constexpr Seconds kSecondsPerHour = 3600;

struct Feature {
  std::uint32_t index = 0;
  double value = 0.0;

  friend bool operator==(const Feature&, const Feature&) = default;
};

// Sparse index/value feature vector over a fixed feature space.
using FeatureVector = std::vector<Feature>;

// A ground-truth click. An absent conversion_delay means the click never
// converts within the attribution window.
struct ClickEvent {
  FeatureVector features;
  Seconds click_time = 0;
  std::optional<Seconds> conversion_delay;
  std::uint64_t click_id = 0;

  bool converts() const { return conversion_delay.has_value(); }
  std::optional<Seconds> conversion_time() const {
    if (!conversion_delay) return std::nullopt;
    return click_time + *conversion_delay;
  }
};

// Throws InvalidSampleError if the click violates its invariants.
void validate(const ClickEvent& click);

// Observation window w_o and attribution window w_a.
class WindowConfig {
 public:
  // Throws ConfigError unless 0 <= observation < attribution.
  WindowConfig(Seconds observation, Seconds attribution);

  Seconds observation() const { return observation_; }
  Seconds attribution() const { return attribution_; }

  friend bool operator==(const WindowConfig&, const WindowConfig&) = default;

 private:
  Seconds observation_;
  Seconds attribution_;
};

enum class SampleKind : std::uint8_t {
  kImmediatePositive,  // IP: converts within the observation window
  kFakeNegative,       // FN: ingested negative, converts later
  kRealNegative,       // RN: never converts within the attribution window
  kDelayedPositive,    // DP: positive replay at conversion time
};

std::string_view to_string(SampleKind kind);

// One training ingestion.
//
// `replay` marks re-ingestions that carry the attributed label after the
// attribution window closes (DEFER duplicates of IP and RN clicks).
struct ObservedSample {
  FeatureVector features;
  std::uint8_t label = 0;
  Seconds ingestion_time = 0;
  SampleKind kind = SampleKind::kRealNegative;
  std::uint64_t click_id = 0;
  bool replay = false;
};

// Throws InvalidSampleError if the kind/label pairing is inconsistent.
void validate(const ObservedSample& sample);

}  // namespace dflab

#endif  // DFLAB_TYPES_HPP_
