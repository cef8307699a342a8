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

#ifndef DFLAB_INGEST_HPP_
#define DFLAB_INGEST_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dflab/types.hpp"

namespace dflab {

// Layout of a conversion log line:
//   click_ts <d> conv_ts-or-empty <d> numeric... <d> categorical...
struct LogSchema {
  std::size_t n_numeric = 8;
  std::size_t n_categorical = 9;
  std::uint32_t hash_dim = 1u << 18;
  char delimiter = '\t';

  std::size_t n_fields() const { return 2 + n_numeric + n_categorical; }
  // Throws ConfigError.
  void validate() const;
};

inline constexpr std::size_t kNumericBuckets = 64;

// Feature hash: FNV-1a (64-bit) over the column index as 8 little-endian
// bytes followed by the raw value bytes, then the MurmurHash3 fmix64
// finalizer. Stable across runs, platforms and languages.
std::uint64_t hash64(std::size_t column, std::string_view raw);

// hash64 masked to [0, hash_dim). hash_dim must be a power of two.
std::uint32_t hash_feature(std::size_t column, std::string_view raw,
                           std::uint32_t hash_dim);

// One log line before feature encoding. Empty categorical strings and
// disengaged numerics are missing fields.
struct RawRecord {
  Seconds click_ts = 0;
  std::optional<Seconds> conv_ts;
  std::vector<std::optional<double>> numeric;
  std::vector<std::string> categorical;

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

// Throws ParseError on a wrong field count, a malformed timestamp or
// numeric, or a conversion timestamp earlier than the click.
RawRecord parse_record(std::string_view line, const LogSchema& schema);

std::string serialize_record(const RawRecord& record, const LogSchema& schema);

// sign(x) * log1p(|x|)
double transform_numeric(double x);

// Turns raw records into hashed sparse features: one active feature per
// column. Numerics are transformed, bucketized into quantile buckets fitted
// on a training split, and the bucket id is hashed. An unfitted encoder
// hashes the numeric text instead.
class FeatureEncoder {
 public:
  explicit FeatureEncoder(LogSchema schema = {});

  // Freezes per-column quantile cut points computed on `records`.
  void fit(std::span<const RawRecord> records);

  bool fitted() const { return fitted_; }
  const LogSchema& schema() const { return schema_; }
  const std::vector<std::vector<double>>& cut_points() const { return cuts_; }

  std::size_t bucket(std::size_t numeric_column, double raw_value) const;
  FeatureVector encode(const RawRecord& record) const;

 private:
  LogSchema schema_;
  std::vector<std::vector<double>> cuts_;
  bool fitted_ = false;
};

ClickEvent to_click(const RawRecord& record, const FeatureEncoder& encoder);

ClickEvent parse_line(std::string_view line, const LogSchema& schema,
                      const FeatureEncoder& encoder);
ClickEvent parse_line(std::string_view line, const LogSchema& schema);

struct LogReadResult {
  std::vector<RawRecord> records;
  std::size_t n_lines = 0;
  std::size_t n_rejected = 0;
};

// Reads a whole log; files ending in ".gz" are decompressed. Rejected lines
// are counted and the first few are reported on `diagnostics`.
LogReadResult read_log(const std::filesystem::path& path,
                       const LogSchema& schema, std::ostream* diagnostics);

// Writes records one per line; ".gz" paths are gzip-compressed.
void write_log(const std::filesystem::path& path,
               std::span<const RawRecord> records, const LogSchema& schema);

}  // namespace dflab

#endif  // DFLAB_INGEST_HPP_
