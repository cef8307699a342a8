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

#include "dflab/ingest.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>

#include "dflab/error.hpp"

namespace dflab {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr std::size_t kMaxReportedRejects = 10;
constexpr std::string_view kMissingSentinel = "\x1f<missing>";

std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

Seconds parse_seconds(std::string_view token, const char* what) {
  Seconds value = 0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc() ||
      ptr != token.data() + token.size()) {
    throw ParseError(std::string("malformed ") + what + " '" +
                     std::string(token) + "'");
  }
  return value;
}

std::string format_double(double value) {
  std::array<char, 32> buffer{};
  const auto result =
      std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), result.ptr);
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

void LogSchema::validate() const {
  if (hash_dim < 2 || !std::has_single_bit(hash_dim)) {
    throw ConfigError("hash_dim must be a power of two >= 2");
  }
}

std::uint64_t hash64(std::size_t column, std::string_view raw) {
  std::uint64_t h = kFnvOffset;
  auto col = static_cast<std::uint64_t>(column);
  for (int i = 0; i < 8; ++i) {
    h ^= (col >> (8 * i)) & 0xffU;
    h *= kFnvPrime;
  }
  for (const char c : raw) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return fmix64(h);
}

std::uint32_t hash_feature(std::size_t column, std::string_view raw,
                           std::uint32_t hash_dim) {
  return static_cast<std::uint32_t>(hash64(column, raw) & (hash_dim - 1));
}

RawRecord parse_record(std::string_view line, const LogSchema& schema) {
  const auto fields = split(line, schema.delimiter);
  if (fields.size() != schema.n_fields()) {
    throw ParseError("expected " + std::to_string(schema.n_fields()) +
                     " fields, got " + std::to_string(fields.size()));
  }
  RawRecord record;
  record.click_ts = parse_seconds(fields[0], "click timestamp");
  if (!fields[1].empty()) {
    record.conv_ts = parse_seconds(fields[1], "conversion timestamp");
    if (*record.conv_ts < record.click_ts) {
      throw ParseError("conversion timestamp precedes click timestamp");
    }
  }
  record.numeric.reserve(schema.n_numeric);
  for (std::size_t i = 0; i < schema.n_numeric; ++i) {
    const std::string_view token = fields[2 + i];
    if (token.empty()) {
      record.numeric.emplace_back();
      continue;
    }
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() ||
        !std::isfinite(value)) {
      throw ParseError("malformed numeric field '" + std::string(token) + "'");
    }
    record.numeric.emplace_back(value);
  }
  record.categorical.reserve(schema.n_categorical);
  for (std::size_t j = 0; j < schema.n_categorical; ++j) {
    record.categorical.emplace_back(fields[2 + schema.n_numeric + j]);
  }
  return record;
}

std::string serialize_record(const RawRecord& record,
                             const LogSchema& schema) {
  std::string line = std::to_string(record.click_ts);
  line += schema.delimiter;
  if (record.conv_ts) line += std::to_string(*record.conv_ts);
  for (const auto& value : record.numeric) {
    line += schema.delimiter;
    if (value) line += format_double(*value);
  }
  for (const auto& value : record.categorical) {
    line += schema.delimiter;
    line += value;
  }
  return line;
}

double transform_numeric(double x) {
  return std::copysign(std::log1p(std::fabs(x)), x);
}

FeatureEncoder::FeatureEncoder(LogSchema schema) : schema_(schema) {
  schema_.validate();
}

void FeatureEncoder::fit(std::span<const RawRecord> records) {
  cuts_.assign(schema_.n_numeric, {});
  std::vector<double> values;
  for (std::size_t c = 0; c < schema_.n_numeric; ++c) {
    values.clear();
    for (const auto& record : records) {
      if (c < record.numeric.size() && record.numeric[c]) {
        values.push_back(transform_numeric(*record.numeric[c]));
      }
    }
    if (values.empty()) continue;
    std::sort(values.begin(), values.end());
    auto& cuts = cuts_[c];
    for (std::size_t j = 1; j < kNumericBuckets; ++j) {
      const std::size_t idx =
          std::min(values.size() - 1, j * values.size() / kNumericBuckets);
      if (cuts.empty() || values[idx] > cuts.back()) {
        cuts.push_back(values[idx]);
      }
    }
  }
  fitted_ = true;
}

std::size_t FeatureEncoder::bucket(std::size_t numeric_column,
                                   double raw_value) const {
  const auto& cuts = cuts_.at(numeric_column);
  const double v = transform_numeric(raw_value);
  return static_cast<std::size_t>(
      std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
}

FeatureVector FeatureEncoder::encode(const RawRecord& record) const {
  FeatureVector features;
  features.reserve(schema_.n_numeric + schema_.n_categorical);
  for (std::size_t c = 0; c < schema_.n_numeric; ++c) {
    std::string token;
    if (c >= record.numeric.size() || !record.numeric[c]) {
      token = kMissingSentinel;
    } else if (fitted_) {
      token = "b" + std::to_string(bucket(c, *record.numeric[c]));
    } else {
      token = "v" + format_double(*record.numeric[c]);
    }
    features.push_back({hash_feature(c, token, schema_.hash_dim), 1.0});
  }
  for (std::size_t j = 0; j < schema_.n_categorical; ++j) {
    const std::size_t column = schema_.n_numeric + j;
    const bool missing =
        j >= record.categorical.size() || record.categorical[j].empty();
    const std::string_view token =
        missing ? kMissingSentinel : std::string_view(record.categorical[j]);
    features.push_back({hash_feature(column, token, schema_.hash_dim), 1.0});
  }
  return features;
}

ClickEvent to_click(const RawRecord& record, const FeatureEncoder& encoder) {
  ClickEvent click;
  click.features = encoder.encode(record);
  click.click_time = record.click_ts;
  if (record.conv_ts) click.conversion_delay = *record.conv_ts - record.click_ts;
  return click;
}

ClickEvent parse_line(std::string_view line, const LogSchema& schema,
                      const FeatureEncoder& encoder) {
  return to_click(parse_record(line, schema), encoder);
}

ClickEvent parse_line(std::string_view line, const LogSchema& schema) {
  return parse_line(line, schema, FeatureEncoder(schema));
}

namespace {

struct GzCloser {
  void operator()(gzFile_s* f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

bool is_gzip_path(const std::filesystem::path& path) {
  return path.extension() == ".gz";
}

template <typename LineFn>
void for_each_line(const std::filesystem::path& path, LineFn&& fn) {
  if (is_gzip_path(path)) {
    GzHandle file(gzopen(path.c_str(), "rb"));
    if (!file) throw ConfigError("cannot open " + path.string());
    std::string line;
    std::array<char, 8192> buffer{};
    while (gzgets(file.get(), buffer.data(), buffer.size()) != nullptr) {
      line += buffer.data();
      if (!line.empty() && line.back() == '\n') {
        line.pop_back();
        fn(strip_cr(std::move(line)));
        line.clear();
      }
    }
    if (!line.empty()) fn(strip_cr(std::move(line)));
    return;
  }
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) fn(strip_cr(std::move(line)));
}

}  // namespace

LogReadResult read_log(const std::filesystem::path& path,
                       const LogSchema& schema, std::ostream* diagnostics) {
  schema.validate();
  LogReadResult result;
  for_each_line(path, [&](std::string line) {
    ++result.n_lines;
    if (line.empty()) {
      ++result.n_rejected;
      return;
    }
    try {
      result.records.push_back(parse_record(line, schema));
    } catch (const ParseError& e) {
      ++result.n_rejected;
      if (diagnostics != nullptr && result.n_rejected <= kMaxReportedRejects) {
        *diagnostics << path.string() << ":" << result.n_lines
                     << ": rejected: " << e.what() << "\n";
      }
    }
  });
  if (diagnostics != nullptr && result.n_rejected > 0) {
    *diagnostics << path.string() << ": " << result.n_rejected << " of "
                 << result.n_lines << " lines rejected\n";
  }
  return result;
}

void write_log(const std::filesystem::path& path,
               std::span<const RawRecord> records, const LogSchema& schema) {
  if (is_gzip_path(path)) {
    GzHandle file(gzopen(path.c_str(), "wb"));
    if (!file) throw ConfigError("cannot write " + path.string());
    for (const auto& record : records) {
      const std::string line = serialize_record(record, schema) + "\n";
      if (gzwrite(file.get(), line.data(),
                  static_cast<unsigned>(line.size())) <= 0) {
        throw ConfigError("gzip write failed for " + path.string());
      }
    }
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (const auto& record : records) {
    out << serialize_record(record, schema) << '\n';
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace dflab
