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

#ifndef DFLAB_ERROR_HPP_
#define DFLAB_ERROR_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dflab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A sample or click violates a taxonomy invariant. Always a pipeline bug.
class InvalidSampleError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or parameter encountered during training.
class NumericFault : public Error {
 public:
  NumericFault(const std::string& what, std::uint64_t sample_id)
      : Error(what + " (sample " + std::to_string(sample_id) + ")"),
        sample_id_(sample_id) {}

  std::uint64_t sample_id() const { return sample_id_; }

 private:
  std::uint64_t sample_id_;
};

}  // namespace dflab

#endif  // DFLAB_ERROR_HPP_
