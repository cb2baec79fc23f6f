// Copyright 2026 The cw2v Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Request and response payloads exchanged between clients and shards.
// None of them carries vector components except the post-training export.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cw2v/corpus.hpp"
#include "cw2v/store.hpp"

namespace cw2v {

struct DotprodRequest {
  std::vector<WordId> inputs;
  std::vector<std::vector<WordId>> contexts;
  std::uint64_t seed = 0;
  std::uint32_t negatives = 0;

  std::size_t num_pairs() const {
    std::size_t n = 0;
    for (const auto& c : contexts) n += c.size();
    return n;
  }
  bool operator==(const DotprodRequest&) const = default;
};

/// Partial dot products over one shard's columns, in (input, context)
/// row-major order; f_minus holds `negatives` entries per pair.
struct PartialDotResult {
  std::vector<float> f_plus;
  std::vector<float> f_minus;

  bool operator==(const PartialDotResult&) const = default;
};

struct AdjustRequest {
  std::vector<WordId> inputs;
  std::vector<std::vector<WordId>> contexts;
  std::vector<float> g_plus;
  std::vector<float> g_minus;
  std::uint64_t seed = 0;  // must equal the paired dotprod seed
  std::uint32_t negatives = 0;

  bool operator==(const AdjustRequest&) const = default;
};

struct ShardInfo {
  std::uint32_t shard_id = 0;
  std::uint32_t num_shards = 0;
  std::uint32_t dim = 0;
  std::uint32_t col_lo = 0;
  std::uint32_t col_hi = 0;
  std::uint32_t vocab_size = 0;

  bool operator==(const ShardInfo&) const = default;
};

struct ExportRequest {
  WordId begin = 0;
  WordId end = 0;
  Matrix matrix = Matrix::kInput;

  bool operator==(const ExportRequest&) const = default;
};

struct ErrorInfo {
  std::uint32_t code = 0;
  std::string message;

  bool operator==(const ErrorInfo&) const = default;
};

enum ErrorCode : std::uint32_t {
  kErrMalformed = 1,
  kErrInvalidRequest = 2,
  kErrUnsupported = 3,
  kErrInternal = 4,
};

}  // namespace cw2v
