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

#pragma once

#include <functional>
#include <span>
#include <stdexcept>

#include "cw2v/messages.hpp"
#include "cw2v/sampler.hpp"
#include "cw2v/store.hpp"
#include "cw2v/transport.hpp"

namespace cw2v {

/// A request that cannot be applied (bad index, shape mismatch). The store
/// is untouched when this is thrown.
class RequestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Partial dot product over a row slice, accumulated in ascending column
/// order. The oracle uses the same routine.
float partial_dot(std::span<const float> a, std::span<const float> b);

/// Server-side state of one parameter shard: its column slice of every
/// vector plus the shared noise distribution. Holds no per-call state, so
/// a dotprod and its adjust may land on different threads or even on a
/// restarted server.
///
/// dotprod and adjust may run concurrently on any number of threads; the
/// store is updated without locks.
class ShardCore {
 public:
  ShardCore(PartialVectorStore store, NoiseTable noise);

  PartialDotResult dotprod(const DotprodRequest& req) const;
  void adjust(const AdjustRequest& req);

  ShardInfo info() const;
  std::vector<PartialRow> export_rows(const ExportRequest& req) const;

  /// Decodes one request frame and builds its response. Never throws for
  /// bad input: malformed or invalid requests produce an ERROR frame.
  Frame handle(const Frame& request);

  PartialVectorStore& store() { return store_; }
  const PartialVectorStore& store() const { return store_; }
  const NoiseTable& noise() const { return noise_; }

  /// Called with each (input, context) pair's negatives as they are drawn.
  /// For replay checks only; install before serving traffic.
  using NegativeObserver = std::function<void(OpCode, std::span<const WordId>)>;
  void set_negative_observer(NegativeObserver obs) { observer_ = std::move(obs); }

 private:
  void validate(const std::vector<WordId>& inputs, const std::vector<std::vector<WordId>>& contexts,
                std::uint32_t negatives) const;

  PartialVectorStore store_;
  NoiseTable noise_;
  NegativeObserver observer_;
};

}  // namespace cw2v
