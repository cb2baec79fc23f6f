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

// Sequential single-process skipgram trainer. It keeps whole vectors in
// plain matrices and does not touch the RPC path, but uses the same
// initialization, negative stream, coefficient rounding and deferred update
// order as the shards. That makes it bit-identical to a one-shard,
// one-thread, batch-size-one distributed run.

#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "cw2v/client.hpp"
#include "cw2v/corpus.hpp"
#include "cw2v/sampler.hpp"
#include "cw2v/store.hpp"

namespace cw2v {

struct FullVectorStore {
  DenseMatrix input;   // U
  DenseMatrix output;  // V
};

FullVectorStore init_full_store(std::size_t vocab_size, std::uint32_t dim, std::uint64_t seed);

/// Per-word update rows for one minibatch, before they are applied.
/// With alpha = 1 these are the gradients of the minibatch objective.
struct OracleDeltas {
  std::map<WordId, std::vector<float>> input;
  std::map<WordId, std::vector<float>> output;
};

OracleDeltas oracle_deltas(const FullVectorStore& store, const Minibatch& batch, double alpha,
                           std::uint64_t seed, const NoiseTable& noise, std::uint32_t negatives);

/// One SGD step: every read sees the pre-step vectors.
void oracle_step(FullVectorStore& store, const Minibatch& batch, double alpha, std::uint64_t seed,
                 const NoiseTable& noise, std::uint32_t negatives);

/// Same epochs, seeds and learning-rate schedule as train() with one thread.
/// config.shards and config.threads are ignored.
FullVectorStore oracle_train(const IndexedCorpus& corpus, const Vocabulary& vocab,
                             const TrainConfig& config);

}  // namespace cw2v
