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

#include <cstdint>
#include <span>
#include <vector>

#include "cw2v/corpus.hpp"
#include "cw2v/random.hpp"

namespace cw2v {

inline constexpr double kNoiseExponent = 0.75;

/// Unigram^0.75 noise distribution as a cumulative table. Immutable after
/// construction and safe to share between threads.
class NoiseTable {
 public:
  explicit NoiseTable(const Vocabulary& vocab, double exponent = kNoiseExponent);
  explicit NoiseTable(std::span<const std::uint64_t> counts, double exponent = kNoiseExponent);

  std::size_t size() const { return probability_.size(); }
  double probability(WordId w) const { return probability_[w]; }
  const std::vector<double>& probabilities() const { return probability_; }

  /// Smallest w with cdf[w] > u, for u in [0, 1).
  WordId lookup(double u) const;

 private:
  std::vector<double> probability_;
  std::vector<double> cdf_;
  std::vector<std::uint32_t> guide_;  // guide_[k] = upper_bound(cdf_, k / size)
};

/// Negative draws for one RPC. Constructed from the broadcast seed; every
/// shard and both calls of a dotprod/adjust pair walk the same sequence as
/// long as they draw in the same (input, context) order.
class SeededDraw {
 public:
  explicit SeededDraw(std::uint64_t seed) : rng_(seed) {}

  /// One index distributed as the table, redrawn while it equals `exclude`.
  /// Needs at least two words in the table.
  WordId next(const NoiseTable& table, WordId exclude) {
    for (;;) {
      const WordId w = table.lookup(rng_.uniform());
      if (w != exclude) return w;
    }
  }

  /// Fills `out` with out.size() negatives for positive word `exclude`.
  void draw(const NoiseTable& table, WordId exclude, std::span<WordId> out) {
    for (auto& w : out) w = next(table, exclude);
  }

 private:
  SplitMix64 rng_;
};

std::vector<WordId> draw_negatives(const NoiseTable& table, SeededDraw& draw, WordId exclude,
                                   std::size_t n);

}  // namespace cw2v
