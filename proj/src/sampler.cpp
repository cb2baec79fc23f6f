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

#include "cw2v/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cw2v {

namespace {

std::vector<std::uint64_t> counts_of(const Vocabulary& vocab) {
  std::vector<std::uint64_t> counts;
  counts.reserve(vocab.size());
  for (const auto& e : vocab.entries()) counts.push_back(e.count);
  return counts;
}

}  // namespace

NoiseTable::NoiseTable(const Vocabulary& vocab, double exponent)
    : NoiseTable(counts_of(vocab), exponent) {}

NoiseTable::NoiseTable(std::span<const std::uint64_t> counts, double exponent) {
  if (counts.empty()) throw std::invalid_argument("noise table needs a non-empty vocabulary");
  probability_.resize(counts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) throw std::invalid_argument("noise table: zero count");
    probability_[i] = std::pow(static_cast<double>(counts[i]), exponent);
    total += probability_[i];
  }
  cdf_.resize(counts.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    probability_[i] /= total;
    acc += probability_[i];
    cdf_[i] = acc;
  }
  // Rounding may leave the last entry a hair below 1.
  cdf_.back() = 1.0;

  const std::size_t m = cdf_.size();
  guide_.resize(m + 1);
  for (std::size_t k = 0; k <= m; ++k) {
    const double edge = static_cast<double>(k) / static_cast<double>(m);
    guide_[k] = static_cast<std::uint32_t>(std::upper_bound(cdf_.begin(), cdf_.end(), edge) -
                                           cdf_.begin());
  }
}

WordId NoiseTable::lookup(double u) const {
  // The guide narrows the search to the buckets around u; the result is the
  // same as a full upper_bound. One bucket of slack on each side absorbs
  // rounding in u * m.
  const std::size_t m = cdf_.size();
  const auto k = static_cast<std::size_t>(std::clamp(u, 0.0, 1.0) * static_cast<double>(m));
  const std::size_t lo = guide_[k > 0 ? std::min(k - 1, m) : 0];
  const std::size_t hi = guide_[std::min(k + 2, m)];
  auto it = std::upper_bound(cdf_.begin() + lo, cdf_.begin() + hi, u);
  if (it == cdf_.end()) --it;
  return static_cast<WordId>(it - cdf_.begin());
}

std::vector<WordId> draw_negatives(const NoiseTable& table, SeededDraw& draw, WordId exclude,
                                   std::size_t n) {
  if (table.size() < 2) throw std::invalid_argument("negative sampling needs at least two words");
  std::vector<WordId> out(n);
  draw.draw(table, exclude, out);
  return out;
}

}  // namespace cw2v
