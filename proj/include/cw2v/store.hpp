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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cw2v/corpus.hpp"

namespace cw2v {

struct ColumnRange {
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;  // exclusive

  std::uint32_t width() const { return hi - lo; }
  bool operator==(const ColumnRange&) const = default;
};

/// Column partition of [0, dim) into num_shards contiguous ranges whose
/// widths differ by at most one (the first dim % num_shards are wider).
class ShardLayout {
 public:
  ShardLayout(std::uint32_t dim, std::uint32_t num_shards);

  std::uint32_t dim() const { return dim_; }
  std::uint32_t num_shards() const { return static_cast<std::uint32_t>(ranges_.size()); }
  const ColumnRange& range(std::uint32_t shard) const { return ranges_.at(shard); }
  const std::vector<ColumnRange>& ranges() const { return ranges_; }

  bool operator==(const ShardLayout&) const = default;

 private:
  std::uint32_t dim_;
  std::vector<ColumnRange> ranges_;
};

inline ShardLayout make_layout(std::uint32_t dim, std::uint32_t num_shards) {
  return ShardLayout(dim, num_shards);
}

enum class Matrix : std::uint64_t { kInput = 0, kOutput = 1 };

/// Initial value of input-vector component (word, column) for a model of
/// dimension dim: uniform on [-0.5/dim, 0.5/dim], a pure function of the
/// arguments. Output vectors start at zero.
float initial_input_component(std::uint64_t seed, WordId word, std::uint32_t column,
                              std::uint32_t dim);

/// Relaxed single-component access. Shard workers share a store without
/// locks; this only rules out torn floats.
inline float load_component(const float& x) {
  return std::atomic_ref<float>(const_cast<float&>(x)).load(std::memory_order_relaxed);
}
inline void store_component(float& x, float value) {
  std::atomic_ref<float>(x).store(value, std::memory_order_relaxed);
}

/// One shard's slice of every input vector u(w) and output vector v(w).
/// Rows are word ranks; each row holds the shard's width() columns.
class PartialVectorStore {
 public:
  PartialVectorStore(std::uint32_t shard_id, ShardLayout layout, std::size_t vocab_size);

  std::uint32_t shard_id() const { return shard_id_; }
  const ShardLayout& layout() const { return layout_; }
  const ColumnRange& columns() const { return layout_.range(shard_id_); }
  std::uint32_t width() const { return columns().width(); }
  std::size_t vocab_size() const { return vocab_size_; }

  std::span<float> input_row(WordId w) { return {input_.data() + std::size_t{w} * width(), width()}; }
  std::span<const float> input_row(WordId w) const {
    return {input_.data() + std::size_t{w} * width(), width()};
  }
  std::span<float> output_row(WordId w) { return {output_.data() + std::size_t{w} * width(), width()}; }
  std::span<const float> output_row(WordId w) const {
    return {output_.data() + std::size_t{w} * width(), width()};
  }

  std::span<const float> input_data() const { return input_; }
  std::span<const float> output_data() const { return output_; }

  /// True when every component is finite. O(|V| * width).
  bool all_finite() const;

 private:
  std::uint32_t shard_id_;
  ShardLayout layout_;
  std::size_t vocab_size_;
  std::vector<float> input_;
  std::vector<float> output_;
};

PartialVectorStore init_store(std::uint32_t shard_id, const ShardLayout& layout,
                              std::size_t vocab_size, std::uint64_t seed);

struct PartialRow {
  WordId word;
  std::vector<float> values;
};

/// Row slices of words [begin, end), clamped to the vocabulary.
std::vector<PartialRow> export_partials(const PartialVectorStore& store, WordId begin = 0,
                                        WordId end = ~WordId{0}, Matrix matrix = Matrix::kInput);

/// Full |V| x d row-major matrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

  std::span<float> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  bool operator==(const DenseMatrix&) const = default;
};

/// Column-concatenates per-shard exports (indexed by shard id) into full
/// input vectors. Throws if a word is missing from any shard.
DenseMatrix assemble_partials(const ShardLayout& layout, std::size_t vocab_size,
                              const std::vector<std::vector<PartialRow>>& per_shard);

// word2vec text format: "count dim" header, then "word c1 ... cd" per line.
// Floats are written in shortest round-trip form.
void write_text_vectors(std::ostream& out, const Vocabulary& vocab, const DenseMatrix& vectors);
void save_text_vectors(const std::filesystem::path& path, const Vocabulary& vocab,
                       const DenseMatrix& vectors);

struct TextVectors {
  std::vector<std::string> words;
  DenseMatrix vectors;
};
TextVectors read_text_vectors(std::istream& in);
TextVectors load_text_vectors(const std::filesystem::path& path);

}  // namespace cw2v
