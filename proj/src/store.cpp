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

#include "cw2v/store.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cw2v/random.hpp"

namespace cw2v {

ShardLayout::ShardLayout(std::uint32_t dim, std::uint32_t num_shards) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("dimension must be >= 1");
  if (num_shards == 0 || num_shards > dim) {
    throw std::invalid_argument("shard count must be in [1, dim], got " + std::to_string(num_shards));
  }
  const std::uint32_t base = dim / num_shards;
  const std::uint32_t extra = dim % num_shards;
  std::uint32_t lo = 0;
  ranges_.reserve(num_shards);
  for (std::uint32_t s = 0; s < num_shards; ++s) {
    const std::uint32_t w = base + (s < extra ? 1 : 0);
    ranges_.push_back({lo, lo + w});
    lo += w;
  }
}

float initial_input_component(std::uint64_t seed, WordId word, std::uint32_t column,
                              std::uint32_t dim) {
  const std::uint64_t bits =
      derive_seed({seed, static_cast<std::uint64_t>(Matrix::kInput), word, column});
  // 24 random bits: exactly representable, so (u - 0.5) is exact.
  const float u = static_cast<float>(bits >> 40) * 0x1.0p-24f;
  return (u - 0.5f) / static_cast<float>(dim);
}

PartialVectorStore::PartialVectorStore(std::uint32_t shard_id, ShardLayout layout,
                                       std::size_t vocab_size)
    : shard_id_(shard_id), layout_(std::move(layout)), vocab_size_(vocab_size) {
  if (shard_id_ >= layout_.num_shards()) {
    throw std::invalid_argument("shard id " + std::to_string(shard_id_) + " outside layout");
  }
  input_.assign(vocab_size_ * width(), 0.0f);
  output_.assign(vocab_size_ * width(), 0.0f);
}

bool PartialVectorStore::all_finite() const {
  for (float x : input_) {
    if (!std::isfinite(x)) return false;
  }
  for (float x : output_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

PartialVectorStore init_store(std::uint32_t shard_id, const ShardLayout& layout,
                              std::size_t vocab_size, std::uint64_t seed) {
  PartialVectorStore store(shard_id, layout, vocab_size);
  const auto cols = store.columns();
  for (std::size_t w = 0; w < vocab_size; ++w) {
    auto row = store.input_row(static_cast<WordId>(w));
    for (std::uint32_t j = 0; j < cols.width(); ++j) {
      row[j] = initial_input_component(seed, static_cast<WordId>(w), cols.lo + j, layout.dim());
    }
  }
  return store;
}

std::vector<PartialRow> export_partials(const PartialVectorStore& store, WordId begin, WordId end,
                                        Matrix matrix) {
  const auto limit = static_cast<WordId>(store.vocab_size());
  end = std::min(end, limit);
  std::vector<PartialRow> rows;
  for (WordId w = begin; w < end; ++w) {
    auto src = matrix == Matrix::kInput ? store.input_row(w) : store.output_row(w);
    PartialRow row{w, std::vector<float>(src.size())};
    for (std::size_t j = 0; j < src.size(); ++j) row.values[j] = load_component(src[j]);
    rows.push_back(std::move(row));
  }
  return rows;
}

DenseMatrix assemble_partials(const ShardLayout& layout, std::size_t vocab_size,
                              const std::vector<std::vector<PartialRow>>& per_shard) {
  if (per_shard.size() != layout.num_shards()) {
    throw std::invalid_argument("expected one export per shard");
  }
  DenseMatrix full(vocab_size, layout.dim());
  for (std::uint32_t s = 0; s < layout.num_shards(); ++s) {
    const auto& range = layout.range(s);
    std::vector<bool> seen(vocab_size, false);
    for (const auto& row : per_shard[s]) {
      if (row.word >= vocab_size || row.values.size() != range.width()) {
        throw std::runtime_error("shard " + std::to_string(s) + " exported a malformed row");
      }
      std::copy(row.values.begin(), row.values.end(), full.row(row.word).begin() + range.lo);
      seen[row.word] = true;
    }
    for (std::size_t w = 0; w < vocab_size; ++w) {
      if (!seen[w]) {
        throw std::runtime_error("shard " + std::to_string(s) + " missing word " + std::to_string(w));
      }
    }
  }
  return full;
}

void write_text_vectors(std::ostream& out, const Vocabulary& vocab, const DenseMatrix& vectors) {
  if (vectors.rows != vocab.size()) throw std::invalid_argument("vector rows != vocabulary size");
  out << vectors.rows << ' ' << vectors.cols << '\n';
  char buf[64];
  for (std::size_t w = 0; w < vectors.rows; ++w) {
    out << vocab.word(static_cast<WordId>(w));
    for (float x : vectors.row(w)) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
      out << ' ';
      out.write(buf, end - buf);
    }
    out << '\n';
  }
}

void save_text_vectors(const std::filesystem::path& path, const Vocabulary& vocab,
                       const DenseMatrix& vectors) {
  // Write to a sibling file first so readers never see a partial export.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    write_text_vectors(out, vocab, vectors);
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TextVectors read_text_vectors(std::istream& in) {
  std::size_t rows = 0, cols = 0;
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("vectors: missing header");
  {
    std::istringstream hs(header);
    if (!(hs >> rows >> cols) || cols == 0) throw std::runtime_error("vectors: bad header");
  }
  TextVectors result;
  result.vectors = DenseMatrix(rows, cols);
  result.words.reserve(rows);
  std::string line;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw std::runtime_error("vectors: expected " + std::to_string(rows) + " rows");
    auto tokens = tokenize(line);
    if (tokens.size() != cols + 1) {
      throw std::runtime_error("vectors: row " + std::to_string(r) + " has wrong column count");
    }
    result.words.emplace_back(tokens[0]);
    auto row = result.vectors.row(r);
    for (std::size_t j = 0; j < cols; ++j) {
      auto tok = tokens[j + 1];
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), row[j]);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw std::runtime_error("vectors: bad float '" + std::string(tok) + "'");
      }
    }
  }
  return result;
}

TextVectors load_text_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_text_vectors(in);
}

}  // namespace cw2v
