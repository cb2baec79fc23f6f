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

// Embedding quality metrics. All scores use input vectors only and compare
// tokens byte for byte.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cw2v/corpus.hpp"
#include "cw2v/store.hpp"

namespace cw2v {

class UndefinedSimilarityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class EmbeddingSet {
 public:
  EmbeddingSet(std::vector<std::string> words, DenseMatrix vectors);
  static EmbeddingSet from_vocabulary(const Vocabulary& vocab, DenseMatrix vectors);
  static EmbeddingSet load(const std::filesystem::path& path);

  std::size_t size() const { return words_.size(); }
  std::size_t dim() const { return vectors_.cols; }
  const std::string& word(std::size_t i) const { return words_[i]; }
  const std::vector<std::string>& words() const { return words_; }
  std::span<const float> vector(std::size_t i) const { return vectors_.row(i); }
  std::optional<std::size_t> find(std::string_view token) const;

 private:
  std::vector<std::string> words_;
  DenseMatrix vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Throws UndefinedSimilarityError if either vector has zero norm.
double cosine(std::span<const float> a, std::span<const float> b);

struct Neighbor {
  std::string word;
  double score = 0.0;
  bool operator==(const Neighbor&) const = default;
};

/// Highest-cosine words, descending, ties by token. The query word itself is
/// excluded. Zero vectors in the set are skipped.
std::vector<Neighbor> top_k(const EmbeddingSet& set, std::string_view query, std::size_t k,
                            std::optional<double> threshold = std::nullopt);
std::vector<Neighbor> top_k(const EmbeddingSet& set, std::span<const float> query, std::size_t k,
                            std::optional<double> threshold = std::nullopt,
                            std::optional<std::size_t> exclude = std::nullopt);

struct Judgment {
  std::string a;
  std::string b;
  double score = 0.0;
};

/// Tab- or space-separated "word word score". '#' lines and a leading
/// non-numeric header are skipped.
std::vector<Judgment> read_judgments(std::istream& in);
std::vector<Judgment> load_judgments(const std::filesystem::path& path);

/// Spearman rho with average ranks for ties.
double spearman_rho(std::span<const double> x, std::span<const double> y);

struct SpearmanResult {
  double rho = 0.0;
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;  // OOV or zero vector
};

/// Throws std::invalid_argument when fewer than two pairs are usable.
SpearmanResult spearman(const EmbeddingSet& set, std::span<const Judgment> judgments);

struct AnalogyQuestion {
  std::string a, b, c, d;
};

/// Four tokens per line; ':' lines are section headers.
std::vector<AnalogyQuestion> read_analogies(std::istream& in);
std::vector<AnalogyQuestion> load_analogies(const std::filesystem::path& path);

struct AnalogyResult {
  std::size_t correct = 0;
  std::size_t used = 0;
  std::size_t skipped = 0;  // some word out of vocabulary
  /// Fraction correct; empty when no question was usable.
  std::optional<double> accuracy() const {
    if (used == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(used);
  }
};

/// argmax over the full vocabulary (minus a, b, c) of cos(x, b - a + c)
/// with unit-normalized inputs.
AnalogyResult analogy_accuracy(const EmbeddingSet& set, std::span<const AnalogyQuestion> questions);

struct AgreementReport {
  std::size_t pairs = 0;
  std::size_t skipped = 0;
  double bin_width = 0.02;
  std::vector<std::size_t> histogram;  // |cos_a - cos_b| in bins of bin_width, last bin open
  double below_006 = 0.0;
  double below_01 = 0.0;
  double mean_abs_diff = 0.0;
};

AgreementReport agreement_report(const EmbeddingSet& a, const EmbeddingSet& b,
                                 std::span<const std::pair<std::string, std::string>> pairs);

/// Distinct unordered pairs of words present in both sets, drawn uniformly
/// from the first `max_rank` words of `a` (0: all).
std::vector<std::pair<std::string, std::string>> sample_pairs(const EmbeddingSet& a,
                                                              const EmbeddingSet& b,
                                                              std::size_t count,
                                                              std::uint64_t seed,
                                                              std::size_t max_rank = 0);

void print_agreement(std::ostream& out, const AgreementReport& report);

}  // namespace cw2v
