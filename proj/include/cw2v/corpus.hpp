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
#include <filesystem>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cw2v {

using WordId = std::uint32_t;

struct VocabEntry {
  std::string word;
  std::uint64_t count = 0;

  bool operator==(const VocabEntry&) const = default;
};

class EmptyVocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Frequency-ordered vocabulary. Index i is the word's rank: counts are
/// non-increasing, equal counts ordered by token bytes.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Validates ordering and uniqueness; throws std::invalid_argument.
  explicit Vocabulary(std::vector<VocabEntry> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<VocabEntry>& entries() const { return entries_; }
  const VocabEntry& operator[](WordId id) const { return entries_[id]; }
  const std::string& word(WordId id) const { return entries_[id].word; }
  std::uint64_t count(WordId id) const { return entries_[id].count; }
  std::uint64_t total_count() const { return total_count_; }

  std::optional<WordId> find(std::string_view token) const;

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, WordId> index_;
  std::uint64_t total_count_ = 0;
};

/// Whitespace tokens of one line; a newline ends a sentence.
std::vector<std::string_view> tokenize(std::string_view line);

/// Calls fn(tokens) once per input line.
template <typename Fn>
void for_each_sentence(std::istream& in, Fn&& fn);

class VocabularyBuilder {
 public:
  void add(std::string_view token);
  void add_sentence(const std::vector<std::string_view>& tokens) {
    for (auto t : tokens) add(t);
  }
  void add_text(std::istream& in);

  /// Drops words below min_count, then keeps the max_vocab most frequent.
  /// Throws EmptyVocabularyError when nothing survives.
  Vocabulary build(std::uint64_t min_count,
                   std::optional<std::size_t> max_vocab = std::nullopt) const;

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
};

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& sentences,
                            std::uint64_t min_count,
                            std::optional<std::size_t> max_vocab = std::nullopt);

struct IndexedCorpus {
  std::vector<std::vector<WordId>> sentences;
  std::uint64_t total_tokens = 0;

  bool operator==(const IndexedCorpus&) const = default;
};

struct PreprocessStats {
  std::uint64_t retained = 0;
  std::uint64_t dropped_oov = 0;
  std::uint64_t dropped_sentences = 0;
};

/// Maps tokens to ranks. OOV tokens are dropped, sentences that end up
/// empty are omitted.
IndexedCorpus preprocess(const std::vector<std::vector<std::string>>& sentences,
                         const Vocabulary& vocab, PreprocessStats* stats = nullptr);
IndexedCorpus preprocess(std::istream& in, const Vocabulary& vocab,
                         PreprocessStats* stats = nullptr);

struct WindowSpec {
  std::uint32_t max_window = 5;      // B
  double subsample_threshold = 0.0;  // t; 0 disables subsampling
  std::uint64_t rng_seed = 0;
};

/// min(1, (sqrt(f/t) + 1) * t / f) with f = count / total; 1 when t == 0.
double keep_probability(std::uint64_t count, std::uint64_t total, double threshold);

/// Expected number of tokens surviving one subsampling pass over a corpus
/// whose counts match the vocabulary.
double expected_kept_tokens(const Vocabulary& vocab, double threshold);

/// Drops each occurrence independently with 1 - keep_probability, using
/// corpus frequencies from the vocabulary.
IndexedCorpus subsample(const IndexedCorpus& corpus, const Vocabulary& vocab,
                        const WindowSpec& spec);

struct Minibatch {
  std::vector<WordId> inputs;                 // W_input
  std::vector<std::vector<WordId>> contexts;  // W_output, parallel to inputs
  std::uint64_t batch_id = 0;

  std::size_t num_pairs() const;
  bool operator==(const Minibatch&) const = default;
};

/// Every position of every sentence with at least two tokens becomes one
/// input word. Windows are drawn per position in corpus order, so the
/// interleaving only changes how inputs are grouped, not their contexts.
std::vector<Minibatch> make_minibatches(const IndexedCorpus& corpus, const WindowSpec& spec,
                                        std::size_t batch_size, bool interleaved);

/// Number of tokens make_minibatches turns into input words.
std::uint64_t trainable_tokens(const IndexedCorpus& corpus);

/// Splits sentences into `parts` contiguous groups of roughly equal token
/// count. Always returns exactly `parts` corpora (some possibly empty).
std::vector<IndexedCorpus> partition_corpus(const IndexedCorpus& corpus, std::size_t parts);

// File formats.
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(std::istream& in);
void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::filesystem::path& path);

inline constexpr char kIndexedCorpusMagic[8] = {'W', '2', 'V', 'I', 'D', 'X', '1', '\0'};
inline constexpr std::uint32_t kSentenceSentinel = 0xFFFFFFFFu;

void write_indexed_corpus(std::ostream& out, const IndexedCorpus& corpus);
IndexedCorpus read_indexed_corpus(std::istream& in);
void save_indexed_corpus(const std::filesystem::path& path, const IndexedCorpus& corpus);
IndexedCorpus load_indexed_corpus(const std::filesystem::path& path);

// --- template implementation ---

template <typename Fn>
void for_each_sentence(std::istream& in, Fn&& fn) {
  std::string line;
  while (std::getline(in, line)) {
    fn(tokenize(line));
  }
}

}  // namespace cw2v
