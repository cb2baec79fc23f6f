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

#include "cw2v/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cw2v/random.hpp"

namespace cw2v {

namespace {

bool rank_before(const VocabEntry& a, const VocabEntry& b) {
  if (a.count != b.count) return a.count > b.count;
  return a.word < b.word;
}

constexpr std::uint64_t kSubsampleStream = 1;
constexpr std::uint64_t kWindowStream = 2;

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw std::runtime_error("indexed corpus: truncated header");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
  if (entries_.size() >= kSentenceSentinel) {
    throw std::invalid_argument("vocabulary too large for 32-bit word ids");
  }
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.count == 0) throw std::invalid_argument("vocabulary entry with zero count: " + e.word);
    if (i > 0 && !rank_before(entries_[i - 1], e)) {
      throw std::invalid_argument("vocabulary not in rank order at '" + e.word + "'");
    }
    if (!index_.emplace(e.word, static_cast<WordId>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary word: " + e.word);
    }
    total_count_ += e.count;
  }
}

std::optional<WordId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
  };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

void VocabularyBuilder::add(std::string_view token) {
  auto it = counts_.find(std::string(token));
  if (it == counts_.end()) {
    counts_.emplace(std::string(token), 1);
  } else {
    ++it->second;
  }
}

void VocabularyBuilder::add_text(std::istream& in) {
  for_each_sentence(in, [this](const std::vector<std::string_view>& tokens) { add_sentence(tokens); });
}

Vocabulary VocabularyBuilder::build(std::uint64_t min_count,
                                    std::optional<std::size_t> max_vocab) const {
  if (min_count == 0) throw std::invalid_argument("min_count must be >= 1");
  std::vector<VocabEntry> entries;
  for (const auto& [word, count] : counts_) {
    if (count >= min_count) entries.push_back({word, count});
  }
  std::sort(entries.begin(), entries.end(), rank_before);
  if (max_vocab && entries.size() > *max_vocab) entries.resize(*max_vocab);
  if (entries.empty()) {
    throw EmptyVocabularyError("no token occurs at least " + std::to_string(min_count) + " times");
  }
  return Vocabulary(std::move(entries));
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& sentences,
                            std::uint64_t min_count, std::optional<std::size_t> max_vocab) {
  VocabularyBuilder builder;
  for (const auto& s : sentences) {
    for (const auto& t : s) builder.add(t);
  }
  return builder.build(min_count, max_vocab);
}

namespace {

template <typename Tokens>
void append_sentence(const Tokens& tokens, const Vocabulary& vocab, IndexedCorpus& out,
                     PreprocessStats& stats) {
  std::vector<WordId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (auto id = vocab.find(t)) {
      ids.push_back(*id);
    } else {
      ++stats.dropped_oov;
    }
  }
  if (ids.empty()) {
    ++stats.dropped_sentences;
    return;
  }
  stats.retained += ids.size();
  out.total_tokens += ids.size();
  out.sentences.push_back(std::move(ids));
}

}  // namespace

IndexedCorpus preprocess(const std::vector<std::vector<std::string>>& sentences,
                         const Vocabulary& vocab, PreprocessStats* stats) {
  if (vocab.empty()) throw EmptyVocabularyError("preprocess needs a non-empty vocabulary");
  IndexedCorpus out;
  PreprocessStats local;
  for (const auto& s : sentences) append_sentence(s, vocab, out, local);
  if (stats) *stats = local;
  return out;
}

IndexedCorpus preprocess(std::istream& in, const Vocabulary& vocab, PreprocessStats* stats) {
  if (vocab.empty()) throw EmptyVocabularyError("preprocess needs a non-empty vocabulary");
  IndexedCorpus out;
  PreprocessStats local;
  for_each_sentence(in, [&](const std::vector<std::string_view>& tokens) {
    append_sentence(tokens, vocab, out, local);
  });
  if (stats) *stats = local;
  return out;
}

double keep_probability(std::uint64_t count, std::uint64_t total, double threshold) {
  if (threshold <= 0.0 || count == 0 || total == 0) return 1.0;
  const double f = static_cast<double>(count) / static_cast<double>(total);
  return std::min(1.0, (std::sqrt(f / threshold) + 1.0) * threshold / f);
}

double expected_kept_tokens(const Vocabulary& vocab, double threshold) {
  double kept = 0.0;
  for (const auto& e : vocab.entries()) {
    kept += static_cast<double>(e.count) * keep_probability(e.count, vocab.total_count(), threshold);
  }
  return kept;
}

IndexedCorpus subsample(const IndexedCorpus& corpus, const Vocabulary& vocab,
                        const WindowSpec& spec) {
  if (spec.subsample_threshold < 0.0) throw std::invalid_argument("subsample threshold must be >= 0");
  if (spec.subsample_threshold == 0.0) return corpus;

  std::vector<double> keep(vocab.size());
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    keep[w] = keep_probability(vocab.count(static_cast<WordId>(w)), vocab.total_count(),
                               spec.subsample_threshold);
  }
  SplitMix64 rng(derive_seed({spec.rng_seed, kSubsampleStream}));
  IndexedCorpus out;
  for (const auto& sentence : corpus.sentences) {
    std::vector<WordId> kept;
    kept.reserve(sentence.size());
    for (WordId w : sentence) {
      if (w >= vocab.size()) throw std::out_of_range("subsample: word id outside vocabulary");
      // Words that are always kept still consume a draw so the stream
      // position depends only on the token position.
      if (rng.uniform() < keep[w]) kept.push_back(w);
    }
    if (!kept.empty()) {
      out.total_tokens += kept.size();
      out.sentences.push_back(std::move(kept));
    }
  }
  return out;
}

std::size_t Minibatch::num_pairs() const {
  std::size_t n = 0;
  for (const auto& c : contexts) n += c.size();
  return n;
}

std::uint64_t trainable_tokens(const IndexedCorpus& corpus) {
  std::uint64_t n = 0;
  for (const auto& s : corpus.sentences) {
    if (s.size() >= 2) n += s.size();
  }
  return n;
}

std::vector<Minibatch> make_minibatches(const IndexedCorpus& corpus, const WindowSpec& spec,
                                        std::size_t batch_size, bool interleaved) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  if (spec.max_window == 0) throw std::invalid_argument("max window must be >= 1");

  // Contexts for every trainable position, drawn in corpus order.
  struct Position {
    WordId input;
    std::vector<WordId> context;
  };
  std::vector<std::vector<Position>> per_sentence;
  SplitMix64 rng(derive_seed({spec.rng_seed, kWindowStream}));
  for (const auto& s : corpus.sentences) {
    if (s.size() < 2) continue;
    std::vector<Position> positions(s.size());
    const auto len = static_cast<std::int64_t>(s.size());
    for (std::int64_t j = 0; j < len; ++j) {
      const auto b = static_cast<std::int64_t>(1 + rng.below(spec.max_window));
      auto& pos = positions[static_cast<std::size_t>(j)];
      pos.input = s[static_cast<std::size_t>(j)];
      for (std::int64_t k = std::max<std::int64_t>(0, j - b); k <= std::min(len - 1, j + b); ++k) {
        if (k != j) pos.context.push_back(s[static_cast<std::size_t>(k)]);
      }
    }
    per_sentence.push_back(std::move(positions));
  }

  std::vector<Minibatch> batches;
  auto open_batch = [&]() -> Minibatch& {
    batches.emplace_back();
    batches.back().batch_id = batches.size() - 1;
    return batches.back();
  };

  if (!interleaved) {
    Minibatch* current = nullptr;
    for (auto& positions : per_sentence) {
      for (auto& p : positions) {
        if (!current || current->inputs.size() == batch_size) current = &open_batch();
        current->inputs.push_back(p.input);
        current->contexts.push_back(std::move(p.context));
      }
    }
    return batches;
  }

  // Round-robin lanes: each lane walks one sentence, a minibatch takes the
  // next position from every active lane.
  struct Lane {
    std::size_t sentence;
    std::size_t pos;
  };
  std::vector<Lane> lanes;
  std::size_t next_sentence = 0;
  auto refill = [&] {
    while (lanes.size() < batch_size && next_sentence < per_sentence.size()) {
      lanes.push_back({next_sentence++, 0});
    }
  };
  refill();
  while (!lanes.empty()) {
    Minibatch& batch = open_batch();
    for (auto& lane : lanes) {
      auto& p = per_sentence[lane.sentence][lane.pos++];
      batch.inputs.push_back(p.input);
      batch.contexts.push_back(std::move(p.context));
    }
    std::erase_if(lanes, [&](const Lane& l) { return l.pos == per_sentence[l.sentence].size(); });
    refill();
  }
  return batches;
}

std::vector<IndexedCorpus> partition_corpus(const IndexedCorpus& corpus, std::size_t parts) {
  if (parts == 0) throw std::invalid_argument("partition count must be >= 1");
  std::vector<IndexedCorpus> out(parts);
  std::uint64_t seen = 0;
  for (const auto& s : corpus.sentences) {
    // Assign by the token offset of the sentence start.
    const auto part = static_cast<std::size_t>(
        corpus.total_tokens == 0 ? 0 : (seen * parts) / corpus.total_tokens);
    auto& target = out[std::min(part, parts - 1)];
    target.sentences.push_back(s);
    target.total_tokens += s.size();
    seen += s.size();
  }
  return out;
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (const auto& e : vocab.entries()) out << e.word << '\t' << e.count << '\n';
}

Vocabulary read_vocabulary(std::istream& in) {
  std::vector<VocabEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) {
      throw std::runtime_error("vocabulary line " + std::to_string(line_no) + ": expected word<TAB>count");
    }
    VocabEntry e;
    e.word = line.substr(0, tab);
    try {
      std::size_t used = 0;
      e.count = std::stoull(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) throw std::invalid_argument("trailing bytes");
    } catch (const std::exception&) {
      throw std::runtime_error("vocabulary line " + std::to_string(line_no) + ": bad count");
    }
    entries.push_back(std::move(e));
  }
  return Vocabulary(std::move(entries));
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_vocabulary(out, vocab);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_vocabulary(in);
}

void write_indexed_corpus(std::ostream& out, const IndexedCorpus& corpus) {
  out.write(kIndexedCorpusMagic, sizeof(kIndexedCorpusMagic));
  put_u64(out, corpus.total_tokens);
  for (const auto& s : corpus.sentences) {
    for (WordId w : s) put_u32(out, w);
    put_u32(out, kSentenceSentinel);
  }
}

IndexedCorpus read_indexed_corpus(std::istream& in) {
  char magic[sizeof(kIndexedCorpusMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      !std::equal(std::begin(magic), std::end(magic), std::begin(kIndexedCorpusMagic))) {
    throw std::runtime_error("indexed corpus: bad magic");
  }
  IndexedCorpus corpus;
  const std::uint64_t declared = get_u64(in);
  std::vector<WordId> current;
  std::uint32_t v = 0;
  while (get_u32(in, v)) {
    if (v == kSentenceSentinel) {
      if (!current.empty()) corpus.sentences.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(v);
      ++corpus.total_tokens;
    }
  }
  if (in.gcount() != 0) throw std::runtime_error("indexed corpus: truncated word id");
  if (!current.empty()) corpus.sentences.push_back(std::move(current));
  if (corpus.total_tokens != declared) {
    throw std::runtime_error("indexed corpus: header declares " + std::to_string(declared) +
                             " tokens, found " + std::to_string(corpus.total_tokens));
  }
  return corpus;
}

void save_indexed_corpus(const std::filesystem::path& path, const IndexedCorpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_indexed_corpus(out, corpus);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

IndexedCorpus load_indexed_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_indexed_corpus(in);
}

}  // namespace cw2v
