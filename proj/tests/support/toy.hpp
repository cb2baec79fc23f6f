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

// Synthetic corpora and small helpers shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cw2v/corpus.hpp"
#include "cw2v/random.hpp"
#include "cw2v/sampler.hpp"
#include "cw2v/store.hpp"

namespace cw2v::testing {

struct ToyData {
  std::vector<std::vector<std::string>> text;
  Vocabulary vocab;
  IndexedCorpus corpus;
};

/// Zipf-distributed words "w0".."w{V-1}" in sentences of 3 to 30 tokens.
inline ToyData zipf_corpus(std::size_t vocab_size, std::size_t tokens, std::uint64_t seed,
                           std::uint64_t min_count = 1) {
  std::vector<double> cdf(vocab_size);
  double acc = 0.0;
  for (std::size_t i = 0; i < vocab_size; ++i) {
    acc += 1.0 / static_cast<double>(i + 1);
    cdf[i] = acc;
  }
  for (auto& c : cdf) c /= acc;
  SplitMix64 rng(seed);
  ToyData d;
  std::size_t made = 0;
  while (made < tokens) {
    const std::size_t len = std::min<std::size_t>(3 + rng.below(28), tokens - made);
    std::vector<std::string> s;
    for (std::size_t i = 0; i < len; ++i) {
      const double u = rng.uniform();
      const auto w = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
      s.push_back("w" + std::to_string(std::min<std::size_t>(w, vocab_size - 1)));
    }
    made += len;
    d.text.push_back(std::move(s));
  }
  d.vocab = build_vocabulary(d.text, min_count);
  d.corpus = preprocess(d.text, d.vocab);
  return d;
}

/// Two topics of ten words each; every sentence draws from one topic only.
inline ToyData cluster_corpus(std::size_t sentences, std::uint64_t seed) {
  SplitMix64 rng(seed);
  ToyData d;
  for (std::size_t i = 0; i < sentences; ++i) {
    const char topic = (i % 2 == 0) ? 'a' : 'b';
    std::vector<std::string> s;
    const std::size_t len = 6 + rng.below(6);
    for (std::size_t j = 0; j < len; ++j) {
      s.push_back(std::string(1, topic) + std::to_string(rng.below(10)));
    }
    d.text.push_back(std::move(s));
  }
  d.vocab = build_vocabulary(d.text, 1);
  d.corpus = preprocess(d.text, d.vocab);
  return d;
}

inline std::string join_text(const std::vector<std::vector<std::string>>& text) {
  std::ostringstream out;
  for (const auto& s : text) {
    for (std::size_t i = 0; i < s.size(); ++i) out << (i ? " " : "") << s[i];
    out << '\n';
  }
  return out.str();
}

/// Random minibatch over [0, vocab) with 1..max_ctx contexts per input.
inline Minibatch random_batch(SplitMix64& rng, std::size_t vocab, std::size_t inputs,
                              std::size_t max_ctx) {
  Minibatch b;
  for (std::size_t i = 0; i < inputs; ++i) {
    b.inputs.push_back(static_cast<WordId>(rng.below(vocab)));
    std::vector<WordId> ctx(1 + rng.below(max_ctx));
    for (auto& w : ctx) w = static_cast<WordId>(rng.below(vocab));
    b.contexts.push_back(std::move(ctx));
  }
  return b;
}

/// Fills a matrix with uniform values in [-scale, scale].
inline void fill_uniform(std::span<float> data, SplitMix64& rng, float scale) {
  for (auto& x : data) x = static_cast<float>((rng.uniform() * 2.0 - 1.0) * scale);
}

inline Vocabulary counts_vocabulary(const std::vector<std::uint64_t>& counts) {
  std::vector<VocabEntry> entries;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "t%03zu", i);
    entries.push_back({name, counts[i]});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.word < b.word;
  });
  return Vocabulary(std::move(entries));
}

}  // namespace cw2v::testing
