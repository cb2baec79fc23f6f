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

#include "cw2v/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "cw2v/random.hpp"

namespace cw2v {

namespace {

double norm2(std::span<const float> a) {
  double s = 0.0;
  for (float x : a) s += double{x} * double{x};
  return s;
}

double norm(std::span<const float> a) { return std::sqrt(norm2(a)); }

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += double{a[j]} * double{b[j]};
  return s;
}

bool ranks_before(const Neighbor& x, const Neighbor& y) {
  if (x.score != y.score) return x.score > y.score;
  return x.word < y.word;
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

}  // namespace

EmbeddingSet::EmbeddingSet(std::vector<std::string> words, DenseMatrix vectors)
    : words_(std::move(words)), vectors_(std::move(vectors)) {
  if (words_.size() != vectors_.rows) throw std::invalid_argument("one vector per word required");
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], i).second) {
      throw std::invalid_argument("duplicate word '" + words_[i] + "' in embedding set");
    }
  }
}

EmbeddingSet EmbeddingSet::from_vocabulary(const Vocabulary& vocab, DenseMatrix vectors) {
  std::vector<std::string> words;
  words.reserve(vocab.size());
  for (const auto& e : vocab.entries()) words.push_back(e.word);
  return EmbeddingSet(std::move(words), std::move(vectors));
}

EmbeddingSet EmbeddingSet::load(const std::filesystem::path& path) {
  TextVectors tv = load_text_vectors(path);
  return EmbeddingSet(std::move(tv.words), std::move(tv.vectors));
}

std::optional<std::size_t> EmbeddingSet::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine of vectors with different sizes");
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na == 0.0 || nb == 0.0) throw UndefinedSimilarityError("cosine with a zero vector");
  // One sqrt keeps parallel vectors at exactly 1.
  return std::clamp(dot(a, b) / std::sqrt(na * nb), -1.0, 1.0);
}

std::vector<Neighbor> top_k(const EmbeddingSet& set, std::span<const float> query, std::size_t k,
                            std::optional<double> threshold, std::optional<std::size_t> exclude) {
  if (k == 0) throw std::invalid_argument("top_k needs k >= 1");
  if (query.size() != set.dim()) throw std::invalid_argument("query has the wrong dimension");
  const double qn = norm2(query);
  if (qn == 0.0) throw UndefinedSimilarityError("top_k query is a zero vector");
  std::vector<Neighbor> all;
  all.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (exclude && *exclude == i) continue;
    const double n = norm2(set.vector(i));
    if (n == 0.0) continue;
    const double score = std::clamp(dot(query, set.vector(i)) / std::sqrt(qn * n), -1.0, 1.0);
    if (threshold && score < *threshold) continue;
    all.push_back({set.word(i), score});
  }
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    ranks_before);
  all.resize(keep);
  return all;
}

std::vector<Neighbor> top_k(const EmbeddingSet& set, std::string_view query, std::size_t k,
                            std::optional<double> threshold) {
  const auto id = set.find(query);
  if (!id) throw std::out_of_range("'" + std::string(query) + "' is not in the embedding set");
  return top_k(set, set.vector(*id), k, threshold, id);
}

std::vector<Judgment> read_judgments(std::istream& in) {
  std::vector<Judgment> out;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tokens = tokenize(line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    double score = 0.0;
    bool ok = tokens.size() == 3;
    if (ok) {
      auto t = tokens[2];
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), score);
      ok = ec == std::errc() && p == t.data() + t.size() && std::isfinite(score);
    }
    if (!ok) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw std::runtime_error("judgments line " + std::to_string(lineno) + " is malformed");
    }
    first = false;
    out.push_back({std::string(tokens[0]), std::string(tokens[1]), score});
  }
  return out;
}

std::vector<Judgment> load_judgments(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return read_judgments(in);
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("spearman needs two equal-length sequences of 2+ values");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  // Pearson correlation of the ranks handles ties exactly.
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("spearman of a constant sequence");
  return sxy / std::sqrt(sxx * syy);
}

SpearmanResult spearman(const EmbeddingSet& set, std::span<const Judgment> judgments) {
  SpearmanResult r;
  std::vector<double> model, human;
  for (const auto& j : judgments) {
    const auto a = set.find(j.a);
    const auto b = set.find(j.b);
    if (!a || !b) {
      ++r.pairs_skipped;
      continue;
    }
    try {
      model.push_back(cosine(set.vector(*a), set.vector(*b)));
    } catch (const UndefinedSimilarityError&) {
      ++r.pairs_skipped;
      continue;
    }
    human.push_back(j.score);
  }
  r.pairs_used = model.size();
  if (r.pairs_used < 2) {
    throw std::invalid_argument("only " + std::to_string(r.pairs_used) +
                                " judgment pairs are in vocabulary");
  }
  r.rho = spearman_rho(model, human);
  return r;
}

std::vector<AnalogyQuestion> read_analogies(std::istream& in) {
  std::vector<AnalogyQuestion> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = tokenize(line);
    if (t.empty() || t[0].front() == ':') continue;
    if (t.size() != 4) {
      throw std::runtime_error("analogy line " + std::to_string(lineno) + " needs 4 tokens");
    }
    out.push_back({std::string(t[0]), std::string(t[1]), std::string(t[2]), std::string(t[3])});
  }
  return out;
}

std::vector<AnalogyQuestion> load_analogies(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return read_analogies(in);
}

AnalogyResult analogy_accuracy(const EmbeddingSet& set, std::span<const AnalogyQuestion> questions) {
  const std::size_t n = set.size();
  const std::size_t d = set.dim();
  std::vector<double> unit(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = set.vector(i);
    const double len = norm(v);
    if (len == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) unit[i * d + j] = v[j] / len;
  }
  AnalogyResult r;
  std::vector<double> target(d);
  for (const auto& q : questions) {
    const auto a = set.find(q.a), b = set.find(q.b), c = set.find(q.c), want = set.find(q.d);
    if (!a || !b || !c || !want) {
      ++r.skipped;
      continue;
    }
    ++r.used;
    for (std::size_t j = 0; j < d; ++j) {
      target[j] = unit[*b * d + j] - unit[*a * d + j] + unit[*c * d + j];
    }
    // Rows are unit length, so ranking by dot product ranks by cosine.
    std::size_t best = n;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (i == *a || i == *b || i == *c) continue;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += unit[i * d + j] * target[j];
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    if (best == *want) ++r.correct;
  }
  return r;
}

AgreementReport agreement_report(const EmbeddingSet& a, const EmbeddingSet& b,
                                 std::span<const std::pair<std::string, std::string>> pairs) {
  AgreementReport rep;
  const std::size_t bins = static_cast<std::size_t>(std::lround(2.0 / rep.bin_width));
  rep.histogram.assign(bins, 0);
  std::size_t under6 = 0, under10 = 0;
  double sum = 0.0;
  for (const auto& [x, y] : pairs) {
    const auto ax = a.find(x), ay = a.find(y), bx = b.find(x), by = b.find(y);
    if (!ax || !ay || !bx || !by) {
      ++rep.skipped;
      continue;
    }
    double diff = 0.0;
    try {
      diff = std::abs(cosine(a.vector(*ax), a.vector(*ay)) - cosine(b.vector(*bx), b.vector(*by)));
    } catch (const UndefinedSimilarityError&) {
      ++rep.skipped;
      continue;
    }
    ++rep.pairs;
    sum += diff;
    if (diff < 0.06) ++under6;
    if (diff < 0.1) ++under10;
    const auto bin = std::min(bins - 1, static_cast<std::size_t>(diff / rep.bin_width));
    ++rep.histogram[bin];
  }
  if (rep.pairs > 0) {
    const double n = static_cast<double>(rep.pairs);
    rep.below_006 = static_cast<double>(under6) / n;
    rep.below_01 = static_cast<double>(under10) / n;
    rep.mean_abs_diff = sum / n;
  }
  return rep;
}

std::vector<std::pair<std::string, std::string>> sample_pairs(const EmbeddingSet& a,
                                                              const EmbeddingSet& b,
                                                              std::size_t count,
                                                              std::uint64_t seed,
                                                              std::size_t max_rank) {
  std::vector<std::size_t> common;
  const std::size_t limit = max_rank == 0 ? a.size() : std::min(max_rank, a.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (b.find(a.word(i))) common.push_back(i);
  }
  const std::size_t possible = common.size() * (common.size() - (common.empty() ? 0 : 1)) / 2;
  count = std::min(count, possible);
  SplitMix64 rng(seed);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<std::pair<std::string, std::string>> out;
  while (out.size() < count) {
    std::size_t i = common[rng.below(common.size())];
    std::size_t j = common[rng.below(common.size())];
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (!seen.emplace(i, j).second) continue;
    out.emplace_back(a.word(i), a.word(j));
  }
  return out;
}

void print_agreement(std::ostream& out, const AgreementReport& r) {
  out << "pairs compared      " << r.pairs << " (skipped " << r.skipped << ")\n";
  out << std::fixed << std::setprecision(4);
  out << "mean |cos diff|     " << r.mean_abs_diff << '\n';
  out << "fraction < 0.06     " << r.below_006 << '\n';
  out << "fraction < 0.1      " << r.below_01 << '\n';
  out << "histogram (bin " << r.bin_width << ")\n";
  for (std::size_t i = 0; i < r.histogram.size(); ++i) {
    if (r.histogram[i] == 0) continue;
    out << "  [" << i * r.bin_width << ", " << (i + 1) * r.bin_width << ")  " << r.histogram[i]
        << '\n';
  }
  out << std::defaultfloat;
}

}  // namespace cw2v
