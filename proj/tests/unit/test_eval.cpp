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

#include <sstream>

#include "doctest.h"
#include "cw2v/eval.hpp"
#include "support/toy.hpp"

namespace cw2v {
namespace {

EmbeddingSet make_set(std::vector<std::string> words, std::vector<std::vector<float>> rows) {
  DenseMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  return EmbeddingSet(std::move(words), std::move(m));
}

EmbeddingSet random_set(std::size_t n, std::size_t d, std::uint64_t seed) {
  DenseMatrix m(n, d);
  SplitMix64 r(seed);
  testing::fill_uniform(m.data, r, 1.0f);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back("w" + std::to_string(i));
  return EmbeddingSet(std::move(words), std::move(m));
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("cosine basics") {
  const std::vector<float> x{1, 2, 3}, e1{1, 0, 0}, e2{0, 1, 0}, z{0, 0, 0};
  CHECK(cosine(x, x) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine(e1, e2) == 0.0);
  CHECK_THROWS_AS(cosine(x, z), UndefinedSimilarityError);
}

TEST_CASE("cosine matches a long double reference") {
  SplitMix64 r(3);
  for (int i = 0; i < 500; ++i) {
    std::vector<float> a(50), b(50);
    testing::fill_uniform(a, r, 10.0f);
    testing::fill_uniform(b, r, 10.0f);
    long double ab = 0, aa = 0, bb = 0;
    for (int j = 0; j < 50; ++j) {
      ab += (long double)a[j] * b[j];
      aa += (long double)a[j] * a[j];
      bb += (long double)b[j] * b[j];
    }
    CHECK(std::abs(cosine(a, b) - double(ab / std::sqrt(aa * bb))) <= 1e-6);
  }
}

TEST_CASE("top_k ranks, filters and excludes the query") {
  const auto s = make_set({"a", "b", "c", "d", "z"},
                          {{1, 0}, {1, 0.1f}, {0, 1}, {-1, 0}, {0, 0}});
  const auto n = top_k(s, "a", 10);
  REQUIRE(n.size() == 3);  // zero vector skipped
  CHECK(n[0].word == "b");
  CHECK(n[1].word == "c");
  CHECK(n[2].word == "d");
  CHECK(top_k(s, "a", 1).size() == 1);
  CHECK(top_k(s, "a", 10, 1.0).empty());
  CHECK(top_k(s, "a", 10, 0.5).size() == 1);
  CHECK_THROWS_AS(top_k(s, "nope", 3), std::out_of_range);
  CHECK_THROWS_AS(top_k(s, "a", 0), std::invalid_argument);
  CHECK_THROWS_AS(top_k(s, "z", 3), UndefinedSimilarityError);
}

TEST_CASE("ties break by word") {
  const auto s = make_set({"q", "m", "k", "x"}, {{1, 0}, {0, 1}, {0, 1}, {0, 1}});
  const auto n = top_k(s, "q", 3);
  CHECK(n[0].word == "k");
  CHECK(n[1].word == "m");
  CHECK(n[2].word == "x");
}

TEST_CASE("duplicate copies survive tau=1") {
  const auto s = make_set({"a", "b", "c"}, {{1, 2}, {2, 4}, {1, -2}});
  const auto n = top_k(s, "a", 5, 1.0);
  REQUIRE(n.size() == 1);
  CHECK(n[0].word == "b");
}

TEST_CASE("spearman rho") {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{10, 20, 30, 40, 50}, rev{5, 4, 3, 2, 1};
  CHECK(spearman_rho(x, y) == doctest::Approx(1.0));
  CHECK(spearman_rho(x, rev) == doctest::Approx(-1.0));
  // Ties take average ranks: ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4).
  const std::vector<double> t{1, 2, 2, 3}, u{1, 2, 3, 4};
  CHECK(spearman_rho(t, u) == doctest::Approx(0.9486832980505138));
  CHECK_THROWS(spearman_rho(std::vector<double>{1}, std::vector<double>{1}));
}

TEST_CASE("spearman over judgments follows cosine order") {
  const auto s = make_set({"a", "b", "c", "d"}, {{1, 0}, {1, 0.2f}, {1, 1}, {0, 1}});
  std::vector<Judgment> j{{"a", "b", 9}, {"a", "c", 5}, {"a", "d", 1}, {"a", "oov", 3}};
  auto r = spearman(s, j);
  CHECK(r.rho == doctest::Approx(1.0));
  CHECK(r.pairs_used == 3);
  CHECK(r.pairs_skipped == 1);
  for (auto& x : j) x.score = -x.score;
  CHECK(spearman(s, j).rho == doctest::Approx(-1.0));
}

TEST_CASE("judgment and analogy readers") {
  std::istringstream js("# comment\nWord 1\tWord 2\tHuman (mean)\ntiger\tcat\t7.35\nbook paper 7.46\n");
  const auto j = read_judgments(js);
  REQUIRE(j.size() == 2);
  CHECK(j[0].a == "tiger");
  CHECK(j[1].score == 7.46);
  std::istringstream bad("a b 1\nc d x\n");
  CHECK_THROWS(read_judgments(bad));
  std::istringstream as(": capital\nathens greece baghdad iraq\n\nx y z w\n");
  const auto a = read_analogies(as);
  REQUIRE(a.size() == 2);
  CHECK(a[0].d == "iraq");
  std::istringstream short_line("a b c\n");
  CHECK_THROWS(read_analogies(short_line));
}

TEST_CASE("planted analogy is answered and OOV is reported distinctly") {
  const std::vector<float> a{1, 0, 0, 0}, b{1, 1, 0, 0}, c{0, 0, 1, 0};
  std::vector<float> d(4);
  const auto na = 1.0f, nb = std::sqrt(2.0f), nc = 1.0f;
  for (int j = 0; j < 4; ++j) d[j] = b[j] / nb - a[j] / na + c[j] / nc;
  const auto s = make_set({"a", "b", "c", "d", "e"}, {a, b, c, d, {0, 0.3f, 0.2f, 0.9f}});
  const std::vector<AnalogyQuestion> q{{"a", "b", "c", "d"}};
  const auto r = analogy_accuracy(s, q);
  CHECK(r.used == 1);
  CHECK(r.correct == 1);
  CHECK(*r.accuracy() == 1.0);
  const std::vector<AnalogyQuestion> oov{{"x", "b", "c", "d"}, {"a", "b", "c", "y"}};
  const auto o = analogy_accuracy(s, oov);
  CHECK(o.used == 0);
  CHECK(o.skipped == 2);
  CHECK_FALSE(o.accuracy().has_value());
}

TEST_CASE("agreement of a set with itself is total") {
  const auto s = random_set(100, 20, 1);
  const auto pairs = sample_pairs(s, s, 500, 3);
  REQUIRE(pairs.size() == 500);
  const auto rep = agreement_report(s, s, pairs);
  CHECK(rep.pairs == 500);
  CHECK(rep.below_006 == 1.0);
  CHECK(rep.below_01 == 1.0);
  CHECK(rep.histogram[0] == 500);
}

TEST_CASE("independent random sets agree poorly") {
  const auto a = random_set(200, 10, 1), b = random_set(200, 10, 2);
  const auto rep = agreement_report(a, b, sample_pairs(a, b, 2000, 4));
  MESSAGE("random-set agreement below 0.1: " << rep.below_01);
  CHECK(rep.below_01 < 0.5);
  CHECK(rep.mean_abs_diff > 0.1);
}

TEST_CASE("pair sampling is distinct, seeded and bounded") {
  const auto a = random_set(10, 3, 1);
  const auto all = sample_pairs(a, a, 1000, 5);
  CHECK(all.size() == 45);
  CHECK(sample_pairs(a, a, 20, 5) == sample_pairs(a, a, 20, 5));
  const auto top = sample_pairs(a, a, 100, 5, 4);
  CHECK(top.size() == 6);
}

}  // TEST_SUITE

}  // namespace cw2v
