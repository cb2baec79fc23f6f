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

#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "doctest.h"
#include "cw2v/client.hpp"
#include "cw2v/eval.hpp"
#include "cw2v/oracle.hpp"
#include "support/toy.hpp"

namespace cw2v {
namespace {

// Wraps a LocalChannel and fails chosen calls as a broken transport would.
class FaultyChannel : public ShardChannel {
 public:
  FaultyChannel(ShardCore& core, std::vector<int> fail_calls)
      : inner_(core, nullptr), fail_(std::move(fail_calls)) {}

  std::future<Frame> call(OpCode op, std::vector<std::uint8_t> body) override {
    const int n = calls_++;
    ops_.push_back(op);
    if (std::find(fail_.begin(), fail_.end(), n) != fail_.end()) {
      std::promise<Frame> p;
      p.set_exception(std::make_exception_ptr(ChannelError("injected failure")));
      return p.get_future();
    }
    return inner_.call(op, std::move(body));
  }
  void reconnect() override {
    ++reconnects_;
    if (refuse_reconnect_) throw ChannelError("still down");
  }
  std::string describe() const override { return "faulty"; }

  LocalChannel inner_;
  std::vector<int> fail_;
  int calls_ = 0;
  int reconnects_ = 0;
  bool refuse_reconnect_ = false;
  std::vector<OpCode> ops_;
};

// Answers after a delay on a helper thread; logs completion and send times.
class SlowChannel : public ShardChannel {
 public:
  struct Log {
    std::mutex mu;
    std::vector<std::pair<OpCode, std::chrono::steady_clock::time_point>> sent, done;
  };
  SlowChannel(ShardCore& core, std::chrono::milliseconds delay, Log& log)
      : inner_(core, nullptr), delay_(delay), log_(log) {}

  std::future<Frame> call(OpCode op, std::vector<std::uint8_t> body) override {
    {
      std::lock_guard lock(log_.mu);
      log_.sent.emplace_back(op, std::chrono::steady_clock::now());
    }
    return std::async(std::launch::async, [this, op, body = std::move(body)]() mutable {
      std::this_thread::sleep_for(delay_);
      Frame f = inner_.call(op, std::move(body)).get();
      std::lock_guard lock(log_.mu);
      log_.done.emplace_back(op, std::chrono::steady_clock::now());
      return f;
    });
  }
  void reconnect() override {}
  std::string describe() const override { return "slow"; }

 private:
  LocalChannel inner_;
  std::chrono::milliseconds delay_;
  Log& log_;
};

// Wrong-shaped reply from one shard.
class LyingChannel : public ShardChannel {
 public:
  std::future<Frame> call(OpCode, std::vector<std::uint8_t>) override {
    std::promise<Frame> p;
    p.set_value({OpCode::kResponse, 1, encode_dotprod_response({{1.0f}, {}})});
    return p.get_future();
  }
  void reconnect() override {}
  std::string describe() const override { return "lying"; }
};

std::vector<float> flat(const ShardCore& c) {
  std::vector<float> v(c.store().input_data().begin(), c.store().input_data().end());
  v.insert(v.end(), c.store().output_data().begin(), c.store().output_data().end());
  return v;
}

const Vocabulary& small_vocab() {
  static const Vocabulary v = testing::counts_vocabulary({20, 15, 12, 10, 8, 6, 5, 4, 3, 2});
  return v;
}

// Runs two warm-up steps so V is nonzero, then returns the cluster.
void warm(LocalCluster& c) {
  auto g = c.connect(nullptr);
  train_step(*g, {{0, 1, 2}, {{3, 4}, {5}, {6, 7}}, 0}, 0.5, 1, 2);
  train_step(*g, {{3, 5}, {{0}, {1, 2}}, 1}, 0.5, 2, 2);
}

}  // namespace

TEST_SUITE("client") {

TEST_CASE("sigmoid matches high-precision values") {
  // 25-digit reference values.
  const std::pair<double, double> table[] = {
      {-30, 9.357622968839298953839563e-14}, {-20, 2.061153618190203581430862e-9},
      {-12.5, 0.000003726639284186561386088009}, {-7, 0.0009110511944006453578633238},
      {-3.25, 0.03732688734412946019771417}, {-1, 0.2689414213699951207488408},
      {-0.5, 0.3775406687981454353610994}, {-0.001, 0.499750000020833331244796},
      {0, 0.5}, {0.001, 0.500249999979166668755204},
      {0.5, 0.6224593312018545646389006}, {1, 0.7310585786300048792511592},
      {3.25, 0.9626731126558705398022858}, {7, 0.9990889488055993546421367},
      {12.5, 0.9999962733607158134386139}, {20, 0.9999999979388463818097964},
      {30, 0.9999999999999064237703116},
  };
  for (const auto& [x, y] : table) CHECK(std::abs(sigmoid(x) - y) <= 1e-12);
  CHECK(sigmoid(0.0) == 0.5);
  SplitMix64 r(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = (r.uniform() - 0.5) * 60;
    CHECK(std::abs(sigmoid(x) + sigmoid(-x) - 1.0) <= 1e-15);
    CHECK(log_sigmoid(x) == doctest::Approx(std::log(sigmoid(x))).epsilon(1e-12));
  }
  CHECK(sigmoid(1000) == 1.0);
  CHECK(sigmoid(-1000) == 0.0);
  CHECK(std::isfinite(log_sigmoid(-1000)));
}

TEST_CASE("aggregate partials") {
  const PartialDotResult a{{1, 2}, {}}, b{{3, 4}, {}};
  CHECK(aggregate_partials(std::vector{a}, 1) == a);
  CHECK(aggregate_partials(std::vector{a, b}, 2).f_plus == std::vector<float>{4, 6});
  CHECK_THROWS_AS(aggregate_partials(std::vector{a}, 2), MissingShardError);
  const PartialDotResult c{{1}, {}};
  CHECK_THROWS_AS(aggregate_partials(std::vector{a, c}, 2), ProtocolError);
}

TEST_CASE("coefficients") {
  const auto g = coefficients({{0.0f}, {0.0f, 1e30f}}, 0.025);
  CHECK(g.g_plus[0] == 0.0125f);
  CHECK(g.g_minus[0] == -0.0125f);
  CHECK(g.g_minus[1] == doctest::Approx(-0.025));
  CHECK(coefficients({{1e30f}, {}}, 0.025).g_plus[0] == 0.0f);
}

TEST_CASE("step with alpha=0 leaves the store unchanged") {
  LocalCluster c(small_vocab(), 6, 2, 3);
  warm(c);
  const auto before0 = flat(c.shard(0)), before1 = flat(c.shard(1));
  auto g = c.connect(nullptr);
  train_step(*g, {{0, 1}, {{2, 3}, {4}}, 0}, 0.0, 5, 3);
  CHECK(flat(c.shard(0)) == before0);
  CHECK(flat(c.shard(1)) == before1);
}

TEST_CASE("one step touches only input, context and negative rows") {
  const auto v = testing::counts_vocabulary({5, 3});
  LocalCluster c(v, 2, 1, 7);
  auto& st = c.shard(0).store();
  st.output_row(0)[0] = 0.3f;
  st.output_row(0)[1] = -0.2f;
  st.output_row(1)[0] = 0.1f;
  st.output_row(1)[1] = 0.4f;
  const std::vector<float> u1(st.input_row(1).begin(), st.input_row(1).end());
  const std::vector<float> u0(st.input_row(0).begin(), st.input_row(0).end());
  const std::vector<float> v0(st.output_row(0).begin(), st.output_row(0).end());
  const std::vector<float> v1(st.output_row(1).begin(), st.output_row(1).end());
  auto g = c.connect(nullptr);
  // Input 0, context 1; the only possible negative is word 0.
  train_step(*g, {{0}, {{1}}, 0}, 0.5, 1, 1);
  CHECK(std::equal(u1.begin(), u1.end(), st.input_row(1).begin()));
  CHECK_FALSE(std::equal(u0.begin(), u0.end(), st.input_row(0).begin()));
  CHECK_FALSE(std::equal(v0.begin(), v0.end(), st.output_row(0).begin()));
  CHECK_FALSE(std::equal(v1.begin(), v1.end(), st.output_row(1).begin()));
}

TEST_CASE("step statistics match the meter") {
  LocalCluster c(small_vocab(), 9, 3, 3);
  BandwidthMeter m;
  auto g = c.connect(&m);
  SplitMix64 r(2);
  StepStats sum;
  for (int i = 0; i < 20; ++i) {
    const auto st = train_step(*g, testing::random_batch(r, 10, 4, 4), 0.1, r.next(), 2);
    sum.bytes_sent += st.bytes_sent;
    sum.bytes_received += st.bytes_received;
  }
  CHECK(sum.bytes_sent == m.snapshot().bytes_sent());
  CHECK(sum.bytes_received == m.snapshot().bytes_received());
}

TEST_CASE("dotprod failure retries once with a fresh seed") {
  LocalCluster ref(small_vocab(), 6, 2, 3), faulty(small_vocab(), 6, 2, 3);
  warm(ref);
  warm(faulty);
  const Minibatch mb{{0, 1}, {{2, 3}, {4}}, 0};
  auto rg = ref.connect(nullptr);
  train_step(*rg, mb, 0.3, retry_seed(42), 2);

  std::vector<std::unique_ptr<ShardChannel>> chans;
  chans.push_back(std::make_unique<LocalChannel>(faulty.shard(0), nullptr));
  auto bad = std::make_unique<FaultyChannel>(faulty.shard(1), std::vector<int>{0});
  auto* bad_ptr = bad.get();
  chans.push_back(std::move(bad));
  ShardGroup group(std::move(chans), nullptr);
  const auto st = train_step(group, mb, 0.3, 42, 2);
  CHECK(st.retries == 1);
  CHECK(bad_ptr->reconnects_ == 1);
  CHECK(flat(faulty.shard(0)) == flat(ref.shard(0)));
  CHECK(flat(faulty.shard(1)) == flat(ref.shard(1)));
}

TEST_CASE("adjust failure resends to the failed shard only") {
  LocalCluster ref(small_vocab(), 6, 2, 3), faulty(small_vocab(), 6, 2, 3);
  warm(ref);
  warm(faulty);
  const Minibatch mb{{0, 1}, {{2, 3}, {4}}, 0};
  auto rg = ref.connect(nullptr);
  train_step(*rg, mb, 0.3, 42, 2);

  std::vector<std::unique_ptr<ShardChannel>> chans;
  auto good = std::make_unique<FaultyChannel>(faulty.shard(0), std::vector<int>{});
  auto bad = std::make_unique<FaultyChannel>(faulty.shard(1), std::vector<int>{1});
  auto* good_ptr = good.get();
  auto* bad_ptr = bad.get();
  chans.push_back(std::move(good));
  chans.push_back(std::move(bad));
  ShardGroup group(std::move(chans), nullptr);
  const auto st = train_step(group, mb, 0.3, 42, 2);
  CHECK(st.retries == 1);
  CHECK(good_ptr->ops_ == std::vector<OpCode>{OpCode::kDotprod, OpCode::kAdjust});
  CHECK(bad_ptr->ops_ == std::vector<OpCode>{OpCode::kDotprod, OpCode::kAdjust, OpCode::kAdjust});
  CHECK(flat(faulty.shard(0)) == flat(ref.shard(0)));
  CHECK(flat(faulty.shard(1)) == flat(ref.shard(1)));
}

TEST_CASE("repeated failure aborts training with diagnostics") {
  LocalCluster c(small_vocab(), 6, 2, 3);
  const Minibatch mb{{0}, {{2}}, 0};
  {
    std::vector<std::unique_ptr<ShardChannel>> chans;
    chans.push_back(std::make_unique<FaultyChannel>(c.shard(0), std::vector<int>{0, 1}));
    chans.push_back(std::make_unique<LocalChannel>(c.shard(1), nullptr));
    ShardGroup group(std::move(chans), nullptr);
    CHECK_THROWS_AS(train_step(group, mb, 0.1, 1, 1), TrainingAborted);
  }
  {
    std::vector<std::unique_ptr<ShardChannel>> chans;
    chans.push_back(std::make_unique<FaultyChannel>(c.shard(0), std::vector<int>{1, 2}));
    chans.push_back(std::make_unique<LocalChannel>(c.shard(1), nullptr));
    ShardGroup group(std::move(chans), nullptr);
    CHECK_THROWS_AS(train_step(group, mb, 0.1, 1, 1), TrainingAborted);
  }
  {
    auto down = std::make_unique<FaultyChannel>(c.shard(0), std::vector<int>{0});
    down->refuse_reconnect_ = true;
    std::vector<std::unique_ptr<ShardChannel>> chans;
    chans.push_back(std::move(down));
    chans.push_back(std::make_unique<LocalChannel>(c.shard(1), nullptr));
    ShardGroup group(std::move(chans), nullptr);
    try {
      train_step(group, mb, 0.1, 1, 1);
      FAIL("expected abort");
    } catch (const TrainingAborted& e) {
      CHECK(std::string(e.what()).find("still down") != std::string::npos);
    }
  }
}

TEST_CASE("error and malformed replies are fatal protocol errors") {
  LocalCluster c(small_vocab(), 6, 2, 3);
  auto g = c.connect(nullptr);
  CHECK_THROWS_AS(train_step(*g, {{0}, {{99}}, 0}, 0.1, 1, 1), ProtocolError);
  std::vector<std::unique_ptr<ShardChannel>> chans;
  chans.push_back(std::make_unique<LocalChannel>(c.shard(0), nullptr));
  chans.push_back(std::make_unique<LyingChannel>());
  ShardGroup group(std::move(chans), nullptr);
  CHECK_THROWS_AS(train_step(group, {{0}, {{1, 2}}, 0}, 0.1, 1, 1), ProtocolError);
}

TEST_CASE("adjust goes out only after every dotprod reply is in") {
  LocalCluster c(small_vocab(), 8, 4, 3);
  SlowChannel::Log log;
  std::vector<std::unique_ptr<ShardChannel>> chans;
  for (std::size_t s = 0; s < 4; ++s) {
    chans.push_back(std::make_unique<SlowChannel>(c.shard(s), std::chrono::milliseconds(5 + 10 * s), log));
  }
  ShardGroup group(std::move(chans), nullptr);
  train_step(group, {{0, 1}, {{2}, {3}}, 0}, 0.1, 1, 1);
  std::chrono::steady_clock::time_point last_dot{}, first_adjust = std::chrono::steady_clock::time_point::max();
  for (auto& [op, t] : log.done) {
    if (op == OpCode::kDotprod) last_dot = std::max(last_dot, t);
  }
  for (auto& [op, t] : log.sent) {
    if (op == OpCode::kAdjust) first_adjust = std::min(first_adjust, t);
  }
  CHECK(log.sent.size() == 8);
  CHECK(last_dot <= first_adjust);
}

TEST_CASE("hello checks shard identity") {
  LocalCluster c(small_vocab(), 6, 2, 3);
  std::vector<std::unique_ptr<ShardChannel>> chans;
  chans.push_back(std::make_unique<LocalChannel>(c.shard(1), nullptr));
  chans.push_back(std::make_unique<LocalChannel>(c.shard(0), nullptr));
  ShardGroup swapped(std::move(chans), nullptr);
  CHECK_THROWS_AS(swapped.hello_all(), ProtocolError);
  CHECK(c.connect(nullptr)->hello_all().size() == 2);
}

TEST_CASE("learning rate schedule") {
  const LearningRateSchedule s(0.025, 0.025e-4, 1000);
  CHECK(s.at(0) == 0.025);
  CHECK(s.at(500) < 0.025);
  CHECK(s.at(500) > s.at(900));
  CHECK(s.at(5000) == 0.025e-4);
  TrainConfig cfg;
  CHECK(cfg.effective_alpha_min() == doctest::Approx(0.025e-4));
  cfg.alpha_min = 0.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.shards = 200;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("planned words follow epochs and subsampling") {
  const auto d = testing::zipf_corpus(100, 10000, 9);
  TrainConfig cfg;
  cfg.epochs = 3;
  CHECK(planned_words(d.corpus, d.vocab, cfg) == 3.0 * trainable_tokens(d.corpus));
  cfg.subsample = 1e-3;
  CHECK(planned_words(d.corpus, d.vocab, cfg) < 3.0 * trainable_tokens(d.corpus));
}

TEST_CASE("epochs=0 leaves the initialization") {
  const auto d = testing::zipf_corpus(30, 2000, 1);
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.shards = 2;
  cfg.epochs = 0;
  cfg.min_count = 1;
  LocalCluster c(d.vocab, 8, 2, cfg.seed);
  auto g = c.connect(nullptr);
  const auto stats = train(d.corpus, d.vocab, cfg, *g);
  CHECK(stats.steps == 0);
  const auto init = init_full_store(d.vocab.size(), 8, cfg.seed);
  CHECK(g->export_all(Matrix::kInput) == init.input);
  CHECK(g->export_all(Matrix::kOutput) == init.output);
}

TEST_CASE("train rejects a group of the wrong size") {
  const auto d = testing::zipf_corpus(30, 500, 1);
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.shards = 2;
  LocalCluster c(d.vocab, 8, 1, 1);
  auto g = c.connect(nullptr);
  CHECK_THROWS_AS(train(d.corpus, d.vocab, cfg, *g), std::invalid_argument);
}

TEST_CASE("objective at zero output vectors") {
  const auto d = testing::zipf_corpus(30, 800, 2);
  TrainConfig cfg;
  cfg.window = 3;
  const auto plan = plan_epoch(d.corpus, d.vocab, cfg, 0, 0);
  const auto store = init_full_store(d.vocab.size(), 10, 1);
  std::size_t pairs = 0;
  for (const auto& b : plan.batches) pairs += b.num_pairs();
  const double lam = objective(plan.batches, plan.seeds, store.input, store.output,
                               NoiseTable(d.vocab), 4);
  CHECK(lam == doctest::Approx(-(pairs + 4.0 * pairs) * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("toy clusters separate after 50 epochs") {
  const auto d = testing::cluster_corpus(200, 4);
  REQUIRE(d.vocab.size() == 20);
  TrainConfig cfg;
  cfg.dim = 10;
  cfg.shards = 2;
  cfg.window = 3;
  cfg.negatives = 3;
  cfg.epochs = 50;
  cfg.alpha = 0.05;
  cfg.min_count = 1;
  cfg.seed = 11;
  LocalCluster c(d.vocab, cfg.dim, cfg.shards, cfg.seed);
  auto g = c.connect(nullptr);
  train(d.corpus, d.vocab, cfg, *g);
  const auto set = EmbeddingSet::from_vocabulary(d.vocab, g->export_all(Matrix::kInput));
  double intra = 0, inter = 0;
  int ni = 0, nx = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      const double cs = cosine(set.vector(i), set.vector(j));
      if (set.word(i)[0] == set.word(j)[0]) {
        intra += cs;
        ++ni;
      } else {
        inter += cs;
        ++nx;
      }
    }
  }
  MESSAGE("intra " << intra / ni << " inter " << inter / nx);
  CHECK(intra / ni > inter / nx);
}

TEST_CASE("multi-threaded training completes and stays finite") {
  const auto d = testing::zipf_corpus(200, 20000, 5);
  TrainConfig cfg;
  cfg.dim = 16;
  cfg.shards = 4;
  cfg.threads = 4;
  cfg.batch_size = 20;
  cfg.epochs = 2;
  cfg.min_count = 1;
  cfg.subsample = 1e-3;
  LocalCluster c(d.vocab, cfg.dim, cfg.shards, cfg.seed);
  BandwidthMeter m;
  auto g = c.connect(&m);
  std::vector<TrainProgress> seen;
  const auto st = train(d.corpus, d.vocab, cfg, *g, 0, [&](const TrainProgress& p) { seen.push_back(p); });
  CHECK(seen.size() == 2);
  CHECK(seen.back().alpha < cfg.alpha);
  CHECK(st.words == m.snapshot().minibatch_words);
  for (std::size_t s = 0; s < 4; ++s) CHECK(c.shard(s).store().all_finite());
}

}  // TEST_SUITE

}  // namespace cw2v
