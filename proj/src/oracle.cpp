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

#include "cw2v/oracle.hpp"

namespace cw2v {

namespace {

float dot(std::span<const float> a, std::span<const float> b) {
  float acc = 0.0f;
  for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * b[j];
  return acc;
}

std::vector<float>& delta_row(std::map<WordId, std::vector<float>>& rows, WordId w,
                              std::size_t dim) {
  auto& r = rows[w];
  if (r.empty()) r.assign(dim, 0.0f);
  return r;
}

void add_scaled(std::vector<float>& dst, float g, std::span<const float> x) {
  for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += g * x[j];
}

}  // namespace

FullVectorStore init_full_store(std::size_t vocab_size, std::uint32_t dim, std::uint64_t seed) {
  FullVectorStore s{DenseMatrix(vocab_size, dim), DenseMatrix(vocab_size, dim)};
  for (std::size_t w = 0; w < vocab_size; ++w) {
    auto row = s.input.row(w);
    for (std::uint32_t j = 0; j < dim; ++j) {
      row[j] = initial_input_component(seed, static_cast<WordId>(w), j, dim);
    }
  }
  return s;
}

OracleDeltas oracle_deltas(const FullVectorStore& store, const Minibatch& batch, double alpha,
                           std::uint64_t seed, const NoiseTable& noise, std::uint32_t negatives) {
  const std::size_t dim = store.input.cols;
  SeededDraw draw(seed);
  std::vector<WordId> ns(negatives);
  OracleDeltas d;
  for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
    const WordId w_in = batch.inputs[i];
    const auto u = store.input.row(w_in);
    for (WordId w_out : batch.contexts[i]) {
      draw.draw(noise, w_out, ns);
      const float g = static_cast<float>(alpha * (1.0 - sigmoid(dot(u, store.output.row(w_out)))));
      add_scaled(delta_row(d.input, w_in, dim), g, store.output.row(w_out));
      add_scaled(delta_row(d.output, w_out, dim), g, u);
      for (WordId n : ns) {
        const float gn = static_cast<float>(-alpha * sigmoid(dot(u, store.output.row(n))));
        add_scaled(delta_row(d.input, w_in, dim), gn, store.output.row(n));
        add_scaled(delta_row(d.output, n, dim), gn, u);
      }
    }
  }
  return d;
}

void oracle_step(FullVectorStore& store, const Minibatch& batch, double alpha, std::uint64_t seed,
                 const NoiseTable& noise, std::uint32_t negatives) {
  const OracleDeltas d = oracle_deltas(store, batch, alpha, seed, noise, negatives);
  for (const auto& [w, delta] : d.input) {
    auto row = store.input.row(w);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = row[j] + delta[j];
  }
  for (const auto& [w, delta] : d.output) {
    auto row = store.output.row(w);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = row[j] + delta[j];
  }
}

FullVectorStore oracle_train(const IndexedCorpus& corpus, const Vocabulary& vocab,
                             const TrainConfig& config) {
  TrainConfig cfg = config;
  cfg.threads = 1;
  cfg.shards = 1;
  cfg.validate();
  FullVectorStore store = init_full_store(vocab.size(), cfg.dim, cfg.seed);
  const NoiseTable noise(vocab);
  const LearningRateSchedule schedule(cfg.alpha, cfg.effective_alpha_min(),
                                      planned_words(corpus, vocab, cfg));
  const IndexedCorpus part = partition_corpus(corpus, 1)[0];
  std::uint64_t processed = 0;
  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const EpochPlan plan = plan_epoch(part, vocab, cfg, epoch, 0);
    for (std::size_t i = 0; i < plan.batches.size(); ++i) {
      oracle_step(store, plan.batches[i], schedule.at(processed), plan.seeds[i], noise,
                  cfg.negatives);
      processed += plan.batches[i].inputs.size();
    }
  }
  return store;
}

}  // namespace cw2v
