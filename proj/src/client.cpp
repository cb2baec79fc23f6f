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

#include "cw2v/client.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "cw2v/random.hpp"

namespace cw2v {

void TrainConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  need(dim >= 1, "dim must be >= 1");
  need(shards >= 1 && shards <= dim, "shards must be in [1, dim]");
  need(window >= 1, "window must be >= 1");
  need(batch_size >= 1, "batch size must be >= 1");
  need(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
  need(alpha_min >= 0.0 && effective_alpha_min() <= alpha, "alpha_min must be in [0, alpha]");
  need(subsample >= 0.0, "subsample threshold must be >= 0");
  need(min_count >= 1, "min_count must be >= 1");
  need(threads >= 1, "threads must be >= 1");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

PartialDotResult aggregate_partials(std::span<const PartialDotResult> results,
                                    std::size_t num_shards) {
  if (results.size() != num_shards || num_shards == 0) {
    throw MissingShardError("have " + std::to_string(results.size()) + " of " +
                            std::to_string(num_shards) + " shard responses");
  }
  PartialDotResult sum = results[0];
  for (std::size_t s = 1; s < results.size(); ++s) {
    const auto& r = results[s];
    if (r.f_plus.size() != sum.f_plus.size() || r.f_minus.size() != sum.f_minus.size()) {
      throw ProtocolError("shard " + std::to_string(s) + " returned a differently shaped result");
    }
    for (std::size_t k = 0; k < sum.f_plus.size(); ++k) sum.f_plus[k] += r.f_plus[k];
    for (std::size_t k = 0; k < sum.f_minus.size(); ++k) sum.f_minus[k] += r.f_minus[k];
  }
  return sum;
}

GradientCoefficients coefficients(const PartialDotResult& f, double alpha) {
  GradientCoefficients g;
  g.g_plus.resize(f.f_plus.size());
  g.g_minus.resize(f.f_minus.size());
  for (std::size_t k = 0; k < f.f_plus.size(); ++k) {
    g.g_plus[k] = static_cast<float>(alpha * (1.0 - sigmoid(f.f_plus[k])));
  }
  for (std::size_t k = 0; k < f.f_minus.size(); ++k) {
    g.g_minus[k] = static_cast<float>(-alpha * sigmoid(f.f_minus[k]));
  }
  return g;
}

ShardGroup::ShardGroup(std::vector<std::unique_ptr<ShardChannel>> channels, BandwidthMeter* meter,
                       std::chrono::milliseconds timeout)
    : channels_(std::move(channels)), meter_(meter), timeout_(timeout) {
  if (channels_.empty()) throw std::invalid_argument("shard group needs at least one channel");
}

std::vector<std::size_t> ShardGroup::all_shards() const {
  std::vector<std::size_t> ids(channels_.size());
  for (std::size_t s = 0; s < ids.size(); ++s) ids[s] = s;
  return ids;
}

ShardGroup::Outcome ShardGroup::broadcast(OpCode op, const std::vector<std::uint8_t>& body,
                                          const std::vector<std::size_t>& targets) {
  Outcome out;
  out.responses.resize(targets.size());
  std::vector<std::future<Frame>> futures;
  futures.reserve(targets.size());
  for (std::size_t s : targets) {
    futures.push_back(channels_.at(s)->call(op, body));
    out.bytes_sent += kFrameHeaderSize + body.size();
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::size_t s = targets[i];
    auto& fut = futures[i];
    if (fut.wait_for(timeout_) != std::future_status::ready) {
      out.failed.push_back(s);
      out.diagnostics += "shard " + std::to_string(s) + " (" + channels_[s]->describe() +
                         "): timed out; ";
      continue;
    }
    try {
      Frame resp = fut.get();
      out.bytes_received += resp.wire_size();
      if (resp.op == OpCode::kError) {
        const ErrorInfo err = decode_error(resp.body);
        throw ProtocolError("shard " + std::to_string(s) + " rejected " + op_name(op) + ": " +
                            err.message);
      }
      if (resp.op != OpCode::kResponse || response_kind(resp) != op) {
        throw ProtocolError("shard " + std::to_string(s) + " answered " + op_name(op) +
                            " with an unexpected frame");
      }
      out.responses[i] = std::move(resp);
    } catch (const ChannelError& e) {
      // Approximates "never sent"; the meter may still have counted it.
      out.bytes_sent -= kFrameHeaderSize + body.size();
      out.failed.push_back(s);
      out.diagnostics += "shard " + std::to_string(s) + ": " + e.what() + "; ";
    } catch (const DecodeError& e) {
      throw ProtocolError("shard " + std::to_string(s) + " sent an undecodable reply: " + e.what());
    }
  }
  return out;
}

std::vector<ShardInfo> ShardGroup::hello_all() {
  auto out = broadcast(OpCode::kHello, {}, all_shards());
  if (!out.failed.empty()) throw ChannelError("hello failed: " + out.diagnostics);
  std::vector<ShardInfo> infos;
  for (std::size_t s = 0; s < out.responses.size(); ++s) {
    ShardInfo info = decode_hello_response(out.responses[s]->body);
    if (info.shard_id != s || info.num_shards != channels_.size()) {
      throw ProtocolError("endpoint " + std::to_string(s) + " is shard " +
                          std::to_string(info.shard_id) + " of " + std::to_string(info.num_shards) +
                          ", expected shard " + std::to_string(s) + " of " +
                          std::to_string(channels_.size()));
    }
    if (!infos.empty() && (info.dim != infos[0].dim || info.vocab_size != infos[0].vocab_size)) {
      throw ProtocolError("shards disagree on dimension or vocabulary size");
    }
    infos.push_back(info);
  }
  const ShardLayout layout(infos[0].dim, infos[0].num_shards);
  for (const auto& info : infos) {
    if (layout.range(info.shard_id) != ColumnRange{info.col_lo, info.col_hi}) {
      throw ProtocolError("shard " + std::to_string(info.shard_id) + " holds unexpected columns");
    }
  }
  return infos;
}

DenseMatrix ShardGroup::export_all(Matrix matrix) {
  const auto infos = hello_all();
  const ShardLayout layout(infos[0].dim, infos[0].num_shards);
  const std::uint32_t vocab = infos[0].vocab_size;
  // Bounded chunks keep each reply well under the frame size limit.
  constexpr WordId kChunk = 1u << 14;
  std::vector<std::vector<PartialRow>> per_shard(channels_.size());
  for (WordId lo = 0; lo < vocab; lo += kChunk) {
    const WordId hi = std::min<WordId>(vocab, lo + kChunk);
    auto out = broadcast(OpCode::kExport, encode_export({lo, hi, matrix}), all_shards());
    if (!out.failed.empty()) throw ChannelError("export failed: " + out.diagnostics);
    for (std::size_t s = 0; s < out.responses.size(); ++s) {
      auto rows = decode_export_response(out.responses[s]->body);
      for (auto& r : rows) per_shard[s].push_back(std::move(r));
    }
  }
  return assemble_partials(layout, vocab, per_shard);
}

void ShardGroup::shutdown_all() {
  auto out = broadcast(OpCode::kShutdown, {}, all_shards());
  if (!out.failed.empty()) throw ChannelError("shutdown failed: " + out.diagnostics);
}

bool ShardGroup::reconnect(std::size_t s, std::string* error) {
  try {
    channels_.at(s)->reconnect();
    return true;
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return false;
  }
}

std::unique_ptr<ShardGroup> connect_group(const std::vector<Endpoint>& endpoints,
                                          BandwidthMeter* meter) {
  std::vector<std::unique_ptr<ShardChannel>> channels;
  for (const auto& ep : endpoints) channels.push_back(std::make_unique<TcpChannel>(ep, meter));
  return std::make_unique<ShardGroup>(std::move(channels), meter);
}

std::uint64_t retry_seed(std::uint64_t seed) { return derive_seed({seed, 0x7265747279ULL}); }

namespace {

void reconnect_or_abort(ShardGroup& group, const std::vector<std::size_t>& failed,
                        const std::string& context) {
  for (std::size_t s : failed) {
    std::string err;
    if (!group.reconnect(s, &err)) {
      throw TrainingAborted(context + "; reconnecting shard " + std::to_string(s) +
                            " failed: " + err);
    }
  }
}

}  // namespace

StepStats train_step(ShardGroup& group, const Minibatch& batch, double alpha, std::uint64_t seed,
                     std::uint32_t negatives) {
  StepStats stats;
  stats.words = batch.inputs.size();
  stats.pairs = batch.num_pairs();
  stats.negatives = stats.pairs * negatives;
  if (batch.inputs.empty()) return stats;

  const auto everyone = group.all_shards();
  for (int attempt = 0;; ++attempt) {
    const std::uint64_t step_seed = attempt == 0 ? seed : retry_seed(seed);
    DotprodRequest dreq{batch.inputs, batch.contexts, step_seed, negatives};
    auto dot = group.broadcast(OpCode::kDotprod, encode_dotprod(dreq), everyone);
    stats.bytes_sent += dot.bytes_sent;
    stats.bytes_received += dot.bytes_received;
    if (!dot.failed.empty()) {
      if (attempt > 0) throw TrainingAborted("dotprod failed after retry: " + dot.diagnostics);
      reconnect_or_abort(group, dot.failed, "dotprod failed: " + dot.diagnostics);
      ++stats.retries;
      continue;
    }

    // Barrier: every shard has answered before any adjust goes out.
    std::vector<PartialDotResult> partials;
    partials.reserve(dot.responses.size());
    for (auto& r : dot.responses) {
      partials.push_back(decode_dotprod_response(r->body));
      if (partials.back().f_plus.size() != stats.pairs ||
          partials.back().f_minus.size() != stats.negatives) {
        throw ProtocolError("dotprod reply has the wrong number of entries");
      }
    }
    const PartialDotResult f = aggregate_partials(partials, group.size());
    GradientCoefficients g = coefficients(f, alpha);

    AdjustRequest areq{batch.inputs, batch.contexts, std::move(g.g_plus), std::move(g.g_minus),
                       step_seed, negatives};
    const auto abody = encode_adjust(areq);
    auto adj = group.broadcast(OpCode::kAdjust, abody, everyone);
    stats.bytes_sent += adj.bytes_sent;
    stats.bytes_received += adj.bytes_received;
    if (!adj.failed.empty()) {
      reconnect_or_abort(group, adj.failed, "adjust failed: " + adj.diagnostics);
      ++stats.retries;
      auto again = group.broadcast(OpCode::kAdjust, abody, adj.failed);
      stats.bytes_sent += again.bytes_sent;
      stats.bytes_received += again.bytes_received;
      if (!again.failed.empty()) {
        throw TrainingAborted("adjust failed after retry: " + again.diagnostics);
      }
    }
    break;
  }
  if (auto* m = group.meter()) m->record_step(stats.words, stats.pairs);
  return stats;
}

double LearningRateSchedule::at(std::uint64_t processed) const {
  const double a = alpha0_ * (1.0 - static_cast<double>(processed) / (planned_ + 1.0));
  return std::max(a, alpha_min_);
}

double planned_words(const IndexedCorpus& corpus, const Vocabulary& vocab,
                     const TrainConfig& config) {
  double kept = 1.0;
  if (config.subsample > 0.0 && vocab.total_count() > 0) {
    kept = expected_kept_tokens(vocab, config.subsample) / static_cast<double>(vocab.total_count());
  }
  return static_cast<double>(config.epochs) * static_cast<double>(trainable_tokens(corpus)) * kept;
}

EpochPlan plan_epoch(const IndexedCorpus& partition, const Vocabulary& vocab,
                     const TrainConfig& config, std::uint32_t epoch, std::uint64_t client) {
  WindowSpec spec;
  spec.max_window = config.window;
  spec.subsample_threshold = config.subsample;
  spec.rng_seed = derive_seed({config.seed, epoch, client});
  const IndexedCorpus kept = subsample(partition, vocab, spec);
  EpochPlan plan;
  plan.batches = make_minibatches(kept, spec, config.batch_size, config.interleaved);
  plan.seeds.reserve(plan.batches.size());
  for (const auto& b : plan.batches) {
    plan.seeds.push_back(derive_seed({config.seed, epoch, client, b.batch_id}));
  }
  return plan;
}

TrainStats train(const IndexedCorpus& corpus, const Vocabulary& vocab, const TrainConfig& config,
                 ShardGroup& group, std::uint64_t client_base,
                 const std::function<void(const TrainProgress&)>& progress) {
  config.validate();
  if (group.size() != config.shards) {
    throw std::invalid_argument("config names " + std::to_string(config.shards) +
                                " shards but the group has " + std::to_string(group.size()));
  }
  const auto start = std::chrono::steady_clock::now();
  const double planned = planned_words(corpus, vocab, config);
  const LearningRateSchedule schedule(config.alpha, config.effective_alpha_min(), planned);
  const auto parts = partition_corpus(corpus, config.threads);

  TrainStats total;
  std::atomic<std::uint64_t> processed{0};
  std::mutex mu;  // guards `total` and `failure`
  std::exception_ptr failure;
  std::atomic<bool> abort{false};

  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < config.threads; ++t) {
      workers.emplace_back([&, t] {
        try {
          const std::uint64_t client = (client_base << 32) | t;
          const EpochPlan plan = plan_epoch(parts[t], vocab, config, epoch, client);
          TrainStats local;
          for (std::size_t i = 0; i < plan.batches.size() && !abort.load(); ++i) {
            const double alpha = schedule.at(processed.load(std::memory_order_relaxed));
            const StepStats st = train_step(group, plan.batches[i], alpha, plan.seeds[i],
                                            config.negatives);
            processed.fetch_add(st.words, std::memory_order_relaxed);
            ++local.steps;
            local.words += st.words;
            local.pairs += st.pairs;
            local.negatives += st.negatives;
            local.bytes_sent += st.bytes_sent;
            local.bytes_received += st.bytes_received;
            local.retries += st.retries;
          }
          std::lock_guard lock(mu);
          total.steps += local.steps;
          total.words += local.words;
          total.pairs += local.pairs;
          total.negatives += local.negatives;
          total.bytes_sent += local.bytes_sent;
          total.bytes_received += local.bytes_received;
          total.retries += local.retries;
        } catch (...) {
          abort.store(true);
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
    if (progress) {
      progress({epoch + 1, processed.load(), planned, schedule.at(processed.load())});
    }
  }
  total.final_alpha = schedule.at(processed.load());
  total.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return total;
}

double objective(std::span<const Minibatch> batches, std::span<const std::uint64_t> seeds,
                 const DenseMatrix& input, const DenseMatrix& output, const NoiseTable& noise,
                 std::uint32_t negatives) {
  if (batches.size() != seeds.size()) throw std::invalid_argument("one seed per minibatch");
  auto dot = [](std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) acc += double{a[j]} * double{b[j]};
    return acc;
  };
  double total = 0.0;
  std::vector<WordId> ns(negatives);
  for (std::size_t h = 0; h < batches.size(); ++h) {
    SeededDraw draw(seeds[h]);
    const auto& b = batches[h];
    for (std::size_t i = 0; i < b.inputs.size(); ++i) {
      const auto u = input.row(b.inputs[i]);
      for (WordId w_out : b.contexts[i]) {
        draw.draw(noise, w_out, ns);
        total += log_sigmoid(dot(u, output.row(w_out)));
        for (WordId n : ns) total += log_sigmoid(-dot(u, output.row(n)));
      }
    }
  }
  return total;
}

LocalCluster::LocalCluster(const Vocabulary& vocab, std::uint32_t dim, std::uint32_t num_shards,
                           std::uint64_t seed)
    : layout_(dim, num_shards) {
  const NoiseTable noise(vocab);
  for (std::uint32_t s = 0; s < num_shards; ++s) {
    cores_.push_back(std::make_unique<ShardCore>(init_store(s, layout_, vocab.size(), seed), noise));
  }
}

std::unique_ptr<ShardGroup> LocalCluster::connect(BandwidthMeter* meter) {
  std::vector<std::unique_ptr<ShardChannel>> channels;
  for (auto& core : cores_) channels.push_back(std::make_unique<LocalChannel>(*core, meter));
  return std::make_unique<ShardGroup>(std::move(channels), meter);
}

}  // namespace cw2v
