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

// Training driver. A client thread forms minibatches from its corpus
// partition, asks every shard for partial dot products, sums them, turns the
// sums into gradient coefficients and broadcasts those back with the same
// seed. Word vectors never leave the shards.

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cw2v/bandwidth.hpp"
#include "cw2v/channel.hpp"
#include "cw2v/corpus.hpp"
#include "cw2v/messages.hpp"
#include "cw2v/sampler.hpp"
#include "cw2v/shard.hpp"
#include "cw2v/store.hpp"

namespace cw2v {

struct TrainConfig {
  std::uint32_t dim = 100;
  std::uint32_t shards = 1;
  std::uint32_t window = 5;     // B
  std::uint32_t negatives = 5;  // N
  std::size_t batch_size = 1;
  std::uint32_t epochs = 1;
  double alpha = 0.025;
  double alpha_min = 0.0;  // 0: alpha * 1e-4
  double subsample = 0.0;
  std::uint64_t min_count = 5;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool interleaved = false;

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
  double effective_alpha_min() const { return alpha_min > 0.0 ? alpha_min : alpha * 1e-4; }
};

/// Fatal: a shard answered with an ERROR frame or an inconsistent shape.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A step failed again after its retry.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A shard response is missing for this step. Retryable.
class MissingShardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double sigmoid(double x);
/// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x);

/// Elementwise sums in shard order. `results` must hold one entry per shard.
PartialDotResult aggregate_partials(std::span<const PartialDotResult> results,
                                    std::size_t num_shards);

struct GradientCoefficients {
  std::vector<float> g_plus;
  std::vector<float> g_minus;
};

/// G+ = alpha (1 - sigmoid(F+)), G- = -alpha sigmoid(F-), in double then
/// rounded to float.
GradientCoefficients coefficients(const PartialDotResult& f, double alpha);

/// Channels to all S shards, indexed by shard id.
class ShardGroup {
 public:
  ShardGroup(std::vector<std::unique_ptr<ShardChannel>> channels, BandwidthMeter* meter,
             std::chrono::milliseconds timeout = std::chrono::seconds(60));

  std::size_t size() const { return channels_.size(); }
  ShardChannel& channel(std::size_t s) { return *channels_.at(s); }
  BandwidthMeter* meter() const { return meter_; }

  struct Outcome {
    std::vector<std::optional<Frame>> responses;  // parallel to targets
    std::vector<std::size_t> failed;              // shard ids with no response
    std::string diagnostics;
    std::uint64_t bytes_sent = 0;
    std::uint64_t bytes_received = 0;
  };

  /// Sends `body` to each target shard and waits for all replies. Transport
  /// failures land in `failed`; ERROR replies throw ProtocolError.
  Outcome broadcast(OpCode op, const std::vector<std::uint8_t>& body,
                    const std::vector<std::size_t>& targets);
  std::vector<std::size_t> all_shards() const;

  /// Checks that shard s reports id s and that all agree on S, d and |V|.
  std::vector<ShardInfo> hello_all();
  /// Pulls one matrix from every shard and stitches the columns together.
  DenseMatrix export_all(Matrix matrix);
  void shutdown_all();
  /// Returns false (with the reason in `error`) if the shard stays unreachable.
  bool reconnect(std::size_t s, std::string* error);

 private:
  std::vector<std::unique_ptr<ShardChannel>> channels_;
  BandwidthMeter* meter_;
  std::chrono::milliseconds timeout_;
};

std::unique_ptr<ShardGroup> connect_group(const std::vector<Endpoint>& endpoints,
                                          BandwidthMeter* meter);

struct StepStats {
  std::uint64_t words = 0;
  std::uint64_t pairs = 0;
  std::uint64_t negatives = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint32_t retries = 0;
};

/// One dotprod broadcast, a barrier on all S replies, then one adjust
/// broadcast with the same seed.
///
/// Retry policy: if the dotprod phase loses a shard, reconnect and redo the
/// step once with a fresh seed. If the adjust phase loses shards, reconnect
/// and resend the same adjust to those shards once. A second failure throws
/// TrainingAborted.
StepStats train_step(ShardGroup& group, const Minibatch& batch, double alpha, std::uint64_t seed,
                     std::uint32_t negatives);

/// Seed used for the retried dotprod after a failed first attempt.
std::uint64_t retry_seed(std::uint64_t seed);

/// Linear decay per processed input word, floored at alpha_min.
class LearningRateSchedule {
 public:
  LearningRateSchedule(double alpha0, double alpha_min, double planned_words)
      : alpha0_(alpha0), alpha_min_(alpha_min), planned_(planned_words) {}
  double at(std::uint64_t processed) const;

 private:
  double alpha0_;
  double alpha_min_;
  double planned_;
};

/// Expected number of input words over the whole run.
double planned_words(const IndexedCorpus& corpus, const Vocabulary& vocab,
                     const TrainConfig& config);

/// Minibatches and their seeds for one client thread in one epoch.
/// Subsampling and window sizes are redrawn every epoch.
struct EpochPlan {
  std::vector<Minibatch> batches;
  std::vector<std::uint64_t> seeds;
};
EpochPlan plan_epoch(const IndexedCorpus& partition, const Vocabulary& vocab,
                     const TrainConfig& config, std::uint32_t epoch, std::uint64_t client);

struct TrainStats {
  std::uint64_t steps = 0;
  std::uint64_t words = 0;
  std::uint64_t pairs = 0;
  std::uint64_t negatives = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t retries = 0;
  double seconds = 0.0;
  double final_alpha = 0.0;
};

struct TrainProgress {
  std::uint32_t epoch = 0;
  std::uint64_t processed = 0;
  double planned = 0.0;
  double alpha = 0.0;
};

/// Runs config.epochs passes with config.threads client threads, each owning
/// a contiguous slice of the corpus. `client_base` separates the seed
/// streams of independent client processes.
TrainStats train(const IndexedCorpus& corpus, const Vocabulary& vocab, const TrainConfig& config,
                 ShardGroup& group, std::uint64_t client_base = 0,
                 const std::function<void(const TrainProgress&)>& progress = {});

/// The skipgram log-likelihood restricted to the given minibatches, with each batch's negatives
/// drawn from its seed. Computed in double.
double objective(std::span<const Minibatch> batches, std::span<const std::uint64_t> seeds,
                 const DenseMatrix& input, const DenseMatrix& output, const NoiseTable& noise,
                 std::uint32_t negatives);

/// S in-process shards with local channels; the local-sim deployment.
class LocalCluster {
 public:
  LocalCluster(const Vocabulary& vocab, std::uint32_t dim, std::uint32_t num_shards,
               std::uint64_t seed);

  const ShardLayout& layout() const { return layout_; }
  std::size_t size() const { return cores_.size(); }
  ShardCore& shard(std::size_t s) { return *cores_.at(s); }

  std::unique_ptr<ShardGroup> connect(BandwidthMeter* meter);

 private:
  ShardLayout layout_;
  std::vector<std::unique_ptr<ShardCore>> cores_;
};

}  // namespace cw2v
