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

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

#include "cw2v/transport.hpp"

namespace cw2v {

// Traffic models, bytes per trained minibatch word.
//   w: mean context words per minibatch word, n: negatives per context,
//   d: vector dimension, S: shard count.

/// Conventional parameter server (vectors fetched and pushed), per
/// direction: (2 + w*n) * d * 4.
double predicted_conventional_bytes(double w, double n, double d);

/// Column-partitioned shards (partial dot products out, coefficients in),
/// per direction: w * (n + 1) * S * 4.
double predicted_proposed_bytes(double w, double n, double shards);

/// Asymptotic ratio of the two models, S / d.
double bandwidth_ratio(double shards, double d);

/// Aggregate bandwidth in Gbit/s needed to move `bytes_per_word` for each
/// of `words` words `iterations` times within `seconds`.
double required_gbps(double iterations, double words, double bytes_per_word, double seconds);

enum class Direction : int { kSent = 0, kReceived = 1 };

/// Client-side byte counters. All updates are relaxed atomics; totals are
/// monotone and per-op counters sum to the totals.
class BandwidthMeter {
 public:
  struct Snapshot {
    std::uint64_t bytes[2] = {0, 0};
    std::uint64_t frames[2] = {0, 0};
    std::uint64_t op_bytes[kNumOpCodes][2] = {};
    std::uint64_t op_frames[kNumOpCodes][2] = {};
    std::uint64_t scalar_payload[2] = {0, 0};
    std::uint64_t index_bytes[2] = {0, 0};
    std::uint64_t vector_component_bytes[2] = {0, 0};
    std::uint64_t steps = 0;
    std::uint64_t minibatch_words = 0;
    std::uint64_t pairs = 0;

    std::uint64_t bytes_sent() const { return bytes[0]; }
    std::uint64_t bytes_received() const { return bytes[1]; }
    std::uint64_t total_bytes() const { return bytes[0] + bytes[1]; }
  };

  using Tap = std::function<void(Direction, const Frame&)>;

  void record(Direction dir, const Frame& frame);
  void record_step(std::uint64_t minibatch_words, std::uint64_t pairs);

  /// Observer for every recorded frame. Set before traffic starts.
  void set_tap(Tap tap) { tap_ = std::move(tap); }

  Snapshot snapshot() const;

 private:
  using Counter = std::atomic<std::uint64_t>;
  Counter bytes_[2]{};
  Counter frames_[2]{};
  Counter op_bytes_[kNumOpCodes][2]{};
  Counter op_frames_[kNumOpCodes][2]{};
  Counter scalar_payload_[2]{};
  Counter index_bytes_[2]{};
  Counter vector_bytes_[2]{};
  Counter steps_{0};
  Counter minibatch_words_{0};
  Counter pairs_{0};
  Tap tap_;
};

struct BandwidthReport {
  bool empty = true;
  std::uint64_t steps = 0;
  std::uint64_t minibatch_words = 0;
  double mean_contexts = 0.0;  // measured w
  double negatives = 0.0;
  double shards = 0.0;
  double dim = 0.0;
  double max_contexts = 0.0;   // 2B

  double measured_f_per_word = 0.0;   // dotprod responses, shards -> client
  double measured_g_per_word = 0.0;   // adjust requests, client -> shards
  double predicted_at_mean = 0.0;     // r'(mean w, n, S)
  double predicted_upper = 0.0;       // r'(2B, n, S)
  double index_per_word = 0.0;        // both directions
  double overhead_per_word = 0.0;     // headers, seeds, length prefixes
  double total_per_word = 0.0;        // everything, both directions
  double conventional_per_word = 0.0; // r(mean w, n, d), per direction

  bool payload_within_bound() const;
};

BandwidthReport measured_vs_predicted(const BandwidthMeter::Snapshot& snap, std::uint32_t negatives,
                                      std::uint32_t shards, std::uint32_t dim,
                                      std::uint32_t max_window);
void print_report(std::ostream& out, const BandwidthReport& report);

}  // namespace cw2v
