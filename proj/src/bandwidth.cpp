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

#include "cw2v/bandwidth.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace cw2v {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

constexpr auto kRelaxed = std::memory_order_relaxed;

}  // namespace

double predicted_conventional_bytes(double w, double n, double d) {
  require(w > 0 && n >= 0 && d > 0, "conventional model needs w > 0, n >= 0, d > 0");
  return (2.0 + w * n) * d * 4.0;
}

double predicted_proposed_bytes(double w, double n, double shards) {
  require(w > 0 && n >= 0 && shards >= 1, "proposed model needs w > 0, n >= 0, S >= 1");
  return w * (n + 1.0) * shards * 4.0;
}

double bandwidth_ratio(double shards, double d) {
  require(shards >= 1 && d > 0, "ratio needs S >= 1 and d > 0");
  return shards / d;
}

double required_gbps(double iterations, double words, double bytes_per_word, double seconds) {
  require(seconds > 0, "duration must be positive");
  return iterations * words * bytes_per_word * 8.0 / (seconds * 1e9);
}

void BandwidthMeter::record(Direction dir, const Frame& frame) {
  const int d = static_cast<int>(dir);
  const auto op = static_cast<int>(frame.op);
  const FrameBreakdown b = classify_frame(frame);
  bytes_[d].fetch_add(b.total, kRelaxed);
  frames_[d].fetch_add(1, kRelaxed);
  op_bytes_[op][d].fetch_add(b.total, kRelaxed);
  op_frames_[op][d].fetch_add(1, kRelaxed);
  scalar_payload_[d].fetch_add(b.scalar_payload, kRelaxed);
  index_bytes_[d].fetch_add(b.index_bytes, kRelaxed);
  vector_bytes_[d].fetch_add(b.vector_components, kRelaxed);
  if (tap_) tap_(dir, frame);
}

void BandwidthMeter::record_step(std::uint64_t minibatch_words, std::uint64_t pairs) {
  steps_.fetch_add(1, kRelaxed);
  minibatch_words_.fetch_add(minibatch_words, kRelaxed);
  pairs_.fetch_add(pairs, kRelaxed);
}

BandwidthMeter::Snapshot BandwidthMeter::snapshot() const {
  Snapshot s;
  for (int d = 0; d < 2; ++d) {
    s.bytes[d] = bytes_[d].load(kRelaxed);
    s.frames[d] = frames_[d].load(kRelaxed);
    s.scalar_payload[d] = scalar_payload_[d].load(kRelaxed);
    s.index_bytes[d] = index_bytes_[d].load(kRelaxed);
    s.vector_component_bytes[d] = vector_bytes_[d].load(kRelaxed);
    for (int op = 0; op < kNumOpCodes; ++op) {
      s.op_bytes[op][d] = op_bytes_[op][d].load(kRelaxed);
      s.op_frames[op][d] = op_frames_[op][d].load(kRelaxed);
    }
  }
  s.steps = steps_.load(kRelaxed);
  s.minibatch_words = minibatch_words_.load(kRelaxed);
  s.pairs = pairs_.load(kRelaxed);
  return s;
}

bool BandwidthReport::payload_within_bound() const {
  if (empty) return true;
  return measured_f_per_word <= predicted_upper && measured_g_per_word <= predicted_upper;
}

BandwidthReport measured_vs_predicted(const BandwidthMeter::Snapshot& snap, std::uint32_t negatives,
                                      std::uint32_t shards, std::uint32_t dim,
                                      std::uint32_t max_window) {
  BandwidthReport r;
  r.negatives = negatives;
  r.shards = shards;
  r.dim = dim;
  r.max_contexts = 2.0 * max_window;
  if (snap.steps == 0 || snap.minibatch_words == 0) return r;
  r.empty = false;
  r.steps = snap.steps;
  r.minibatch_words = snap.minibatch_words;
  const double words = static_cast<double>(snap.minibatch_words);
  r.mean_contexts = static_cast<double>(snap.pairs) / words;
  // Scalars travel shard->client in dotprod responses and client->shard in
  // adjust requests; nothing else on the training path carries floats.
  r.measured_f_per_word = static_cast<double>(snap.scalar_payload[1]) / words;
  r.measured_g_per_word = static_cast<double>(snap.scalar_payload[0]) / words;
  if (r.mean_contexts > 0) {
    r.predicted_at_mean = predicted_proposed_bytes(r.mean_contexts, negatives, shards);
    r.conventional_per_word = predicted_conventional_bytes(r.mean_contexts, negatives, dim);
  }
  r.predicted_upper = predicted_proposed_bytes(r.max_contexts, negatives, shards);
  r.index_per_word = static_cast<double>(snap.index_bytes[0] + snap.index_bytes[1]) / words;
  const double all = static_cast<double>(snap.total_bytes());
  const double payload = static_cast<double>(snap.scalar_payload[0] + snap.scalar_payload[1]);
  const double vectors =
      static_cast<double>(snap.vector_component_bytes[0] + snap.vector_component_bytes[1]);
  r.overhead_per_word = (all - payload - vectors) / words - r.index_per_word;
  r.total_per_word = all / words;
  return r;
}

void print_report(std::ostream& out, const BandwidthReport& r) {
  if (r.empty) {
    out << "no training steps metered\n";
    return;
  }
  char line[256];
  auto emit = [&](const char* label, double v) {
    std::snprintf(line, sizeof(line), "%-44s %14.2f\n", label, v);
    out << line;
  };
  out << "steps " << r.steps << ", minibatch words " << r.minibatch_words << ", S=" << r.shards
      << ", d=" << r.dim << ", n=" << r.negatives << '\n';
  emit("mean contexts per word (w)", r.mean_contexts);
  emit("measured F bytes/word (shards -> client)", r.measured_f_per_word);
  emit("measured G bytes/word (client -> shards)", r.measured_g_per_word);
  emit("predicted r'(w, n, S) at measured w", r.predicted_at_mean);
  emit("upper bound r'(2B, n, S)", r.predicted_upper);
  emit("index bytes/word (both directions)", r.index_per_word);
  emit("framing overhead bytes/word", r.overhead_per_word);
  emit("total bytes/word (both directions)", r.total_per_word);
  emit("conventional r(w, n, d) per direction", r.conventional_per_word);
  out << "payload within bound: " << (r.payload_within_bound() ? "yes" : "NO") << '\n';
}

}  // namespace cw2v
