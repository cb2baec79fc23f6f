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
#include "cw2v/bandwidth.hpp"
#include "cw2v/client.hpp"
#include "support/toy.hpp"

namespace cw2v {

TEST_SUITE("bandwidth") {

TEST_CASE("conventional model") {
  CHECK(predicted_conventional_bytes(10, 10, 500) == 204000.0);
  CHECK(predicted_conventional_bytes(7, 0, 300) == 2.0 * 300 * 4);
  CHECK_THROWS(predicted_conventional_bytes(0, 10, 500));
}

TEST_CASE("aggregate bandwidth scenario") {
  const double gbps = required_gbps(10, 5e10, 2e5, 7.0 * 24 * 60 * 60);
  CHECK(gbps == doctest::Approx(1322.75).epsilon(1e-4));
}

TEST_CASE("proposed model and ratio") {
  CHECK(predicted_proposed_bytes(10, 10, 15) == 6600.0);
  CHECK(bandwidth_ratio(15, 300) == doctest::Approx(0.05));
  CHECK(bandwidth_ratio(3, 500) == 3.0 / 500.0);
  CHECK_THROWS(predicted_proposed_bytes(10, 10, 0));
  CHECK_THROWS(bandwidth_ratio(0, 300));
}

TEST_CASE("zero steps give an empty report") {
  BandwidthMeter m;
  const auto r = measured_vs_predicted(m.snapshot(), 5, 4, 100, 5);
  CHECK(r.empty);
  CHECK(r.payload_within_bound());
  std::ostringstream out;
  print_report(out, r);
  CHECK(out.str().find("no training steps") != std::string::npos);
}

TEST_CASE("one step meters F bytes exactly") {
  const auto v = testing::counts_vocabulary({9, 8, 7, 6, 5, 4, 3, 2});
  const std::uint32_t S = 3, N = 2;
  LocalCluster cluster(v, 12, S, 4);
  BandwidthMeter meter;
  auto group = cluster.connect(&meter);
  Minibatch mb{{0, 3}, {{1, 2, 5}, {7}}, 0};
  const auto st = train_step(*group, mb, 0.025, 99, N);
  const auto snap = meter.snapshot();
  const std::uint64_t pairs = 4;
  CHECK(snap.scalar_payload[1] == 4 * (pairs + pairs * N) * S);
  CHECK(snap.scalar_payload[0] == 4 * (pairs + pairs * N) * S);
  CHECK(snap.vector_component_bytes[0] + snap.vector_component_bytes[1] == 0);
  CHECK(snap.steps == 1);
  CHECK(snap.minibatch_words == 2);
  CHECK(st.bytes_sent == snap.bytes_sent());
  CHECK(st.bytes_received == snap.bytes_received());
  CHECK(snap.op_frames[static_cast<int>(OpCode::kDotprod)][0] == S);
  CHECK(snap.op_frames[static_cast<int>(OpCode::kAdjust)][0] == S);

  const auto r = measured_vs_predicted(snap, N, S, 12, 2);
  CHECK(r.mean_contexts == 2.0);
  CHECK(r.measured_f_per_word == predicted_proposed_bytes(2.0, N, S));
  CHECK(r.measured_g_per_word == predicted_proposed_bytes(2.0, N, S));
  CHECK(r.payload_within_bound());
  CHECK(r.total_per_word * 2 == doctest::Approx(double(snap.total_bytes())));
}

TEST_CASE("tap sees every frame") {
  const auto v = testing::counts_vocabulary({3, 2, 1});
  LocalCluster cluster(v, 4, 2, 1);
  BandwidthMeter meter;
  std::uint64_t seen = 0;
  meter.set_tap([&](Direction, const Frame&) { ++seen; });
  auto group = cluster.connect(&meter);
  train_step(*group, {{0}, {{1}}, 0}, 0.1, 1, 1);
  CHECK(seen == 8);
  CHECK(seen == meter.snapshot().frames[0] + meter.snapshot().frames[1]);
}

}  // TEST_SUITE

}  // namespace cw2v
