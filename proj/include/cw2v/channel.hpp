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

#include <atomic>
#include <chrono>
#include <future>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cw2v/bandwidth.hpp"
#include "cw2v/net.hpp"
#include "cw2v/shard.hpp"
#include "cw2v/transport.hpp"

namespace cw2v {

/// Transport-level failure: the shard could not be reached or went away.
/// Retryable.
class ChannelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One logical connection to a shard. Calls may be issued concurrently from
/// several threads; each returns the matching RESPONSE or ERROR frame.
class ShardChannel {
 public:
  virtual ~ShardChannel() = default;

  /// The future throws ChannelError if the call cannot complete.
  virtual std::future<Frame> call(OpCode op, std::vector<std::uint8_t> body) = 0;
  /// Drops the current connection (failing its pending calls) and opens a new one.
  virtual void reconnect() = 0;
  virtual std::string describe() const = 0;
};

/// In-process shard. Every call still goes through the full encode/decode
/// path so local-sim traffic is metered exactly as it would be on a socket.
class LocalChannel : public ShardChannel {
 public:
  LocalChannel(ShardCore& core, BandwidthMeter* meter) : core_(&core), meter_(meter) {}

  std::future<Frame> call(OpCode op, std::vector<std::uint8_t> body) override;
  void reconnect() override {}
  std::string describe() const override;

  /// Points the channel at a different core, e.g. a restarted shard.
  void rebind(ShardCore& core) { core_.store(&core); }

 private:
  std::atomic<ShardCore*> core_;
  BandwidthMeter* meter_;
  std::atomic<std::uint64_t> next_id_{1};
};

/// TCP connection with pipelined calls matched by call_id. A dedicated
/// reader thread completes pending promises as responses arrive.
class TcpChannel : public ShardChannel {
 public:
  TcpChannel(Endpoint endpoint, BandwidthMeter* meter);
  ~TcpChannel() override;

  std::future<Frame> call(OpCode op, std::vector<std::uint8_t> body) override;
  void reconnect() override;
  std::string describe() const override { return endpoint_.str(); }

 private:
  void open();
  void reader_loop();
  void fail_pending(const std::string& why);

  Endpoint endpoint_;
  BandwidthMeter* meter_;

  std::mutex write_mu_;  // serializes frame writes and connection swaps
  Socket sock_;
  std::thread reader_;

  std::mutex pending_mu_;
  std::map<std::uint64_t, std::promise<Frame>> pending_;
  std::uint64_t next_id_ = 1;
  bool broken_ = true;  // no live reader; new calls fail immediately
};

}  // namespace cw2v
