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
#include <condition_variable>
#include <deque>
#include <list>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "cw2v/net.hpp"
#include "cw2v/shard.hpp"

namespace cw2v {

struct ServerConfig {
  Endpoint listen{"127.0.0.1", 0};
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Serves one ShardCore over TCP. A reader thread per connection parses
/// frames and queues them; a fixed pool of workers runs each request to
/// completion and writes the response on the originating connection.
///
/// A bad frame header gets an ERROR reply and closes that connection only.
/// A SHUTDOWN request is acknowledged and then stops the server.
class ShardServer {
 public:
  ShardServer(ShardCore& core, ServerConfig config);
  ~ShardServer();
  ShardServer(const ShardServer&) = delete;
  ShardServer& operator=(const ShardServer&) = delete;

  /// Binds and starts serving. Throws IoError if the endpoint is taken.
  void start();
  std::uint16_t port() const { return port_; }
  Endpoint endpoint() const { return {config_.listen.host, port_}; }

  /// Stops accepting, finishes every queued request, then closes all
  /// connections. Idempotent.
  void stop();
  /// Blocks until the server has stopped (via stop() or SHUTDOWN).
  void wait();

  std::uint64_t requests_served() const { return served_.load(std::memory_order_relaxed); }

 private:
  struct Connection;
  struct Task {
    std::shared_ptr<Connection> conn;
    Frame frame;
  };

  void accept_loop();
  void read_loop(std::shared_ptr<Connection> conn);
  void worker_loop();
  void request_stop();
  void shutdown_sequence();

  ShardCore& core_;
  ServerConfig config_;
  Socket listener_;
  std::uint16_t port_ = 0;

  std::mutex conn_mu_;
  std::list<std::shared_ptr<Connection>> connections_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Task> queue_;
  bool draining_ = false;

  std::mutex state_mu_;
  std::condition_variable state_cv_;
  bool stop_requested_ = false;
  bool stopped_ = false;
  bool started_ = false;

  std::atomic<std::uint64_t> served_{0};
  std::thread acceptor_;
  std::vector<std::thread> workers_;
  std::thread stopper_;
};

}  // namespace cw2v
