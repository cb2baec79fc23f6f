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

#include "cw2v/server.hpp"

#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>

#include <cerrno>

namespace cw2v {

struct ShardServer::Connection {
  explicit Connection(Socket s) : sock(std::move(s)) {}

  void send(const Frame& frame) {
    std::lock_guard lock(write_mu);
    write_frame(sock, frame);
  }

  Socket sock;
  std::mutex write_mu;
  std::thread reader;
  std::atomic<bool> done{false};
};

ShardServer::ShardServer(ShardCore& core, ServerConfig config)
    : core_(core), config_(std::move(config)) {}

ShardServer::~ShardServer() {
  stop();
  if (stopper_.joinable()) stopper_.join();
}

void ShardServer::start() {
  {
    std::lock_guard lock(state_mu_);
    if (started_) throw std::logic_error("server already started");
    started_ = true;
  }
  try {
    listener_ = listen_on(config_.listen);
  } catch (...) {
    std::lock_guard lock(state_mu_);
    started_ = false;
    throw;
  }
  port_ = local_port(listener_);
  unsigned n = config_.threads ? config_.threads : std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  for (unsigned i = 0; i < n; ++i) workers_.emplace_back(&ShardServer::worker_loop, this);
  acceptor_ = std::thread(&ShardServer::accept_loop, this);
  stopper_ = std::thread([this] {
    {
      std::unique_lock lock(state_mu_);
      state_cv_.wait(lock, [this] { return stop_requested_; });
    }
    shutdown_sequence();
    std::lock_guard lock(state_mu_);
    stopped_ = true;
    state_cv_.notify_all();
  });
}

void ShardServer::request_stop() {
  std::lock_guard lock(state_mu_);
  stop_requested_ = true;
  state_cv_.notify_all();
}

void ShardServer::stop() {
  {
    std::lock_guard lock(state_mu_);
    if (!started_) return;
  }
  request_stop();
  wait();
}

void ShardServer::wait() {
  std::unique_lock lock(state_mu_);
  if (!started_) return;
  state_cv_.wait(lock, [this] { return stopped_; });
}

void ShardServer::accept_loop() {
  for (;;) {
    const int fd = ::accept(listener_.fd(), nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      break;  // listener shut down
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    auto conn = std::make_shared<Connection>(Socket(fd));
    std::lock_guard lock(conn_mu_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      if ((*it)->done.load()) {
        (*it)->reader.join();
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
    conn->reader = std::thread(&ShardServer::read_loop, this, conn);
    connections_.push_back(std::move(conn));
  }
}

void ShardServer::read_loop(std::shared_ptr<Connection> conn) {
  try {
    while (auto frame = read_frame(conn->sock)) {
      std::lock_guard lock(queue_mu_);
      queue_.push_back({conn, std::move(*frame)});
      queue_cv_.notify_one();
    }
  } catch (const DecodeError& e) {
    // The byte stream cannot be resynchronized after a bad header.
    Frame err{OpCode::kError, 0, encode_error({kErrMalformed, e.what()})};
    try {
      conn->send(err);
    } catch (const IoError&) {
    }
    conn->sock.shutdown_both();
  } catch (const IoError&) {
    conn->sock.shutdown_both();
  }
  conn->done.store(true);
}

void ShardServer::worker_loop() {
  for (;;) {
    Task task;
    {
      std::unique_lock lock(queue_mu_);
      queue_cv_.wait(lock, [this] { return draining_ || !queue_.empty(); });
      if (queue_.empty()) return;
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    Frame resp = core_.handle(task.frame);
    try {
      task.conn->send(resp);
    } catch (const IoError&) {
      // Client went away; nothing to report to.
    }
    served_.fetch_add(1, std::memory_order_relaxed);
    if (task.frame.op == OpCode::kShutdown && resp.op == OpCode::kResponse) request_stop();
  }
}

void ShardServer::shutdown_sequence() {
  listener_.shutdown_both();
  if (acceptor_.joinable()) acceptor_.join();

  std::list<std::shared_ptr<Connection>> conns;
  {
    std::lock_guard lock(conn_mu_);
    conns.swap(connections_);
  }
  // Stop intake; frames already queued are still answered below.
  for (auto& c : conns) c->sock.shutdown_read();
  for (auto& c : conns) {
    if (c->reader.joinable()) c->reader.join();
  }
  {
    std::lock_guard lock(queue_mu_);
    draining_ = true;
    queue_cv_.notify_all();
  }
  for (auto& w : workers_) w.join();
  workers_.clear();
  for (auto& c : conns) c->sock.shutdown_both();
  listener_.close();
}

}  // namespace cw2v
