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

// Thin POSIX TCP helpers shared by the shard server and the client channel.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cw2v/transport.hpp"

namespace cw2v {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
  bool operator==(const Endpoint&) const = default;
};

/// Parses "host:port". Throws std::invalid_argument.
Endpoint parse_endpoint(const std::string& text);

/// One host:port per line; blank lines and '#' comments are skipped.
std::vector<Endpoint> read_endpoints_file(const std::filesystem::path& path);

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { close(); }
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = other.release();
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void close();
  /// shutdown(2) without closing; wakes threads blocked on the socket.
  void shutdown_both();
  void shutdown_read();

 private:
  int fd_ = -1;
};

Socket connect_to(const Endpoint& ep);
/// Binds and listens; port 0 picks an ephemeral port.
Socket listen_on(const Endpoint& ep, int backlog = 64);
std::uint16_t local_port(const Socket& s);

void send_all(const Socket& s, std::span<const std::uint8_t> bytes);
void write_frame(const Socket& s, const Frame& frame);

/// Reads one frame. Returns nullopt on orderly EOF before a header starts.
/// Throws DecodeError for a bad header (the stream is then unusable) and
/// IoError for socket failures or EOF mid-frame.
std::optional<Frame> read_frame(const Socket& s);

}  // namespace cw2v
