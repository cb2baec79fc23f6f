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

#include "cw2v/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/uio.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>

namespace cw2v {

namespace {

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

/// Reads exactly buf.size() bytes. Returns false on EOF before any byte.
bool recv_exact(const Socket& s, std::span<std::uint8_t> buf) {
  std::size_t got = 0;
  while (got < buf.size()) {
    const ssize_t n = ::recv(s.fd(), buf.data() + got, buf.size() - got, 0);
    if (n == 0) {
      if (got == 0) return false;
      throw IoError("connection closed mid-frame");
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(errno_text("recv"));
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

addrinfo* resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  const char* host = ep.host.empty() ? nullptr : ep.host.c_str();
  if (int rc = ::getaddrinfo(host, port.c_str(), &hints, &res); rc != 0) {
    throw IoError("resolve " + ep.str() + ": " + ::gai_strerror(rc));
  }
  return res;
}

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 == text.size()) {
    throw std::invalid_argument("endpoint '" + text + "' is not host:port");
  }
  Endpoint ep;
  ep.host = text.substr(0, colon);
  unsigned port = 0;
  const char* first = text.data() + colon + 1;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, port);
  if (ec != std::errc() || ptr != last || port > 65535) {
    throw std::invalid_argument("endpoint '" + text + "' has a bad port");
  }
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

std::vector<Endpoint> read_endpoints_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<Endpoint> eps;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    eps.push_back(parse_endpoint(line.substr(first, last - first + 1)));
  }
  if (eps.empty()) throw std::runtime_error(path.string() + " lists no endpoints");
  return eps;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown_both() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::shutdown_read() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RD);
}

Socket connect_to(const Endpoint& ep) {
  addrinfo* res = resolve(ep, false);
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      int one = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      ::freeaddrinfo(res);
      return s;
    }
    last_error = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  throw IoError("connect " + ep.str() + ": " + last_error);
}

Socket listen_on(const Endpoint& ep, int backlog) {
  addrinfo* res = resolve(ep, true);
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(s.fd(), backlog) == 0) {
      ::freeaddrinfo(res);
      return s;
    }
    const std::string err = errno_text(("bind " + ep.str()).c_str());
    ::freeaddrinfo(res);
    throw IoError(err);
  }
  ::freeaddrinfo(res);
  throw IoError("bind " + ep.str() + ": no usable address");
}

std::uint16_t local_port(const Socket& s) {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    throw IoError(errno_text("getsockname"));
  }
  return ntohs(addr.sin_port);
}

void send_all(const Socket& s, std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(s.fd(), bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(errno_text("send"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

void write_frame(const Socket& s, const Frame& frame) {
  std::uint8_t header[kFrameHeaderSize];
  encode_header(frame, std::span<std::uint8_t, kFrameHeaderSize>(header));
  send_all(s, header);
  if (!frame.body.empty()) send_all(s, frame.body);
}

std::optional<Frame> read_frame(const Socket& s) {
  std::uint8_t header[kFrameHeaderSize];
  if (!recv_exact(s, header)) return std::nullopt;
  const FrameHeader h = decode_header(header);
  Frame f;
  f.op = h.op;
  f.call_id = h.call_id;
  f.body.resize(h.body_length);
  if (h.body_length > 0 && !recv_exact(s, f.body)) throw IoError("connection closed mid-frame");
  return f;
}

}  // namespace cw2v
