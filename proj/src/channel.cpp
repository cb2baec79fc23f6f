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

#include "cw2v/channel.hpp"

namespace cw2v {

namespace {

std::future<Frame> failed_future(const std::string& why) {
  std::promise<Frame> p;
  p.set_exception(std::make_exception_ptr(ChannelError(why)));
  return p.get_future();
}

}  // namespace

std::future<Frame> LocalChannel::call(OpCode op, std::vector<std::uint8_t> body) {
  Frame req{op, next_id_.fetch_add(1), std::move(body)};
  if (meter_) meter_->record(Direction::kSent, req);
  // Round-trip through the wire encoding in both directions.
  const Frame delivered = decode_frame(encode_frame(req));
  Frame resp = decode_frame(encode_frame(core_.load()->handle(delivered)));
  if (meter_) meter_->record(Direction::kReceived, resp);
  std::promise<Frame> p;
  p.set_value(std::move(resp));
  return p.get_future();
}

std::string LocalChannel::describe() const {
  return "local shard " + std::to_string(core_.load()->info().shard_id);
}

TcpChannel::TcpChannel(Endpoint endpoint, BandwidthMeter* meter)
    : endpoint_(std::move(endpoint)), meter_(meter) {
  std::lock_guard lock(write_mu_);
  open();
}

TcpChannel::~TcpChannel() {
  std::lock_guard lock(write_mu_);
  sock_.shutdown_both();
  if (reader_.joinable()) reader_.join();
}

void TcpChannel::open() {
  try {
    sock_ = connect_to(endpoint_);
  } catch (const IoError& e) {
    throw ChannelError(e.what());
  }
  {
    std::lock_guard lock(pending_mu_);
    broken_ = false;
  }
  reader_ = std::thread(&TcpChannel::reader_loop, this);
}

void TcpChannel::reconnect() {
  std::lock_guard lock(write_mu_);
  sock_.shutdown_both();
  if (reader_.joinable()) reader_.join();
  sock_.close();
  open();
}

void TcpChannel::fail_pending(const std::string& why) {
  std::map<std::uint64_t, std::promise<Frame>> dropped;
  {
    std::lock_guard lock(pending_mu_);
    broken_ = true;
    dropped.swap(pending_);
  }
  for (auto& [id, p] : dropped) {
    p.set_exception(std::make_exception_ptr(ChannelError(endpoint_.str() + ": " + why)));
  }
}

void TcpChannel::reader_loop() {
  std::string why = "connection closed";
  try {
    while (auto frame = read_frame(sock_)) {
      std::promise<Frame> p;
      {
        std::lock_guard lock(pending_mu_);
        auto it = pending_.find(frame->call_id);
        if (it == pending_.end()) continue;  // caller already gave up
        p = std::move(it->second);
        pending_.erase(it);
      }
      if (meter_) meter_->record(Direction::kReceived, *frame);
      p.set_value(std::move(*frame));
    }
  } catch (const std::exception& e) {
    why = e.what();
  }
  fail_pending(why);
}

std::future<Frame> TcpChannel::call(OpCode op, std::vector<std::uint8_t> body) {
  std::lock_guard wlock(write_mu_);
  Frame req{op, 0, std::move(body)};
  std::future<Frame> fut;
  {
    std::lock_guard lock(pending_mu_);
    if (broken_) return failed_future(endpoint_.str() + ": not connected");
    req.call_id = next_id_++;
    fut = pending_[req.call_id].get_future();
  }
  try {
    write_frame(sock_, req);
  } catch (const IoError& e) {
    std::promise<Frame> p;
    {
      std::lock_guard lock(pending_mu_);
      auto it = pending_.find(req.call_id);
      if (it == pending_.end()) return fut;  // reader already failed it
      p = std::move(it->second);
      pending_.erase(it);
    }
    p.set_exception(std::make_exception_ptr(ChannelError(endpoint_.str() + ": " + e.what())));
    return fut;
  }
  if (meter_) meter_->record(Direction::kSent, req);
  return fut;
}

}  // namespace cw2v
