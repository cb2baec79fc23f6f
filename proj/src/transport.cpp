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

#include "cw2v/transport.hpp"

#include <bit>
#include <cstring>

namespace cw2v {

namespace {

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void u32_array(std::span<const std::uint32_t> a) {
    u32(static_cast<std::uint32_t>(a.size()));
    for (auto v : a) u32(v);
  }
  void f32_array(std::span<const float> a) {
    u32(static_cast<std::uint32_t>(a.size()));
    for (auto v : a) f32(v);
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }

  /// Reads a length prefix and checks that `elem_size * n` bytes follow.
  std::uint32_t count(std::size_t elem_size) {
    const std::uint32_t n = u32();
    if (elem_size != 0 && n > remaining() / elem_size) {
      throw DecodeError("array length " + std::to_string(n) + " exceeds frame body");
    }
    return n;
  }
  std::vector<std::uint32_t> u32_array() {
    std::vector<std::uint32_t> a(count(4));
    for (auto& v : a) v = u32();
    return a;
  }
  std::vector<float> f32_array() {
    std::vector<float> a(count(4));
    for (auto& v : a) v = f32();
    return a;
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

  std::size_t remaining() const { return in_.size() - pos_; }
  void expect_end() const {
    if (pos_ != in_.size()) throw DecodeError(std::to_string(remaining()) + " trailing bytes in body");
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw DecodeError("truncated body");
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

bool valid_op(std::uint8_t op) { return op >= 1 && op < kNumOpCodes; }

void write_indices(ByteWriter& w, const std::vector<WordId>& inputs,
                   const std::vector<std::vector<WordId>>& contexts) {
  if (inputs.size() != contexts.size()) {
    throw std::invalid_argument("inputs and contexts differ in length");
  }
  w.u32_array(inputs);
  for (const auto& c : contexts) w.u32_array(c);
}

void read_indices(ByteReader& r, std::vector<WordId>& inputs,
                  std::vector<std::vector<WordId>>& contexts) {
  inputs = r.u32_array();
  contexts.resize(inputs.size());
  for (auto& c : contexts) c = r.u32_array();
}

/// Index bytes of an (inputs, contexts) block; advances the reader.
std::size_t skip_indices(ByteReader& r) {
  const std::uint32_t m = r.count(4);
  r.skip(4 * std::size_t{m});
  std::size_t bytes = 4 + 4 * std::size_t{m};
  for (std::uint32_t i = 0; i < m; ++i) {
    const std::uint32_t c = r.count(4);
    r.skip(4 * std::size_t{c});
    bytes += 4 + 4 * std::size_t{c};
  }
  return bytes;
}

void expect_kind(ByteReader& r, OpCode expected) {
  const auto kind = r.u8();
  if (kind != static_cast<std::uint8_t>(expected)) {
    throw DecodeError(std::string("response answers op ") + std::to_string(kind) + ", expected " +
                      op_name(expected));
  }
}

}  // namespace

const char* op_name(OpCode op) {
  switch (op) {
    case OpCode::kHello: return "HELLO";
    case OpCode::kDotprod: return "DOTPROD";
    case OpCode::kAdjust: return "ADJUST";
    case OpCode::kExport: return "EXPORT";
    case OpCode::kShutdown: return "SHUTDOWN";
    case OpCode::kResponse: return "RESPONSE";
    case OpCode::kError: return "ERROR";
  }
  return "UNKNOWN";
}

void encode_header(const Frame& frame, std::span<std::uint8_t, kFrameHeaderSize> out) {
  if (frame.body.size() > kMaxFrameBody) throw std::length_error("frame body too large");
  const auto len = static_cast<std::uint32_t>(frame.body.size());
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(len >> (8 * i));
  out[4] = kFrameMagic;
  out[5] = kProtocolVersion;
  out[6] = static_cast<std::uint8_t>(frame.op);
  out[7] = 0;
  for (int i = 0; i < 8; ++i) out[8 + i] = static_cast<std::uint8_t>(frame.call_id >> (8 * i));
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  std::vector<std::uint8_t> out(kFrameHeaderSize + frame.body.size());
  encode_header(frame, std::span<std::uint8_t, kFrameHeaderSize>(out.data(), kFrameHeaderSize));
  if (!frame.body.empty()) {
    std::memcpy(out.data() + kFrameHeaderSize, frame.body.data(), frame.body.size());
  }
  return out;
}

FrameHeader decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderSize) throw DecodeError("truncated frame header");
  ByteReader r(bytes.first(kFrameHeaderSize));
  FrameHeader h;
  h.body_length = r.u32();
  if (r.u8() != kFrameMagic) throw DecodeError("bad frame magic");
  if (const auto v = r.u8(); v != kProtocolVersion) {
    throw DecodeError("unsupported protocol version " + std::to_string(v));
  }
  const auto op = r.u8();
  if (!valid_op(op)) throw DecodeError("unknown op code " + std::to_string(op));
  h.op = static_cast<OpCode>(op);
  if (r.u8() != 0) throw DecodeError("reserved header byte must be zero");
  h.call_id = r.u64();
  if (h.body_length > kMaxFrameBody) throw DecodeError("oversized frame body");
  return h;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  const FrameHeader h = decode_header(bytes);
  if (bytes.size() - kFrameHeaderSize != h.body_length) {
    throw DecodeError(bytes.size() - kFrameHeaderSize < h.body_length ? "truncated frame body"
                                                                      : "bytes past frame end");
  }
  Frame f;
  f.op = h.op;
  f.call_id = h.call_id;
  f.body.assign(bytes.begin() + kFrameHeaderSize, bytes.end());
  return f;
}

std::vector<std::uint8_t> encode_dotprod(const DotprodRequest& req) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u64(req.seed);
  w.u32(req.negatives);
  write_indices(w, req.inputs, req.contexts);
  return out;
}

DotprodRequest decode_dotprod(std::span<const std::uint8_t> body) {
  ByteReader r(body);
  DotprodRequest req;
  req.seed = r.u64();
  req.negatives = r.u32();
  read_indices(r, req.inputs, req.contexts);
  r.expect_end();
  return req;
}

std::vector<std::uint8_t> encode_adjust(const AdjustRequest& req) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u64(req.seed);
  w.u32(req.negatives);
  write_indices(w, req.inputs, req.contexts);
  w.f32_array(req.g_plus);
  w.f32_array(req.g_minus);
  return out;
}

AdjustRequest decode_adjust(std::span<const std::uint8_t> body) {
  ByteReader r(body);
  AdjustRequest req;
  req.seed = r.u64();
  req.negatives = r.u32();
  read_indices(r, req.inputs, req.contexts);
  req.g_plus = r.f32_array();
  req.g_minus = r.f32_array();
  r.expect_end();
  return req;
}

std::vector<std::uint8_t> encode_export(const ExportRequest& req) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u32(req.begin);
  w.u32(req.end);
  w.u8(static_cast<std::uint8_t>(req.matrix));
  return out;
}

ExportRequest decode_export(std::span<const std::uint8_t> body) {
  ByteReader r(body);
  ExportRequest req;
  req.begin = r.u32();
  req.end = r.u32();
  const auto m = r.u8();
  if (m > 1) throw DecodeError("unknown matrix selector " + std::to_string(m));
  req.matrix = static_cast<Matrix>(m);
  r.expect_end();
  return req;
}

std::vector<std::uint8_t> encode_hello_response(const ShardInfo& info) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(OpCode::kHello));
  w.u32(info.shard_id);
  w.u32(info.num_shards);
  w.u32(info.dim);
  w.u32(info.col_lo);
  w.u32(info.col_hi);
  w.u32(info.vocab_size);
  return out;
}

ShardInfo decode_hello_response(std::span<const std::uint8_t> body) {
  ByteReader r(body);
  expect_kind(r, OpCode::kHello);
  ShardInfo info;
  info.shard_id = r.u32();
  info.num_shards = r.u32();
  info.dim = r.u32();
  info.col_lo = r.u32();
  info.col_hi = r.u32();
  info.vocab_size = r.u32();
  r.expect_end();
  return info;
}

std::vector<std::uint8_t> encode_dotprod_response(const PartialDotResult& result) {
  std::vector<std::uint8_t> out;
  out.reserve(9 + 4 * (result.f_plus.size() + result.f_minus.size()));
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(OpCode::kDotprod));
  w.f32_array(result.f_plus);
  w.f32_array(result.f_minus);
  return out;
}

PartialDotResult decode_dotprod_response(std::span<const std::uint8_t> body) {
  ByteReader r(body);
  expect_kind(r, OpCode::kDotprod);
  PartialDotResult result;
  result.f_plus = r.f32_array();
  result.f_minus = r.f32_array();
  r.expect_end();
  return result;
}

std::vector<std::uint8_t> encode_ack(OpCode answered) {
  return {static_cast<std::uint8_t>(answered)};
}

void decode_ack(std::span<const std::uint8_t> body, OpCode expected) {
  ByteReader r(body);
  expect_kind(r, expected);
  r.expect_end();
}

std::vector<std::uint8_t> encode_export_response(const std::vector<PartialRow>& rows,
                                                 std::uint32_t width) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(OpCode::kExport));
  w.u32(width);
  w.u32(static_cast<std::uint32_t>(rows.size()));
  for (const auto& row : rows) {
    if (row.values.size() != width) throw std::invalid_argument("export row width mismatch");
    w.u32(row.word);
    for (float x : row.values) w.f32(x);
  }
  return out;
}

std::vector<PartialRow> decode_export_response(std::span<const std::uint8_t> body) {
  ByteReader r(body);
  expect_kind(r, OpCode::kExport);
  const std::uint32_t width = r.u32();
  const std::uint32_t n = r.count(4 + 4 * std::size_t{width});
  std::vector<PartialRow> rows(n);
  for (auto& row : rows) {
    row.word = r.u32();
    row.values.resize(width);
    for (auto& x : row.values) x = r.f32();
  }
  r.expect_end();
  return rows;
}

std::vector<std::uint8_t> encode_error(const ErrorInfo& err) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u32(err.code);
  w.u32(static_cast<std::uint32_t>(err.message.size()));
  out.insert(out.end(), err.message.begin(), err.message.end());
  return out;
}

ErrorInfo decode_error(std::span<const std::uint8_t> body) {
  ByteReader r(body);
  ErrorInfo err;
  err.code = r.u32();
  const std::uint32_t n = r.count(1);
  err.message.resize(n);
  for (auto& c : err.message) c = static_cast<char>(r.u8());
  r.expect_end();
  return err;
}

OpCode response_kind(const Frame& frame) {
  if (frame.op != OpCode::kResponse) throw DecodeError("not a RESPONSE frame");
  if (frame.body.empty()) throw DecodeError("empty RESPONSE body");
  if (!valid_op(frame.body[0])) throw DecodeError("RESPONSE answers unknown op");
  return static_cast<OpCode>(frame.body[0]);
}

FrameBreakdown classify_frame(const Frame& frame) {
  FrameBreakdown b;
  b.total = frame.wire_size();
  ByteReader r(frame.body);
  switch (frame.op) {
    case OpCode::kDotprod:
      r.skip(12);
      b.index_bytes = skip_indices(r);
      break;
    case OpCode::kAdjust: {
      r.skip(12);
      b.index_bytes = skip_indices(r);
      const std::uint32_t gp = r.count(4);
      r.skip(4 * std::size_t{gp});
      const std::uint32_t gm = r.count(4);
      b.scalar_payload = 4 * (std::size_t{gp} + gm);
      break;
    }
    case OpCode::kResponse:
      switch (response_kind(frame)) {
        case OpCode::kDotprod: {
          r.skip(1);
          const std::uint32_t fp = r.count(4);
          r.skip(4 * std::size_t{fp});
          const std::uint32_t fm = r.count(4);
          b.scalar_payload = 4 * (std::size_t{fp} + fm);
          break;
        }
        case OpCode::kExport: {
          r.skip(1);
          const std::uint32_t width = r.u32();
          const std::uint32_t n = r.u32();
          b.index_bytes = 4 + 4 * std::size_t{n};
          b.vector_components = 4 * std::size_t{n} * width;
          break;
        }
        default:
          break;
      }
      break;
    default:
      break;
  }
  return b;
}

}  // namespace cw2v
