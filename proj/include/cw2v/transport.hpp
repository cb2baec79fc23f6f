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

// Binary framing for the shard RPCs. Byte layouts are normative and
// documented in docs/protocol.md; all integers are little-endian.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cw2v/messages.hpp"

namespace cw2v {

enum class OpCode : std::uint8_t {
  kHello = 1,
  kDotprod = 2,
  kAdjust = 3,
  kExport = 4,
  kShutdown = 5,
  kResponse = 6,
  kError = 7,
};
inline constexpr int kNumOpCodes = 8;

const char* op_name(OpCode op);

inline constexpr std::uint8_t kFrameMagic = 0xC2;
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 16;
inline constexpr std::uint32_t kMaxFrameBody = 256u << 20;

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Frame {
  OpCode op = OpCode::kResponse;
  std::uint64_t call_id = 0;
  std::vector<std::uint8_t> body;

  std::size_t wire_size() const { return kFrameHeaderSize + body.size(); }
  bool operator==(const Frame&) const = default;
};

struct FrameHeader {
  std::uint32_t body_length = 0;
  OpCode op = OpCode::kResponse;
  std::uint64_t call_id = 0;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);
void encode_header(const Frame& frame, std::span<std::uint8_t, kFrameHeaderSize> out);
/// Validates magic, version, op code and the body size limit.
FrameHeader decode_header(std::span<const std::uint8_t> bytes);
/// `bytes` must hold exactly one frame.
Frame decode_frame(std::span<const std::uint8_t> bytes);

// Request bodies.
std::vector<std::uint8_t> encode_dotprod(const DotprodRequest& req);
DotprodRequest decode_dotprod(std::span<const std::uint8_t> body);
std::vector<std::uint8_t> encode_adjust(const AdjustRequest& req);
AdjustRequest decode_adjust(std::span<const std::uint8_t> body);
std::vector<std::uint8_t> encode_export(const ExportRequest& req);
ExportRequest decode_export(std::span<const std::uint8_t> body);

// Response bodies start with the op code they answer.
std::vector<std::uint8_t> encode_hello_response(const ShardInfo& info);
ShardInfo decode_hello_response(std::span<const std::uint8_t> body);
std::vector<std::uint8_t> encode_dotprod_response(const PartialDotResult& result);
PartialDotResult decode_dotprod_response(std::span<const std::uint8_t> body);
std::vector<std::uint8_t> encode_ack(OpCode answered);
void decode_ack(std::span<const std::uint8_t> body, OpCode expected);
std::vector<std::uint8_t> encode_export_response(const std::vector<PartialRow>& rows, std::uint32_t width);
std::vector<PartialRow> decode_export_response(std::span<const std::uint8_t> body);
std::vector<std::uint8_t> encode_error(const ErrorInfo& err);
ErrorInfo decode_error(std::span<const std::uint8_t> body);

/// Answered op of a RESPONSE frame.
OpCode response_kind(const Frame& frame);

/// Byte accounting for one frame, read off the schema.
struct FrameBreakdown {
  std::size_t total = 0;
  std::size_t scalar_payload = 0;     // F (dotprod responses) or G (adjust requests)
  std::size_t index_bytes = 0;        // word ids plus their length prefixes
  std::size_t vector_components = 0;  // bytes of u/v components; nonzero only for export
  std::size_t overhead() const { return total - scalar_payload - index_bytes - vector_components; }
};
FrameBreakdown classify_frame(const Frame& frame);

}  // namespace cw2v
