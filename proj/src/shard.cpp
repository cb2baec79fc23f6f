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

#include "cw2v/shard.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cw2v {

float partial_dot(std::span<const float> a, std::span<const float> b) {
  float acc = 0.0f;
  for (std::size_t j = 0; j < a.size(); ++j) acc += load_component(a[j]) * load_component(b[j]);
  return acc;
}

namespace {

constexpr std::uint32_t kNoSlot = ~std::uint32_t{0};

/// Per-call scratch rows keyed by word. Rows are created on first touch.
/// The word -> slot index is a thread-local array that is cleared again on
/// destruction, so lookups are O(1) without per-call hashing.
class DeltaRows {
 public:
  DeltaRows(std::uint32_t width, std::size_t vocab_size, std::vector<std::uint32_t>& slot)
      : width_(width), slot_(slot) {
    if (slot_.size() < vocab_size) slot_.resize(vocab_size, kNoSlot);
  }
  ~DeltaRows() {
    for (WordId w : words_) slot_[w] = kNoSlot;
  }
  DeltaRows(const DeltaRows&) = delete;
  DeltaRows& operator=(const DeltaRows&) = delete;

  void reserve(std::size_t rows) {
    words_.reserve(rows);
    data_.reserve(rows * width_);
  }

  float* row(WordId w) {
    std::uint32_t& slot = slot_[w];
    if (slot == kNoSlot) {
      slot = static_cast<std::uint32_t>(words_.size());
      words_.push_back(w);
      data_.resize(data_.size() + width_, 0.0f);
    }
    return data_.data() + std::size_t{slot} * width_;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float x) { return std::isfinite(x); });
  }

  /// Adds every scratch row to `target(word)` in ascending word order.
  template <typename RowOf>
  void apply(RowOf&& target) {
    std::vector<std::uint32_t> order(words_.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return words_[a] < words_[b]; });
    for (auto i : order) {
      std::span<float> dst = target(words_[i]);
      const float* src = data_.data() + std::size_t{i} * width_;
      for (std::uint32_t j = 0; j < width_; ++j) {
        store_component(dst[j], load_component(dst[j]) + src[j]);
      }
    }
  }

 private:
  std::uint32_t width_;
  std::vector<std::uint32_t>& slot_;
  std::vector<WordId> words_;
  std::vector<float> data_;
};

/// Copies a shared row with one relaxed load per component.
void snapshot(std::span<const float> src, std::vector<float>& dst) {
  dst.resize(src.size());
  for (std::size_t j = 0; j < src.size(); ++j) dst[j] = load_component(src[j]);
}

void axpy(float* dst, float g, const std::vector<float>& x) {
  for (std::size_t j = 0; j < x.size(); ++j) dst[j] += g * x[j];
}

}  // namespace

ShardCore::ShardCore(PartialVectorStore store, NoiseTable noise)
    : store_(std::move(store)), noise_(std::move(noise)) {
  if (noise_.size() != store_.vocab_size()) {
    throw std::invalid_argument("noise table and store disagree on vocabulary size");
  }
}

void ShardCore::validate(const std::vector<WordId>& inputs,
                         const std::vector<std::vector<WordId>>& contexts,
                         std::uint32_t negatives) const {
  if (inputs.size() != contexts.size()) {
    throw RequestError("W_input has " + std::to_string(inputs.size()) + " words but W_output has " +
                       std::to_string(contexts.size()) + " lists");
  }
  const auto vocab = store_.vocab_size();
  auto check = [&](WordId w) {
    if (w >= vocab) {
      throw RequestError("word index " + std::to_string(w) + " outside vocabulary of " +
                         std::to_string(vocab));
    }
  };
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    check(inputs[i]);
    for (WordId w : contexts[i]) check(w);
  }
  if (negatives > 0 && vocab < 2) throw RequestError("negative sampling needs two or more words");
}

PartialDotResult ShardCore::dotprod(const DotprodRequest& req) const {
  validate(req.inputs, req.contexts, req.negatives);
  const std::size_t pairs = req.num_pairs();
  PartialDotResult out;
  out.f_plus.reserve(pairs);
  out.f_minus.reserve(pairs * req.negatives);

  SeededDraw draw(req.seed);
  std::vector<WordId> ns(req.negatives);
  for (std::size_t i = 0; i < req.inputs.size(); ++i) {
    const auto u = store_.input_row(req.inputs[i]);
    for (WordId w_out : req.contexts[i]) {
      draw.draw(noise_, w_out, ns);
      if (observer_) observer_(OpCode::kDotprod, ns);
      out.f_plus.push_back(partial_dot(u, store_.output_row(w_out)));
      for (WordId neg : ns) out.f_minus.push_back(partial_dot(u, store_.output_row(neg)));
    }
  }
  return out;
}

void ShardCore::adjust(const AdjustRequest& req) {
  validate(req.inputs, req.contexts, req.negatives);
  std::size_t pairs = 0;
  for (const auto& c : req.contexts) pairs += c.size();
  if (req.g_plus.size() != pairs || req.g_minus.size() != pairs * req.negatives) {
    throw RequestError("coefficient arrays (" + std::to_string(req.g_plus.size()) + ", " +
                       std::to_string(req.g_minus.size()) + ") do not match " +
                       std::to_string(pairs) + " pairs with " + std::to_string(req.negatives) +
                       " negatives");
  }

  // All reads below see the store as it was when the call started; the
  // deltas land only at the end.
  thread_local std::vector<std::uint32_t> du_slots, dv_slots;
  DeltaRows du(store_.width(), store_.vocab_size(), du_slots);
  DeltaRows dv(store_.width(), store_.vocab_size(), dv_slots);
  du.reserve(req.inputs.size());
  dv.reserve(std::min<std::size_t>(pairs * (std::size_t{req.negatives} + 1), store_.vocab_size()));
  SeededDraw draw(req.seed);
  std::vector<WordId> ns(req.negatives);
  std::vector<float> u, v;
  std::size_t pos = 0;
  std::size_t neg = 0;
  for (std::size_t i = 0; i < req.inputs.size(); ++i) {
    const WordId w_in = req.inputs[i];
    snapshot(store_.input_row(w_in), u);
    for (WordId w_out : req.contexts[i]) {
      draw.draw(noise_, w_out, ns);
      if (observer_) observer_(OpCode::kAdjust, ns);
      const float g = req.g_plus[pos++];
      snapshot(store_.output_row(w_out), v);
      axpy(du.row(w_in), g, v);
      axpy(dv.row(w_out), g, u);
      for (WordId n : ns) {
        const float gn = req.g_minus[neg++];
        snapshot(store_.output_row(n), v);
        axpy(du.row(w_in), gn, v);
        axpy(dv.row(n), gn, u);
      }
    }
  }
  if (!du.all_finite() || !dv.all_finite()) throw RequestError("non-finite update rejected");
  du.apply([&](WordId w) { return store_.input_row(w); });
  dv.apply([&](WordId w) { return store_.output_row(w); });
}

ShardInfo ShardCore::info() const {
  ShardInfo info;
  info.shard_id = store_.shard_id();
  info.num_shards = store_.layout().num_shards();
  info.dim = store_.layout().dim();
  info.col_lo = store_.columns().lo;
  info.col_hi = store_.columns().hi;
  info.vocab_size = static_cast<std::uint32_t>(store_.vocab_size());
  return info;
}

std::vector<PartialRow> ShardCore::export_rows(const ExportRequest& req) const {
  if (req.begin > req.end) throw RequestError("export range begins after it ends");
  return export_partials(store_, req.begin, req.end, req.matrix);
}

Frame ShardCore::handle(const Frame& request) {
  Frame resp;
  resp.call_id = request.call_id;
  resp.op = OpCode::kResponse;
  try {
    switch (request.op) {
      case OpCode::kHello:
        resp.body = encode_hello_response(info());
        break;
      case OpCode::kDotprod:
        resp.body = encode_dotprod_response(dotprod(decode_dotprod(request.body)));
        break;
      case OpCode::kAdjust:
        adjust(decode_adjust(request.body));
        resp.body = encode_ack(OpCode::kAdjust);
        break;
      case OpCode::kExport:
        resp.body = encode_export_response(export_rows(decode_export(request.body)), store_.width());
        break;
      case OpCode::kShutdown:
        resp.body = encode_ack(OpCode::kShutdown);
        break;
      default:
        resp.op = OpCode::kError;
        resp.body = encode_error({kErrUnsupported, std::string(op_name(request.op)) +
                                                       " is not a request op"});
        break;
    }
  } catch (const DecodeError& e) {
    resp.op = OpCode::kError;
    resp.body = encode_error({kErrMalformed, e.what()});
  } catch (const RequestError& e) {
    resp.op = OpCode::kError;
    resp.body = encode_error({kErrInvalidRequest, e.what()});
  } catch (const std::exception& e) {
    resp.op = OpCode::kError;
    resp.body = encode_error({kErrInternal, e.what()});
  }
  return resp;
}

}  // namespace cw2v
