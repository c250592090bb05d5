// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "evnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evnet/errors.hpp"

namespace evnet {

std::size_t shape_numel(const Shape& shape) {
  if (shape.empty()) return 0;
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one extent");
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor shape " + shape_str(shape) + " has a zero extent");
  }
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  if (!std::isfinite(fill)) throw ShapeError("tensor fill value is not finite");
  values_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  validate_shape(shape_);
  if (values_.size() != shape_numel(shape_)) {
    throw ShapeError("tensor shape " + shape_str(shape_) + " needs " +
                     std::to_string(shape_numel(shape_)) + " values, got " +
                     std::to_string(values_.size()));
  }
  check_finite("tensor construction");
}

void Tensor::check_finite(const std::string& where) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ShapeError(where + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

Tensor tensor_new(const Shape& shape, float fill) { return Tensor(shape, fill); }

DeltaPacket::DeltaPacket(std::string layer_id, std::int64_t frame_index, std::size_t extent)
    : layer_id_(std::move(layer_id)), frame_index_(frame_index), extent_(extent) {}

DeltaPacket DeltaPacket::from_entries(std::string layer_id, std::int64_t frame_index,
                                      std::size_t extent, std::vector<DeltaEntry> entries) {
  for (const auto& e : entries) {
    if (e.index >= extent) {
      throw ShapeError("delta index " + std::to_string(e.index) + " outside extent " +
                       std::to_string(extent));
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const DeltaEntry& l, const DeltaEntry& r) { return l.index < r.index; });
  DeltaPacket p(std::move(layer_id), frame_index, extent);
  p.entries_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    float sum = 0.0f;
    while (j < entries.size() && entries[j].index == entries[i].index) sum += entries[j++].delta;
    if (sum != 0.0f) p.entries_.push_back({entries[i].index, sum});
    i = j;
  }
  return p;
}

void DeltaPacket::push_back(std::size_t index, float delta) {
  if (index >= extent_) {
    throw ShapeError("delta index " + std::to_string(index) + " outside extent " +
                     std::to_string(extent_) + " on " + layer_id_);
  }
  if (!entries_.empty() && entries_.back().index >= index) {
    throw ShapeError("delta indices must be strictly increasing on " + layer_id_);
  }
  if (delta != 0.0f) entries_.push_back({index, delta});
}

DeltaPacket delta_from_diff(const Tensor& before, const Tensor& after, float eps,
                            std::string layer_id, std::int64_t frame_index) {
  if (before.shape() != after.shape()) {
    throw ShapeError("delta_from_diff shape mismatch " + shape_str(before.shape()) + " vs " +
                     shape_str(after.shape()));
  }
  if (!(eps >= 0.0f)) throw ShapeError("delta_from_diff eps must be >= 0");
  DeltaPacket p(std::move(layer_id), frame_index, before.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    const float diff = after[i] - before[i];
    if (std::fabs(diff) > eps) p.push_back(i, diff);
  }
  return p;
}

DeltaPacket delta_merge(const DeltaPacket& a, const DeltaPacket& b) {
  if (a.layer_id() != b.layer_id()) {
    throw RoutingError("cannot merge packets for layers '" + a.layer_id() + "' and '" +
                       b.layer_id() + "'");
  }
  if (a.frame_index() != b.frame_index()) {
    throw RoutingError("cannot merge packets from frames " + std::to_string(a.frame_index()) +
                       " and " + std::to_string(b.frame_index()));
  }
  if (a.extent() != b.extent()) {
    throw RoutingError("cannot merge packets with extents " + std::to_string(a.extent()) +
                       " and " + std::to_string(b.extent()));
  }
  DeltaPacket out(a.layer_id(), a.frame_index(), a.extent());
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  std::size_t i = 0, j = 0;
  while (i < ea.size() || j < eb.size()) {
    if (j == eb.size() || (i < ea.size() && ea[i].index < eb[j].index)) {
      out.push_back(ea[i].index, ea[i].delta);
      ++i;
    } else if (i == ea.size() || eb[j].index < ea[i].index) {
      out.push_back(eb[j].index, eb[j].delta);
      ++j;
    } else {
      out.push_back(ea[i].index, ea[i].delta + eb[j].delta);
      ++i;
      ++j;
    }
  }
  return out;
}

void apply_delta(Tensor& target, const DeltaPacket& packet) {
  if (packet.extent() != target.size()) {
    throw ShapeError("packet extent " + std::to_string(packet.extent()) +
                     " does not match tensor size " + std::to_string(target.size()));
  }
  for (const auto& e : packet.entries()) target[e.index] += e.delta;
}

Tensor materialize(const DeltaPacket& packet, const Shape& shape) {
  Tensor t(shape, 0.0f);
  apply_delta(t, packet);
  return t;
}

}  // namespace evnet
