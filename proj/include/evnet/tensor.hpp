// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense tensors and sparse delta packets shared by every other module.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace evnet {

using Shape = std::vector<std::size_t>;

/// Number of elements described by a shape. Empty shapes have no elements.
std::size_t shape_numel(const Shape& shape);

std::string shape_str(const Shape& shape);

/// Row-major float32 array. Values are finite at every public boundary:
/// constructors and from_values() reject NaN and Inf.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, float fill);
  Tensor(Shape shape, std::vector<float> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::span<const float> values() const { return values_; }
  std::span<float> mutable_values() { return values_; }

  float operator[](std::size_t i) const { return values_[i]; }
  float& operator[](std::size_t i) { return values_[i]; }

  /// Throws ShapeError when any element is NaN or Inf.
  void check_finite(const std::string& where) const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<float> values_;
};

/// Tensor with product(shape) copies of fill. Throws ShapeError on an empty
/// shape or a zero extent.
Tensor tensor_new(const Shape& shape, float fill);

struct DeltaEntry {
  std::size_t index = 0;
  float delta = 0.0f;

  bool operator==(const DeltaEntry&) const = default;
};

/// Sparse (flat index, delta) updates travelling along one edge during one
/// frame. Entries are kept in canonical form: strictly increasing indices,
/// all below extent(), no zero deltas.
class DeltaPacket {
 public:
  DeltaPacket() = default;
  DeltaPacket(std::string layer_id, std::int64_t frame_index, std::size_t extent);

  /// Builds a canonical packet from arbitrary entries: sorts, sums duplicate
  /// indices and drops zeros. Throws ShapeError on an out-of-range index.
  static DeltaPacket from_entries(std::string layer_id, std::int64_t frame_index,
                                  std::size_t extent, std::vector<DeltaEntry> entries);

  const std::string& layer_id() const { return layer_id_; }
  std::int64_t frame_index() const { return frame_index_; }
  std::size_t extent() const { return extent_; }
  const std::vector<DeltaEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  void set_layer_id(std::string id) { layer_id_ = std::move(id); }

  /// Appends one entry. The index must exceed the last stored index; zero
  /// deltas are silently skipped.
  void push_back(std::size_t index, float delta);

  bool operator==(const DeltaPacket&) const = default;

 private:
  std::string layer_id_;
  std::int64_t frame_index_ = 0;
  std::size_t extent_ = 0;
  std::vector<DeltaEntry> entries_;
};

/// Entries exactly where |after - before| > eps, valued after - before.
DeltaPacket delta_from_diff(const Tensor& before, const Tensor& after, float eps,
                            std::string layer_id = {}, std::int64_t frame_index = 0);

/// Entry-wise sum of two packets with the same routing metadata.
/// Throws RoutingError when layer ids, frame indices or extents differ.
DeltaPacket delta_merge(const DeltaPacket& a, const DeltaPacket& b);

/// Adds every entry of the packet onto the tensor in place.
void apply_delta(Tensor& target, const DeltaPacket& packet);

/// Dense tensor of the given shape holding the packet's entries.
Tensor materialize(const DeltaPacket& packet, const Shape& shape);

}  // namespace evnet
