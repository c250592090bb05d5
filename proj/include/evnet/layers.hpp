// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-layer execution in dense (conventional) and event (delta) form.
//
// Threading: every function here is single-threaded and touches only its
// arguments. Layers in independent branches of a graph may run concurrently
// as long as each piece of event state they write has exactly one writer;
// the engine enforces that through StateLease.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evnet/graph.hpp"
#include "evnet/tensor.hpp"

namespace evnet {

struct DenseResult {
  Tensor output;
  std::size_t macs = 0;
  // relu evaluations and max-pool comparisons; not MACs.
  std::size_t nonlinear_ops = 0;
};

/// Conventional forward pass of one layer, biases included. MACs follow the
/// dense convention: conv = output elements x kernel fan-in (padding taps
/// included), fc = N x M, avg_pool = output elements x window, affine = one
/// per element, everything else zero.
DenseResult dense_forward(const LayerSpec& layer, std::span<const Tensor* const> inputs);
DenseResult dense_forward(const LayerSpec& layer, const Tensor& input);

std::size_t dense_mac_count(const LayerSpec& layer, const std::vector<Shape>& input_shapes);

struct DeltaResult {
  DeltaPacket output;
  std::size_t macs = 0;
};

/// Homogeneous linear image of incoming deltas (biases and shifts excluded).
/// MACs are the scalar multiplications actually performed: each input entry
/// costs its fan-out (fc: M; conv: C_out x in-range output positions its
/// receptive field covers; avg_pool: covering windows; affine: 1). add and
/// concat cost nothing. Exact zero results are dropped.
/// Throws ClassificationError for nonlinear layers, ShapeError for packets
/// whose extent does not match the input shape.
DeltaResult delta_forward_linear(const LayerSpec& layer, const std::vector<Shape>& input_shapes,
                                 std::span<const DeltaPacket* const> inputs);
DeltaResult delta_forward_linear(const LayerSpec& layer, const Shape& input_shape,
                                 const DeltaPacket& input);

enum class PointwiseFn { relu, identity };

float apply_pointwise(PointwiseFn fn, float a);

/// f applied only at the supplied accumulator values; one arithmetic op each.
std::vector<float> pointwise_recompute(PointwiseFn fn, std::span<const float> a_values);

struct WindowUpdate {
  std::size_t index = 0;  // flat output index
  float value = 0.0f;
};

struct MaxPoolEventResult {
  std::vector<WindowUpdate> updates;  // ascending output index
  std::size_t comparisons = 0;
};

/// Recomputes every pool window that contains a touched input index, taking
/// the max over the full buffered window. `buffer` must already hold the
/// updated input values. Untouched windows cost nothing.
MaxPoolEventResult maxpool_event(const LayerSpec& layer, const Tensor& buffer,
                                 std::span<const std::size_t> touched);
MaxPoolEventResult maxpool_event(const LayerSpec& layer, const Tensor& buffer,
                                 const DeltaPacket& din);

}  // namespace evnet
