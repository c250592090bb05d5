// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Conventional networks as a DAG of layers.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evnet/tensor.hpp"

namespace evnet {

enum class LayerKind {
  input,
  output,
  conv2d,
  fully_connected,
  avg_pool,
  affine,
  add,
  concat,
  relu,
  max_pool,
};

std::string_view to_string(LayerKind kind);
/// Throws SchemaError for unknown names.
LayerKind layer_kind_from_string(std::string_view name);

/// Linear layers consume deltas in event mode; nonlinear ones consume values.
/// input and output are neither.
bool is_linear(LayerKind kind);
bool is_nonlinear(LayerKind kind);

struct Window2d {
  std::size_t kernel_h = 1, kernel_w = 1;
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t pad_h = 0, pad_w = 0;
};

struct LayerParams {
  Shape input_shape;           // input
  Window2d window;             // conv2d, avg_pool, max_pool
  std::size_t out_channels = 0;   // conv2d
  std::size_t out_features = 0;   // fully_connected
  std::size_t concat_axis = 0;    // concat
  std::optional<Tensor> weight;   // conv2d [Co,Ci,kh,kw]; fully_connected [M,N]
  std::optional<Tensor> bias;     // conv2d [Co]; fully_connected [M]
  std::optional<Tensor> scale;    // affine [C]
  std::optional<Tensor> shift;    // affine [C]
  // Batch-norm gamma kept after folding; usable for per-channel thresholds.
  std::optional<Tensor> bn_gamma;
};

struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::relu;
  std::vector<std::string> inputs;
  LayerParams params;
  // Excluded layers are recomputed densely in event mode.
  bool exclude = false;
};

/// Validated DAG. Layers are stored in a deterministic topological order and
/// every layer's output shape is inferred at construction.
class NetworkGraph {
 public:
  NetworkGraph() = default;
  /// Throws GraphError (cycle, dangling input, duplicate id, input/output
  /// count) or ShapeError (weights or inputs with inconsistent shapes).
  explicit NetworkGraph(std::vector<LayerSpec> layers);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t size() const { return layers_.size(); }
  const LayerSpec& layer(std::size_t i) const { return layers_.at(i); }
  const LayerSpec& layer(const std::string& id) const { return layers_.at(index_of(id)); }
  std::size_t index_of(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  const Shape& output_shape(std::size_t i) const { return shapes_.at(i); }
  const Shape& output_shape(const std::string& id) const { return shapes_.at(index_of(id)); }

  /// Indices of the layers feeding layer i, in declared order.
  const std::vector<std::size_t>& input_indices(std::size_t i) const { return in_edges_.at(i); }
  /// Indices of the layers consuming layer i.
  const std::vector<std::size_t>& consumers(std::size_t i) const { return out_edges_.at(i); }

  std::size_t input_index() const { return input_; }
  std::size_t output_index() const { return output_; }
  const Shape& input_shape() const { return shapes_.at(input_); }

 private:
  std::vector<LayerSpec> layers_;
  std::map<std::string, std::size_t> index_;
  std::vector<Shape> shapes_;
  std::vector<std::vector<std::size_t>> in_edges_;
  std::vector<std::vector<std::size_t>> out_edges_;
  std::size_t input_ = 0;
  std::size_t output_ = 0;
};

/// Output shape of one layer given its input shapes. Throws ShapeError.
Shape infer_output_shape(const LayerSpec& layer, const std::vector<Shape>& inputs);

/// Parses a JSON graph document. Relative weight paths resolve against
/// base_dir. Throws SchemaError, GraphError, ShapeError or IoError.
NetworkGraph graph_parse(std::string_view text, const std::filesystem::path& base_dir = {});
NetworkGraph load_graph(const std::filesystem::path& path);

/// Multiply-accumulates of one conventional forward pass.
std::size_t conventional_macs(const NetworkGraph& g);

/// Per-channel batch-norm gammas reachable from each layer's output through
/// pointwise layers, keyed by layer id. Used to scale gate thresholds.
std::map<std::string, std::vector<float>> batch_norm_gammas(const NetworkGraph& g);

}  // namespace evnet
