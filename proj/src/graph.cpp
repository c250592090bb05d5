// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "evnet/graph.hpp"

#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "evnet/errors.hpp"
#include "evnet/layers.hpp"
#include "evnet/tensor_io.hpp"

namespace evnet {

using json = nlohmann::json;

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::input: return "input";
    case LayerKind::output: return "output";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::avg_pool: return "avg_pool";
    case LayerKind::affine: return "affine";
    case LayerKind::add: return "add";
    case LayerKind::concat: return "concat";
    case LayerKind::relu: return "relu";
    case LayerKind::max_pool: return "max_pool";
  }
  return "?";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto k : {LayerKind::input, LayerKind::output, LayerKind::conv2d,
                 LayerKind::fully_connected, LayerKind::avg_pool, LayerKind::affine,
                 LayerKind::add, LayerKind::concat, LayerKind::relu, LayerKind::max_pool}) {
    if (to_string(k) == name) return k;
  }
  throw SchemaError("unknown layer kind '" + std::string(name) + "'");
}

bool is_linear(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d:
    case LayerKind::fully_connected:
    case LayerKind::avg_pool:
    case LayerKind::affine:
    case LayerKind::add:
    case LayerKind::concat:
      return true;
    default:
      return false;
  }
}

bool is_nonlinear(LayerKind kind) {
  return kind == LayerKind::relu || kind == LayerKind::max_pool;
}

namespace {

std::size_t window_out(std::size_t in, std::size_t k, std::size_t s, std::size_t p,
                       const std::string& id) {
  if (s == 0) throw ShapeError(id + ": stride must be positive");
  if (in + 2 * p < k) {
    throw ShapeError(id + ": window " + std::to_string(k) + " larger than padded input " +
                     std::to_string(in + 2 * p));
  }
  return (in + 2 * p - k) / s + 1;
}

void expect_shape(const std::optional<Tensor>& t, const Shape& want, const std::string& what) {
  if (!t) throw ShapeError(what + " is missing");
  if (t->shape() != want) {
    throw ShapeError(what + " has shape " + shape_str(t->shape()) + ", expected " +
                     shape_str(want));
  }
}

}  // namespace

Shape infer_output_shape(const LayerSpec& layer, const std::vector<Shape>& inputs) {
  const auto& id = layer.id;
  const auto& p = layer.params;
  auto need_inputs = [&](std::size_t lo, std::size_t hi) {
    if (inputs.size() < lo || inputs.size() > hi) {
      throw GraphError(id + ": " + std::string(to_string(layer.kind)) + " takes " +
                       std::to_string(lo) + (hi > lo ? "+" : "") + " inputs, got " +
                       std::to_string(inputs.size()));
    }
  };
  auto need_chw = [&](const Shape& s) {
    if (s.size() != 3) throw ShapeError(id + ": expects a [C,H,W] input, got " + shape_str(s));
  };

  switch (layer.kind) {
    case LayerKind::input:
      need_inputs(0, 0);
      if (p.input_shape.empty() || shape_numel(p.input_shape) == 0) {
        throw ShapeError(id + ": input shape must be non-empty with positive extents");
      }
      return p.input_shape;
    case LayerKind::output:
    case LayerKind::relu:
      need_inputs(1, 1);
      return inputs[0];
    case LayerKind::conv2d: {
      need_inputs(1, 1);
      need_chw(inputs[0]);
      const auto& w = p.window;
      expect_shape(p.weight, {p.out_channels, inputs[0][0], w.kernel_h, w.kernel_w},
                   id + " weight");
      if (p.bias) expect_shape(p.bias, {p.out_channels}, id + " bias");
      return {p.out_channels, window_out(inputs[0][1], w.kernel_h, w.stride_h, w.pad_h, id),
              window_out(inputs[0][2], w.kernel_w, w.stride_w, w.pad_w, id)};
    }
    case LayerKind::fully_connected: {
      need_inputs(1, 1);
      expect_shape(p.weight, {p.out_features, shape_numel(inputs[0])}, id + " weight");
      if (p.bias) expect_shape(p.bias, {p.out_features}, id + " bias");
      return {p.out_features};
    }
    case LayerKind::avg_pool:
    case LayerKind::max_pool: {
      need_inputs(1, 1);
      need_chw(inputs[0]);
      const auto& w = p.window;
      if (w.pad_h || w.pad_w) throw ShapeError(id + ": pooling layers do not support padding");
      return {inputs[0][0], window_out(inputs[0][1], w.kernel_h, w.stride_h, 0, id),
              window_out(inputs[0][2], w.kernel_w, w.stride_w, 0, id)};
    }
    case LayerKind::affine: {
      need_inputs(1, 1);
      expect_shape(p.scale, {inputs[0][0]}, id + " scale");
      expect_shape(p.shift, {inputs[0][0]}, id + " shift");
      return inputs[0];
    }
    case LayerKind::add:
      need_inputs(2, SIZE_MAX);
      for (const auto& s : inputs) {
        if (s != inputs[0]) {
          throw ShapeError(id + ": add inputs differ, " + shape_str(s) + " vs " +
                           shape_str(inputs[0]));
        }
      }
      return inputs[0];
    case LayerKind::concat: {
      need_inputs(2, SIZE_MAX);
      const auto axis = p.concat_axis;
      Shape out = inputs[0];
      if (axis >= out.size()) throw ShapeError(id + ": concat axis out of range");
      for (std::size_t i = 1; i < inputs.size(); ++i) {
        const auto& s = inputs[i];
        bool ok = s.size() == out.size();
        for (std::size_t a = 0; ok && a < s.size(); ++a) ok = a == axis || s[a] == out[a];
        if (!ok) throw ShapeError(id + ": concat input " + shape_str(s) + " incompatible");
        out[axis] += s[axis];
      }
      return out;
    }
  }
  throw GraphError(id + ": unhandled layer kind");
}

NetworkGraph::NetworkGraph(std::vector<LayerSpec> layers) {
  const auto n = layers.size();
  std::map<std::string, std::size_t> declared;
  for (std::size_t i = 0; i < n; ++i) {
    if (layers[i].id.empty()) throw GraphError("layer " + std::to_string(i) + " has no id");
    // ':' and '#' are reserved for the names of inserted event nodes.
    if (layers[i].id.find_first_of(":#") != std::string::npos) {
      throw GraphError("layer id '" + layers[i].id + "' may not contain ':' or '#'");
    }
    if (!declared.emplace(layers[i].id, i).second) {
      throw GraphError("duplicate layer id '" + layers[i].id + "'");
    }
  }
  std::vector<std::vector<std::size_t>> consumers(n);
  std::vector<std::size_t> pending(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& in : layers[i].inputs) {
      auto it = declared.find(in);
      if (it == declared.end()) {
        throw GraphError(layers[i].id + ": unknown input '" + in + "'");
      }
      consumers[it->second].push_back(i);
      ++pending[i];
    }
  }

  // Kahn's algorithm, always taking the earliest declared ready layer so the
  // order is deterministic.
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (pending[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const auto i = ready.top();
    ready.pop();
    order.push_back(i);
    for (auto c : consumers[i]) {
      if (--pending[c] == 0) ready.push(c);
    }
  }
  if (order.size() != n) {
    std::string stuck;
    for (std::size_t i = 0; i < n; ++i) {
      if (pending[i]) stuck += (stuck.empty() ? "" : ", ") + layers[i].id;
    }
    throw GraphError("graph contains a cycle through: " + stuck);
  }

  layers_.reserve(n);
  for (auto i : order) layers_.push_back(std::move(layers[i]));
  for (std::size_t i = 0; i < n; ++i) index_[layers_[i].id] = i;

  in_edges_.resize(n);
  out_edges_.resize(n);
  shapes_.resize(n);
  std::size_t inputs = 0, outputs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = layers_[i];
    std::vector<Shape> in_shapes;
    for (const auto& in : l.inputs) {
      const auto j = index_.at(in);
      in_edges_[i].push_back(j);
      out_edges_[j].push_back(i);
      in_shapes.push_back(shapes_[j]);
    }
    if (l.kind == LayerKind::input) {
      ++inputs;
      input_ = i;
    } else if (l.kind == LayerKind::output) {
      ++outputs;
      output_ = i;
    }
    shapes_[i] = infer_output_shape(l, in_shapes);
  }
  if (inputs != 1) throw GraphError("graph needs exactly one input layer, found " +
                                    std::to_string(inputs));
  if (outputs != 1) throw GraphError("graph needs exactly one output layer, found " +
                                     std::to_string(outputs));
  if (!out_edges_[output_].empty()) throw GraphError("the output layer cannot have consumers");
}

std::size_t NetworkGraph::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw GraphError("no layer named '" + id + "'");
  return it->second;
}

namespace {

std::pair<std::size_t, std::size_t> read_pair(const json& params, const char* key,
                                              std::size_t fallback, const std::string& id) {
  if (!params.contains(key)) return {fallback, fallback};
  const auto& v = params.at(key);
  if (v.is_number_unsigned()) return {v.get<std::size_t>(), v.get<std::size_t>()};
  if (v.is_array() && v.size() == 2 && v[0].is_number_unsigned() && v[1].is_number_unsigned()) {
    return {v[0].get<std::size_t>(), v[1].get<std::size_t>()};
  }
  throw SchemaError(id + ": '" + key + "' must be a non-negative integer or a pair");
}

Window2d read_window(const json& params, const char* kernel_key, const std::string& id) {
  if (!params.contains(kernel_key)) throw SchemaError(id + ": missing '" + kernel_key + "'");
  Window2d w;
  std::tie(w.kernel_h, w.kernel_w) = read_pair(params, kernel_key, 1, id);
  std::tie(w.stride_h, w.stride_w) = read_pair(params, "stride", 1, id);
  std::tie(w.pad_h, w.pad_w) = read_pair(params, "padding", 0, id);
  if (w.kernel_h == 0 || w.kernel_w == 0) throw SchemaError(id + ": kernel extents must be >= 1");
  return w;
}

class WeightStore {
 public:
  WeightStore(const json& doc, std::filesystem::path base) : base_(std::move(base)) {
    if (!doc.contains("weights")) return;
    if (!doc.at("weights").is_object()) throw SchemaError("'weights' must be an object");
    for (const auto& [name, path] : doc.at("weights").items()) {
      if (!path.is_string()) throw SchemaError("weight '" + name + "' path must be a string");
      paths_[name] = path.get<std::string>();
    }
  }

  Tensor get(const json& params, const char* key, const std::string& id) {
    if (!params.contains(key) || !params.at(key).is_string()) {
      throw SchemaError(id + ": parameter '" + key + "' must name a weight tensor");
    }
    return by_name(params.at(key).get<std::string>(), id);
  }

  std::optional<Tensor> get_optional(const json& params, const char* key, const std::string& id) {
    if (!params.contains(key) || params.at(key).is_null()) return std::nullopt;
    return get(params, key, id);
  }

 private:
  Tensor by_name(const std::string& name, const std::string& id) {
    auto it = paths_.find(name);
    if (it == paths_.end()) throw SchemaError(id + ": weight '" + name + "' is not declared");
    std::filesystem::path p = it->second;
    if (p.is_relative()) p = base_ / p;
    auto cached = cache_.find(name);
    if (cached != cache_.end()) return cached->second;
    return cache_.emplace(name, load_tensor(p)).first->second;
  }

  std::filesystem::path base_;
  std::map<std::string, std::string> paths_;
  std::map<std::string, Tensor> cache_;
};

// Folds batch normalization into scale/shift:
//   scale = gamma / sqrt(var + eps), shift = beta - mean * scale.
void fold_batch_norm(LayerParams& p, const Tensor& gamma, const Tensor& beta, const Tensor& mean,
                     const Tensor& var, float eps, const std::string& id) {
  const auto c = gamma.size();
  for (const auto* t : {&beta, &mean, &var}) {
    if (t->shape() != gamma.shape()) throw ShapeError(id + ": batch-norm tensors differ in shape");
  }
  std::vector<float> scale(c), shift(c);
  for (std::size_t i = 0; i < c; ++i) {
    if (var[i] + eps <= 0.0f) throw ShapeError(id + ": batch-norm variance + eps must be > 0");
    scale[i] = gamma[i] / std::sqrt(var[i] + eps);
    shift[i] = beta[i] - mean[i] * scale[i];
  }
  p.scale = Tensor({c}, std::move(scale));
  p.shift = Tensor({c}, std::move(shift));
  p.bn_gamma = gamma;
}

LayerSpec parse_layer(const json& j, WeightStore& weights) {
  if (!j.is_object()) throw SchemaError("each layer must be an object");
  for (const char* key : {"id", "kind"}) {
    if (!j.contains(key) || !j.at(key).is_string()) {
      throw SchemaError(std::string("layer field '") + key + "' must be a string");
    }
  }
  LayerSpec l;
  l.id = j.at("id").get<std::string>();
  l.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("inputs")) {
    if (!j.at("inputs").is_array()) throw SchemaError(l.id + ": 'inputs' must be an array");
    for (const auto& in : j.at("inputs")) {
      if (!in.is_string()) throw SchemaError(l.id + ": input ids must be strings");
      l.inputs.push_back(in.get<std::string>());
    }
  }
  if (j.contains("exclude")) l.exclude = j.at("exclude").get<bool>();
  const json params = j.value("params", json::object());
  if (!params.is_object()) throw SchemaError(l.id + ": 'params' must be an object");
  auto& p = l.params;
  try {
    switch (l.kind) {
      case LayerKind::input:
        if (!params.contains("shape")) throw SchemaError(l.id + ": input needs 'shape'");
        p.input_shape = params.at("shape").get<Shape>();
        break;
      case LayerKind::conv2d:
        p.window = read_window(params, "kernel", l.id);
        p.out_channels = params.at("out_channels").get<std::size_t>();
        p.weight = weights.get(params, "weight", l.id);
        p.bias = weights.get_optional(params, "bias", l.id);
        break;
      case LayerKind::fully_connected:
        p.out_features = params.at("out_features").get<std::size_t>();
        p.weight = weights.get(params, "weight", l.id);
        p.bias = weights.get_optional(params, "bias", l.id);
        break;
      case LayerKind::avg_pool:
      case LayerKind::max_pool:
        p.window = read_window(params, "window", l.id);
        if (!params.contains("stride")) {
          p.window.stride_h = p.window.kernel_h;
          p.window.stride_w = p.window.kernel_w;
        }
        break;
      case LayerKind::affine:
        if (params.contains("gamma")) {
          fold_batch_norm(p, weights.get(params, "gamma", l.id), weights.get(params, "beta", l.id),
                          weights.get(params, "mean", l.id), weights.get(params, "var", l.id),
                          params.value("eps", 1e-5f), l.id);
        } else {
          p.scale = weights.get(params, "scale", l.id);
          p.shift = weights.get(params, "shift", l.id);
        }
        break;
      case LayerKind::concat:
        p.concat_axis = params.value("axis", std::size_t{0});
        break;
      case LayerKind::add:
      case LayerKind::relu:
      case LayerKind::output:
        break;
    }
  } catch (const json::exception& e) {
    throw SchemaError(l.id + ": bad params: " + e.what());
  }
  return l;
}

}  // namespace

NetworkGraph graph_parse(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("graph document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("layers") || !doc.at("layers").is_array()) {
    throw SchemaError("graph document needs a 'layers' array");
  }
  WeightStore weights(doc, base_dir);
  std::vector<LayerSpec> layers;
  for (const auto& j : doc.at("layers")) layers.push_back(parse_layer(j, weights));
  return NetworkGraph(std::move(layers));
}

NetworkGraph load_graph(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open graph config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return graph_parse(ss.str(), path.parent_path());
}

std::size_t conventional_macs(const NetworkGraph& g) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<Shape> in;
    for (auto j : g.input_indices(i)) in.push_back(g.output_shape(j));
    total += dense_mac_count(g.layer(i), in);
  }
  return total;
}

std::map<std::string, std::vector<float>> batch_norm_gammas(const NetworkGraph& g) {
  std::map<std::string, std::vector<float>> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::size_t j = i;
    // Walk back through shape-preserving pointwise layers.
    while (g.layer(j).kind == LayerKind::relu || g.layer(j).kind == LayerKind::output) {
      j = g.input_indices(j).front();
    }
    const auto& l = g.layer(j);
    if (l.kind == LayerKind::affine && l.params.bn_gamma) {
      auto v = l.params.bn_gamma->values();
      out[g.layer(i).id] = std::vector<float>(v.begin(), v.end());
    }
  }
  return out;
}

}  // namespace evnet
