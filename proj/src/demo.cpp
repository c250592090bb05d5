// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "evnet/demo.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "evnet/errors.hpp"
#include "evnet/report.hpp"
#include "evnet/tensor_io.hpp"

namespace evnet {
namespace {

using json = nlohmann::json;

class WeightRng {
 public:
  explicit WeightRng(std::uint64_t seed) : rng_(seed) {}

  Tensor uniform(Shape shape, float bound) {
    std::vector<float> v(shape_numel(shape));
    for (auto& x : v) {
      const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
      x = static_cast<float>((2.0 * u - 1.0) * bound);
    }
    return Tensor(std::move(shape), std::move(v));
  }

  Tensor he(Shape shape, std::size_t fan_in) {
    return uniform(std::move(shape), static_cast<float>(std::sqrt(6.0 / fan_in)));
  }

 private:
  std::mt19937_64 rng_;
};

LayerSpec conv(WeightRng& rng, std::string id, std::string in, std::size_t cin, std::size_t cout) {
  LayerSpec l{std::move(id), LayerKind::conv2d, {std::move(in)}, {}, false};
  l.params.window = {3, 3, 1, 1, 1, 1};
  l.params.out_channels = cout;
  l.params.weight = rng.he({cout, cin, 3, 3}, cin * 9);
  l.params.bias = rng.uniform({cout}, 0.05f);
  return l;
}

LayerSpec simple(std::string id, LayerKind kind, std::string in) {
  return LayerSpec{std::move(id), kind, {std::move(in)}, {}, false};
}

}  // namespace

NetworkGraph make_demo_network(std::size_t height, std::size_t width, std::uint64_t seed) {
  if (height < 2 || width < 2 || height % 2 || width % 2) {
    throw ShapeError("demo network needs even input extents >= 2");
  }
  WeightRng rng(seed);
  std::vector<LayerSpec> layers;
  LayerSpec input{"input", LayerKind::input, {}, {}, false};
  input.params.input_shape = {1, height, width};
  layers.push_back(std::move(input));
  layers.push_back(conv(rng, "conv1", "input", 1, 4));
  layers.push_back(simple("relu1", LayerKind::relu, "conv1"));
  layers.push_back(conv(rng, "conv2", "relu1", 4, 8));
  layers.push_back(simple("relu2", LayerKind::relu, "conv2"));
  LayerSpec pool = simple("pool", LayerKind::max_pool, "relu2");
  pool.params.window = {2, 2, 2, 2, 0, 0};
  layers.push_back(std::move(pool));
  layers.push_back(conv(rng, "conv3", "pool", 8, 8));
  layers.push_back(simple("relu3", LayerKind::relu, "conv3"));
  const auto features = 8 * (height / 2) * (width / 2);
  LayerSpec fc = simple("fc", LayerKind::fully_connected, "relu3");
  fc.params.out_features = 10;
  fc.params.weight = rng.he({10, features}, features);
  fc.params.bias = rng.uniform({10}, 0.05f);
  layers.push_back(std::move(fc));
  layers.push_back(simple("output", LayerKind::output, "fc"));
  return NetworkGraph(std::move(layers));
}

std::filesystem::path save_graph(const NetworkGraph& g, const std::filesystem::path& dir,
                                 const std::string& stem) {
  std::filesystem::create_directories(dir / "weights");
  json doc;
  doc["layers"] = json::array();
  doc["weights"] = json::object();
  auto store = [&](const std::string& name, const Tensor& t) {
    const auto rel = "weights/" + name + ".evts";
    save_tensor(dir / rel, t);
    doc["weights"][name] = rel;
    return name;
  };
  for (const auto& l : g.layers()) {
    json j{{"id", l.id}, {"kind", std::string(to_string(l.kind))}, {"inputs", l.inputs}};
    if (l.exclude) j["exclude"] = true;
    json p = json::object();
    const auto& w = l.params.window;
    switch (l.kind) {
      case LayerKind::input:
        p["shape"] = l.params.input_shape;
        break;
      case LayerKind::conv2d:
        p["out_channels"] = l.params.out_channels;
        p["kernel"] = {w.kernel_h, w.kernel_w};
        p["stride"] = {w.stride_h, w.stride_w};
        p["padding"] = {w.pad_h, w.pad_w};
        p["weight"] = store(l.id + ".weight", *l.params.weight);
        if (l.params.bias) p["bias"] = store(l.id + ".bias", *l.params.bias);
        break;
      case LayerKind::fully_connected:
        p["out_features"] = l.params.out_features;
        p["weight"] = store(l.id + ".weight", *l.params.weight);
        if (l.params.bias) p["bias"] = store(l.id + ".bias", *l.params.bias);
        break;
      case LayerKind::avg_pool:
      case LayerKind::max_pool:
        p["window"] = {w.kernel_h, w.kernel_w};
        p["stride"] = {w.stride_h, w.stride_w};
        break;
      case LayerKind::affine:
        p["scale"] = store(l.id + ".scale", *l.params.scale);
        p["shift"] = store(l.id + ".shift", *l.params.shift);
        break;
      case LayerKind::concat:
        p["axis"] = l.params.concat_axis;
        break;
      default:
        break;
    }
    j["params"] = p;
    doc["layers"].push_back(std::move(j));
  }
  const auto path = dir / (stem + ".json");
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << doc.dump(2) << '\n';
  return path;
}

std::string event_graph_to_json(const EventGraph& eg) {
  json doc;
  doc["policy"] = {{"kind", std::string(to_string(eg.policy().kind))}, {"h", std::stod(format_float(eg.policy().h))}};
  doc["nodes"] = json::array();
  for (const auto& n : eg.nodes()) {
    json inputs = json::array();
    for (auto i : n.inputs) inputs.push_back(eg.node(i).id);
    json j{{"id", n.id},
           {"role", std::string(to_string(n.role))},
           {"base", eg.base().layer(n.base).id},
           {"inputs", inputs},
           {"shape", n.shape},
           {"mode", n.mode == SignalMode::value ? "value" : "delta"}};
    if (n.input_gate) j["input_gate"] = true;
    if (n.output) j["output"] = true;
    if (n.dense) j["dense"] = true;
    doc["nodes"].push_back(std::move(j));
  }
  doc["placement"] = json::array();
  for (const auto& [edge, inserted] : eg.placement()) {
    json ids = json::array();
    for (auto i : inserted) ids.push_back(eg.node(i).id);
    doc["placement"].push_back({{"from", eg.base().layer(edge.first).id},
                                {"to", eg.base().layer(edge.second).id},
                                {"inserted", ids}});
  }
  return doc.dump(2);
}

}  // namespace evnet
