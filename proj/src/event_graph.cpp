// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "evnet/event_graph.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "evnet/errors.hpp"
#include "evnet/layers.hpp"

namespace evnet {

std::string_view to_string(EventRole role) {
  switch (role) {
    case EventRole::source: return "source";
    case EventRole::layer: return "layer";
    case EventRole::gate: return "gate";
    case EventRole::accumulator: return "accumulator";
    case EventRole::buffer: return "buffer";
  }
  return "?";
}

std::size_t EventGraph::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw GraphError("no event node named '" + id + "'");
  return it->second;
}

std::span<const float> EventGraph::gate_gamma(const EventNode& gate) const {
  auto it = policy_.channel_scale.find(base_.layer(gate.base).id);
  if (it == policy_.channel_scale.end()) return {};
  return it->second;
}

namespace {

class Converter {
 public:
  explicit Converter(const NetworkGraph& g)
      : g_(g), layer_node_(g.size()), delta_port_(g.size()), value_port_(g.size()) {}

  std::vector<EventNode> nodes;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> placement;

  void run() {
    for (std::size_t i = 0; i < g_.size(); ++i) {
      const auto& l = g_.layer(i);
      if (l.kind == LayerKind::input) {
        if (l.exclude) throw ConversionError(l.id + ": the input layer cannot be excluded");
        const auto src = add({l.id, EventRole::source, i, {}, g_.output_shape(i), SignalMode::value});
        layer_node_[i] = src;
        EventNode gate{"gate:" + l.id, EventRole::gate, i, {src}, g_.output_shape(i),
                       SignalMode::delta};
        gate.input_gate = true;
        delta_port_[i] = add(std::move(gate));
        continue;
      }
      if (l.kind == LayerKind::output && l.exclude) {
        throw ConversionError(l.id + ": the output layer cannot be excluded");
      }
      const bool wants_delta =
          l.kind == LayerKind::output || (is_linear(l.kind) && !l.exclude);
      if (!wants_delta && !is_nonlinear(l.kind) && !l.exclude) {
        throw ConversionError(l.id + ": unsupported layer kind " + std::string(to_string(l.kind)));
      }
      const bool needs_buffer = !wants_delta && (l.kind == LayerKind::max_pool || l.exclude);

      std::vector<std::size_t> inputs;
      const auto& in_idx = g_.input_indices(i);
      for (std::size_t k = 0; k < in_idx.size(); ++k) {
        const auto u = in_idx[k];
        auto port = wants_delta ? delta_port(u) : value_port(u);
        auto path = path_from(u, port);
        if (needs_buffer) {
          const auto suffix = in_idx.size() > 1 ? "#" + std::to_string(k) : std::string();
          port = add({"buffer:" + l.id + suffix, EventRole::buffer, i, {port},
                      g_.output_shape(u), SignalMode::value});
          path.push_back(port);
        }
        placement[{u, i}] = std::move(path);
        inputs.push_back(port);
      }

      if (l.kind == LayerKind::output) {
        EventNode out{"acc:" + l.id, EventRole::accumulator, i, inputs, g_.output_shape(i),
                      SignalMode::value};
        out.output = true;
        layer_node_[i] = add(std::move(out));
        value_port_[i] = layer_node_[i];
        continue;
      }
      EventNode node{l.id, EventRole::layer, i, inputs, g_.output_shape(i),
                     wants_delta ? SignalMode::delta : SignalMode::value};
      node.dense = l.exclude;
      layer_node_[i] = add(std::move(node));
      (wants_delta ? delta_port_ : value_port_)[i] = layer_node_[i];
    }
  }

 private:
  std::size_t add(EventNode n) {
    nodes.push_back(std::move(n));
    return nodes.size() - 1;
  }

  std::size_t delta_port(std::size_t u) {
    if (!delta_port_[u]) {
      delta_port_[u] = add({"gate:" + g_.layer(u).id, EventRole::gate, u, {value_port(u)},
                            g_.output_shape(u), SignalMode::delta});
    }
    return *delta_port_[u];
  }

  std::size_t value_port(std::size_t u) {
    if (!value_port_[u]) {
      value_port_[u] = add({"acc:" + g_.layer(u).id, EventRole::accumulator, u, {delta_port(u)},
                            g_.output_shape(u), SignalMode::value});
    }
    return *value_port_[u];
  }

  // State nodes between the node computing u and `port`, upstream first.
  std::vector<std::size_t> path_from(std::size_t u, std::size_t port) const {
    std::vector<std::size_t> path;
    while (port != layer_node_[u]) {
      path.push_back(port);
      port = nodes[port].inputs.front();
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  const NetworkGraph& g_;
  std::vector<std::size_t> layer_node_;
  std::vector<std::optional<std::size_t>> delta_port_;
  std::vector<std::optional<std::size_t>> value_port_;
};

void check_gammas(const EventGraph& eg) {
  const auto& scales = eg.policy().channel_scale;
  for (const auto& [id, gammas] : scales) {
    bool found = false;
    for (const auto& n : eg.nodes()) {
      if (n.role != EventRole::gate || eg.base().layer(n.base).id != id) continue;
      found = true;
      if (gammas.size() != n.shape[0]) {
        throw ConfigError("channel scale for '" + id + "' has " + std::to_string(gammas.size()) +
                          " entries, gate has " + std::to_string(n.shape[0]) + " channels");
      }
    }
    if (!found) throw ConfigError("channel scale given for '" + id + "' but no gate follows it");
  }
}

}  // namespace

EventGraph make_event_graph(NetworkGraph base, PolicyConfig policy, std::vector<EventNode> nodes) {
  EventGraph eg;
  eg.base_ = std::move(base);
  eg.policy_ = std::move(policy);
  eg.nodes_ = std::move(nodes);
  for (std::size_t i = 0; i < eg.nodes_.size(); ++i) {
    const auto& n = eg.nodes_[i];
    if (!eg.index_.emplace(n.id, i).second) throw GraphError("duplicate event node '" + n.id + "'");
    for (auto in : n.inputs) {
      if (in >= i) throw GraphError(n.id + ": event nodes must be in execution order");
    }
    if (n.output) eg.output_node_ = i;
    if (n.input_gate) eg.input_gate_ = i;
  }
  return eg;
}

EventGraph convert_to_event(const NetworkGraph& g, const PolicyConfig& policy) {
  policy.validate();
  Converter c(g);
  c.run();
  EventGraph eg = make_event_graph(g, policy, std::move(c.nodes));
  eg.placement_ = std::move(c.placement);
  check_gammas(eg);
  return eg;
}

std::vector<std::string> check_placement(const EventGraph& eg) {
  std::vector<std::string> bad;
  const auto& nodes = eg.nodes();
  std::vector<std::size_t> consumers(nodes.size(), 0);
  bool have_output = false;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    for (auto in : n.inputs) ++consumers[in];
    auto input_mode_is = [&](SignalMode m) {
      return std::all_of(n.inputs.begin(), n.inputs.end(),
                         [&](auto in) { return nodes[in].mode == m; });
    };
    switch (n.role) {
      case EventRole::source:
        break;
      case EventRole::gate:
        if (!input_mode_is(SignalMode::value)) bad.push_back(n.id + ": gate input is not value-based");
        if (nodes[n.inputs.front()].role == EventRole::accumulator) {
          bad.push_back(n.id + ": accumulator feeds a gate directly");
        }
        break;
      case EventRole::accumulator:
        if (!input_mode_is(SignalMode::delta)) {
          bad.push_back(n.id + ": accumulator input is not delta-based");
        }
        if (n.output) have_output = true;
        break;
      case EventRole::buffer:
        if (!input_mode_is(SignalMode::value)) bad.push_back(n.id + ": buffer input is not value-based");
        break;
      case EventRole::layer: {
        const auto kind = eg.base().layer(n.base).kind;
        if (is_linear(kind) && !n.dense) {
          if (!input_mode_is(SignalMode::delta)) {
            bad.push_back(n.id + ": linear layer input is not delta-based");
          }
        } else if (!input_mode_is(SignalMode::value)) {
          bad.push_back(n.id + ": nonlinear layer input is not value-based");
        }
        if (kind == LayerKind::max_pool || n.dense) {
          for (auto in : n.inputs) {
            if (nodes[in].role != EventRole::buffer) bad.push_back(n.id + ": not preceded by a buffer");
          }
        }
        break;
      }
    }
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.role == EventRole::source) {
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        const auto& c = nodes[j];
        if (std::find(c.inputs.begin(), c.inputs.end(), i) != c.inputs.end() && !c.input_gate) {
          bad.push_back(n.id + ": input feeds " + c.id + " without passing the input gate");
        }
      }
    }
    if (n.output && consumers[i] != 0) bad.push_back(n.id + ": output accumulator has consumers");
  }
  if (!have_output) bad.push_back("no output accumulator");
  return bad;
}

EventState::EventState(const EventState& other)
    : accumulators(other.accumulators),
      gates(other.gates),
      buffers(other.buffers),
      canonical(other.canonical),
      initialized(other.initialized) {}

EventState& EventState::operator=(const EventState& other) {
  if (this != &other) {
    accumulators = other.accumulators;
    gates = other.gates;
    buffers = other.buffers;
    canonical = other.canonical;
    initialized = other.initialized;
  }
  return *this;
}

StateLease::StateLease(EventState& state) : state_(state) {
  bool expected = false;
  if (!state_.leased_.compare_exchange_strong(expected, true)) {
    throw StateError("event state is already owned by another executor");
  }
}

StateLease::~StateLease() { state_.leased_.store(false); }

std::vector<Tensor> dense_activations(const NetworkGraph& g, const Tensor& input) {
  if (input.shape() != g.input_shape()) {
    throw ShapeError("input shape " + shape_str(input.shape()) + " does not match network input " +
                     shape_str(g.input_shape()));
  }
  std::vector<Tensor> acts(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i == g.input_index()) {
      acts[i] = input;
      continue;
    }
    std::vector<const Tensor*> in;
    for (auto j : g.input_indices(i)) in.push_back(&acts[j]);
    acts[i] = dense_forward(g.layer(i), in).output;
  }
  return acts;
}

namespace {

void require_weights(const LayerSpec& l) {
  auto check = [&](const std::optional<Tensor>& t, const char* what) {
    if (!t) throw StateError(l.id + ": " + what + " is not initialized");
    for (float v : t->values()) {
      if (!std::isfinite(v)) throw StateError(l.id + ": " + what + " holds non-finite values");
    }
  };
  switch (l.kind) {
    case LayerKind::conv2d:
    case LayerKind::fully_connected:
      check(l.params.weight, "weight");
      break;
    case LayerKind::affine:
      check(l.params.scale, "scale");
      check(l.params.shift, "shift");
      break;
    default:
      break;
  }
}

}  // namespace

EventState initialize(const EventGraph& eg, const Tensor& canonical) {
  for (const auto& l : eg.base().layers()) require_weights(l);
  const auto acts = dense_activations(eg.base(), canonical);
  EventState s;
  const auto& nodes = eg.nodes();
  for (const auto& n : nodes) {
    switch (n.role) {
      case EventRole::gate:
        s.gates[n.id] = GateState{acts[n.base], Tensor(n.shape, 0.0f)};
        break;
      case EventRole::accumulator:
        s.accumulators[n.id] = acts[n.base];
        break;
      case EventRole::buffer:
        s.buffers[n.id] = acts[nodes[n.inputs.front()].base];
        break;
      default:
        break;
    }
  }
  s.canonical = canonical;
  s.initialized = true;
  return s;
}

std::vector<ConsistencyViolation> consistency_check(const EventGraph& eg, const EventState& s,
                                                    float tol, const Tensor* current_input) {
  if (!s.initialized) throw StateError("consistency_check needs an initialized state");
  const auto& nodes = eg.nodes();
  std::vector<Tensor> view(nodes.size());
  std::vector<ConsistencyViolation> report;

  auto compare = [&](const EventNode& n, const Tensor& actual, const Tensor& expected,
                     const char* rule) {
    float worst = 0.0f;
    for (std::size_t i = 0; i < actual.size(); ++i) {
      worst = std::max(worst, std::fabs(actual[i] - expected[i]));
    }
    if (worst > tol) report.push_back({n.id, rule, worst});
  };

  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& n = nodes[k];
    switch (n.role) {
      case EventRole::source:
        view[k] = current_input ? *current_input : s.gates.at(nodes[eg.input_gate()].id).b;
        break;
      case EventRole::gate: {
        const auto& g = s.gates.at(n.id);
        if (!n.input_gate || current_input) compare(n, g.b, view[n.inputs.front()], "b == f(a)");
        view[k] = g.b;
        auto v = view[k].mutable_values();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= g.d[i];
        break;
      }
      case EventRole::accumulator: {
        const auto& a = s.accumulators.at(n.id);
        compare(n, a, view[n.inputs.front()], "a == g(b_in - d_in)");
        view[k] = a;
        break;
      }
      case EventRole::buffer: {
        const auto& x = s.buffers.at(n.id);
        compare(n, x, view[n.inputs.front()], "x == input");
        view[k] = x;
        break;
      }
      case EventRole::layer: {
        std::vector<const Tensor*> in;
        for (auto j : n.inputs) in.push_back(&view[j]);
        view[k] = dense_forward(eg.base().layer(n.base), in).output;
        break;
      }
    }
  }
  return report;
}

}  // namespace evnet
