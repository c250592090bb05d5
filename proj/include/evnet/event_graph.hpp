// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Conversion of a conventional graph into event form and the persistent
// state of the converted network.
//
// Linear layers (conv2d, fully_connected, avg_pool, affine, add, concat)
// consume deltas; nonlinear layers (relu, max_pool) and excluded layers
// consume values. A gate turns values into deltas, an accumulator turns
// deltas into values, and a buffer keeps the full input of a non-pointwise
// value consumer. The input always passes through a gate and the output is
// always an accumulator.

#pragma once

#include <atomic>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "evnet/graph.hpp"
#include "evnet/policy.hpp"
#include "evnet/tensor.hpp"

namespace evnet {

enum class EventRole {
  source,       // the graph input; emits raw frame values
  layer,        // a layer of the base graph
  gate,         // b, d
  accumulator,  // a
  buffer,       // x
};

std::string_view to_string(EventRole role);

enum class SignalMode { value, delta };

struct EventNode {
  std::string id;
  EventRole role = EventRole::layer;
  // Base layer this node computes (layer/source), sits behind (gate,
  // accumulator) or feeds (buffer).
  std::size_t base = 0;
  std::vector<std::size_t> inputs;  // indices into EventGraph::nodes()
  Shape shape;
  SignalMode mode = SignalMode::value;  // mode of this node's output
  bool input_gate = false;
  bool output = false;  // the output accumulator
  bool dense = false;   // excluded layer, recomputed densely
};

class EventGraph {
 public:
  const NetworkGraph& base() const { return base_; }
  const PolicyConfig& policy() const { return policy_; }
  const std::vector<EventNode>& nodes() const { return nodes_; }
  const EventNode& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t index_of(const std::string& id) const;

  std::size_t output_node() const { return output_node_; }
  std::size_t input_gate() const { return input_gate_; }

  /// State layers inserted on each base edge (producer, consumer), in order.
  const std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>>& placement()
      const {
    return placement_;
  }

  /// Per-channel gamma for a gate, empty when unscaled.
  std::span<const float> gate_gamma(const EventNode& gate) const;

 private:
  friend EventGraph convert_to_event(const NetworkGraph&, const PolicyConfig&);
  friend EventGraph make_event_graph(NetworkGraph, PolicyConfig, std::vector<EventNode>);

  NetworkGraph base_;
  PolicyConfig policy_;
  std::vector<EventNode> nodes_;
  std::map<std::string, std::size_t> index_;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> placement_;
  std::size_t output_node_ = 0;
  std::size_t input_gate_ = 0;
};

/// Inserts gates, accumulators and buffers. Conversions are only inserted
/// where a producer's signal mode differs from what its consumer needs, so
/// no accumulator ever feeds a gate directly.
/// Throws ConfigError for invalid policies and ConversionError for graphs
/// the event form cannot express.
EventGraph convert_to_event(const NetworkGraph& g, const PolicyConfig& policy);

/// Builds an EventGraph from explicit nodes without conversion; used by
/// tools and tests that need hand-made topologies. Indexes nodes by id.
EventGraph make_event_graph(NetworkGraph base, PolicyConfig policy, std::vector<EventNode> nodes);

/// Placement rule violations, empty when the graph is well formed.
std::vector<std::string> check_placement(const EventGraph& eg);

struct GateState {
  Tensor b;
  Tensor d;
};

/// Persistent state of one converted network. Owned by a single executor
/// at a time: StateLease marks it busy and a second concurrent lease throws.
struct EventState {
  std::map<std::string, Tensor> accumulators;
  std::map<std::string, GateState> gates;
  std::map<std::string, Tensor> buffers;
  Tensor canonical;
  bool initialized = false;

  EventState() = default;
  EventState(const EventState& other);
  EventState& operator=(const EventState& other);

  bool leased() const { return leased_.load(); }

 private:
  friend class StateLease;
  std::atomic<bool> leased_{false};
};

class StateLease {
 public:
  /// Throws StateError when the state is already leased.
  explicit StateLease(EventState& state);
  ~StateLease();
  StateLease(const StateLease&) = delete;
  StateLease& operator=(const StateLease&) = delete;

 private:
  EventState& state_;
};

/// Flushes `canonical` through the network layer by layer: accumulators take
/// g(b_in) including biases, gates take b = f(a) and d = 0, buffers take
/// their input values. Throws ShapeError on a shape mismatch and StateError
/// when a layer's weights are missing or non-finite.
EventState initialize(const EventGraph& eg, const Tensor& canonical);

/// Dense output of every base layer for one input, in base order.
std::vector<Tensor> dense_activations(const NetworkGraph& g, const Tensor& input);

struct ConsistencyViolation {
  std::string node;
  std::string rule;  // "a == g(b_in - d_in)", "b == f(a)", "x == input"
  float max_violation = 0.0f;
};

/// Checks a == g(b_in - d_in) at accumulators, b == f(a) at gates and
/// x == input value at buffers. When `current_input` is given the input
/// gate's b is also compared with it.
std::vector<ConsistencyViolation> consistency_check(const EventGraph& eg, const EventState& s,
                                                    float tol,
                                                    const Tensor* current_input = nullptr);

}  // namespace evnet
