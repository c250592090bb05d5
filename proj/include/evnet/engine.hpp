// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Conventional and event execution over video, operation accounting and
// agreement metrics.
//
// Execution is frame-synchronous: within a frame every node runs once in
// topological order, and all deltas of a frame have propagated before the
// next frame starts.

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "evnet/event_graph.hpp"
#include "evnet/graph.hpp"
#include "evnet/layers.hpp"
#include "evnet/tensor.hpp"
#include "evnet/tensor_io.hpp"

namespace evnet {

struct LayerCounters {
  std::uint64_t macs = 0;
  std::uint64_t overhead_arith = 0;
  std::uint64_t mem_loads = 0;
  std::uint64_t mem_stores = 0;
  std::uint64_t transmissions = 0;
  std::uint64_t policy_evals = 0;
  // relu evaluations and max-pool comparisons (both modes).
  std::uint64_t nonlinear_ops = 0;
  // Full reads of the output accumulator; not overhead.
  std::uint64_t output_reads = 0;

  LayerCounters& operator+=(const LayerCounters& o);
};

struct LayerRecord {
  std::string layer;
  std::string role;  // EventRole name, "layer" in conventional traces
  LayerCounters counters;
};

struct FrameTrace {
  std::int64_t frame_index = 0;
  std::vector<LayerRecord> layers;
  std::optional<Tensor> output;

  LayerCounters totals() const;
};

struct RunResult {
  Video outputs;
  std::vector<FrameTrace> traces;
};

/// Dense forward pass per frame. Throws ShapeError when a frame's shape
/// differs from the network input.
RunResult run_conventional(const NetworkGraph& g, const Video& video);

struct ExecutorOptions {
  // Reset every gate's d after its policy runs (memory-free baseline).
  bool ablate_memory = false;
  // Keep each frame's output inside its trace as well.
  bool keep_trace_outputs = false;
  // Called with every delta packet a node emits.
  std::function<void(const EventNode&, const DeltaPacket&)> on_packet;
};

/// Runs an initialized event network one frame at a time. Holds a lease on
/// the state for its lifetime.
class EventExecutor {
 public:
  /// Throws StateError when the state is uninitialized or already leased.
  EventExecutor(const EventGraph& eg, EventState& state, ExecutorOptions options = {});

  /// The first frame must equal the canonical input (StateError otherwise)
  /// and is charged as the initialization flush. Later frames propagate
  /// deltas. Returns the full output accumulator.
  Tensor step(const Tensor& frame, FrameTrace* trace = nullptr);

  std::int64_t frames_seen() const { return frame_; }

  /// Running sum of transmitted deltas per gate neuron, for identity checks.
  const std::vector<double>& transmitted_sum(const std::string& gate) const;

 private:
  void flush_frame(const Tensor& frame, FrameTrace* trace);

  const EventGraph& eg_;
  EventState& state_;
  StateLease lease_;
  ExecutorOptions options_;
  std::int64_t frame_ = 0;
  std::map<std::string, std::vector<double>> sent_;
};

/// Initializes nothing: `state` must already be initialized from video[0].
RunResult run_event(const EventGraph& eg, EventState& state, const Video& video,
                    bool ablate_memory);

struct OverheadTotals {
  std::uint64_t conventional_macs = 0;
  std::uint64_t event_macs = 0;
  std::uint64_t overhead_arith = 0;
  std::uint64_t mem_loads = 0;   // includes buffer loads
  std::uint64_t mem_stores = 0;  // includes buffer stores
  std::uint64_t buffer_loads = 0;
  std::uint64_t buffer_stores = 0;
  std::uint64_t input_gate_arith = 0;
  std::uint64_t input_gate_mem = 0;
  std::uint64_t output_reads = 0;
  std::uint64_t transmissions = 0;
  std::uint64_t policy_evals = 0;

  std::int64_t saved_macs() const {
    return static_cast<std::int64_t>(conventional_macs) - static_cast<std::int64_t>(event_macs);
  }
  /// conventional / event MACs; +inf when the event side did no MACs.
  double savings_ratio() const;
  /// Extra arithmetic per saved MAC; +inf when nothing was saved.
  double arith_overhead_ratio() const;
  /// Extra loads and stores per saved MAC, output reads excluded.
  double mem_overhead_ratio() const;
};

/// Sums event-mode overhead under the fixed cost rules (accumulator update:
/// 1 load, 1 add, 1 store; gate update: 2 loads, 3 adds, 2 stores;
/// transmission: 1 load, 1 store; buffer update: 1 load, 1 store) against
/// the conventional baseline. Frame 0 is the initialization flush in both
/// modes and is excluded. Throws ReportError without a matching baseline.
OverheadTotals overhead_account(const std::vector<FrameTrace>& event_traces,
                                const std::vector<FrameTrace>& conventional_traces);

struct ProbeStep {
  std::vector<double> delta_in;
  // Forces (true) or suppresses (false) transmission; unset means the
  // threshold policy decides.
  std::optional<bool> fire;
};

struct ProbeResult {
  double a_initial = 0.0, a_final = 0.0;
  double b_final = 0.0, d_final = 0.0;
  std::vector<double> sum_delta_in;
  double sum_delta_out = 0.0;
  std::vector<double> delta_out;  // per step, zero when silent
  // |a_T - a_0 - g(sum delta_in)| and |d_T - (f(a_T) - f(a_0) - sum delta_out)|
  double a_identity_error = 0.0;
  double d_identity_error = 0.0;
  // What the downstream network believes minus the true activation.
  double output_error = 0.0;
};

/// Drives a single event neuron with g = dot(weights, .) and the pointwise
/// f through `schedule`, firing when |d| > h unless a step overrides it.
/// With ablate_memory, d is discarded after every step.
ProbeResult error_retention_probe(const std::vector<double>& weights, PointwiseFn f,
                                  double a_initial, const std::vector<ProbeStep>& schedule,
                                  double h, bool ablate_memory = false);

struct AgreementReport {
  std::vector<double> rel_l2;
  std::vector<double> linf;
  std::vector<double> psnr;  // +inf when identical
  double peak = 0.0;
  std::optional<OverheadTotals> overhead;

  double max_linf() const;
};

/// Per-frame relative L2, L-infinity and PSNR of event against conventional
/// outputs. PSNR uses the max |conventional| over the whole video as peak.
AgreementReport agreement(const Video& event_outputs, const Video& conventional_outputs);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace evnet
