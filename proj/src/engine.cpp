// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "evnet/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evnet/errors.hpp"
#include "evnet/neuron.hpp"
#include "evnet/policy.hpp"

namespace evnet {

LayerCounters& LayerCounters::operator+=(const LayerCounters& o) {
  macs += o.macs;
  overhead_arith += o.overhead_arith;
  mem_loads += o.mem_loads;
  mem_stores += o.mem_stores;
  transmissions += o.transmissions;
  policy_evals += o.policy_evals;
  nonlinear_ops += o.nonlinear_ops;
  output_reads += o.output_reads;
  return *this;
}

LayerCounters FrameTrace::totals() const {
  LayerCounters t;
  for (const auto& r : layers) t += r.counters;
  return t;
}

RunResult run_conventional(const NetworkGraph& g, const Video& video) {
  RunResult r;
  std::vector<Tensor> acts(g.size());
  for (std::size_t f = 0; f < video.size(); ++f) {
    const auto& frame = video[f];
    if (frame.shape() != g.input_shape()) {
      throw ShapeError("frame " + std::to_string(f) + ": shape " + shape_str(frame.shape()) +
                       " does not match network input " + shape_str(g.input_shape()));
    }
    FrameTrace trace;
    trace.frame_index = static_cast<std::int64_t>(f);
    acts[g.input_index()] = frame;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i == g.input_index()) continue;
      std::vector<const Tensor*> in;
      for (auto j : g.input_indices(i)) in.push_back(&acts[j]);
      try {
        auto res = dense_forward(g.layer(i), in);
        acts[i] = std::move(res.output);
        LayerRecord rec{g.layer(i).id, "layer", {}};
        rec.counters.macs = res.macs;
        rec.counters.nonlinear_ops = res.nonlinear_ops;
        trace.layers.push_back(std::move(rec));
      } catch (const Error&) {
        rethrow_with_context("frame " + std::to_string(f) + ", layer " + g.layer(i).id + ": ");
      }
    }
    r.outputs.push_back(acts[g.output_index()]);
    r.traces.push_back(std::move(trace));
  }
  return r;
}

namespace {

// What one node hands its consumers during a frame: a sparse delta packet,
// or the touched indices of a value signal with their new values.
struct Flow {
  bool is_value = false;
  DeltaPacket delta;
  std::vector<std::size_t> idx;
  std::vector<float> val;

  bool empty() const { return is_value ? idx.empty() : delta.empty(); }
};

std::string row_role(const EventNode& n) {
  if (n.input_gate) return "input_gate";
  if (n.output) return "output";
  return std::string(to_string(n.role));
}

}  // namespace

EventExecutor::EventExecutor(const EventGraph& eg, EventState& state, ExecutorOptions options)
    : eg_(eg), state_(state), lease_(state), options_(std::move(options)) {
  if (!state_.initialized) throw StateError("event state is not initialized");
  for (const auto& n : eg_.nodes()) {
    if (n.role == EventRole::gate) sent_[n.id].assign(shape_numel(n.shape), 0.0);
  }
}

const std::vector<double>& EventExecutor::transmitted_sum(const std::string& gate) const {
  auto it = sent_.find(gate);
  if (it == sent_.end()) throw StateError("no gate named '" + gate + "'");
  return it->second;
}

void EventExecutor::flush_frame(const Tensor& frame, FrameTrace* trace) {
  if (frame != state_.canonical) {
    throw StateError("frame 0 differs from the canonical input the state was initialized with");
  }
  if (!trace) return;
  const auto& g = eg_.base();
  for (const auto& n : eg_.nodes()) {
    if (n.role == EventRole::source) continue;
    LayerRecord rec{n.id, row_role(n), {}};
    if (n.role == EventRole::layer) {
      const auto& l = g.layer(n.base);
      std::vector<Shape> in;
      for (auto j : g.input_indices(n.base)) in.push_back(g.output_shape(j));
      rec.counters.macs = dense_mac_count(l, in);
      if (l.kind == LayerKind::relu) rec.counters.nonlinear_ops = shape_numel(n.shape);
      if (l.kind == LayerKind::max_pool) {
        rec.counters.nonlinear_ops =
            shape_numel(n.shape) * l.params.window.kernel_h * l.params.window.kernel_w;
      }
    }
    if (n.output) rec.counters.output_reads = shape_numel(n.shape);
    trace->layers.push_back(std::move(rec));
  }
}

Tensor EventExecutor::step(const Tensor& frame, FrameTrace* trace) {
  if (frame.shape() != eg_.base().input_shape()) {
    throw ShapeError("frame " + std::to_string(frame_) + ": shape " + shape_str(frame.shape()) +
                     " does not match network input " + shape_str(eg_.base().input_shape()));
  }
  if (trace) {
    trace->frame_index = frame_;
    trace->layers.clear();
  }
  if (frame_ == 0) {
    flush_frame(frame, trace);
    ++frame_;
    Tensor out = state_.accumulators.at(eg_.node(eg_.output_node()).id);
    if (trace && options_.keep_trace_outputs) trace->output = out;
    return out;
  }

  const auto& nodes = eg_.nodes();
  const auto& policy = eg_.policy();
  const auto& g = eg_.base();
  std::vector<Flow> flow(nodes.size());

  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& n = nodes[k];
    LayerCounters c;
    Flow& out = flow[k];
    try {
      switch (n.role) {
        case EventRole::source: {
          out.is_value = true;
          out.idx.resize(frame.size());
          std::iota(out.idx.begin(), out.idx.end(), std::size_t{0});
          out.val.assign(frame.values().begin(), frame.values().end());
          break;
        }
        case EventRole::gate: {
          const Flow& in = flow[n.inputs.front()];
          auto& gs = state_.gates.at(n.id);
          auto b = gs.b.mutable_values();
          auto d = gs.d.mutable_values();
          for (std::size_t j = 0; j < in.idx.size(); ++j) {
            neuron::gate_update(b[in.idx[j]], d[in.idx[j]], in.val[j]);
          }
          const auto touched = in.idx.size();
          c.mem_loads += 2 * touched;
          c.overhead_arith += 3 * touched;
          c.mem_stores += 2 * touched;

          const auto decision = policy_apply(gs.d, in.idx, policy, eg_.gate_gamma(n));
          c.policy_evals += decision.evaluations;
          c.mem_loads += decision.extra_loads;

          out.delta = DeltaPacket(n.id, frame_, d.size());
          auto& sent = sent_.at(n.id);
          for (auto i : decision.fire) {
            if (d[i] == 0.0f) continue;
            const float v = neuron::transmit(d[i]);
            out.delta.push_back(i, v);
            sent[i] += v;
            ++c.transmissions;
            ++c.mem_loads;
            ++c.mem_stores;
          }
          if (options_.ablate_memory) {
            for (auto i : in.idx) d[i] = 0.0f;
          }
          if (options_.on_packet) options_.on_packet(n, out.delta);
          break;
        }
        case EventRole::accumulator: {
          const Flow& in = flow[n.inputs.front()];
          auto a = state_.accumulators.at(n.id).mutable_values();
          out.is_value = true;
          out.idx.reserve(in.delta.size());
          out.val.reserve(in.delta.size());
          for (const auto& e : in.delta.entries()) {
            neuron::accumulate(a[e.index], e.delta);
            out.idx.push_back(e.index);
            out.val.push_back(a[e.index]);
          }
          c.mem_loads += in.delta.size();
          c.overhead_arith += in.delta.size();
          c.mem_stores += in.delta.size();
          if (n.output) c.output_reads = a.size();
          break;
        }
        case EventRole::buffer: {
          const Flow& in = flow[n.inputs.front()];
          auto x = state_.buffers.at(n.id).mutable_values();
          for (std::size_t j = 0; j < in.idx.size(); ++j) x[in.idx[j]] = in.val[j];
          c.mem_loads += in.idx.size();
          c.mem_stores += in.idx.size();
          out = in;
          break;
        }
        case EventRole::layer: {
          const auto& l = g.layer(n.base);
          if (n.dense) {
            const bool changed = std::any_of(n.inputs.begin(), n.inputs.end(),
                                             [&](auto j) { return !flow[j].empty(); });
            out.is_value = true;
            if (!changed) break;
            std::vector<const Tensor*> in;
            for (auto j : n.inputs) in.push_back(&state_.buffers.at(nodes[j].id));
            auto res = dense_forward(l, in);
            c.macs += res.macs;
            c.nonlinear_ops += res.nonlinear_ops;
            out.idx.resize(res.output.size());
            std::iota(out.idx.begin(), out.idx.end(), std::size_t{0});
            out.val.assign(res.output.values().begin(), res.output.values().end());
          } else if (is_linear(l.kind)) {
            std::vector<Shape> shapes;
            std::vector<const DeltaPacket*> packets;
            for (auto j : n.inputs) {
              shapes.push_back(nodes[j].shape);
              packets.push_back(&flow[j].delta);
            }
            auto res = delta_forward_linear(l, shapes, packets);
            c.macs += res.macs;
            out.delta = std::move(res.output);
            out.delta.set_layer_id(n.id);
            if (options_.on_packet) options_.on_packet(n, out.delta);
          } else if (l.kind == LayerKind::relu) {
            const Flow& in = flow[n.inputs.front()];
            out.is_value = true;
            out.idx = in.idx;
            out.val = pointwise_recompute(PointwiseFn::relu, in.val);
            c.nonlinear_ops += in.idx.size();
          } else if (l.kind == LayerKind::max_pool) {
            const auto src = n.inputs.front();
            auto res = maxpool_event(l, state_.buffers.at(nodes[src].id), flow[src].idx);
            out.is_value = true;
            for (const auto& u : res.updates) {
              out.idx.push_back(u.index);
              out.val.push_back(u.value);
            }
            c.nonlinear_ops += res.comparisons;
          } else {
            throw ConversionError(n.id + ": layer kind has no event rule");
          }
          break;
        }
      }
    } catch (const Error&) {
      rethrow_with_context("frame " + std::to_string(frame_) + ", node " + n.id + ": ");
    }
    if (trace && n.role != EventRole::source) trace->layers.push_back({n.id, row_role(n), c});
  }

  ++frame_;
  Tensor result = state_.accumulators.at(nodes[eg_.output_node()].id);
  if (trace && options_.keep_trace_outputs) trace->output = result;
  return result;
}

RunResult run_event(const EventGraph& eg, EventState& state, const Video& video,
                    bool ablate_memory) {
  ExecutorOptions opts;
  opts.ablate_memory = ablate_memory;
  EventExecutor ex(eg, state, std::move(opts));
  RunResult r;
  for (const auto& frame : video) {
    FrameTrace trace;
    r.outputs.push_back(ex.step(frame, &trace));
    r.traces.push_back(std::move(trace));
  }
  return r;
}

double OverheadTotals::savings_ratio() const {
  if (event_macs == 0) return conventional_macs == 0 ? 1.0 : kInf;
  return static_cast<double>(conventional_macs) / static_cast<double>(event_macs);
}

double OverheadTotals::arith_overhead_ratio() const {
  const auto saved = saved_macs();
  if (saved <= 0) return kInf;
  return static_cast<double>(overhead_arith) / static_cast<double>(saved);
}

double OverheadTotals::mem_overhead_ratio() const {
  const auto saved = saved_macs();
  if (saved <= 0) return kInf;
  return static_cast<double>(mem_loads + mem_stores) / static_cast<double>(saved);
}

OverheadTotals overhead_account(const std::vector<FrameTrace>& event_traces,
                                const std::vector<FrameTrace>& conventional_traces) {
  if (conventional_traces.empty()) {
    throw ReportError("overhead accounting needs a conventional baseline");
  }
  if (conventional_traces.size() != event_traces.size()) {
    throw ReportError("baseline has " + std::to_string(conventional_traces.size()) +
                      " frames, event run has " + std::to_string(event_traces.size()));
  }
  OverheadTotals t;
  for (std::size_t f = 1; f < event_traces.size(); ++f) {
    t.conventional_macs += conventional_traces[f].totals().macs;
    for (const auto& r : event_traces[f].layers) {
      const auto& c = r.counters;
      t.event_macs += c.macs;
      t.overhead_arith += c.overhead_arith;
      t.mem_loads += c.mem_loads;
      t.mem_stores += c.mem_stores;
      t.output_reads += c.output_reads;
      t.transmissions += c.transmissions;
      t.policy_evals += c.policy_evals;
      if (r.role == "buffer") {
        t.buffer_loads += c.mem_loads;
        t.buffer_stores += c.mem_stores;
      }
      if (r.role == "input_gate") {
        t.input_gate_arith += c.overhead_arith;
        t.input_gate_mem += c.mem_loads + c.mem_stores;
      }
    }
  }
  return t;
}

ProbeResult error_retention_probe(const std::vector<double>& weights, PointwiseFn f,
                                  double a_initial, const std::vector<ProbeStep>& schedule,
                                  double h, bool ablate_memory) {
  auto fn = [f](double a) { return f == PointwiseFn::relu ? std::max(a, 0.0) : a; };
  ProbeResult r;
  r.a_initial = a_initial;
  double a = a_initial, b = fn(a_initial), d = 0.0;
  r.sum_delta_in.assign(weights.size(), 0.0);
  for (const auto& step : schedule) {
    if (step.delta_in.size() != weights.size()) {
      throw ShapeError("probe step has " + std::to_string(step.delta_in.size()) +
                       " inputs, neuron has " + std::to_string(weights.size()));
    }
    double g = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      g += weights[i] * step.delta_in[i];
      r.sum_delta_in[i] += step.delta_in[i];
    }
    neuron::accumulate(a, g);
    neuron::gate_update(b, d, fn(a));
    const bool fire = step.fire.value_or(std::fabs(d) > h);
    double sent = 0.0;
    if (fire) sent = neuron::transmit(d);
    if (ablate_memory) d = 0.0;
    r.delta_out.push_back(sent);
    r.sum_delta_out += sent;
  }
  double g_total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) g_total += weights[i] * r.sum_delta_in[i];
  r.a_final = a;
  r.b_final = b;
  r.d_final = d;
  r.a_identity_error = std::fabs(a - (a_initial + g_total));
  r.d_identity_error = std::fabs(d - (fn(a) - fn(a_initial) - r.sum_delta_out));
  r.output_error = (fn(a_initial) + r.sum_delta_out) - fn(a);
  return r;
}

double AgreementReport::max_linf() const {
  double m = 0.0;
  for (double v : linf) m = std::max(m, v);
  return m;
}

AgreementReport agreement(const Video& event_outputs, const Video& conventional_outputs) {
  if (event_outputs.size() != conventional_outputs.size()) {
    throw ShapeError("agreement needs equal frame counts, got " +
                     std::to_string(event_outputs.size()) + " and " +
                     std::to_string(conventional_outputs.size()));
  }
  AgreementReport r;
  for (const auto& c : conventional_outputs) {
    for (float v : c.values()) r.peak = std::max(r.peak, static_cast<double>(std::fabs(v)));
  }
  for (std::size_t f = 0; f < event_outputs.size(); ++f) {
    const auto& e = event_outputs[f];
    const auto& c = conventional_outputs[f];
    if (e.shape() != c.shape()) {
      throw ShapeError("frame " + std::to_string(f) + ": output shapes differ, " +
                       shape_str(e.shape()) + " vs " + shape_str(c.shape()));
    }
    double err2 = 0.0, ref2 = 0.0, linf = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double diff = static_cast<double>(e[i]) - static_cast<double>(c[i]);
      err2 += diff * diff;
      ref2 += static_cast<double>(c[i]) * c[i];
      linf = std::max(linf, std::fabs(diff));
    }
    r.rel_l2.push_back(ref2 > 0.0 ? std::sqrt(err2 / ref2) : (err2 > 0.0 ? kInf : 0.0));
    r.linf.push_back(linf);
    const double rmse = std::sqrt(err2 / static_cast<double>(e.size()));
    r.psnr.push_back(rmse == 0.0 ? kInf : 20.0 * std::log10(r.peak / rmse));
  }
  return r;
}

}  // namespace evnet
