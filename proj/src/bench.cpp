// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "evnet/bench.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "evnet/errors.hpp"
#include "evnet/event_graph.hpp"

namespace evnet {
namespace {

using json = nlohmann::json;

json number(double v) {
  if (std::isinf(v) || std::isnan(v)) return format_number(v);
  return v;
}

// Thresholds are floats; print them at float precision.
double as_written(float v) { return std::stod(format_float(v)); }

json overhead_json(const OverheadTotals& o) {
  return {{"conventional_macs", o.conventional_macs},
          {"event_macs", o.event_macs},
          {"saved_macs", o.saved_macs()},
          {"savings_ratio", number(o.savings_ratio())},
          {"arith_overhead_ratio", number(o.arith_overhead_ratio())},
          {"mem_overhead_ratio", number(o.mem_overhead_ratio())},
          {"overhead_arith", o.overhead_arith},
          {"mem_loads", o.mem_loads},
          {"mem_stores", o.mem_stores},
          {"buffer_loads", o.buffer_loads},
          {"buffer_stores", o.buffer_stores},
          {"input_gate_arith", o.input_gate_arith},
          {"input_gate_mem", o.input_gate_mem},
          {"output_reads", o.output_reads},
          {"transmissions", o.transmissions},
          {"policy_evals", o.policy_evals}};
}

json policy_json(const PolicyConfig& p) {
  json j{{"kind", std::string(to_string(p.kind))}, {"h", as_written(p.h)}};
  if (p.chunked()) {
    j["chunk"] = {p.chunk_h, p.chunk_w};
    j["chunk_threshold"] = as_written(p.effective_chunk_threshold());
  }
  if (!p.channel_scale.empty()) j["channel_scale"] = p.channel_scale;
  return j;
}

std::string to_text(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

SweepRow run_point(const NetworkGraph& g, const Video& video, const RunResult& conventional,
                   const SweepPoint& point, bool ablate_memory) {
  const auto eg = convert_to_event(g, point.policy);
  auto state = initialize(eg, video.front());
  const auto ev = run_event(eg, state, video, ablate_memory);
  const auto totals = overhead_account(ev.traces, conventional.traces);
  SweepRow row;
  row.label = point.label;
  row.policy = std::string(to_string(point.policy.kind));
  row.h = as_written(point.policy.h);
  row.chunk_h = point.policy.chunk_h;
  row.chunk_w = point.policy.chunk_w;
  row.chunk_threshold = as_written(point.policy.chunked() ? point.policy.effective_chunk_threshold()
                                                          : point.policy.h);
  row.conventional_macs = totals.conventional_macs;
  row.event_macs = totals.event_macs;
  row.savings_ratio = totals.savings_ratio();
  row.arith_overhead_ratio = totals.arith_overhead_ratio();
  row.mem_overhead_ratio = totals.mem_overhead_ratio();
  row.agreement = summarize(agreement(ev.outputs, conventional.outputs));
  return row;
}

}  // namespace

RunMode run_mode_from_string(std::string_view name) {
  if (name == "conv") return RunMode::conv;
  if (name == "event") return RunMode::event;
  if (name == "both") return RunMode::both;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected conv, event or both)");
}

RunOutcome run_experiment(const NetworkGraph& g, const Video& video, RunMode mode,
                          const PolicyConfig& policy, bool ablate_memory) {
  if (video.empty()) throw ConfigError("video has no frames");
  RunOutcome out;
  if (mode != RunMode::conv) {
    const auto eg = convert_to_event(g, policy);
    auto state = initialize(eg, video.front());
    out.event = run_event(eg, state, video, ablate_memory);
  }
  if (mode != RunMode::event) out.conventional = run_conventional(g, video);
  if (mode == RunMode::both) {
    out.agreement = agreement(out.event->outputs, out.conventional->outputs);
    out.overhead = overhead_account(out.event->traces, out.conventional->traces);
    out.agreement->overhead = out.overhead;
  }
  return out;
}

std::string run_summary_json(const RunOutcome& outcome, RunMode mode, const PolicyConfig& policy,
                             bool ablate_memory, std::size_t frames) {
  static constexpr const char* kModes[] = {"conv", "event", "both"};
  json doc{{"mode", kModes[static_cast<int>(mode)]},
           {"frames", frames},
           {"ablate_memory", ablate_memory}};
  if (mode != RunMode::conv) doc["policy"] = policy_json(policy);
  if (outcome.conventional && !outcome.conventional->traces.empty()) {
    doc["conventional_macs_per_frame"] = outcome.conventional->traces.front().totals().macs;
  }
  if (outcome.event) {
    std::uint64_t macs = 0;
    std::uint64_t nonlinear = 0;
    for (std::size_t f = 1; f < outcome.event->traces.size(); ++f) {
      const auto t = outcome.event->traces[f].totals();
      macs += t.macs;
      nonlinear += t.nonlinear_ops;
    }
    doc["event_macs_after_init"] = macs;
    doc["event_nonlinear_ops_after_init"] = nonlinear;
  }
  if (outcome.overhead) doc["overhead"] = overhead_json(*outcome.overhead);
  if (outcome.agreement) {
    const auto s = summarize(*outcome.agreement);
    doc["agreement"] = {{"max_linf", number(s.max_linf)},
                        {"final_linf", number(s.final_linf)},
                        {"mean_linf", number(s.mean_linf)},
                        {"mean_rel_l2", number(s.mean_rel_l2)},
                        {"min_psnr", number(s.min_psnr)},
                        {"peak", number(outcome.agreement->peak)}};
  }
  return doc.dump(2) + "\n";
}

void write_run_outputs(const std::filesystem::path& out_dir, const RunOutcome& outcome,
                       RunMode mode, const PolicyConfig& policy, bool ablate_memory) {
  std::vector<std::pair<std::string, std::string>> files;
  std::size_t frames = 0;
  if (outcome.conventional) {
    frames = outcome.conventional->traces.size();
    files.emplace_back("trace_conv.csv", to_text([&](std::ostream& os) {
                         write_trace_csv(os, outcome.conventional->traces);
                       }));
  }
  if (outcome.event) {
    frames = outcome.event->traces.size();
    files.emplace_back("trace_event.csv", to_text([&](std::ostream& os) {
                         write_trace_csv(os, outcome.event->traces);
                       }));
  }
  if (outcome.agreement) {
    files.emplace_back("agreement.csv", to_text([&](std::ostream& os) {
                         write_agreement_csv(os, *outcome.agreement);
                       }));
  }
  files.emplace_back("summary.json",
                     run_summary_json(outcome, mode, policy, ablate_memory, frames));

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> staged;
  auto discard = [&] {
    for (const auto& p : staged) std::filesystem::remove(p, ec);
  };
  for (const auto& [name, text] : files) {
    const auto tmp = out_dir / ("." + name + ".tmp");
    staged.push_back(tmp);
    std::ofstream os(tmp, std::ios::binary);
    os << text;
    os.close();
    if (!os) {
      discard();
      throw IoError("cannot write " + tmp.string());
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::filesystem::rename(staged[i], out_dir / files[i].first, ec);
    if (ec) {
      const auto why = ec.message();
      discard();
      for (std::size_t j = 0; j < i; ++j) std::filesystem::remove(out_dir / files[j].first, ec);
      throw IoError("cannot move " + staged[i].string() + ": " + why);
    }
  }
}

std::vector<SweepRow> run_sweep(const NetworkGraph& g, const Video& video,
                                const std::vector<SweepPoint>& points, bool ablate_memory,
                                unsigned threads) {
  if (points.size() < 2) throw ConfigError("a sweep needs at least two points");
  if (video.empty()) throw ConfigError("video has no frames");
  for (const auto& p : points) p.policy.validate();
  const auto conventional = run_conventional(g, video);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  std::vector<SweepRow> rows(points.size());
  for (std::size_t start = 0; start < points.size(); start += threads) {
    const auto end = std::min(points.size(), start + threads);
    std::vector<std::future<SweepRow>> pending;
    for (auto i = start; i < end; ++i) {
      pending.push_back(std::async(std::launch::async, [&, i] {
        return run_point(g, video, conventional, points[i], ablate_memory);
      }));
    }
    for (auto i = start; i < end; ++i) {
      try {
        rows[i] = pending[i - start].get();
      } catch (...) {
        for (auto j = i + 1; j < end; ++j) pending[j - start].wait();
        rethrow_with_context("sweep point " + points[i].label);
      }
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "label,policy,h,chunk_h,chunk_w,chunk_threshold,conventional_macs,event_macs,"
        "savings_ratio,arith_overhead_ratio,mem_overhead_ratio,max_linf,final_linf,mean_linf,"
        "mean_rel_l2,min_psnr\n";
  for (const auto& r : rows) {
    os << r.label << ',' << r.policy << ',' << format_number(r.h) << ',' << r.chunk_h << ','
       << r.chunk_w << ',' << format_number(r.chunk_threshold) << ',' << r.conventional_macs
       << ',' << r.event_macs << ',' << format_number(r.savings_ratio) << ','
       << format_number(r.arith_overhead_ratio) << ',' << format_number(r.mem_overhead_ratio)
       << ',' << format_number(r.agreement.max_linf) << ','
       << format_number(r.agreement.final_linf) << ',' << format_number(r.agreement.mean_linf)
       << ',' << format_number(r.agreement.mean_rel_l2) << ','
       << format_number(r.agreement.min_psnr) << '\n';
  }
}

std::vector<SweepPoint> sweep_over_h(const PolicyConfig& base, const std::vector<float>& hs) {
  std::vector<SweepPoint> points;
  for (auto h : hs) {
    auto p = base;
    p.h = h;
    if (h == 0.0f && p.kind == PolicyKind::threshold) p.kind = PolicyKind::exact_h0;
    if (h != 0.0f && p.kind == PolicyKind::exact_h0) p.kind = PolicyKind::threshold;
    points.push_back({"h=" + format_float(h), std::move(p)});
  }
  return points;
}

std::vector<SweepPoint> sweep_over_chunks(const PolicyConfig& base,
                                          const std::vector<std::size_t>& sides) {
  std::vector<SweepPoint> points;
  for (auto s : sides) {
    auto p = base;
    p.kind = PolicyKind::chunked_spatial;
    p.chunk_h = p.chunk_w = s;
    p.chunk_threshold.reset();
    points.push_back({"chunk=" + std::to_string(s) + "x" + std::to_string(s), std::move(p)});
  }
  return points;
}

std::map<std::string, std::vector<float>> load_channel_scale(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open gamma file " + path.string());
  std::map<std::string, std::vector<float>> out;
  try {
    const auto doc = json::parse(is);
    if (!doc.is_object()) throw ConfigError("gamma file must hold an object");
    for (const auto& [key, value] : doc.items()) out[key] = value.get<std::vector<float>>();
  } catch (const json::exception& e) {
    throw ConfigError("gamma file " + path.string() + ": " + e.what());
  }
  return out;
}

std::size_t count_inversions(const std::vector<double>& values, bool increasing) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (increasing ? values[i] < values[i - 1] : values[i] > values[i - 1]) ++n;
  }
  return n;
}

}  // namespace evnet
