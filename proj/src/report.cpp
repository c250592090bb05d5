// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "evnet/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "evnet/errors.hpp"

namespace evnet {

namespace {

constexpr const char* kTraceHeader =
    "frame,layer,macs,overhead_arith,mem_loads,mem_stores,transmissions";

// The input gate is always the first row of an event frame.
std::string role_from_name(const std::string& layer, bool first_row) {
  if (layer.rfind("gate:", 0) == 0) return first_row ? "input_gate" : "gate";
  if (layer == "acc:output") return "output";
  if (layer.rfind("acc:", 0) == 0) return "accumulator";
  if (layer.rfind("buffer:", 0) == 0) return "buffer";
  return "layer";
}

bool is_state_role(const std::string& role) { return role != "layer"; }

std::uint64_t parse_count(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument(s);
  }
  return std::stoull(s);
}

}  // namespace

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string format_float(float v) {
  if (std::isinf(v) || std::isnan(v)) return format_number(v);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.7g", static_cast<double>(v));
  return buf;
}

void write_trace_csv(std::ostream& os, const std::vector<FrameTrace>& traces) {
  os << kTraceHeader << '\n';
  for (const auto& t : traces) {
    for (const auto& r : t.layers) {
      const auto& c = r.counters;
      os << t.frame_index << ',' << r.layer << ',' << c.macs << ',' << c.overhead_arith << ','
         << c.mem_loads << ',' << c.mem_stores << ',' << c.transmissions << '\n';
    }
  }
}

std::vector<FrameTrace> read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kTraceHeader) {
    throw ReportError("trace CSV must start with header '" + std::string(kTraceHeader) + "'");
  }
  std::vector<FrameTrace> traces;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 7) {
      throw ReportError("trace CSV line " + std::to_string(lineno) + " has " +
                        std::to_string(cols.size()) + " columns");
    }
    try {
      const auto frame = std::stoll(cols[0]);
      if (traces.empty() || traces.back().frame_index != frame) {
        traces.push_back({});
        traces.back().frame_index = frame;
      }
      LayerRecord r{cols[1], role_from_name(cols[1], traces.back().layers.empty()), {}};
      r.counters.macs = parse_count(cols[2]);
      r.counters.overhead_arith = parse_count(cols[3]);
      r.counters.mem_loads = parse_count(cols[4]);
      r.counters.mem_stores = parse_count(cols[5]);
      r.counters.transmissions = parse_count(cols[6]);
      traces.back().layers.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ReportError("trace CSV line " + std::to_string(lineno) + " has a malformed frame or counter");
    }
  }
  return traces;
}

void write_agreement_csv(std::ostream& os, const AgreementReport& r) {
  os << "frame,rel_l2,linf,psnr\n";
  for (std::size_t f = 0; f < r.linf.size(); ++f) {
    os << f << ',' << format_number(r.rel_l2[f]) << ',' << format_number(r.linf[f]) << ','
       << format_number(r.psnr[f]) << '\n';
  }
}

AgreementSummary summarize(const AgreementReport& r) {
  AgreementSummary s;
  s.min_psnr = kInf;
  const auto n = r.linf.size();
  if (n == 0) return s;
  s.final_linf = r.linf.back();
  std::size_t count = 0;
  for (std::size_t f = n > 1 ? 1 : 0; f < n; ++f) {
    s.max_linf = std::max(s.max_linf, r.linf[f]);
    s.mean_linf += r.linf[f];
    s.mean_rel_l2 += r.rel_l2[f];
    s.min_psnr = std::min(s.min_psnr, r.psnr[f]);
    ++count;
  }
  s.mean_linf /= static_cast<double>(count);
  s.mean_rel_l2 /= static_cast<double>(count);
  return s;
}

std::array<std::size_t, 3> depth_groups(std::size_t n) {
  std::array<std::size_t, 3> g{n / 3, n / 3, n / 3};
  for (std::size_t i = 0; i < n % 3; ++i) ++g[i];
  return g;
}

LayerReport layer_report(const std::vector<FrameTrace>& conventional,
                         const std::vector<FrameTrace>& event) {
  for (const auto& t : conventional) {
    for (const auto& r : t.layers) {
      if (is_state_role(r.role)) {
        throw ReportError("first trace is not conventional: it has state node " + r.layer);
      }
    }
  }
  bool event_has_state = false;
  for (const auto& t : event) {
    for (const auto& r : t.layers) event_has_state |= is_state_role(r.role);
  }
  if (!event_has_state) throw ReportError("second trace is not an event-mode trace");
  if (conventional.size() != event.size() || conventional.empty()) {
    throw ReportError("traces cover different frame counts (" +
                      std::to_string(conventional.size()) + " vs " +
                      std::to_string(event.size()) + ")");
  }

  LayerReport rep;
  // Depth order follows the conventional trace's row order.
  std::map<std::string, std::size_t> row_of;
  for (const auto& r : conventional.front().layers) {
    if (r.counters.macs == 0) continue;
    row_of[r.layer] = rep.layers.size();
    rep.layers.push_back({rep.layers.size(), r.layer, 0, 0, 0.0, {}});
  }
  for (std::size_t f = 1; f < conventional.size(); ++f) {
    for (const auto& r : conventional[f].layers) {
      if (auto it = row_of.find(r.layer); it != row_of.end()) {
        rep.layers[it->second].conventional_macs += r.counters.macs;
      }
    }
    for (const auto& r : event[f].layers) {
      if (auto it = row_of.find(r.layer); it != row_of.end()) {
        rep.layers[it->second].event_macs += r.counters.macs;
      }
    }
  }

  static constexpr const char* kGroupNames[3] = {"shallow", "middle", "deep"};
  const auto sizes = depth_groups(rep.layers.size());
  std::vector<std::size_t> group_of(rep.layers.size());
  std::array<std::size_t, 3> counts{};
  for (std::size_t i = 0, g = 0, used = 0; i < rep.layers.size(); ++i) {
    while (used == sizes[g]) {
      ++g;
      used = 0;
    }
    group_of[i] = g;
    ++used;
    auto& row = rep.layers[i];
    row.group = kGroupNames[g];
    row.ratio = row.conventional_macs
                    ? static_cast<double>(row.event_macs) / static_cast<double>(row.conventional_macs)
                    : 0.0;
    rep.group_mean_ratio[g] += row.ratio;
    ++counts[g];
  }
  for (std::size_t g = 0; g < 3; ++g) {
    if (counts[g]) rep.group_mean_ratio[g] /= static_cast<double>(counts[g]);
  }

  for (const auto& t : event) {
    TimeSeriesRow row;
    row.frame = t.frame_index;
    for (const auto& r : t.layers) {
      const auto& c = r.counters;
      row.total_macs += c.macs;
      row.total_ops += c.macs + c.overhead_arith + c.mem_loads + c.mem_stores;
      if (auto it = row_of.find(r.layer); it != row_of.end()) {
        row.group_macs[group_of[it->second]] += c.macs;
      }
    }
    rep.series.push_back(row);
  }
  return rep;
}

void write_layer_report(const std::filesystem::path& dir, const LayerReport& r) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "layer_report.csv");
    if (!os) throw IoError("cannot write layer_report.csv");
    os << "depth,layer,group,conventional_macs,event_macs,ratio\n";
    for (const auto& l : r.layers) {
      os << l.depth << ',' << l.layer << ',' << l.group << ',' << l.conventional_macs << ','
         << l.event_macs << ',' << format_number(l.ratio) << '\n';
    }
  }
  std::ofstream os(dir / "timeseries.csv");
  if (!os) throw IoError("cannot write timeseries.csv");
  os << "frame,shallow_macs,middle_macs,deep_macs,total_macs,total_ops\n";
  for (const auto& s : r.series) {
    os << s.frame << ',' << s.group_macs[0] << ',' << s.group_macs[1] << ',' << s.group_macs[2]
       << ',' << s.total_macs << ',' << s.total_ops << '\n';
  }
}

}  // namespace evnet
