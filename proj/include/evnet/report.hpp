// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// CSV/JSON report files and the analyses built on traces.

#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "evnet/engine.hpp"

namespace evnet {

/// Columns: frame,layer,macs,overhead_arith,mem_loads,mem_stores,transmissions
void write_trace_csv(std::ostream& os, const std::vector<FrameTrace>& traces);
/// Roles are recovered from node names ("gate:", "acc:", "buffer:" prefixes;
/// anything else is a layer). Throws ReportError on malformed input.
std::vector<FrameTrace> read_trace_csv(std::istream& is);

/// Columns: frame,rel_l2,linf,psnr
void write_agreement_csv(std::ostream& os, const AgreementReport& r);

/// Formats a double for reports; infinities become "inf" / "-inf".
std::string format_number(double v);
/// Like format_number at float precision (7 significant digits).
std::string format_float(float v);

struct AgreementSummary {
  double max_linf = 0.0;
  double final_linf = 0.0;
  double mean_linf = 0.0;
  double mean_rel_l2 = 0.0;
  double min_psnr = 0.0;
};

/// Aggregates frames 1..T-1 (frame 0 is the shared initialization).
AgreementSummary summarize(const AgreementReport& r);

struct LayerDepthRow {
  std::size_t depth = 0;
  std::string layer;
  std::uint64_t conventional_macs = 0;
  std::uint64_t event_macs = 0;
  double ratio = 0.0;
  std::string group;  // shallow, middle, deep
};

struct TimeSeriesRow {
  std::int64_t frame = 0;
  std::array<std::uint64_t, 3> group_macs{};  // shallow, middle, deep
  std::uint64_t total_macs = 0;
  std::uint64_t total_ops = 0;  // MACs plus overhead arithmetic, loads and stores
};

struct LayerReport {
  std::vector<LayerDepthRow> layers;
  std::vector<TimeSeriesRow> series;
  std::array<double, 3> group_mean_ratio{};
};

/// Sizes of the shallow/middle/deep groups for n layers: n/3 each with the
/// remainder going to the shallower groups.
std::array<std::size_t, 3> depth_groups(std::size_t n);

/// Per-depth event/conventional MAC ratio over MAC-bearing layers (frames
/// 1..T-1) and the per-frame cost series. Throws ReportError when the first
/// trace is not conventional, the second is not event-mode, or frame counts
/// differ.
LayerReport layer_report(const std::vector<FrameTrace>& conventional,
                         const std::vector<FrameTrace>& event);

void write_layer_report(const std::filesystem::path& dir, const LayerReport& r);

}  // namespace evnet
