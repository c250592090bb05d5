// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration behind the command-line tool: single runs in one
// or both modes, parameter sweeps and their report files.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evnet/engine.hpp"
#include "evnet/graph.hpp"
#include "evnet/policy.hpp"
#include "evnet/report.hpp"

namespace evnet {

enum class RunMode { conv, event, both };

/// Throws ConfigError for names other than conv, event and both.
RunMode run_mode_from_string(std::string_view name);

struct RunOutcome {
  std::optional<RunResult> conventional;
  std::optional<RunResult> event;
  std::optional<AgreementReport> agreement;
  std::optional<OverheadTotals> overhead;
};

/// Runs the requested modes. Event mode initializes from video[0]. The
/// overhead needs the conventional baseline, so it is only filled for
/// RunMode::both.
RunOutcome run_experiment(const NetworkGraph& g, const Video& video, RunMode mode,
                          const PolicyConfig& policy, bool ablate_memory);

/// Summary document of a run; infinities are written as "inf".
std::string run_summary_json(const RunOutcome& outcome, RunMode mode, const PolicyConfig& policy,
                             bool ablate_memory, std::size_t frames);

/// Writes trace_conv.csv, trace_event.csv, agreement.csv and summary.json
/// (whichever apply) into `out_dir`. Files are staged under temporary names
/// and renamed only after all of them were written, so a failure leaves no
/// partial set behind.
void write_run_outputs(const std::filesystem::path& out_dir, const RunOutcome& outcome,
                       RunMode mode, const PolicyConfig& policy, bool ablate_memory);

struct SweepPoint {
  std::string label;
  PolicyConfig policy;
};

struct SweepRow {
  std::string label;
  std::string policy;
  double h = 0.0;
  std::size_t chunk_h = 1;
  std::size_t chunk_w = 1;
  double chunk_threshold = 0.0;
  std::uint64_t conventional_macs = 0;
  std::uint64_t event_macs = 0;
  double savings_ratio = 0.0;
  double arith_overhead_ratio = 0.0;
  double mem_overhead_ratio = 0.0;
  AgreementSummary agreement;
};

/// Runs every point in its own executor, up to `threads` at a time, against
/// one shared conventional baseline. Rows keep the order of `points`.
/// Throws ConfigError for fewer than two points.
std::vector<SweepRow> run_sweep(const NetworkGraph& g, const Video& video,
                                const std::vector<SweepPoint>& points, bool ablate_memory,
                                unsigned threads = 0);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// Sweep points over thresholds with a fixed policy shape.
std::vector<SweepPoint> sweep_over_h(const PolicyConfig& base, const std::vector<float>& hs);
/// Sweep points over square chunk sides using the default chunk threshold.
std::vector<SweepPoint> sweep_over_chunks(const PolicyConfig& base,
                                          const std::vector<std::size_t>& sides);

/// Reads {"<layer id>": [gamma, ...], ...}. Throws ConfigError.
std::map<std::string, std::vector<float>> load_channel_scale(const std::filesystem::path& path);

/// Counts how often consecutive values go against the expected direction.
std::size_t count_inversions(const std::vector<double>& values, bool increasing);

}  // namespace evnet
