// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// evnet: command-line front end for scene generation, graph conversion and
// conventional/event experiments.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "evnet/bench.hpp"
#include "evnet/demo.hpp"
#include "evnet/errors.hpp"
#include "evnet/event_graph.hpp"
#include "evnet/report.hpp"
#include "evnet/scene.hpp"
#include "evnet/tensor_io.hpp"

namespace {

using namespace evnet;
namespace fs = std::filesystem;

struct VideoOptions {
  std::string video;
  std::string scene;
  std::string preset;
  std::size_t frames = 0;
  std::uint64_t seed = 0;
};

struct PolicyOptions {
  std::string policy = "threshold";
  float h = 0.05f;
  std::vector<std::size_t> chunk;
  std::optional<float> chunk_threshold;
  std::string gamma_file;
};

void add_video_options(CLI::App* cmd, VideoOptions& o) {
  cmd->add_option("--video", o.video, "Input video (EVTV)");
  cmd->add_option("--scene", o.scene, "Scene spec (JSON)");
  cmd->add_option("--scene-preset", o.preset,
                  "Named scene: static, moving-sprite, drift-sprite, pan");
  cmd->add_option("--frames", o.frames, "Use at most / generate this many frames");
  cmd->add_option("--seed", o.seed, "Scene seed");
}

void add_policy_options(CLI::App* cmd, PolicyOptions& o) {
  cmd->add_option("--policy", o.policy,
                  "exact_h0, threshold, chunked_spatial or chunked_channel");
  cmd->add_option("--h", o.h, "Firing threshold");
  cmd->add_option("--chunk", o.chunk, "Chunk extents: one side or rows cols")->expected(1, 2);
  cmd->add_option("--chunk-h", o.chunk_threshold, "Chunk-mean threshold override");
  cmd->add_option("--gamma-file", o.gamma_file, "Per-channel threshold scales (JSON)");
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

SceneSpec scene_of(const VideoOptions& o) {
  SceneSpec spec = o.scene.empty() ? scene_preset(o.preset.empty() ? "moving-sprite" : o.preset)
                                   : scene_from_json(read_file(o.scene));
  if (o.frames) spec.frames = o.frames;
  return spec;
}

Video video_of(const VideoOptions& o) {
  if (!o.video.empty()) {
    if (!o.scene.empty() || !o.preset.empty()) {
      throw ConfigError("--video cannot be combined with --scene or --scene-preset");
    }
    auto v = load_video(o.video);
    if (o.frames && o.frames < v.size()) v.resize(o.frames);
    return v;
  }
  return scene_generate(scene_of(o), o.seed);
}

NetworkGraph graph_of(const std::string& config, const Video& video) {
  if (!config.empty()) return load_graph(config);
  if (video.empty() || video.front().rank() != 3) {
    throw ConfigError("the built-in demo network needs [1,H,W] frames; pass --config");
  }
  return make_demo_network(video.front().extent(1), video.front().extent(2));
}

PolicyConfig policy_of(const PolicyOptions& o) {
  PolicyConfig p;
  p.kind = policy_kind_from_string(o.policy);
  p.h = o.h;
  if (p.kind == PolicyKind::exact_h0) p.h = 0.0f;
  if (!o.chunk.empty()) {
    p.chunk_h = o.chunk[0];
    p.chunk_w = o.chunk.size() > 1 ? o.chunk[1] : o.chunk[0];
  }
  p.chunk_threshold = o.chunk_threshold;
  if (!o.gamma_file.empty()) p.channel_scale = load_channel_scale(o.gamma_file);
  p.validate();
  return p;
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) throw ConfigError("bad list entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) throw IoError("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event neural network inference: conventional and event execution of CNNs over video"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = "out";
  VideoOptions vopt;
  PolicyOptions popt;

  auto* run = app.add_subcommand("run", "Run conventional and/or event mode and write reports");
  std::string mode = "both";
  bool ablate = false;
  run->add_option("--config", config, "Graph JSON (default: built-in demo network)");
  run->add_option("--mode", mode, "conv, event or both");
  run->add_flag("--ablate-memory", ablate, "Discard d after every frame");
  run->add_option("--out-dir", out_dir, "Output directory");
  add_video_options(run, vopt);
  add_policy_options(run, popt);

  auto* sweep = app.add_subcommand("sweep", "Sweep thresholds or chunk sizes");
  std::string h_list, chunk_list;
  unsigned threads = 0;
  sweep->add_option("--config", config, "Graph JSON (default: built-in demo network)");
  sweep->add_option("--h-list", h_list, "Comma-separated thresholds");
  sweep->add_option("--chunk-list", chunk_list, "Comma-separated square chunk sides");
  sweep->add_option("--threads", threads, "Parallel sweep points (0: all cores)");
  sweep->add_flag("--ablate-memory", ablate, "Discard d after every frame");
  sweep->add_option("--out-dir", out_dir, "Output directory");
  add_video_options(sweep, vopt);
  add_policy_options(sweep, popt);

  auto* layer = app.add_subcommand("layer-report", "Per-depth cost profile from two traces");
  std::string conv_trace, event_trace;
  layer->add_option("--conv-trace", conv_trace, "Conventional trace CSV")->required();
  layer->add_option("--event-trace", event_trace, "Event trace CSV")->required();
  layer->add_option("--out-dir", out_dir, "Output directory");

  auto* gen = app.add_subcommand("gen-scene", "Generate a synthetic video");
  gen->add_option("--out-dir", out_dir, "Output directory");
  add_video_options(gen, vopt);

  auto* convert = app.add_subcommand("convert", "Dump the event graph of a network");
  std::size_t height = 32, width = 32;
  convert->add_option("--config", config, "Graph JSON (default: built-in demo network)");
  convert->add_option("--height", height, "Demo network input height");
  convert->add_option("--width", width, "Demo network input width");
  convert->add_option("--out-dir", out_dir, "Output directory");
  add_policy_options(convert, popt);

  auto* check = app.add_subcommand("consistency-check",
                                   "Run event mode and check state consistency after each frame");
  float tol = 1e-4f;
  check->add_option("--config", config, "Graph JSON (default: built-in demo network)");
  check->add_option("--tol", tol, "Absolute tolerance");
  check->add_option("--out-dir", out_dir, "Output directory");
  add_video_options(check, vopt);
  add_policy_options(check, popt);

  auto* demo = app.add_subcommand("demo-model", "Write the demo network as graph JSON and weights");
  std::uint64_t weight_seed = kDemoWeightSeed;
  demo->add_option("--height", height, "Input height");
  demo->add_option("--width", width, "Input width");
  demo->add_option("--weight-seed", weight_seed, "Weight seed");
  demo->add_option("--out-dir", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto video = video_of(vopt);
      const auto g = graph_of(config, video);
      const auto m = run_mode_from_string(mode);
      const auto policy = policy_of(popt);
      const auto outcome = run_experiment(g, video, m, policy, ablate);
      write_run_outputs(out_dir, outcome, m, policy, ablate);
      std::cout << run_summary_json(outcome, m, policy, ablate, video.size());
    } else if (*sweep) {
      if (h_list.empty() == chunk_list.empty()) {
        throw ConfigError("give exactly one of --h-list and --chunk-list");
      }
      const auto video = video_of(vopt);
      const auto g = graph_of(config, video);
      const auto base = policy_of(popt);
      const auto points = h_list.empty()
                              ? sweep_over_chunks(base, parse_list<std::size_t>(chunk_list))
                              : sweep_over_h(base, parse_list<float>(h_list));
      const auto rows = run_sweep(g, video, points, ablate, threads);
      std::ostringstream os;
      write_sweep_csv(os, rows);
      write_text(fs::path(out_dir) / "sweep.csv", os.str());
      std::cout << os.str();
    } else if (*layer) {
      std::ifstream c(conv_trace), e(event_trace);
      if (!c) throw IoError("cannot open " + conv_trace);
      if (!e) throw IoError("cannot open " + event_trace);
      const auto rep = layer_report(read_trace_csv(c), read_trace_csv(e));
      write_layer_report(out_dir, rep);
      std::cout << "shallow " << format_number(rep.group_mean_ratio[0]) << "\nmiddle "
                << format_number(rep.group_mean_ratio[1]) << "\ndeep "
                << format_number(rep.group_mean_ratio[2]) << '\n';
    } else if (*gen) {
      if (!vopt.video.empty()) throw ConfigError("gen-scene takes --scene or --scene-preset");
      const auto spec = scene_of(vopt);
      fs::create_directories(out_dir);
      save_video(fs::path(out_dir) / "scene.evtv", scene_generate(spec, vopt.seed));
      write_text(fs::path(out_dir) / "scene.json", scene_to_json(spec));
      std::ostringstream reversals;
      reversals << "frame\n";
      for (auto f : scene_reversal_frames(spec, vopt.seed)) reversals << f << '\n';
      write_text(fs::path(out_dir) / "reversals.csv", reversals.str());
    } else if (*convert) {
      const auto g = config.empty() ? make_demo_network(height, width) : load_graph(config);
      const auto eg = convert_to_event(g, policy_of(popt));
      write_text(fs::path(out_dir) / "event_graph.json", event_graph_to_json(eg) + "\n");
    } else if (*check) {
      const auto video = video_of(vopt);
      const auto g = graph_of(config, video);
      const auto eg = convert_to_event(g, policy_of(popt));
      auto state = initialize(eg, video.front());
      std::ostringstream os;
      os << "frame,node,rule,max_violation\n";
      std::size_t violations = 0;
      {
        EventExecutor ex(eg, state);
        for (std::size_t f = 0; f < video.size(); ++f) {
          ex.step(video[f]);
          for (const auto& v : consistency_check(eg, state, tol, &video[f])) {
            os << f << ',' << v.node << ',' << v.rule << ',' << format_number(v.max_violation)
               << '\n';
            ++violations;
          }
        }
      }
      write_text(fs::path(out_dir) / "consistency.csv", os.str());
      std::cout << violations << " violation(s) over " << video.size() << " frame(s)\n";
      return violations ? 1 : 0;
    } else if (*demo) {
      const auto path = save_graph(make_demo_network(height, width, weight_seed), out_dir, "demo");
      std::cout << path.string() << '\n';
    }
  } catch (const evnet::Error& e) {
    std::cerr << "evnet: error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "evnet: unexpected error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
