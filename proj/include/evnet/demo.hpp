// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// The pinned demo CNN and graph (de)serialization helpers.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "evnet/event_graph.hpp"
#include "evnet/graph.hpp"

namespace evnet {

inline constexpr std::uint64_t kDemoWeightSeed = 20220321;

/// conv1(1->4, 3x3, pad 1) relu1 conv2(4->8, 3x3, pad 1) relu2 pool(2x2 max)
/// conv3(8->8, 3x3, pad 1) relu3 fc(-> 10) on a [1, height, width] input.
/// Weights are He-uniform and biases uniform in [-0.05, 0.05], drawn from
/// `seed`. height and width must be even.
NetworkGraph make_demo_network(std::size_t height, std::size_t width,
                               std::uint64_t seed = kDemoWeightSeed);

/// Writes `<dir>/<stem>.json` plus one EVTS file per weight tensor under
/// `<dir>/weights/`. Returns the path of the JSON document.
std::filesystem::path save_graph(const NetworkGraph& g, const std::filesystem::path& dir,
                                 const std::string& stem);

/// JSON dump of a converted graph: nodes in execution order with role,
/// inputs, shape and signal mode, plus the edge placement map.
std::string event_graph_to_json(const EventGraph& eg);

}  // namespace evnet
