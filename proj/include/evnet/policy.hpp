// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Transmission policies: which gate neurons fire this frame, given their
// accumulated differences d. Policies only look at neurons touched this
// frame (or, for chunked policies, chunks containing a touched neuron), so
// their cost is linear in the number of updates.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evnet/tensor.hpp"

namespace evnet {

enum class PolicyKind { exact_h0, threshold, chunked_spatial, chunked_channel };

std::string_view to_string(PolicyKind kind);
/// Throws ConfigError for unknown names.
PolicyKind policy_kind_from_string(std::string_view name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::threshold;
  // Base threshold. Singular policies fire iff |d_i| > h_i.
  float h = 0.0f;
  // Spatial chunk extents (rows, cols) for chunked_spatial.
  std::size_t chunk_h = 1;
  std::size_t chunk_w = 1;
  // Chunk-mean threshold. When unset: h / sqrt(side) for spatial chunks
  // (side = sqrt(chunk_h * chunk_w)), h for channel chunks.
  std::optional<float> chunk_threshold;
  // Per-channel gamma, keyed by the id of the layer a gate sits behind;
  // thresholds become h / gamma[channel].
  std::map<std::string, std::vector<float>> channel_scale;

  bool chunked() const {
    return kind == PolicyKind::chunked_spatial || kind == PolicyKind::chunked_channel;
  }
  float effective_chunk_threshold() const;

  /// Throws ConfigError on negative thresholds, zero chunks, non-positive
  /// gammas, exact_h0 with h != 0, or gammas combined with chunking.
  void validate() const;
};

struct PolicyDecision {
  std::vector<std::size_t> fire;  // ascending flat indices
  std::size_t evaluations = 0;    // threshold comparisons performed
  // Loads of d for untouched chunk members read by a chunk mean.
  std::size_t extra_loads = 0;
};

/// Singular threshold (and exact_h0) policy evaluated at the touched indices
/// only. `gamma`, when non-empty, holds one positive scale per channel
/// (axis 0 of d). `touched` must be ascending.
PolicyDecision policy_threshold(const Tensor& d, std::span<const std::size_t> touched,
                                const PolicyConfig& cfg, std::span<const float> gamma = {});

/// Chunked policy: every chunk holding a touched index computes the mean of
/// |d| over all of its members; if it exceeds the chunk threshold every
/// member fires. Rank-1 tensors are treated as [N,1,1].
/// Throws ConfigError when the chunk is larger than the tensor.
PolicyDecision policy_chunked(const Tensor& d, std::span<const std::size_t> touched,
                              const PolicyConfig& cfg);

/// Dispatches on cfg.kind.
PolicyDecision policy_apply(const Tensor& d, std::span<const std::size_t> touched,
                            const PolicyConfig& cfg, std::span<const float> gamma = {});

/// Per-neuron threshold h_i used by singular policies.
float neuron_threshold(const PolicyConfig& cfg, std::span<const float> gamma,
                       const Shape& shape, std::size_t index);

}  // namespace evnet
