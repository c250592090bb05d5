// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "evnet/policy.hpp"

#include <algorithm>
#include <cmath>

#include "evnet/errors.hpp"

namespace evnet {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::exact_h0: return "exact_h0";
    case PolicyKind::threshold: return "threshold";
    case PolicyKind::chunked_spatial: return "chunked_spatial";
    case PolicyKind::chunked_channel: return "chunked_channel";
  }
  return "?";
}

PolicyKind policy_kind_from_string(std::string_view name) {
  for (auto k : {PolicyKind::exact_h0, PolicyKind::threshold, PolicyKind::chunked_spatial,
                 PolicyKind::chunked_channel}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

float PolicyConfig::effective_chunk_threshold() const {
  if (chunk_threshold) return *chunk_threshold;
  if (kind == PolicyKind::chunked_spatial) {
    const double side = std::sqrt(static_cast<double>(chunk_h * chunk_w));
    return static_cast<float>(h / std::sqrt(side));
  }
  return h;
}

void PolicyConfig::validate() const {
  if (!(h >= 0.0f) || !std::isfinite(h)) throw ConfigError("threshold h must be finite and >= 0");
  if (kind == PolicyKind::exact_h0 && h != 0.0f) {
    throw ConfigError("exact_h0 policy requires h == 0");
  }
  if (chunk_threshold && !(*chunk_threshold >= 0.0f)) {
    throw ConfigError("chunk threshold must be >= 0");
  }
  if (kind == PolicyKind::chunked_spatial && (chunk_h == 0 || chunk_w == 0)) {
    throw ConfigError("chunk extents must be >= 1");
  }
  for (const auto& [id, gammas] : channel_scale) {
    for (float g : gammas) {
      if (!(g > 0.0f) || !std::isfinite(g)) {
        throw ConfigError("channel scale for '" + id + "' must be positive and finite");
      }
    }
  }
  if (chunked() && !channel_scale.empty()) {
    throw ConfigError("per-channel threshold scaling cannot be combined with chunked policies");
  }
}

float neuron_threshold(const PolicyConfig& cfg, std::span<const float> gamma, const Shape& shape,
                       std::size_t index) {
  if (gamma.empty()) return cfg.h;
  const auto per = shape_numel(shape) / shape[0];
  return cfg.h / gamma[index / per];
}

PolicyDecision policy_threshold(const Tensor& d, std::span<const std::size_t> touched,
                                const PolicyConfig& cfg, std::span<const float> gamma) {
  if (cfg.kind != PolicyKind::threshold && cfg.kind != PolicyKind::exact_h0) {
    throw ConfigError("policy_threshold called with a chunked policy");
  }
  if (!(cfg.h >= 0.0f)) throw ConfigError("threshold h must be >= 0");
  if (!gamma.empty() && gamma.size() != d.extent(0)) {
    throw ConfigError("channel scale has " + std::to_string(gamma.size()) +
                      " entries for a tensor with " + std::to_string(d.extent(0)) + " channels");
  }
  PolicyDecision out;
  out.evaluations = touched.size();
  for (auto i : touched) {
    if (std::fabs(d[i]) > neuron_threshold(cfg, gamma, d.shape(), i)) out.fire.push_back(i);
  }
  return out;
}

PolicyDecision policy_chunked(const Tensor& d, std::span<const std::size_t> touched,
                              const PolicyConfig& cfg) {
  if (!cfg.chunked()) throw ConfigError("policy_chunked called with a singular policy");
  const auto& s = d.shape();
  const std::size_t height = s.size() == 3 ? s[1] : 1;
  const std::size_t width = s.size() == 3 ? s[2] : 1;
  if (s.size() != 1 && s.size() != 3) {
    throw ConfigError("chunked policies need [C,H,W] or [N] tensors, got " + shape_str(s));
  }
  std::size_t ch = height, cw = width;
  if (cfg.kind == PolicyKind::chunked_spatial) {
    ch = cfg.chunk_h;
    cw = cfg.chunk_w;
    if (ch == 0 || cw == 0) throw ConfigError("chunk extents must be >= 1");
    if (ch > height || cw > width) {
      throw ConfigError("chunk " + std::to_string(ch) + "x" + std::to_string(cw) +
                        " larger than tensor " + shape_str(s));
    }
  }
  const auto rows = (height + ch - 1) / ch;
  const auto cols = (width + cw - 1) / cw;
  const float limit = cfg.effective_chunk_threshold();

  // Chunk id -> number of touched members, in ascending chunk order.
  std::vector<std::pair<std::size_t, std::size_t>> chunks;
  for (auto i : touched) {
    const auto c = i / (height * width);
    const auto y = (i / width) % height;
    const auto x = i % width;
    const auto id = (c * rows + y / ch) * cols + x / cw;
    chunks.emplace_back(id, 1);
  }
  std::sort(chunks.begin(), chunks.end());
  std::vector<std::pair<std::size_t, std::size_t>> merged;
  for (const auto& [id, n] : chunks) {
    if (!merged.empty() && merged.back().first == id) {
      merged.back().second += n;
    } else {
      merged.emplace_back(id, n);
    }
  }

  PolicyDecision out;
  for (const auto& [id, n_touched] : merged) {
    const auto c = id / (rows * cols);
    const auto y0 = ((id / cols) % rows) * ch;
    const auto x0 = (id % cols) * cw;
    const auto y1 = std::min(y0 + ch, height);
    const auto x1 = std::min(x0 + cw, width);
    double sum = 0.0;
    for (auto y = y0; y < y1; ++y) {
      for (auto x = x0; x < x1; ++x) sum += std::fabs(d[(c * height + y) * width + x]);
    }
    const auto members = (y1 - y0) * (x1 - x0);
    ++out.evaluations;
    out.extra_loads += members - n_touched;
    if (sum / static_cast<double>(members) > static_cast<double>(limit)) {
      for (auto y = y0; y < y1; ++y) {
        for (auto x = x0; x < x1; ++x) out.fire.push_back((c * height + y) * width + x);
      }
    }
  }
  std::sort(out.fire.begin(), out.fire.end());
  return out;
}

PolicyDecision policy_apply(const Tensor& d, std::span<const std::size_t> touched,
                            const PolicyConfig& cfg, std::span<const float> gamma) {
  if (cfg.chunked()) return policy_chunked(d, touched, cfg);
  return policy_threshold(d, touched, cfg, gamma);
}

}  // namespace evnet
