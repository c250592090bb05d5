// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Layer builders, random data and brute-force reference implementations
// shared by the test binaries.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "evnet/graph.hpp"
#include "evnet/layers.hpp"
#include "evnet/tensor.hpp"

namespace evnet::test {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : rng_(seed) {}

  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  float uniform(float lo, float hi) { return static_cast<float>(lo + (hi - lo) * unit()); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(unit() * n) % n; }
  bool coin(double p = 0.5) { return unit() < p; }

  Tensor tensor(Shape shape, float lo = -1.0f, float hi = 1.0f) {
    std::vector<float> v(shape_numel(shape));
    for (auto& x : v) x = uniform(lo, hi);
    return Tensor(std::move(shape), std::move(v));
  }

  /// Sparse packet with roughly `density` of the indices set.
  DeltaPacket packet(std::size_t extent, double density, std::string id = "p") {
    DeltaPacket p(std::move(id), 0, extent);
    for (std::size_t i = 0; i < extent; ++i) {
      if (coin(density)) p.push_back(i, uniform(-1.0f, 1.0f));
    }
    return p;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline LayerSpec input_layer(std::string id, Shape shape) {
  LayerSpec l{std::move(id), LayerKind::input, {}, {}, false};
  l.params.input_shape = std::move(shape);
  return l;
}

inline LayerSpec unary(std::string id, LayerKind kind, std::string in) {
  return LayerSpec{std::move(id), kind, {std::move(in)}, {}, false};
}

inline LayerSpec output_layer(std::string in) {
  return unary("output", LayerKind::output, std::move(in));
}

inline LayerSpec conv_layer(std::string id, std::string in, Rng& rng, std::size_t cin,
                            std::size_t cout, std::size_t k, std::size_t stride = 1,
                            std::size_t pad = 0, bool bias = true) {
  LayerSpec l = unary(std::move(id), LayerKind::conv2d, std::move(in));
  l.params.window = {k, k, stride, stride, pad, pad};
  l.params.out_channels = cout;
  l.params.weight = rng.tensor({cout, cin, k, k}, -0.5f, 0.5f);
  if (bias) l.params.bias = rng.tensor({cout}, -0.1f, 0.1f);
  return l;
}

inline LayerSpec fc_layer(std::string id, std::string in, Rng& rng, std::size_t n,
                          std::size_t m, bool bias = true) {
  LayerSpec l = unary(std::move(id), LayerKind::fully_connected, std::move(in));
  l.params.out_features = m;
  l.params.weight = rng.tensor({m, n}, -0.5f, 0.5f);
  if (bias) l.params.bias = rng.tensor({m}, -0.1f, 0.1f);
  return l;
}

inline LayerSpec pool_layer(std::string id, LayerKind kind, std::string in, std::size_t k,
                            std::size_t stride) {
  LayerSpec l = unary(std::move(id), kind, std::move(in));
  l.params.window = {k, k, stride, stride, 0, 0};
  return l;
}

inline LayerSpec affine_layer(std::string id, std::string in, Rng& rng, std::size_t c) {
  LayerSpec l = unary(std::move(id), LayerKind::affine, std::move(in));
  l.params.scale = rng.tensor({c}, 0.5f, 1.5f);
  l.params.shift = rng.tensor({c}, -0.2f, 0.2f);
  return l;
}

inline LayerSpec merge_layer(std::string id, LayerKind kind, std::vector<std::string> in,
                             std::size_t axis = 0) {
  LayerSpec l{std::move(id), kind, std::move(in), {}, false};
  l.params.concat_axis = axis;
  return l;
}

inline float max_abs_diff(std::span<const float> a, std::span<const float> b) {
  float m = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline Tensor add_packet(const Tensor& x, const DeltaPacket& p) {
  Tensor y = x;
  apply_delta(y, p);
  return y;
}

inline Tensor subtract(const Tensor& a, const Tensor& b) {
  std::vector<float> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] - b[i];
  return Tensor(a.shape(), std::move(v));
}

/// Nested-loop convolution over [C,H,W] with zero padding.
inline Tensor conv_reference(const LayerSpec& l, const Tensor& x) {
  const auto& w = *l.params.weight;
  const auto& win = l.params.window;
  const auto co = w.extent(0), ci = w.extent(1), kh = w.extent(2), kw = w.extent(3);
  const auto h = x.extent(1), wd = x.extent(2);
  const auto oh = (h + 2 * win.pad_h - kh) / win.stride_h + 1;
  const auto ow = (wd + 2 * win.pad_w - kw) / win.stride_w + 1;
  Tensor y({co, oh, ow}, 0.0f);
  for (std::size_t o = 0; o < co; ++o) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t c = 0; c < ow; ++c) {
        double acc = l.params.bias ? (*l.params.bias)[o] : 0.0;
        for (std::size_t i = 0; i < ci; ++i) {
          for (std::size_t u = 0; u < kh; ++u) {
            for (std::size_t v = 0; v < kw; ++v) {
              const auto yy = static_cast<std::int64_t>(r * win.stride_h + u) -
                              static_cast<std::int64_t>(win.pad_h);
              const auto xx = static_cast<std::int64_t>(c * win.stride_w + v) -
                              static_cast<std::int64_t>(win.pad_w);
              if (yy < 0 || xx < 0 || yy >= static_cast<std::int64_t>(h) ||
                  xx >= static_cast<std::int64_t>(wd)) {
                continue;
              }
              acc += w[((o * ci + i) * kh + u) * kw + v] *
                     x[(i * h + static_cast<std::size_t>(yy)) * wd + static_cast<std::size_t>(xx)];
            }
          }
        }
        y[(o * oh + r) * ow + c] = static_cast<float>(acc);
      }
    }
  }
  return y;
}

/// Window max over [C,H,W].
inline Tensor maxpool_reference(const LayerSpec& l, const Tensor& x) {
  const auto& win = l.params.window;
  const auto ch = x.extent(0), h = x.extent(1), w = x.extent(2);
  const auto oh = (h - win.kernel_h) / win.stride_h + 1;
  const auto ow = (w - win.kernel_w) / win.stride_w + 1;
  Tensor y({ch, oh, ow}, 0.0f);
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t q = 0; q < ow; ++q) {
        float m = -INFINITY;
        for (std::size_t u = 0; u < win.kernel_h; ++u) {
          for (std::size_t v = 0; v < win.kernel_w; ++v) {
            m = std::max(m, x[(c * h + r * win.stride_h + u) * w + q * win.stride_w + v]);
          }
        }
        y[(c * oh + r) * ow + q] = m;
      }
    }
  }
  return y;
}

/// Instrumented gather-style delta application: every output position looks
/// at each of its taps and multiplies only where the tapped input carries a
/// nonzero delta. Returns the dense output delta and counts multiplications.
struct BruteDelta {
  Tensor output;
  std::size_t mults = 0;
};

inline BruteDelta brute_delta(const LayerSpec& l, const std::vector<Shape>& shapes,
                              const std::vector<Tensor>& deltas) {
  const auto out_shape = infer_output_shape(l, shapes);
  BruteDelta r{Tensor(out_shape, 0.0f), 0};
  auto& y = r.output;
  const Tensor& d = deltas.front();
  switch (l.kind) {
    case LayerKind::conv2d:
    case LayerKind::avg_pool: {
      const auto& win = l.params.window;
      const bool conv = l.kind == LayerKind::conv2d;
      const auto ci = d.extent(0), h = d.extent(1), w = d.extent(2);
      const auto co = out_shape[0], oh = out_shape[1], ow = out_shape[2];
      const float inv = 1.0f / static_cast<float>(win.kernel_h * win.kernel_w);
      for (std::size_t o = 0; o < co; ++o) {
        for (std::size_t rr = 0; rr < oh; ++rr) {
          for (std::size_t cc = 0; cc < ow; ++cc) {
            double acc = 0.0;
            for (std::size_t i = 0; i < ci; ++i) {
              if (!conv && i != o) continue;
              for (std::size_t u = 0; u < win.kernel_h; ++u) {
                for (std::size_t v = 0; v < win.kernel_w; ++v) {
                  const auto yy = static_cast<std::int64_t>(rr * win.stride_h + u) -
                                  static_cast<std::int64_t>(win.pad_h);
                  const auto xx = static_cast<std::int64_t>(cc * win.stride_w + v) -
                                  static_cast<std::int64_t>(win.pad_w);
                  if (yy < 0 || xx < 0 || yy >= static_cast<std::int64_t>(h) ||
                      xx >= static_cast<std::int64_t>(w)) {
                    continue;
                  }
                  const float dv =
                      d[(i * h + static_cast<std::size_t>(yy)) * w + static_cast<std::size_t>(xx)];
                  if (dv == 0.0f) continue;
                  const float wv =
                      conv ? (*l.params.weight)[((o * ci + i) * win.kernel_h + u) * win.kernel_w + v]
                           : inv;
                  acc += wv * dv;
                  ++r.mults;
                }
              }
            }
            y[(o * oh + rr) * ow + cc] = static_cast<float>(acc);
          }
        }
      }
      break;
    }
    case LayerKind::fully_connected: {
      const auto& w = *l.params.weight;
      const auto m = w.extent(0), n = w.extent(1);
      for (std::size_t j = 0; j < n; ++j) {
        if (d[j] == 0.0f) continue;
        for (std::size_t i = 0; i < m; ++i) {
          y[i] += w[i * n + j] * d[j];
          ++r.mults;
        }
      }
      break;
    }
    case LayerKind::affine: {
      const auto c = d.extent(0);
      const auto per = d.size() / c;
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] == 0.0f) continue;
        y[i] = (*l.params.scale)[i / per] * d[i];
        ++r.mults;
      }
      break;
    }
    case LayerKind::add: {
      for (const auto& t : deltas) {
        for (std::size_t i = 0; i < t.size(); ++i) y[i] += t[i];
      }
      break;
    }
    case LayerKind::concat: {
      // Walk the output in row-major order, reading from the input that owns
      // each slab along the axis.
      const auto axis = l.params.concat_axis;
      std::size_t outer = 1;
      for (std::size_t a = 0; a < axis; ++a) outer *= out_shape[a];
      std::size_t pos = 0;
      for (std::size_t o = 0; o < outer; ++o) {
        for (const auto& t : deltas) {
          std::size_t slab = 1;
          for (std::size_t a = axis; a < t.rank(); ++a) slab *= t.extent(a);
          for (std::size_t k = 0; k < slab; ++k) y[pos++] = t[o * slab + k];
        }
      }
      break;
    }
    default:
      break;
  }
  return r;
}

/// Random DAG over [C,4,4] activations (C in {2,4}) using every supported
/// kind. Every layer feeds at least one consumer; sinks are summed or
/// concatenated into the output. Some layers are marked excluded when
/// `allow_exclude` is set.
inline NetworkGraph random_network(Rng& rng, std::size_t layers, bool allow_exclude = false) {
  struct Node {
    std::string id;
    std::size_t channels;
  };
  std::vector<LayerSpec> specs{input_layer("input", {2, 4, 4})};
  std::vector<Node> nodes{{"input", 2}};
  std::vector<std::size_t> uses{0};
  auto pick = [&](std::size_t channels) -> std::optional<std::size_t> {
    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (channels == 0 || nodes[i].channels == channels) ok.push_back(i);
    }
    if (ok.empty()) return std::nullopt;
    // Prefer recent layers so graphs get deep, not just wide.
    const auto k = ok.size() - 1 - std::min(ok.size() - 1, rng.index(3));
    return ok[k];
  };
  for (std::size_t n = 0; n < layers; ++n) {
    const std::string id = "l" + std::to_string(n);
    const auto src = *pick(0);
    const auto c = nodes[src].channels;
    LayerSpec l;
    std::size_t out_c = c;
    switch (rng.index(8)) {
      case 0:
        out_c = 2;
        l = conv_layer(id, nodes[src].id, rng, c, out_c, 3, 1, 1);
        break;
      case 1:
        l = unary(id, LayerKind::relu, nodes[src].id);
        break;
      case 2:
        l = affine_layer(id, nodes[src].id, rng, c);
        break;
      case 3:
        l = pool_layer(id, LayerKind::max_pool, nodes[src].id, 1, 1);
        break;
      case 4:
        l = pool_layer(id, LayerKind::avg_pool, nodes[src].id, 1, 1);
        break;
      case 5: {
        const auto other = *pick(c);
        l = merge_layer(id, LayerKind::add, {nodes[src].id, nodes[other].id});
        ++uses[other];
        break;
      }
      case 6: {
        if (c != 2) {
          l = unary(id, LayerKind::relu, nodes[src].id);
          break;
        }
        const auto other = *pick(2);
        l = merge_layer(id, LayerKind::concat, {nodes[src].id, nodes[other].id}, 0);
        ++uses[other];
        out_c = 4;
        break;
      }
      default:
        out_c = 2;
        l = conv_layer(id, nodes[src].id, rng, c, out_c, 1);
        break;
    }
    if (allow_exclude && rng.coin(0.15)) l.exclude = true;
    ++uses[src];
    specs.push_back(std::move(l));
    nodes.push_back({id, out_c});
    uses.push_back(0);
  }
  // Reduce all sinks to one tensor: project each to 2 channels and sum.
  std::vector<std::string> sinks;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (uses[i] != 0) continue;
    std::string id = nodes[i].id;
    if (nodes[i].channels != 2) {
      specs.push_back(conv_layer(id + "_p", id, rng, nodes[i].channels, 2, 1));
      id += "_p";
    }
    sinks.push_back(id);
  }
  std::string last = sinks.empty() ? nodes.back().id : sinks.front();
  if (sinks.size() > 1) {
    specs.push_back(merge_layer("sink", LayerKind::add, sinks));
    last = "sink";
  }
  specs.push_back(output_layer(last));
  return NetworkGraph(std::move(specs));
}

}  // namespace evnet::test
