// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "evnet/layers.hpp"

#include <algorithm>
#include <limits>

#include "evnet/errors.hpp"

namespace evnet {
namespace {

struct Chw {
  std::size_t c, h, w;
};

Chw as_chw(const Shape& s, const std::string& id) {
  if (s.size() != 3) throw ShapeError(id + ": expects [C,H,W], got " + shape_str(s));
  return {s[0], s[1], s[2]};
}

// Extent along axis 0 and the element count per slice of it. Rank-1 tensors
// have slices of size one.
std::pair<std::size_t, std::size_t> channel_split(const Shape& s) {
  const auto n = shape_numel(s);
  return {s[0], n / s[0]};
}

Tensor conv_dense(const LayerSpec& l, const Tensor& x, const Shape& out_shape) {
  const auto in = as_chw(x.shape(), l.id);
  const auto out = as_chw(out_shape, l.id);
  const auto& win = l.params.window;
  const auto& w = *l.params.weight;
  Tensor y(out_shape, 0.0f);
  for (std::size_t co = 0; co < out.c; ++co) {
    const float b = l.params.bias ? (*l.params.bias)[co] : 0.0f;
    for (std::size_t oy = 0; oy < out.h; ++oy) {
      for (std::size_t ox = 0; ox < out.w; ++ox) {
        float acc = 0.0f;
        for (std::size_t ci = 0; ci < in.c; ++ci) {
          for (std::size_t ky = 0; ky < win.kernel_h; ++ky) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * win.stride_h + ky) -
                            static_cast<std::ptrdiff_t>(win.pad_h);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.h)) continue;
            for (std::size_t kx = 0; kx < win.kernel_w; ++kx) {
              const auto ix = static_cast<std::ptrdiff_t>(ox * win.stride_w + kx) -
                              static_cast<std::ptrdiff_t>(win.pad_w);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.w)) continue;
              acc += w[((co * in.c + ci) * win.kernel_h + ky) * win.kernel_w + kx] *
                     x[(ci * in.h + static_cast<std::size_t>(iy)) * in.w +
                       static_cast<std::size_t>(ix)];
            }
          }
        }
        y[(co * out.h + oy) * out.w + ox] = acc + b;
      }
    }
  }
  return y;
}

Tensor pool_dense(const LayerSpec& l, const Tensor& x, const Shape& out_shape, bool is_max) {
  const auto in = as_chw(x.shape(), l.id);
  const auto out = as_chw(out_shape, l.id);
  const auto& win = l.params.window;
  const float inv = 1.0f / static_cast<float>(win.kernel_h * win.kernel_w);
  Tensor y(out_shape, 0.0f);
  for (std::size_t c = 0; c < out.c; ++c) {
    for (std::size_t oy = 0; oy < out.h; ++oy) {
      for (std::size_t ox = 0; ox < out.w; ++ox) {
        float acc = is_max ? -std::numeric_limits<float>::infinity() : 0.0f;
        for (std::size_t ky = 0; ky < win.kernel_h; ++ky) {
          for (std::size_t kx = 0; kx < win.kernel_w; ++kx) {
            const float v =
                x[(c * in.h + oy * win.stride_h + ky) * in.w + ox * win.stride_w + kx];
            acc = is_max ? std::max(acc, v) : acc + v * inv;
          }
        }
        y[(c * out.h + oy) * out.w + ox] = acc;
      }
    }
  }
  return y;
}

Tensor fc_dense(const LayerSpec& l, const Tensor& x) {
  const auto& w = *l.params.weight;
  const auto m = l.params.out_features;
  const auto n = x.size();
  Tensor y({m}, 0.0f);
  for (std::size_t i = 0; i < m; ++i) {
    float acc = 0.0f;
    for (std::size_t j = 0; j < n; ++j) acc += w[i * n + j] * x[j];
    y[i] = acc + (l.params.bias ? (*l.params.bias)[i] : 0.0f);
  }
  return y;
}

Tensor concat_dense(const LayerSpec& l, std::span<const Tensor* const> inputs,
                    const Shape& out_shape) {
  const auto axis = l.params.concat_axis;
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= out_shape[a];
  for (std::size_t a = axis + 1; a < out_shape.size(); ++a) inner *= out_shape[a];
  Tensor y(out_shape, 0.0f);
  std::size_t offset = 0;
  for (const auto* t : inputs) {
    const auto e = t->extent(axis);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t k = 0; k < e; ++k) {
        for (std::size_t i = 0; i < inner; ++i) {
          y[(o * out_shape[axis] + offset + k) * inner + i] = (*t)[(o * e + k) * inner + i];
        }
      }
    }
    offset += e;
  }
  return y;
}

std::vector<Shape> shapes_of(std::span<const Tensor* const> inputs) {
  std::vector<Shape> s;
  s.reserve(inputs.size());
  for (const auto* t : inputs) s.push_back(t->shape());
  return s;
}

// Sparse scatter target that coalesces contributions to the same output.
class ScatterBuffer {
 public:
  explicit ScatterBuffer(std::size_t n) : values_(n, 0.0f), marked_(n, 0) {}

  void add(std::size_t i, float v) {
    if (!marked_[i]) {
      marked_[i] = 1;
      touched_.push_back(i);
    }
    values_[i] += v;
  }

  DeltaPacket finish(const std::string& id, std::int64_t frame) {
    std::sort(touched_.begin(), touched_.end());
    DeltaPacket p(id, frame, values_.size());
    for (auto i : touched_) p.push_back(i, values_[i]);
    return p;
  }

 private:
  std::vector<float> values_;
  std::vector<char> marked_;
  std::vector<std::size_t> touched_;
};

// Output positions along one axis whose window covers input coordinate `pos`.
template <typename Fn>
void for_each_cover(std::size_t pos, std::size_t kernel, std::size_t stride, std::size_t pad,
                    std::size_t out_extent, Fn&& fn) {
  for (std::size_t k = 0; k < kernel; ++k) {
    const auto t = static_cast<std::ptrdiff_t>(pos + pad) - static_cast<std::ptrdiff_t>(k);
    if (t < 0 || t % static_cast<std::ptrdiff_t>(stride) != 0) continue;
    const auto o = static_cast<std::size_t>(t) / stride;
    if (o < out_extent) fn(o, k);
  }
}

}  // namespace

std::size_t dense_mac_count(const LayerSpec& layer, const std::vector<Shape>& input_shapes) {
  const auto out = infer_output_shape(layer, input_shapes);
  const auto& win = layer.params.window;
  switch (layer.kind) {
    case LayerKind::conv2d:
      return shape_numel(out) * input_shapes[0][0] * win.kernel_h * win.kernel_w;
    case LayerKind::fully_connected:
      return shape_numel(out) * shape_numel(input_shapes[0]);
    case LayerKind::avg_pool:
      return shape_numel(out) * win.kernel_h * win.kernel_w;
    case LayerKind::affine:
      return shape_numel(out);
    default:
      return 0;
  }
}

DenseResult dense_forward(const LayerSpec& layer, std::span<const Tensor* const> inputs) {
  const auto in_shapes = shapes_of(inputs);
  const auto out_shape = infer_output_shape(layer, in_shapes);
  DenseResult r;
  r.macs = dense_mac_count(layer, in_shapes);
  switch (layer.kind) {
    case LayerKind::input:
      throw ShapeError(layer.id + ": input layers have no forward pass");
    case LayerKind::output:
      r.output = *inputs[0];
      break;
    case LayerKind::conv2d:
      r.output = conv_dense(layer, *inputs[0], out_shape);
      break;
    case LayerKind::fully_connected:
      r.output = fc_dense(layer, *inputs[0]);
      break;
    case LayerKind::avg_pool:
      r.output = pool_dense(layer, *inputs[0], out_shape, false);
      break;
    case LayerKind::max_pool:
      r.output = pool_dense(layer, *inputs[0], out_shape, true);
      r.nonlinear_ops = shape_numel(out_shape) * layer.params.window.kernel_h *
                        layer.params.window.kernel_w;
      break;
    case LayerKind::affine: {
      r.output = *inputs[0];
      const auto [channels, per] = channel_split(out_shape);
      auto v = r.output.mutable_values();
      for (std::size_t c = 0; c < channels; ++c) {
        const float s = (*layer.params.scale)[c], b = (*layer.params.shift)[c];
        for (std::size_t i = c * per; i < (c + 1) * per; ++i) v[i] = v[i] * s + b;
      }
      break;
    }
    case LayerKind::add: {
      r.output = *inputs[0];
      auto v = r.output.mutable_values();
      for (std::size_t k = 1; k < inputs.size(); ++k) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += (*inputs[k])[i];
      }
      break;
    }
    case LayerKind::concat:
      r.output = concat_dense(layer, inputs, out_shape);
      break;
    case LayerKind::relu: {
      r.output = *inputs[0];
      for (auto& v : r.output.mutable_values()) v = apply_pointwise(PointwiseFn::relu, v);
      r.nonlinear_ops = r.output.size();
      break;
    }
  }
  return r;
}

DenseResult dense_forward(const LayerSpec& layer, const Tensor& input) {
  const Tensor* in[] = {&input};
  return dense_forward(layer, in);
}

DeltaResult delta_forward_linear(const LayerSpec& layer, const std::vector<Shape>& input_shapes,
                                 std::span<const DeltaPacket* const> inputs) {
  if (!is_linear(layer.kind) && layer.kind != LayerKind::output) {
    throw ClassificationError(layer.id + ": " + std::string(to_string(layer.kind)) +
                              " is not a linear layer");
  }
  if (inputs.size() != input_shapes.size()) {
    throw ShapeError(layer.id + ": got " + std::to_string(inputs.size()) + " packets for " +
                     std::to_string(input_shapes.size()) + " inputs");
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k]->extent() != shape_numel(input_shapes[k])) {
      throw ShapeError(layer.id + ": packet extent " + std::to_string(inputs[k]->extent()) +
                       " does not match input shape " + shape_str(input_shapes[k]));
    }
  }
  const auto out_shape = infer_output_shape(layer, input_shapes);
  const auto out_n = shape_numel(out_shape);
  const auto frame = inputs.empty() ? 0 : inputs[0]->frame_index();
  DeltaResult r;

  switch (layer.kind) {
    case LayerKind::output: {
      r.output = *inputs[0];
      r.output.set_layer_id(layer.id);
      break;
    }
    case LayerKind::conv2d: {
      const auto in = as_chw(input_shapes[0], layer.id);
      const auto out = as_chw(out_shape, layer.id);
      const auto& win = layer.params.window;
      const auto& w = *layer.params.weight;
      ScatterBuffer acc(out_n);
      for (const auto& e : inputs[0]->entries()) {
        const auto ci = e.index / (in.h * in.w);
        const auto y = (e.index / in.w) % in.h;
        const auto x = e.index % in.w;
        for_each_cover(y, win.kernel_h, win.stride_h, win.pad_h, out.h, [&](auto oy, auto ky) {
          for_each_cover(x, win.kernel_w, win.stride_w, win.pad_w, out.w, [&](auto ox, auto kx) {
            for (std::size_t co = 0; co < out.c; ++co) {
              acc.add((co * out.h + oy) * out.w + ox,
                      w[((co * in.c + ci) * win.kernel_h + ky) * win.kernel_w + kx] * e.delta);
              ++r.macs;
            }
          });
        });
      }
      r.output = acc.finish(layer.id, frame);
      break;
    }
    case LayerKind::avg_pool: {
      const auto in = as_chw(input_shapes[0], layer.id);
      const auto out = as_chw(out_shape, layer.id);
      const auto& win = layer.params.window;
      const float inv = 1.0f / static_cast<float>(win.kernel_h * win.kernel_w);
      ScatterBuffer acc(out_n);
      for (const auto& e : inputs[0]->entries()) {
        const auto c = e.index / (in.h * in.w);
        const auto y = (e.index / in.w) % in.h;
        const auto x = e.index % in.w;
        for_each_cover(y, win.kernel_h, win.stride_h, 0, out.h, [&](auto oy, auto) {
          for_each_cover(x, win.kernel_w, win.stride_w, 0, out.w, [&](auto ox, auto) {
            acc.add((c * out.h + oy) * out.w + ox, e.delta * inv);
            ++r.macs;
          });
        });
      }
      r.output = acc.finish(layer.id, frame);
      break;
    }
    case LayerKind::fully_connected: {
      const auto& w = *layer.params.weight;
      const auto n = shape_numel(input_shapes[0]);
      ScatterBuffer acc(out_n);
      for (const auto& e : inputs[0]->entries()) {
        for (std::size_t i = 0; i < out_n; ++i) acc.add(i, w[i * n + e.index] * e.delta);
        r.macs += out_n;
      }
      r.output = acc.finish(layer.id, frame);
      break;
    }
    case LayerKind::affine: {
      const auto [channels, per] = channel_split(out_shape);
      (void)channels;
      r.output = DeltaPacket(layer.id, frame, out_n);
      for (const auto& e : inputs[0]->entries()) {
        r.output.push_back(e.index, (*layer.params.scale)[e.index / per] * e.delta);
        ++r.macs;
      }
      break;
    }
    case LayerKind::add: {
      ScatterBuffer acc(out_n);
      for (const auto* p : inputs) {
        for (const auto& e : p->entries()) acc.add(e.index, e.delta);
      }
      r.output = acc.finish(layer.id, frame);
      break;
    }
    case LayerKind::concat: {
      const auto axis = layer.params.concat_axis;
      std::size_t outer = 1, inner = 1;
      for (std::size_t a = 0; a < axis; ++a) outer *= out_shape[a];
      for (std::size_t a = axis + 1; a < out_shape.size(); ++a) inner *= out_shape[a];
      (void)outer;
      std::vector<DeltaEntry> entries;
      std::size_t offset = 0;
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const auto e_ax = input_shapes[k][axis];
        for (const auto& e : inputs[k]->entries()) {
          const auto i = e.index % inner;
          const auto ax = (e.index / inner) % e_ax;
          const auto o = e.index / (inner * e_ax);
          entries.push_back({(o * out_shape[axis] + offset + ax) * inner + i, e.delta});
        }
        offset += e_ax;
      }
      r.output = DeltaPacket::from_entries(layer.id, frame, out_n, std::move(entries));
      break;
    }
    default:
      throw ClassificationError(layer.id + ": no delta rule");
  }
  return r;
}

DeltaResult delta_forward_linear(const LayerSpec& layer, const Shape& input_shape,
                                 const DeltaPacket& input) {
  const DeltaPacket* in[] = {&input};
  return delta_forward_linear(layer, std::vector<Shape>{input_shape}, in);
}

float apply_pointwise(PointwiseFn fn, float a) {
  switch (fn) {
    case PointwiseFn::relu: return a > 0.0f ? a : 0.0f;
    case PointwiseFn::identity: return a;
  }
  return a;
}

std::vector<float> pointwise_recompute(PointwiseFn fn, std::span<const float> a_values) {
  std::vector<float> out(a_values.size());
  std::transform(a_values.begin(), a_values.end(), out.begin(),
                 [fn](float a) { return apply_pointwise(fn, a); });
  return out;
}

MaxPoolEventResult maxpool_event(const LayerSpec& layer, const Tensor& buffer,
                                 std::span<const std::size_t> touched) {
  if (layer.kind != LayerKind::max_pool) {
    throw ClassificationError(layer.id + ": maxpool_event needs a max_pool layer");
  }
  const auto in = as_chw(buffer.shape(), layer.id);
  const auto out_shape = infer_output_shape(layer, {buffer.shape()});
  const auto out = as_chw(out_shape, layer.id);
  const auto& win = layer.params.window;

  std::vector<std::size_t> windows;
  for (auto idx : touched) {
    if (idx >= buffer.size()) {
      throw ShapeError(layer.id + ": touched index " + std::to_string(idx) +
                       " outside buffer of " + std::to_string(buffer.size()));
    }
    const auto c = idx / (in.h * in.w);
    const auto y = (idx / in.w) % in.h;
    const auto x = idx % in.w;
    for_each_cover(y, win.kernel_h, win.stride_h, 0, out.h, [&](auto oy, auto) {
      for_each_cover(x, win.kernel_w, win.stride_w, 0, out.w,
                     [&](auto ox, auto) { windows.push_back((c * out.h + oy) * out.w + ox); });
    });
  }
  std::sort(windows.begin(), windows.end());
  windows.erase(std::unique(windows.begin(), windows.end()), windows.end());

  MaxPoolEventResult r;
  r.updates.reserve(windows.size());
  for (auto o : windows) {
    const auto c = o / (out.h * out.w);
    const auto oy = (o / out.w) % out.h;
    const auto ox = o % out.w;
    float m = -std::numeric_limits<float>::infinity();
    for (std::size_t ky = 0; ky < win.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < win.kernel_w; ++kx) {
        m = std::max(m, buffer[(c * in.h + oy * win.stride_h + ky) * in.w +
                               ox * win.stride_w + kx]);
      }
    }
    r.comparisons += win.kernel_h * win.kernel_w;
    r.updates.push_back({o, m});
  }
  return r;
}

MaxPoolEventResult maxpool_event(const LayerSpec& layer, const Tensor& buffer,
                                 const DeltaPacket& din) {
  std::vector<std::size_t> touched;
  touched.reserve(din.size());
  for (const auto& e : din.entries()) touched.push_back(e.index);
  return maxpool_event(layer, buffer, touched);
}

}  // namespace evnet
