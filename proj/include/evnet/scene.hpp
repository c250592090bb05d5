// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic video: a background, one moving sprite, a global
// intensity drift, whole-scene panning and additive noise.
//
// Frame t is built as
//   1. the world: background plus the sprite at its position for frame t
//      (the sprite bounces off the frame borders);
//   2. panned: pixel (y, x) takes world pixel ((y - pan_y*t) mod H,
//      (x - pan_x*t) mod W), so content leaving one edge re-enters on the
//      opposite edge;
//   3. plus drift * t, plus uniform noise in [-noise, noise];
//   4. clamped to [0, 1].

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evnet/tensor_io.hpp"

namespace evnet {

enum class Background { constant, gradient };
enum class SpriteKind { none, square, bar };

struct SceneSpec {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t frames = 40;

  Background background = Background::constant;
  float background_level = 0.2f;
  // Right-edge level of a horizontal gradient background.
  float background_level_end = 0.8f;

  SpriteKind sprite = SpriteKind::square;
  // Square side, or bar width (bars span the full height).
  std::size_t sprite_size = 6;
  float sprite_level = 0.9f;
  std::int64_t sprite_x = 0;
  std::int64_t sprite_y = 0;
  std::int64_t velocity_x = 0;
  std::int64_t velocity_y = 0;
  // Draw the start position (and velocity signs) from the seed.
  bool random_start = false;

  float drift = 0.0f;
  std::int64_t pan_x = 0;
  std::int64_t pan_y = 0;
  float noise = 0.0f;
};

/// Frames of shape [1, H, W]. Throws SpecError for empty extents, a sprite
/// larger than the frame or a start position outside it.
Video scene_generate(const SceneSpec& spec, std::uint64_t seed);

/// Frame indices at which the sprite bounced off a border.
std::vector<std::size_t> scene_reversal_frames(const SceneSpec& spec, std::uint64_t seed);

/// Named scenes used by the benchmarks: "static", "moving-sprite",
/// "drift-sprite", "pan". Throws SpecError for unknown names.
SceneSpec scene_preset(const std::string& name);

SceneSpec scene_from_json(const std::string& text);
std::string scene_to_json(const SceneSpec& spec);

}  // namespace evnet
