// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "evnet/scene.hpp"

#include <algorithm>
#include <random>

#include <json.hpp>

#include "evnet/errors.hpp"

namespace evnet {
namespace {

// Uniform double in [0, 1) from the top 53 bits; portable across standard
// libraries, unlike std::uniform_real_distribution.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct SpritePath {
  std::vector<std::int64_t> x, y;
  std::vector<std::size_t> reversals;
};

std::int64_t sprite_height(const SceneSpec& s) {
  return s.sprite == SpriteKind::bar ? static_cast<std::int64_t>(s.height)
                                     : static_cast<std::int64_t>(s.sprite_size);
}

void validate(const SceneSpec& s) {
  if (s.height == 0 || s.width == 0 || s.frames == 0) {
    throw SpecError("scene extents and frame count must be >= 1");
  }
  if (s.sprite == SpriteKind::none) return;
  if (s.sprite_size == 0) throw SpecError("sprite size must be >= 1");
  if (s.sprite_size > s.width || static_cast<std::size_t>(sprite_height(s)) > s.height) {
    throw SpecError("sprite of size " + std::to_string(s.sprite_size) + " does not fit a " +
                    std::to_string(s.height) + "x" + std::to_string(s.width) + " frame");
  }
}

// Bounces one coordinate inside [0, max_pos].
void advance(std::int64_t& pos, std::int64_t& vel, std::int64_t max_pos, bool& reversed) {
  pos += vel;
  while (pos < 0 || pos > max_pos) {
    reversed = true;
    vel = -vel;
    pos = pos < 0 ? -pos : 2 * max_pos - pos;
  }
}

SpritePath sprite_path(const SceneSpec& s, std::mt19937_64& rng) {
  SpritePath p;
  const auto max_x = static_cast<std::int64_t>(s.width - s.sprite_size);
  const auto max_y = static_cast<std::int64_t>(s.height) - sprite_height(s);
  std::int64_t x = s.sprite_x, y = s.sprite_y, vx = s.velocity_x, vy = s.velocity_y;
  if (s.random_start) {
    x = static_cast<std::int64_t>(unit(rng) * static_cast<double>(max_x + 1));
    y = static_cast<std::int64_t>(unit(rng) * static_cast<double>(max_y + 1));
    if (unit(rng) < 0.5) vx = -vx;
    if (unit(rng) < 0.5) vy = -vy;
  }
  if (x < 0 || x > max_x || y < 0 || y > max_y) throw SpecError("sprite starts outside the frame");
  for (std::size_t t = 0; t < s.frames; ++t) {
    if (t > 0) {
      bool reversed = false;
      advance(x, vx, max_x, reversed);
      advance(y, vy, max_y, reversed);
      if (reversed) p.reversals.push_back(t);
    }
    p.x.push_back(x);
    p.y.push_back(y);
  }
  return p;
}

std::int64_t wrap(std::int64_t v, std::int64_t n) { return ((v % n) + n) % n; }

}  // namespace

Video scene_generate(const SceneSpec& spec, std::uint64_t seed) {
  validate(spec);
  std::mt19937_64 rng(seed);
  SpritePath path;
  if (spec.sprite != SpriteKind::none) path = sprite_path(spec, rng);
  const auto h = static_cast<std::int64_t>(spec.height);
  const auto w = static_cast<std::int64_t>(spec.width);

  Video frames;
  frames.reserve(spec.frames);
  std::vector<float> world(spec.height * spec.width);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        float v = spec.background_level;
        if (spec.background == Background::gradient && w > 1) {
          v += (spec.background_level_end - spec.background_level) * static_cast<float>(x) /
               static_cast<float>(w - 1);
        }
        world[static_cast<std::size_t>(y * w + x)] = v;
      }
    }
    if (spec.sprite != SpriteKind::none) {
      const auto sh = sprite_height(spec);
      const auto sw = static_cast<std::int64_t>(spec.sprite_size);
      for (std::int64_t y = path.y[t]; y < path.y[t] + sh; ++y) {
        for (std::int64_t x = path.x[t]; x < path.x[t] + sw; ++x) {
          world[static_cast<std::size_t>(y * w + x)] = spec.sprite_level;
        }
      }
    }
    const auto ti = static_cast<std::int64_t>(t);
    std::vector<float> pixels(world.size());
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        const auto sy = wrap(y - spec.pan_y * ti, h);
        const auto sx = wrap(x - spec.pan_x * ti, w);
        float v = world[static_cast<std::size_t>(sy * w + sx)] + spec.drift * static_cast<float>(t);
        if (spec.noise > 0.0f) {
          v += static_cast<float>((2.0 * unit(rng) - 1.0) * spec.noise);
        }
        pixels[static_cast<std::size_t>(y * w + x)] = std::clamp(v, 0.0f, 1.0f);
      }
    }
    frames.emplace_back(Shape{1, spec.height, spec.width}, std::move(pixels));
  }
  return frames;
}

std::vector<std::size_t> scene_reversal_frames(const SceneSpec& spec, std::uint64_t seed) {
  validate(spec);
  if (spec.sprite == SpriteKind::none) return {};
  std::mt19937_64 rng(seed);
  return sprite_path(spec, rng).reversals;
}

SceneSpec scene_preset(const std::string& name) {
  SceneSpec s;
  s.random_start = true;
  if (name == "static") return s;
  if (name == "moving-sprite") {
    s.velocity_x = 1;
    return s;
  }
  if (name == "drift-sprite") {
    s.velocity_x = 1;
    s.sprite_level = 0.5f;
    s.drift = 0.02f;
    return s;
  }
  if (name == "pan") {
    s.background = Background::gradient;
    s.sprite = SpriteKind::none;
    s.pan_x = 1;
    s.random_start = false;
    return s;
  }
  throw SpecError("unknown scene preset '" + name + "'");
}

namespace {

using json = nlohmann::json;

const char* to_name(Background b) { return b == Background::constant ? "constant" : "gradient"; }
const char* to_name(SpriteKind k) {
  return k == SpriteKind::none ? "none" : k == SpriteKind::square ? "square" : "bar";
}

}  // namespace

SceneSpec scene_from_json(const std::string& text) {
  SceneSpec s;
  try {
    const auto j = json::parse(text);
    s.height = j.value("height", s.height);
    s.width = j.value("width", s.width);
    s.frames = j.value("frames", s.frames);
    const auto bg = j.value("background", std::string(to_name(s.background)));
    if (bg == "constant") {
      s.background = Background::constant;
    } else if (bg == "gradient") {
      s.background = Background::gradient;
    } else {
      throw SpecError("unknown background '" + bg + "'");
    }
    s.background_level = j.value("background_level", s.background_level);
    s.background_level_end = j.value("background_level_end", s.background_level_end);
    const auto sprite = j.value("sprite", std::string(to_name(s.sprite)));
    if (sprite == "none") {
      s.sprite = SpriteKind::none;
    } else if (sprite == "square") {
      s.sprite = SpriteKind::square;
    } else if (sprite == "bar") {
      s.sprite = SpriteKind::bar;
    } else {
      throw SpecError("unknown sprite '" + sprite + "'");
    }
    s.sprite_size = j.value("sprite_size", s.sprite_size);
    s.sprite_level = j.value("sprite_level", s.sprite_level);
    s.sprite_x = j.value("sprite_x", s.sprite_x);
    s.sprite_y = j.value("sprite_y", s.sprite_y);
    if (j.contains("velocity")) {
      s.velocity_x = j.at("velocity").at(0).get<std::int64_t>();
      s.velocity_y = j.at("velocity").at(1).get<std::int64_t>();
    }
    s.random_start = j.value("random_start", s.random_start);
    s.drift = j.value("drift", s.drift);
    if (j.contains("pan")) {
      s.pan_x = j.at("pan").at(0).get<std::int64_t>();
      s.pan_y = j.at("pan").at(1).get<std::int64_t>();
    }
    s.noise = j.value("noise", s.noise);
  } catch (const json::exception& e) {
    throw SpecError(std::string("bad scene document: ") + e.what());
  }
  return s;
}

std::string scene_to_json(const SceneSpec& s) {
  json j{{"height", s.height},
         {"width", s.width},
         {"frames", s.frames},
         {"background", to_name(s.background)},
         {"background_level", s.background_level},
         {"background_level_end", s.background_level_end},
         {"sprite", to_name(s.sprite)},
         {"sprite_size", s.sprite_size},
         {"sprite_level", s.sprite_level},
         {"sprite_x", s.sprite_x},
         {"sprite_y", s.sprite_y},
         {"velocity", {s.velocity_x, s.velocity_y}},
         {"random_start", s.random_start},
         {"drift", s.drift},
         {"pan", {s.pan_x, s.pan_y}},
         {"noise", s.noise}};
  return j.dump(2);
}

}  // namespace evnet
