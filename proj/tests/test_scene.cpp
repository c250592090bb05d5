// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evnet/errors.hpp"
#include "evnet/scene.hpp"

using namespace evnet;

namespace {

constexpr float kDelta = 0.05f;

SceneSpec still() {
  SceneSpec s;
  s.height = s.width = 12;
  s.frames = 20;
  s.sprite_size = 4;
  s.sprite_x = 3;
  s.sprite_y = 2;
  return s;
}

float at(const Tensor& t, std::size_t w, std::int64_t y, std::int64_t x) {
  return t[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
}

}  // namespace

TEST_CASE("a scene without motion, drift or noise is static") {
  const auto v = scene_generate(still(), 0);
  REQUIRE(v.size() == 20);
  CHECK(v.front().shape() == Shape{1, 12, 12});
  for (const auto& f : v) CHECK(f == v.front());
  CHECK(scene_reversal_frames(still(), 0).empty());
}

TEST_CASE("drift adds a fixed increment per frame") {
  auto spec = still();
  spec.sprite_level = 0.5f;
  spec.drift = 0.1f * kDelta;
  const auto v = scene_generate(spec, 0);
  for (std::size_t t = 0; t < v.size(); ++t) {
    for (std::size_t i = 0; i < v[t].size(); ++i) {
      CHECK(v[t][i] == doctest::Approx(v[0][i] + 0.1f * kDelta * float(t)).epsilon(1e-6));
    }
  }
}

TEST_CASE("a pan of (1, 0) translates frame 0 with wrap-around") {
  auto spec = still();
  spec.background = Background::gradient;
  spec.pan_x = 1;
  const auto v = scene_generate(spec, 0);
  const std::int64_t w = 12;
  for (std::size_t t = 0; t < v.size(); ++t) {
    for (std::int64_t y = 0; y < 12; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        const auto src = ((x - std::int64_t(t)) % w + w) % w;
        CHECK(at(v[t], 12, y, x) == at(v[0], 12, y, src));
      }
    }
  }
}

TEST_CASE("scenes are deterministic per seed and clamped") {
  auto spec = still();
  spec.noise = 0.3f;
  spec.drift = 0.1f;
  spec.velocity_x = 1;
  spec.random_start = true;
  const auto a = scene_generate(spec, 7);
  const auto b = scene_generate(spec, 7);
  CHECK(a == b);
  CHECK_FALSE(a == scene_generate(spec, 8));
  for (const auto& f : a) {
    for (auto x : f.values()) {
      CHECK(x >= 0.0f);
      CHECK(x <= 1.0f);
    }
  }
}

TEST_CASE("a moving sprite bounces off the borders") {
  auto spec = still();
  spec.velocity_x = 2;
  spec.frames = 12;
  const auto v = scene_generate(spec, 0);
  const auto rev = scene_reversal_frames(spec, 0);
  REQUIRE_FALSE(rev.empty());
  CHECK(rev.front() == 3);  // x: 3, 5, 7, 8 (clamped at 12 - 4) then back
  CHECK_FALSE(v[1] == v[0]);
}

TEST_CASE("bars span the full height") {
  auto spec = still();
  spec.sprite = SpriteKind::bar;
  spec.sprite_y = 0;
  spec.sprite_size = 2;
  spec.sprite_level = 1.0f;
  const auto f = scene_generate(spec, 0).front();
  for (std::int64_t y = 0; y < 12; ++y) {
    CHECK(at(f, 12, y, 3) == 1.0f);
    CHECK(at(f, 12, y, 4) == 1.0f);
    CHECK(at(f, 12, y, 5) == doctest::Approx(0.2f));
  }
}

TEST_CASE("invalid scenes raise SpecError") {
  auto big = still();
  big.sprite_size = 13;
  CHECK_THROWS_AS(scene_generate(big, 0), SpecError);
  auto outside = still();
  outside.sprite_x = 10;
  CHECK_THROWS_AS(scene_generate(outside, 0), SpecError);
  auto empty = still();
  empty.frames = 0;
  CHECK_THROWS_AS(scene_generate(empty, 0), SpecError);
  CHECK_THROWS_AS(scene_preset("sintel"), SpecError);
  CHECK_THROWS_AS(scene_from_json("{\"sprite\": \"circle\"}"), SpecError);
  CHECK_THROWS_AS(scene_from_json("[1, 2]"), SpecError);
}

TEST_CASE("scene specs round-trip through JSON") {
  for (const char* name : {"static", "moving-sprite", "drift-sprite", "pan"}) {
    const auto spec = scene_preset(name);
    const auto back = scene_from_json(scene_to_json(spec));
    CHECK(scene_generate(back, 3) == scene_generate(spec, 3));
    CHECK(scene_to_json(back) == scene_to_json(spec));
  }
}
