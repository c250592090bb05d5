// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "evnet/errors.hpp"
#include "evnet/tensor.hpp"
#include "evnet/tensor_io.hpp"
#include "support.hpp"

using namespace evnet;
using evnet::test::Rng;

namespace {

constexpr float kDelta = 0.05f;

DeltaPacket packet(std::vector<DeltaEntry> entries, std::size_t extent = 8) {
  return DeltaPacket::from_entries("p", 0, extent, std::move(entries));
}

}  // namespace

TEST_CASE("tensor_new fills every element") {
  const auto zeros = tensor_new({2, 3}, 0.0f);
  CHECK(zeros.size() == 6);
  for (auto v : zeros.values()) CHECK(v == 0.0f);

  const auto single = tensor_new({1}, 5.0f);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == 5.0f);

  const auto ones = tensor_new({2, 2, 2}, 1.0f);
  CHECK(ones.size() == 8);
  for (auto v : ones.values()) CHECK(v == 1.0f);
}

TEST_CASE("tensor_new rejects empty shapes and zero extents") {
  CHECK_THROWS_AS(tensor_new({}, 0.0f), ShapeError);
  CHECK_THROWS_AS(tensor_new({2, 0}, 0.0f), ShapeError);
}

TEST_CASE("tensors reject non-finite values and mismatched lengths") {
  CHECK_THROWS_AS(Tensor({2}, std::vector<float>{1.0f}), ShapeError);
  CHECK_THROWS_AS(Tensor({1}, std::vector<float>{NAN}), ShapeError);
  CHECK_THROWS_AS(Tensor({1}, std::numeric_limits<float>::infinity()), ShapeError);
}

TEST_CASE("delta_from_diff of equal tensors is empty") {
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    const auto x = rng.tensor({3, 4});
    for (float eps : {0.0f, 0.1f, 10.0f}) CHECK(delta_from_diff(x, x, eps).empty());
  }
}

TEST_CASE("delta_from_diff transmits a jump of 2 delta") {
  const Tensor before({2}, std::vector<float>{0.0f, 0.0f});
  const Tensor after({2}, std::vector<float>{0.0f, 2 * kDelta});
  const auto p = delta_from_diff(before, after, 0.0f);
  REQUIRE(p.size() == 1);
  CHECK(p.entries()[0].index == 1);
  CHECK(p.entries()[0].delta == 2 * kDelta);
}

TEST_CASE("delta_from_diff matches element-wise subtraction") {
  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    auto before = rng.tensor({4, 4});
    auto after = before;
    for (std::size_t i = 0; i < after.size(); ++i) {
      if (rng.coin()) after[i] = rng.uniform(-1.0f, 1.0f);
    }
    const auto p = delta_from_diff(before, after, 0.0f);
    std::size_t next = 0;
    for (std::size_t i = 0; i < before.size(); ++i) {
      const float diff = after[i] - before[i];
      if (diff == 0.0f) continue;
      REQUIRE(next < p.size());
      CHECK(p.entries()[next].index == i);
      CHECK(p.entries()[next].delta == diff);
      ++next;
    }
    CHECK(next == p.size());
  }
}

TEST_CASE("delta_from_diff honours eps strictly and checks shapes") {
  const Tensor before({3}, std::vector<float>{0.0f, 0.0f, 0.0f});
  const Tensor after({3}, std::vector<float>{0.5f, 0.25f, -0.75f});
  const auto p = delta_from_diff(before, after, 0.5f);
  REQUIRE(p.size() == 1);
  CHECK(p.entries()[0].index == 2);
  CHECK_THROWS_AS(delta_from_diff(before, tensor_new({4}, 0.0f), 0.0f), ShapeError);
  CHECK_THROWS_AS(delta_from_diff(before, after, -1.0f), ShapeError);
}

TEST_CASE("applying a diff packet reconstructs the target exactly") {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const auto before = rng.tensor({2, 3, 5});
    const auto after = rng.tensor({2, 3, 5});
    auto rebuilt = before;
    apply_delta(rebuilt, delta_from_diff(before, after, 0.0f));
    for (std::size_t i = 0; i < after.size(); ++i) {
      // before + (after - before) can differ from after by one rounding step.
      CHECK(rebuilt[i] == doctest::Approx(after[i]).epsilon(1e-6));
    }
  }
}

TEST_CASE("packets stay canonical") {
  DeltaPacket p("p", 0, 10);
  p.push_back(1, 0.5f);
  p.push_back(3, 0.0f);
  p.push_back(4, -0.5f);
  CHECK(p.size() == 2);
  CHECK_THROWS_AS(p.push_back(4, 1.0f), ShapeError);
  CHECK_THROWS_AS(p.push_back(10, 1.0f), ShapeError);

  const auto q = packet({{5, 1.0f}, {2, 0.5f}, {5, -1.0f}, {7, 0.0f}, {2, 0.25f}});
  REQUIRE(q.size() == 1);
  CHECK(q.entries()[0] == DeltaEntry{2, 0.75f});
  CHECK_THROWS_AS(packet({{8, 1.0f}}), ShapeError);
}

TEST_CASE("delta_merge identity, cancellation and metadata checks") {
  const auto p = packet({{1, 0.5f}, {3, 1.0f}});
  const DeltaPacket empty("p", 0, 8);
  CHECK(delta_merge(p, empty) == p);
  CHECK(delta_merge(empty, p) == p);
  CHECK(delta_merge(packet({{3, 1.0f}}), packet({{3, -1.0f}})).empty());

  CHECK_THROWS_AS(delta_merge(p, DeltaPacket("q", 0, 8)), RoutingError);
  CHECK_THROWS_AS(delta_merge(p, DeltaPacket("p", 1, 8)), RoutingError);
  CHECK_THROWS_AS(delta_merge(p, DeltaPacket("p", 0, 9)), RoutingError);
}

TEST_CASE("splitting a packet and merging the halves restores it") {
  Rng rng(4);
  for (int k = 0; k < 100; ++k) {
    const auto p = rng.packet(64, 0.3);
    DeltaPacket a("p", 0, 64), b("p", 0, 64);
    for (const auto& e : p.entries()) (rng.coin() ? a : b).push_back(e.index, e.delta);
    CHECK(delta_merge(a, b) == p);
  }
}

TEST_CASE("delta_merge is commutative and associative on disjoint-valued packets") {
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    const auto a = rng.packet(32, 0.4);
    const auto b = rng.packet(32, 0.4);
    const auto c = rng.packet(32, 0.4);
    CHECK(delta_merge(a, b) == delta_merge(b, a));
    const auto left = materialize(delta_merge(delta_merge(a, b), c), {32});
    const auto right = materialize(delta_merge(a, delta_merge(b, c)), {32});
    for (std::size_t i = 0; i < 32; ++i) CHECK(left[i] == doctest::Approx(right[i]).epsilon(1e-6));
  }
}

TEST_CASE("materialize places entries into a dense tensor") {
  const auto t = materialize(packet({{0, 1.0f}, {5, -2.0f}}), {2, 4});
  CHECK(t.shape() == Shape{2, 4});
  CHECK(t[0] == 1.0f);
  CHECK(t[5] == -2.0f);
  CHECK(t[1] == 0.0f);
  CHECK_THROWS_AS(materialize(packet({{0, 1.0f}}), {3}), ShapeError);
}

TEST_CASE("tensor files round-trip bit-exactly") {
  Rng rng(6);
  const auto t = rng.tensor({2, 3, 4});
  std::stringstream ss;
  write_tensor(ss, t);
  const auto bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "EVTS");
  CHECK(bytes.size() == 4 + 4 + 4 + 3 * 4 + 24 * 4);
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);  // little-endian version 1
  CHECK(read_tensor(ss) == t);
}

TEST_CASE("video files round-trip and reject mixed shapes") {
  Rng rng(7);
  const Video v{rng.tensor({1, 4, 4}), rng.tensor({1, 4, 4}), rng.tensor({1, 4, 4})};
  std::stringstream ss;
  write_video(ss, v);
  CHECK(ss.str().substr(0, 4) == "EVTV");
  CHECK(read_video(ss) == v);

  std::stringstream bad;
  CHECK_THROWS_AS(write_video(bad, Video{rng.tensor({2}), rng.tensor({3})}), ShapeError);
}

TEST_CASE("corrupt tensor files are rejected") {
  std::stringstream wrong_magic("EVTX\x01\x00\x00\x00");
  CHECK_THROWS_AS(read_tensor(wrong_magic), IoError);

  Rng rng(8);
  std::stringstream ss;
  write_tensor(ss, rng.tensor({4}));
  auto bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 2));
  CHECK_THROWS_AS(read_tensor(truncated), IoError);

  bytes[4] = 2;
  std::stringstream wrong_version(bytes);
  CHECK_THROWS_AS(read_tensor(wrong_version), IoError);
}
