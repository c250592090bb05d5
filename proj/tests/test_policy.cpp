// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "evnet/errors.hpp"
#include "evnet/policy.hpp"
#include "support.hpp"

using namespace evnet;
using evnet::test::Rng;

namespace {

PolicyConfig threshold(float h) {
  PolicyConfig p;
  p.kind = PolicyKind::threshold;
  p.h = h;
  return p;
}

std::vector<std::size_t> all(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

TEST_CASE("threshold fires strictly above h") {
  const Tensor d({2}, std::vector<float>{0.06f, 0.05f});
  const auto r = policy_threshold(d, all(2), threshold(0.05f));
  CHECK(r.fire == std::vector<std::size_t>{0});
  CHECK(r.evaluations == 2);
}

TEST_CASE("h = 0 fires every touched nonzero difference") {
  PolicyConfig p;
  p.kind = PolicyKind::exact_h0;
  const Tensor d({5}, std::vector<float>{0.0f, 1e-9f, -0.3f, 0.0f, 2.0f});
  const std::vector<std::size_t> touched{0, 1, 2, 4};
  CHECK(policy_apply(d, touched, p).fire == std::vector<std::size_t>{1, 2, 4});
}

TEST_CASE("exact_h0 mask equals the touched nonzero set") {
  Rng rng(1);
  PolicyConfig p;
  p.kind = PolicyKind::exact_h0;
  for (int trial = 0; trial < 100; ++trial) {
    auto d = rng.tensor({3, 4, 4});
    std::vector<std::size_t> touched, expect;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (rng.coin(0.3)) d[i] = 0.0f;
      if (rng.coin(0.5)) {
        touched.push_back(i);
        if (d[i] != 0.0f) expect.push_back(i);
      }
    }
    CHECK(policy_apply(d, touched, p).fire == expect);
  }
}

TEST_CASE("untouched neurons are never evaluated or fired") {
  Rng rng(2);
  const auto d = rng.tensor({2, 4, 4}, -1.0f, 1.0f);
  const std::vector<std::size_t> touched{3, 17};
  const auto r = policy_threshold(d, touched, threshold(0.0f));
  CHECK(r.evaluations == 2);
  for (auto i : r.fire) CHECK((i == 3 || i == 17));
  CHECK(policy_threshold(d, {}, threshold(0.0f)).fire.empty());
  CHECK(policy_threshold(d, {}, threshold(0.0f)).evaluations == 0);
}

TEST_CASE("per-channel gamma divides the threshold") {
  const Tensor d({2, 1, 1}, std::vector<float>{0.04f, 0.04f});
  const std::vector<float> gamma{1.0f, 2.0f};
  const auto r = policy_threshold(d, all(2), threshold(0.06f), gamma);
  CHECK(r.fire == std::vector<std::size_t>{1});  // h/2 = 0.03 < 0.04
  CHECK(neuron_threshold(threshold(0.06f), gamma, d.shape(), 1) == doctest::Approx(0.03f));
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(threshold(-0.1f).validate(), ConfigError);
  CHECK_THROWS_AS(policy_threshold(Tensor({1}, 0.0f), all(1), threshold(-0.1f)), ConfigError);
  PolicyConfig exact;
  exact.kind = PolicyKind::exact_h0;
  exact.h = 0.1f;
  CHECK_THROWS_AS(exact.validate(), ConfigError);
  PolicyConfig chunk;
  chunk.kind = PolicyKind::chunked_spatial;
  chunk.h = 0.1f;
  chunk.chunk_h = 0;
  CHECK_THROWS_AS(chunk.validate(), ConfigError);
  chunk.chunk_h = 2;
  chunk.chunk_w = 2;
  chunk.channel_scale["conv"] = {1.0f};
  CHECK_THROWS_AS(chunk.validate(), ConfigError);
  auto scaled = threshold(0.1f);
  scaled.channel_scale["conv"] = {0.0f};
  CHECK_THROWS_AS(scaled.validate(), ConfigError);
  CHECK_THROWS_AS(policy_kind_from_string("global_top_n"), ConfigError);
}

TEST_CASE("default chunk thresholds scale with the chunk side") {
  PolicyConfig p;
  p.kind = PolicyKind::chunked_spatial;
  p.h = 0.05f;
  for (std::size_t side : {1, 2, 4, 8}) {
    p.chunk_h = p.chunk_w = side;
    CHECK(p.effective_chunk_threshold() == doctest::Approx(0.05 / std::sqrt(double(side))));
  }
  p.chunk_threshold = 0.01f;
  CHECK(p.effective_chunk_threshold() == doctest::Approx(0.01));
  PolicyConfig c;
  c.kind = PolicyKind::chunked_channel;
  c.h = 0.02f;
  CHECK(c.effective_chunk_threshold() == doctest::Approx(0.02));
}

TEST_CASE("a 2x2 chunk fires as a whole when its mean exceeds the threshold") {
  PolicyConfig p;
  p.kind = PolicyKind::chunked_spatial;
  p.chunk_h = p.chunk_w = 2;
  p.chunk_threshold = 0.04f;
  const Tensor d({1, 2, 2}, std::vector<float>{0.2f, 0.0f, 0.0f, 0.0f});
  const std::vector<std::size_t> touched{0};
  const auto r = policy_chunked(d, touched, p);
  CHECK(r.fire == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(r.extra_loads == 3);

  p.chunk_threshold = 0.05f;  // mean 0.05 is not strictly above
  CHECK(policy_chunked(d, touched, p).fire.empty());
}

TEST_CASE("chunked policies skip untouched chunks") {
  PolicyConfig p;
  p.kind = PolicyKind::chunked_spatial;
  p.chunk_h = p.chunk_w = 2;
  p.h = 0.0f;
  const Tensor d({1, 4, 4}, 1.0f);
  const auto r = policy_chunked(d, {}, p);
  CHECK(r.fire.empty());
  CHECK(r.evaluations == 0);
  CHECK(r.extra_loads == 0);

  const std::vector<std::size_t> touched{15};
  const auto one = policy_chunked(d, touched, p);
  CHECK(one.fire == std::vector<std::size_t>{10, 11, 14, 15});
  CHECK(one.evaluations == 1);
}

TEST_CASE("channel chunks fire a whole channel") {
  PolicyConfig p;
  p.kind = PolicyKind::chunked_channel;
  p.h = 0.02f;
  std::vector<float> v(2 * 3 * 3, 0.0f);
  for (std::size_t i = 9; i < 18; ++i) v[i] = 0.03f;
  const Tensor d({2, 3, 3}, v);
  const std::vector<std::size_t> touched{0, 10};
  const auto r = policy_chunked(d, touched, p);
  std::vector<std::size_t> expect(9);
  std::iota(expect.begin(), expect.end(), std::size_t{9});
  CHECK(r.fire == expect);
}

TEST_CASE("edge chunks may be partial; oversized chunks are rejected") {
  PolicyConfig p;
  p.kind = PolicyKind::chunked_spatial;
  p.chunk_h = p.chunk_w = 2;
  p.h = 0.0f;
  const Tensor d({1, 3, 3}, 1.0f);
  const std::vector<std::size_t> corner{8};
  CHECK(policy_chunked(d, corner, p).fire == std::vector<std::size_t>{8});
  p.chunk_h = p.chunk_w = 4;
  CHECK_THROWS_AS(policy_chunked(d, corner, p), ConfigError);
}

TEST_CASE("rank-1 tensors are chunked as [N,1,1]") {
  PolicyConfig p;
  p.kind = PolicyKind::chunked_channel;
  p.h = 0.1f;
  const Tensor d({3}, std::vector<float>{0.2f, 0.05f, 0.3f});
  const std::vector<std::size_t> touched{0, 1, 2};
  CHECK(policy_chunked(d, touched, p).fire == std::vector<std::size_t>{0, 2});
  p.kind = PolicyKind::chunked_spatial;
  p.chunk_h = p.chunk_w = 2;
  CHECK_THROWS_AS(policy_chunked(d, touched, p), ConfigError);
}

TEST_CASE("masks stay inside touched chunks") {
  Rng rng(3);
  PolicyConfig p;
  p.kind = PolicyKind::chunked_spatial;
  p.h = 0.05f;
  for (int trial = 0; trial < 100; ++trial) {
    p.chunk_h = 1 + rng.index(3);
    p.chunk_w = 1 + rng.index(3);
    const auto d = rng.tensor({2, 6, 6}, -0.1f, 0.1f);
    std::vector<std::size_t> touched;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (rng.coin(0.1)) touched.push_back(i);
    }
    auto chunk_of = [&](std::size_t i) {
      const auto c = i / 36, y = (i / 6) % 6, x = i % 6;
      return std::tuple{c, y / p.chunk_h, x / p.chunk_w};
    };
    const auto r = policy_chunked(d, touched, p);
    CHECK(std::is_sorted(r.fire.begin(), r.fire.end()));
    for (auto i : r.fire) {
      const bool inside = std::any_of(touched.begin(), touched.end(),
                                      [&](auto t) { return chunk_of(t) == chunk_of(i); });
      CHECK(inside);
    }
  }
}
