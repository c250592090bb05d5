// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "evnet/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "evnet/errors.hpp"

namespace evnet {
namespace {

constexpr std::array<char, 4> kTensorMagic{'E', 'V', 'T', 'S'};
constexpr std::array<char, 4> kVideoMagic{'E', 'V', 'T', 'V'};

// Guards against absurd headers in corrupt files.
constexpr std::uint32_t kMaxRank = 8;

void put_u32(std::ostream& os, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char bytes[4];
  if (!is.read(reinterpret_cast<char*>(bytes), 4)) throw IoError("unexpected end of tensor data");
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void put_f32(std::ostream& os, float f) { put_u32(os, std::bit_cast<std::uint32_t>(f)); }

float get_f32(std::istream& is) { return std::bit_cast<float>(get_u32(is)); }

void expect_magic(std::istream& is, const std::array<char, 4>& magic) {
  std::array<char, 4> got{};
  if (!is.read(got.data(), 4)) throw IoError("unexpected end of data reading magic");
  if (got != magic) {
    throw IoError("bad magic '" + std::string(got.data(), 4) + "', expected '" +
                  std::string(magic.data(), 4) + "'");
  }
  const auto version = get_u32(is);
  if (version != kTensorFileVersion) {
    throw IoError("unsupported file version " + std::to_string(version));
  }
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
  os.write(kTensorMagic.data(), 4);
  put_u32(os, kTensorFileVersion);
  put_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (auto e : t.shape()) put_u32(os, static_cast<std::uint32_t>(e));
  for (float v : t.values()) put_f32(os, v);
  if (!os) throw IoError("failed writing tensor");
}

Tensor read_tensor(std::istream& is) {
  expect_magic(is, kTensorMagic);
  const auto rank = get_u32(is);
  if (rank == 0 || rank > kMaxRank) throw IoError("invalid tensor rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& e : shape) e = get_u32(is);
  const auto n = shape_numel(shape);
  std::vector<float> values(n);
  for (auto& v : values) v = get_f32(is);
  return Tensor(std::move(shape), std::move(values));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_tensor(os, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open tensor file " + path.string());
  return read_tensor(is);
}

void write_video(std::ostream& os, const Video& frames) {
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].shape() != frames[0].shape()) {
      throw ShapeError("video frame " + std::to_string(i) + " has shape " +
                       shape_str(frames[i].shape()) + ", expected " +
                       shape_str(frames[0].shape()));
    }
  }
  os.write(kVideoMagic.data(), 4);
  put_u32(os, kTensorFileVersion);
  put_u32(os, static_cast<std::uint32_t>(frames.size()));
  for (const auto& f : frames) write_tensor(os, f);
}

Video read_video(std::istream& is) {
  expect_magic(is, kVideoMagic);
  const auto count = get_u32(is);
  Video frames;
  frames.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    frames.push_back(read_tensor(is));
    if (frames.back().shape() != frames.front().shape()) {
      throw ShapeError("video frame " + std::to_string(i) + " changes shape");
    }
  }
  return frames;
}

void save_video(const std::filesystem::path& path, const Video& frames) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_video(os, frames);
}

Video load_video(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open video file " + path.string());
  return read_video(is);
}

}  // namespace evnet
