// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary tensor ("EVTS") and video ("EVTV") files. All integers are u32
// little-endian and values are f32 little-endian in row-major order:
//
//   tensor: "EVTS" | version=1 | rank | rank x extent | values...
//   video:  "EVTV" | version=1 | frame_count | frame_count x tensor record
//
// Every frame of a video has the same shape.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "evnet/tensor.hpp"

namespace evnet {

inline constexpr std::uint32_t kTensorFileVersion = 1;

using Video = std::vector<Tensor>;

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

void write_video(std::ostream& os, const Video& frames);
Video read_video(std::istream& is);

void save_video(const std::filesystem::path& path, const Video& frames);
Video load_video(const std::filesystem::path& path);

}  // namespace evnet
