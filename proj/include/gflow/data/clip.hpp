// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Motion clips and their on-disk formats.
//
// Coordinates are in centimetres with y up. In the root-relative
// representation x points to the character's left and z forward; the root
// trajectory lives in the control track as per-frame displacements
// (forward, sideways, heading change) expressed in the previous frame's
// heading frame.
//
// Text format (".clip"):
//
//   # gflow-clip 1
//   # fps 20
//   # markers 21
//   # frames 200
//   # root_relative 1
//   # source synth:line
//   m0x m0y m0z ... m20z c_fwd c_side c_rot      (one row per frame)
//
// Binary format (".gfc"): magic "GFLOWCLP", u32 version, u32 frames,
// u32 markers, u32 channels, u32 control channels, f64 fps, u8 root_relative,
// u32 source length, source bytes, f64 positions, f64 controls; all
// little-endian.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "gflow/numcore/tensor.hpp"
#include "gflow/skeleton/skeleton.hpp"

namespace gflow::data {

using num::Tensor;

inline constexpr std::size_t kControlChannels = 3;
enum ControlChannel : std::size_t { kForward = 0, kSideways = 1, kRotation = 2 };

struct MotionClip {
    Tensor positions;  // [T, M, 3]
    Tensor controls;   // [T, 3]
    double fps = 20.0;
    std::string source;
    bool root_relative = true;

    std::size_t frames() const { return positions.rank() == 3 ? positions.dim(0) : 0; }
    std::size_t markers() const { return positions.rank() == 3 ? positions.dim(1) : 0; }

    // Frames [begin, begin + count).
    MotionClip slice(std::size_t begin, std::size_t count) const;
};

// Throws ShapeError / NumericError on inconsistent shapes, NaNs or fps <= 0.
void validate(const MotionClip& clip);

enum class ClipFormat { Auto, Text, Binary };

// `expected_markers` of 0 accepts any marker count.
MotionClip parse_clip_text(std::string_view text, std::size_t expected_markers = 0);
std::string format_clip_text(const MotionClip& clip);

MotionClip load_clip(const std::filesystem::path& path, ClipFormat format = ClipFormat::Auto,
                     std::size_t expected_markers = 0);
void save_clip(const std::filesystem::path& path, const MotionClip& clip, ClipFormat format = ClipFormat::Auto);

// FNV-1a over the raw bytes of positions then controls.
std::uint64_t checksum(const MotionClip& clip);
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);

// Frame order reversed; control order reversed with every channel negated.
MotionClip reverse(const MotionClip& clip);

// x negated, left/right markers swapped, sideways and rotation negated.
MotionClip mirror(const MotionClip& clip, const skel::SkeletonSpec& skeleton);

}  // namespace gflow::data
