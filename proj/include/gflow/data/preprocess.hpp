// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "gflow/data/clip.hpp"
#include "gflow/flow/model.hpp"

namespace gflow::data {

// Linear interpolation of root-relative positions and of the integrated root
// track; controls are re-derived as per-frame displacements at the new rate.
// Throws ConfigError when target_fps exceeds the clip rate.
MotionClip resample(const MotionClip& clip, double target_fps = 20.0);

struct TrainingWindow {
    MotionClip clip;
    std::size_t start = 0;  // first frame in the source clip
    bool mirrored = false;
    bool reversed = false;
};

// Stride = round(length * (1 - overlap)); trailing partial windows dropped.
std::vector<TrainingWindow> window(const MotionClip& clip, std::size_t length = 80, double overlap = 0.5);

// Original, mirrored, reversed, mirrored+reversed.
std::vector<TrainingWindow> augment(const TrainingWindow& w, const skel::SkeletonSpec& skeleton);

// Per (marker, channel) mean and population std over every frame of every
// window; std floored at 1e-6. Needs at least two windows.
flow::Standardization standardize_fit(const std::vector<TrainingWindow>& windows);

inline constexpr double kStdFloor = 1e-6;

}  // namespace gflow::data
