// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Root trajectory <-> control track.
//
// Heading theta rotates about +y: forward = (sin theta, 0, cos theta),
// left = (cos theta, 0, -sin theta). It is measured from the hip markers
// (left minus right) and unwrapped over time. The root position is the
// ground projection of the root marker.
//
// Control c_t (t >= 1) is the root displacement from frame t-1 to t expressed
// in the heading frame of t-1 (forward, sideways-left) plus the heading change;
// c_0 repeats c_1. Integration from (origin, heading 0) inverts extraction up
// to the initial rigid placement.

#pragma once

#include <vector>

#include "gflow/data/clip.hpp"

namespace gflow::data {

struct RootTrack {
    std::vector<double> x, z, heading;
    std::size_t size() const { return heading.size(); }
};

// From world-frame positions [T, M, 3]; requires hips in the skeleton.
RootTrack measure_root(const Tensor& world, const skel::SkeletonSpec& skeleton);

// Controls [T, 3] from a root track; throws ConfigError for fewer than 2 frames.
Tensor controls_from_track(const RootTrack& track);
Tensor extract_controls(const Tensor& world, const skel::SkeletonSpec& skeleton);

RootTrack integrate_controls(const Tensor& controls, double x0 = 0.0, double z0 = 0.0, double heading0 = 0.0);

// World positions -> root-relative clip with extracted controls.
MotionClip to_root_relative(const Tensor& world, const skel::SkeletonSpec& skeleton, double fps,
                            std::string source = {});

// Root-relative clip -> world positions, recomposing the integrated root.
Tensor to_world(const MotionClip& clip);

double wrap_angle(double a);

}  // namespace gflow::data
