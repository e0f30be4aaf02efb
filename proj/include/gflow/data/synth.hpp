// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Procedural 21-marker walker following a ground path.
//
// The gait cycle lasts 2/cadence seconds. The left heel is planted for the
// first half of every cycle and the right heel for the second half, so a clip
// of `steps` footsteps spans steps/cadence seconds and every footstep lies
// fully inside it. Planted heels do not move in the world frame; swinging
// heels move with a speed bounded away from zero. Every segment is placed by
// rotations of fixed offsets (legs by two-bone IK), so bone lengths are
// constant up to rounding.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gflow/data/clip.hpp"

namespace gflow::data {

enum class PathKind { Line, Circle, SCurve };

std::string to_string(PathKind kind);
PathKind parse_path_kind(const std::string& name);

struct GaitParams {
    PathKind path = PathKind::Line;
    double speed = 100.0;       // cm/s along the path
    double radius = 300.0;      // circle; positive turns left
    double amplitude = 0.5;     // s-curve heading amplitude (rad)
    double period = 6.0;        // s-curve period (s)
    double cadence = 2.0;       // steps/s
    double initial_heading = 0.0;
    double marker_noise = 0.0;  // cm, isotropic Gaussian added to every marker
};

struct Footstep {
    std::size_t heel = 0;   // 0 left, 1 right
    std::size_t first = 0;  // first planted frame
    std::size_t last = 0;   // last planted frame
};

struct GaitTruth {
    std::vector<Footstep> footsteps;
    std::vector<double> bone_lengths;    // per default-skeleton edge, cm
    double min_swing_speed = 0.0;        // mm/s, over frames where a heel is not planted
    std::vector<double> heading;         // per frame, rad
};

struct SynthClip {
    MotionClip clip;  // root-relative
    Tensor world;     // [T, M, 3]
    GaitTruth truth;
};

// Throws ConfigError("invalid path parameters: ...") for out-of-range input.
SynthClip synth_gait(const GaitParams& params, std::size_t steps, double fps, std::uint64_t seed);

// Reference bone lengths of the walker, in default-skeleton edge order.
std::vector<double> walker_bone_lengths();

// A varied corpus: paths, speeds, cadences and styles drawn from `seed`.
std::vector<GaitParams> random_gait_params(std::size_t count, std::uint64_t seed);

}  // namespace gflow::data
