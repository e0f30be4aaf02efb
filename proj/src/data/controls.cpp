// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/data/controls.hpp"

#include <cmath>
#include <numbers>

#include "gflow/errors.hpp"

namespace gflow::data {

double wrap_angle(double a) {
    return std::remainder(a, 2.0 * std::numbers::pi);
}

RootTrack measure_root(const Tensor& world, const skel::SkeletonSpec& skeleton) {
    GFLOW_CHECK(world.rank() == 3 && world.dim(2) == 3, ShapeError, "positions must be [T, M, 3]");
    GFLOW_CHECK(world.dim(1) == skeleton.marker_count, ShapeError, "skeleton/positions marker count mismatch");
    GFLOW_CHECK(skeleton.has_hips, ConfigError, "skeleton does not define hip markers");
    const std::size_t t_len = world.dim(0), m = world.dim(1);
    RootTrack track;
    double previous = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        const double* frame = world.data() + t * m * 3;
        const double* lh = frame + skeleton.hips[0] * 3;
        const double* rh = frame + skeleton.hips[1] * 3;
        const double lx = lh[0] - rh[0], lz = lh[2] - rh[2];
        GFLOW_CHECK(std::hypot(lx, lz) > 1e-9, NumericError,
                    "hip markers coincide in the ground plane at frame " + std::to_string(t));
        double heading = std::atan2(-lz, lx);
        if (t > 0) heading = previous + wrap_angle(heading - previous);
        previous = heading;
        track.x.push_back(frame[skeleton.root * 3]);
        track.z.push_back(frame[skeleton.root * 3 + 2]);
        track.heading.push_back(heading);
    }
    return track;
}

Tensor controls_from_track(const RootTrack& track) {
    const std::size_t t_len = track.size();
    GFLOW_CHECK(t_len >= 2, ConfigError, "clip too short to extract controls (need at least 2 frames)");
    Tensor out({t_len, kControlChannels});
    for (std::size_t t = 1; t < t_len; ++t) {
        const double dx = track.x[t] - track.x[t - 1], dz = track.z[t] - track.z[t - 1];
        const double s = std::sin(track.heading[t - 1]), c = std::cos(track.heading[t - 1]);
        out[t * 3 + kForward] = s * dx + c * dz;
        out[t * 3 + kSideways] = c * dx - s * dz;
        out[t * 3 + kRotation] = track.heading[t] - track.heading[t - 1];
    }
    for (std::size_t k = 0; k < kControlChannels; ++k) out[k] = out[3 + k];
    return out;
}

Tensor extract_controls(const Tensor& world, const skel::SkeletonSpec& skeleton) {
    return controls_from_track(measure_root(world, skeleton));
}

RootTrack integrate_controls(const Tensor& controls, double x0, double z0, double heading0) {
    GFLOW_CHECK(controls.rank() == 2 && controls.dim(1) == kControlChannels, ShapeError, "controls must be [T, 3]");
    RootTrack track;
    const std::size_t t_len = controls.dim(0);
    if (t_len == 0) return track;
    track.x.push_back(x0);
    track.z.push_back(z0);
    track.heading.push_back(heading0);
    for (std::size_t t = 1; t < t_len; ++t) {
        const double h = track.heading[t - 1];
        const double fwd = controls[t * 3 + kForward], side = controls[t * 3 + kSideways];
        const double s = std::sin(h), c = std::cos(h);
        track.x.push_back(track.x[t - 1] + s * fwd + c * side);
        track.z.push_back(track.z[t - 1] + c * fwd - s * side);
        track.heading.push_back(h + controls[t * 3 + kRotation]);
    }
    return track;
}

MotionClip to_root_relative(const Tensor& world, const skel::SkeletonSpec& skeleton, double fps, std::string source) {
    const RootTrack track = measure_root(world, skeleton);
    MotionClip clip;
    clip.fps = fps;
    clip.source = std::move(source);
    clip.root_relative = true;
    clip.controls = controls_from_track(track);
    clip.positions = Tensor(world.shape());
    const std::size_t t_len = world.dim(0), m = world.dim(1);
    for (std::size_t t = 0; t < t_len; ++t) {
        const double s = std::sin(track.heading[t]), c = std::cos(track.heading[t]);
        for (std::size_t i = 0; i < m; ++i) {
            const double* w = world.data() + (t * m + i) * 3;
            double* p = clip.positions.data() + (t * m + i) * 3;
            const double dx = w[0] - track.x[t], dz = w[2] - track.z[t];
            p[0] = c * dx - s * dz;
            p[1] = w[1];
            p[2] = s * dx + c * dz;
        }
    }
    validate(clip);
    return clip;
}

Tensor to_world(const MotionClip& clip) {
    if (!clip.root_relative) return clip.positions;
    const RootTrack track = integrate_controls(clip.controls);
    const std::size_t t_len = clip.frames(), m = clip.markers();
    Tensor world(clip.positions.shape());
    for (std::size_t t = 0; t < t_len; ++t) {
        const double s = std::sin(track.heading[t]), c = std::cos(track.heading[t]);
        for (std::size_t i = 0; i < m; ++i) {
            const double* p = clip.positions.data() + (t * m + i) * 3;
            double* w = world.data() + (t * m + i) * 3;
            w[0] = track.x[t] + c * p[0] + s * p[2];
            w[1] = p[1];
            w[2] = track.z[t] - s * p[0] + c * p[2];
        }
    }
    return world;
}

}  // namespace gflow::data
