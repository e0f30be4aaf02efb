// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Footstep and bone-length analysis of motion clips.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gflow/data/clip.hpp"
#include "gflow/skeleton/skeleton.hpp"

namespace gflow::metrics {

inline constexpr int kSchemaVersion = 1;

using SpeedTracks = std::array<std::vector<double>, 2>;  // left, right heel

// Horizontal heel speed per frame in mm/s after recomposing the root motion.
// Frame 0 repeats frame 1; a single-frame clip has zero speed.
SpeedTracks heel_speeds(const data::MotionClip& clip, const skel::SkeletonSpec& skeleton);

struct FootstepCount {
    std::size_t count = 0;
    std::vector<double> durations;  // seconds
};

// Maximal runs with speed < v_tol of at least `min_frames` frames.
FootstepCount count_footsteps(std::span<const double> speeds, double v_tol, std::size_t min_frames, double fps);
// Summed over both heels.
FootstepCount count_footsteps(const SpeedTracks& speeds, double v_tol, std::size_t min_frames, double fps);

// 0, 1, ..., 600 mm/s.
std::vector<double> default_grid();

struct FootstepReport {
    std::vector<double> grid;
    std::vector<std::size_t> counts;
    std::size_t max_count = 0;
    double v_tol_95 = 0.0;
    double mean_duration = 0.0;  // at v_tol_95
    double std_duration = 0.0;   // population std at v_tol_95
};

FootstepReport footstep_sweep(const SpeedTracks& speeds, double fps, const std::vector<double>& grid,
                              std::size_t min_frames = 2);
FootstepReport footstep_sweep(const data::MotionClip& clip, const skel::SkeletonSpec& skeleton,
                              const std::vector<double>& grid = default_grid(), std::size_t min_frames = 2);

struct BoneLengthReport {
    std::vector<double> reference;    // per edge, cm
    double rmse = 0.0;                // over frames x edges against the reference
    double sigma = 0.0;               // pooled std around per-bone means
    std::vector<double> frame_worst;  // max |length - reference| per frame
};

// Per-edge mean length over the clip.
std::vector<double> mean_bone_lengths(const data::MotionClip& clip, const skel::SkeletonSpec& skeleton);

// Reference from `reference` when given, else from the skeleton's bone
// lengths; ConfigError when neither is available.
BoneLengthReport bone_length_analysis(const data::MotionClip& clip, const skel::SkeletonSpec& skeleton,
                                      const std::optional<std::vector<double>>& reference = std::nullopt);

struct Summary {
    double mean = 0.0;
    double median = 0.0;
};

Summary summarize(std::vector<double> values);

struct ClipMetrics {
    std::string name;
    FootstepReport footsteps;
    BoneLengthReport bones;
};

struct BatchReport {
    std::vector<ClipMetrics> clips;
    Summary max_count, v_tol_95, mean_duration, std_duration, bl_rmse, bl_sigma;
    std::vector<double> mean_curve;  // mean f_est over clips, per grid point
};

BatchReport aggregate(std::vector<ClipMetrics> clips);

// "key value" lines, prefixed by a schema line.
std::string format_report(const BatchReport& report);
// Tab-separated two-column table with a header row.
std::string format_sweep_table(const std::vector<double>& grid, const std::vector<double>& values);
// One row per clip: name, max_f_est, v_tol_95, mu, sigma, bl_rmse, bl_sigma.
std::string format_clip_table(const BatchReport& report);

}  // namespace gflow::metrics
