// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gflow/data/controls.hpp"
#include "gflow/errors.hpp"

namespace gflow::metrics {

namespace {

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

double population_std(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

double bone_length(const double* frame, const skel::Edge& e) {
    const double* a = frame + e.a * 3;
    const double* b = frame + e.b * 3;
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

}  // namespace

SpeedTracks heel_speeds(const data::MotionClip& clip, const skel::SkeletonSpec& skeleton) {
    GFLOW_CHECK(skeleton.has_heels, ConfigError, "skeleton does not define heel markers");
    GFLOW_CHECK(skeleton.marker_count == clip.markers(), ShapeError, "skeleton/clip marker count mismatch");
    data::validate(clip);
    const num::Tensor world = data::to_world(clip);
    const std::size_t t_len = clip.frames(), m = clip.markers();
    SpeedTracks out;
    for (std::size_t h = 0; h < 2; ++h) {
        auto& track = out[h];
        track.assign(t_len, 0.0);
        const std::size_t marker = skeleton.heels[h];
        for (std::size_t t = 1; t < t_len; ++t) {
            const double* a = world.data() + (t * m + marker) * 3;
            const double* b = world.data() + ((t - 1) * m + marker) * 3;
            track[t] = std::hypot(a[0] - b[0], a[2] - b[2]) * clip.fps * 10.0;
        }
        if (t_len >= 2) track[0] = track[1];
    }
    return out;
}

FootstepCount count_footsteps(std::span<const double> speeds, double v_tol, std::size_t min_frames, double fps) {
    GFLOW_CHECK(v_tol >= 0.0, ConfigError, "v_tol must be non-negative");
    GFLOW_CHECK(fps > 0.0, ConfigError, "frame rate must be positive");
    FootstepCount out;
    std::size_t run = 0;
    auto close = [&] {
        if (run > 0 && run >= min_frames) {
            ++out.count;
            out.durations.push_back(static_cast<double>(run) / fps);
        }
        run = 0;
    };
    for (double s : speeds) {
        if (s < v_tol) {
            ++run;
        } else {
            close();
        }
    }
    close();
    return out;
}

FootstepCount count_footsteps(const SpeedTracks& speeds, double v_tol, std::size_t min_frames, double fps) {
    FootstepCount total;
    for (const auto& track : speeds) {
        FootstepCount c = count_footsteps(std::span<const double>(track), v_tol, min_frames, fps);
        total.count += c.count;
        total.durations.insert(total.durations.end(), c.durations.begin(), c.durations.end());
    }
    return total;
}

std::vector<double> default_grid() {
    std::vector<double> grid;
    for (int v = 0; v <= 600; ++v) grid.push_back(static_cast<double>(v));
    return grid;
}

FootstepReport footstep_sweep(const SpeedTracks& speeds, double fps, const std::vector<double>& grid,
                              std::size_t min_frames) {
    GFLOW_CHECK(!grid.empty(), ConfigError, "footstep sweep grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        GFLOW_CHECK(grid[i] > grid[i - 1], ConfigError, "footstep sweep grid must be strictly increasing");
    }
    FootstepReport r;
    r.grid = grid;
    for (double v : grid) {
        const std::size_t c = count_footsteps(speeds, v, min_frames, fps).count;
        r.counts.push_back(c);
        r.max_count = std::max(r.max_count, c);
    }
    const auto target = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(r.max_count)));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (r.counts[i] >= target) {
            r.v_tol_95 = grid[i];
            break;
        }
    }
    const FootstepCount at95 = count_footsteps(speeds, r.v_tol_95, min_frames, fps);
    if (!at95.durations.empty()) {
        double sum = 0.0;
        for (double d : at95.durations) sum += d;
        r.mean_duration = sum / static_cast<double>(at95.durations.size());
        r.std_duration = population_std(at95.durations);
    }
    return r;
}

FootstepReport footstep_sweep(const data::MotionClip& clip, const skel::SkeletonSpec& skeleton,
                              const std::vector<double>& grid, std::size_t min_frames) {
    return footstep_sweep(heel_speeds(clip, skeleton), clip.fps, grid, min_frames);
}

std::vector<double> mean_bone_lengths(const data::MotionClip& clip, const skel::SkeletonSpec& skeleton) {
    GFLOW_CHECK(skeleton.marker_count == clip.markers(), ShapeError, "skeleton/clip marker count mismatch");
    GFLOW_CHECK(clip.frames() > 0, ConfigError, "clip has no frames");
    const std::size_t m = clip.markers();
    std::vector<double> out(skeleton.edges.size(), 0.0);
    for (std::size_t t = 0; t < clip.frames(); ++t) {
        for (std::size_t e = 0; e < out.size(); ++e) out[e] += bone_length(clip.positions.data() + t * m * 3, skeleton.edges[e]);
    }
    for (double& v : out) v /= static_cast<double>(clip.frames());
    return out;
}

BoneLengthReport bone_length_analysis(const data::MotionClip& clip, const skel::SkeletonSpec& skeleton,
                                      const std::optional<std::vector<double>>& reference) {
    GFLOW_CHECK(skeleton.marker_count == clip.markers(), ShapeError, "skeleton/clip marker count mismatch");
    BoneLengthReport r;
    if (reference) {
        r.reference = *reference;
    } else {
        GFLOW_CHECK(!skeleton.bone_lengths.empty(), ConfigError, "no reference bone lengths available");
        r.reference = skeleton.bone_lengths;
    }
    const std::size_t bones = skeleton.edges.size(), t_len = clip.frames(), m = clip.markers();
    GFLOW_CHECK(r.reference.size() == bones, ShapeError, "reference bone lengths do not match the skeleton edges");
    GFLOW_CHECK(t_len > 0 && bones > 0, ConfigError, "bone analysis needs frames and edges");
    std::vector<double> lengths(t_len * bones);
    std::vector<double> means(bones, 0.0);
    double sq = 0.0;
    r.frame_worst.assign(t_len, 0.0);
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t e = 0; e < bones; ++e) {
            const double l = bone_length(clip.positions.data() + t * m * 3, skeleton.edges[e]);
            lengths[t * bones + e] = l;
            means[e] += l;
            const double d = l - r.reference[e];
            sq += d * d;
            r.frame_worst[t] = std::max(r.frame_worst[t], std::abs(d));
        }
    }
    const double n = static_cast<double>(t_len * bones);
    r.rmse = std::sqrt(sq / n);
    for (double& v : means) v /= static_cast<double>(t_len);
    double spread = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t e = 0; e < bones; ++e) {
            const double d = lengths[t * bones + e] - means[e];
            spread += d * d;
        }
    }
    r.sigma = std::sqrt(spread / n);
    GFLOW_CHECK(std::isfinite(r.rmse) && std::isfinite(r.sigma), NumericError, "bone-length analysis is not finite");
    return r;
}

Summary summarize(std::vector<double> values) {
    Summary s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    return s;
}

BatchReport aggregate(std::vector<ClipMetrics> clips) {
    GFLOW_CHECK(!clips.empty(), ConfigError, "empty batch: no clips to evaluate");
    BatchReport r;
    std::vector<double> max_count, v95, mu, sigma, rmse, bl_sigma;
    const std::size_t grid = clips.front().footsteps.grid.size();
    r.mean_curve.assign(grid, 0.0);
    for (const auto& c : clips) {
        GFLOW_CHECK(c.footsteps.grid.size() == grid, ShapeError, "clips were swept on different grids");
        max_count.push_back(static_cast<double>(c.footsteps.max_count));
        v95.push_back(c.footsteps.v_tol_95);
        mu.push_back(c.footsteps.mean_duration);
        sigma.push_back(c.footsteps.std_duration);
        rmse.push_back(c.bones.rmse);
        bl_sigma.push_back(c.bones.sigma);
        for (std::size_t i = 0; i < grid; ++i) r.mean_curve[i] += static_cast<double>(c.footsteps.counts[i]);
    }
    for (double& v : r.mean_curve) v /= static_cast<double>(clips.size());
    r.max_count = summarize(max_count);
    r.v_tol_95 = summarize(v95);
    r.mean_duration = summarize(mu);
    r.std_duration = summarize(sigma);
    r.bl_rmse = summarize(rmse);
    r.bl_sigma = summarize(bl_sigma);
    r.clips = std::move(clips);
    return r;
}

std::string format_report(const BatchReport& report) {
    std::string out = "schema gflow-metrics " + std::to_string(kSchemaVersion) + "\n";
    out += "clips " + std::to_string(report.clips.size()) + "\n";
    auto add = [&out](const std::string& key, const Summary& s) {
        out += key + "_mean " + fixed(s.mean) + "\n";
        out += key + "_median " + fixed(s.median) + "\n";
    };
    add("f_est_max", report.max_count);
    add("v_tol_95", report.v_tol_95);
    add("step_mu", report.mean_duration);
    add("step_sigma", report.std_duration);
    add("bl_rmse", report.bl_rmse);
    add("bl_sigma", report.bl_sigma);
    return out;
}

std::string format_sweep_table(const std::vector<double>& grid, const std::vector<double>& values) {
    GFLOW_CHECK(grid.size() == values.size(), ShapeError, "sweep table columns differ in length");
    std::string out = "v_tol_mm_s\tf_est\n";
    for (std::size_t i = 0; i < grid.size(); ++i) out += fixed(grid[i]) + "\t" + fixed(values[i]) + "\n";
    return out;
}

std::string format_clip_table(const BatchReport& report) {
    std::string out = "clip\tf_est_max\tv_tol_95\tstep_mu\tstep_sigma\tbl_rmse\tbl_sigma\n";
    for (const auto& c : report.clips) {
        out += c.name + "\t" + std::to_string(c.footsteps.max_count) + "\t" + fixed(c.footsteps.v_tol_95) + "\t" +
               fixed(c.footsteps.mean_duration) + "\t" + fixed(c.footsteps.std_duration) + "\t" +
               fixed(c.bones.rmse) + "\t" + fixed(c.bones.sigma) + "\n";
    }
    return out;
}

}  // namespace gflow::metrics
