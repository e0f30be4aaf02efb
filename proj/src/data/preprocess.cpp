// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/data/preprocess.hpp"

#include <cmath>

#include "gflow/data/controls.hpp"
#include "gflow/errors.hpp"

namespace gflow::data {

MotionClip resample(const MotionClip& clip, double target_fps) {
    validate(clip);
    GFLOW_CHECK(std::isfinite(target_fps) && target_fps > 0.0, ConfigError, "target frame rate must be positive");
    GFLOW_CHECK(target_fps <= clip.fps, ConfigError,
                "resample only downsamples (clip " + std::to_string(clip.fps) + " fps, requested " +
                    std::to_string(target_fps) + ")");
    if (target_fps == clip.fps) return clip;
    const std::size_t t_len = clip.frames(), m = clip.markers();
    GFLOW_CHECK(t_len >= 2, ConfigError, "clip too short to resample");
    const double ratio = clip.fps / target_fps;
    const auto n = static_cast<std::size_t>(std::floor(static_cast<double>(t_len - 1) / ratio)) + 1;
    const RootTrack src = integrate_controls(clip.controls);
    RootTrack dst;
    MotionClip out;
    out.fps = target_fps;
    out.source = clip.source;
    out.root_relative = clip.root_relative;
    out.positions = Tensor({n, m, 3});
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = static_cast<double>(i) * ratio;
        const auto lo = std::min(static_cast<std::size_t>(std::floor(tau)), t_len - 1);
        const std::size_t hi = std::min(lo + 1, t_len - 1);
        const double w = tau - static_cast<double>(lo);
        auto lerp = [w](double a, double b) { return w == 0.0 ? a : a + w * (b - a); };
        for (std::size_t j = 0; j < m * 3; ++j) {
            out.positions[i * m * 3 + j] = lerp(clip.positions[lo * m * 3 + j], clip.positions[hi * m * 3 + j]);
        }
        dst.x.push_back(lerp(src.x[lo], src.x[hi]));
        dst.z.push_back(lerp(src.z[lo], src.z[hi]));
        dst.heading.push_back(lerp(src.heading[lo], src.heading[hi]));
    }
    out.controls = n >= 2 ? controls_from_track(dst) : Tensor({n, kControlChannels});
    if (n == 1) {
        for (std::size_t k = 0; k < kControlChannels; ++k) out.controls[k] = clip.controls[k] * ratio;
    }
    return out;
}

std::vector<TrainingWindow> window(const MotionClip& clip, std::size_t length, double overlap) {
    GFLOW_CHECK(length > 0, ConfigError, "window length must be positive");
    GFLOW_CHECK(overlap >= 0.0 && overlap < 1.0, ConfigError, "window overlap must lie in [0, 1)");
    const auto stride = static_cast<std::size_t>(std::llround(static_cast<double>(length) * (1.0 - overlap)));
    GFLOW_CHECK(stride > 0, ConfigError, "window stride rounds to zero");
    std::vector<TrainingWindow> out;
    for (std::size_t start = 0; start + length <= clip.frames(); start += stride) {
        out.push_back({clip.slice(start, length), start, false, false});
    }
    return out;
}

std::vector<TrainingWindow> augment(const TrainingWindow& w, const skel::SkeletonSpec& skeleton) {
    const MotionClip mirrored = mirror(w.clip, skeleton);
    std::vector<TrainingWindow> out;
    out.push_back(w);
    out.push_back({mirrored, w.start, !w.mirrored, w.reversed});
    out.push_back({reverse(w.clip), w.start, w.mirrored, !w.reversed});
    out.push_back({reverse(mirrored), w.start, !w.mirrored, !w.reversed});
    return out;
}

flow::Standardization standardize_fit(const std::vector<TrainingWindow>& windows) {
    GFLOW_CHECK(windows.size() >= 2, ConfigError, "standardization needs at least two windows");
    const std::size_t m = windows.front().clip.markers();
    const std::size_t width = m * 3;
    // Welford update per (marker, channel).
    std::vector<double> mean(width, 0.0), m2(width, 0.0);
    double count = 0.0;
    for (const auto& w : windows) {
        GFLOW_CHECK(w.clip.markers() == m, ShapeError, "windows disagree on marker count");
        for (std::size_t t = 0; t < w.clip.frames(); ++t) {
            count += 1.0;
            const double* row = w.clip.positions.data() + t * width;
            for (std::size_t j = 0; j < width; ++j) {
                const double delta = row[j] - mean[j];
                mean[j] += delta / count;
                m2[j] += delta * (row[j] - mean[j]);
            }
        }
    }
    flow::Standardization s{Tensor({m, 3}), Tensor({m, 3})};
    for (std::size_t j = 0; j < width; ++j) {
        s.mean[j] = mean[j];
        s.std[j] = std::max(std::sqrt(m2[j] / count), kStdFloor);
    }
    return s;
}

}  // namespace gflow::data
