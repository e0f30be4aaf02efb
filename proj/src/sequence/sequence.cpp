// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/sequence/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gflow/errors.hpp"
#include "gflow/numcore/random.hpp"

namespace gflow::seq {

MaskMatrix::MaskMatrix(std::size_t markers, std::size_t frames, std::uint8_t fill)
    : markers_(markers), frames_(frames), values_(markers * frames, fill) {
    GFLOW_CHECK(fill <= 1, ConfigError, "mask values must be 0 or 1");
}

void MaskMatrix::set(std::size_t marker, std::size_t frame, std::uint8_t v) {
    GFLOW_CHECK(marker < markers_ && frame < frames_, ShapeError, "mask index out of range");
    GFLOW_CHECK(v <= 1, ConfigError, "mask values must be 0 or 1");
    values_[marker * frames_ + frame] = v;
}

void MaskMatrix::clear_marker(std::size_t marker) {
    GFLOW_CHECK(marker < markers_, ConfigError,
                "mask marker " + std::to_string(marker) + " out of range for " + std::to_string(markers_) + " markers");
    std::fill_n(values_.begin() + static_cast<std::ptrdiff_t>(marker * frames_), frames_, std::uint8_t{0});
}

bool MaskMatrix::all_observed() const { return missing() == 0; }

std::size_t MaskMatrix::missing() const {
    return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{0}));
}

MaskMatrix MaskMatrix::operator*(const MaskMatrix& other) const {
    GFLOW_CHECK(markers_ == other.markers_ && frames_ == other.frames_, ShapeError, "mask shapes differ");
    MaskMatrix out(markers_, frames_);
    for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] = values_[i] & other.values_[i];
    return out;
}

const std::vector<std::string>& mask_preset_names() {
    static const std::vector<std::string> names{"right_arm", "left_leg", "right_arm_left_leg", "random4", "none"};
    return names;
}

namespace {

std::vector<std::size_t> group(const skel::SkeletonSpec& skeleton, const std::string& name) {
    if (auto it = skeleton.mask_groups.find(name); it != skeleton.mask_groups.end()) return it->second;
    if (name == "right_arm") return {18, 19, 20};
    return {2, 3, 4};
}

MaskMatrix clear(const skel::SkeletonSpec& skeleton, std::size_t frames, const std::vector<std::size_t>& markers,
                 const std::string& preset) {
    MaskMatrix mask = MaskMatrix::ones(skeleton.marker_count, frames);
    for (std::size_t m : markers) {
        GFLOW_CHECK(m < skeleton.marker_count, ConfigError,
                    "mask preset '" + preset + "' names marker " + std::to_string(m) + " but the skeleton has " +
                        std::to_string(skeleton.marker_count) + " markers");
        mask.clear_marker(m);
    }
    return mask;
}

}  // namespace

MaskMatrix mask_preset(const std::string& name, const skel::SkeletonSpec& skeleton, std::size_t frames,
                       std::uint64_t seed) {
    if (name == "none") return MaskMatrix::ones(skeleton.marker_count, frames);
    if (name == "right_arm" || name == "left_leg") return clear(skeleton, frames, group(skeleton, name), name);
    if (name == "right_arm_left_leg") {
        return clear(skeleton, frames, group(skeleton, "right_arm"), name) *
               clear(skeleton, frames, group(skeleton, "left_leg"), name);
    }
    if (name == "random4") {
        GFLOW_CHECK(skeleton.marker_count >= 4, ConfigError, "random4 needs at least 4 markers");
        num::Rng rng = num::make_rng(seed, 0x6d61736b);
        std::vector<std::size_t> order(skeleton.marker_count);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = 0; i < 4; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
            std::swap(order[i], order[pick(rng)]);
        }
        return clear(skeleton, frames, {order.begin(), order.begin() + 4}, name);
    }
    throw ConfigError("unknown mask preset '" + name +
                      "' (expected right_arm, left_leg, right_arm_left_leg, random4 or none)");
}

std::vector<Tensor> generate_batch(const flow::FlowModel& model, const std::vector<GenerationRequest>& requests,
                                   const GenerationOptions& options) {
    GFLOW_CHECK(!requests.empty(), ConfigError, "no generation requests");
    const auto& cfg = model.config();
    const std::size_t th = cfg.history, m = cfg.markers, c = cfg.channels, cc = cfg.control_channels;
    const std::size_t frame = m * c, cw = cc * (th + 1);
    const std::size_t horizon = requests.front().horizon;
    const std::size_t b = requests.size();
    GFLOW_CHECK(horizon >= 1, ConfigError, "generation horizon must be at least 1");

    Tensor buffer({b, th + horizon, frame});
    std::vector<num::Rng> rngs;
    for (std::size_t r = 0; r < b; ++r) {
        const auto& req = requests[r];
        GFLOW_CHECK(req.horizon == horizon, ConfigError, "batched requests must share the horizon");
        GFLOW_CHECK(req.history.size() == th * frame && req.history.rank() == 3 && req.history.dim(0) == th,
                    ShapeError,
                    "history must be [" + std::to_string(th) + ", " + std::to_string(m) + ", " + std::to_string(c) +
                        "], got " + num::shape_string(req.history.shape()));
        GFLOW_CHECK(req.controls.rank() == 2 && req.controls.dim(1) == cc && req.controls.dim(0) >= th + horizon,
                    ShapeError,
                    "control track must be [>= " + std::to_string(th + horizon) + ", " + std::to_string(cc) +
                        "], got " + num::shape_string(req.controls.shape()));
        GFLOW_CHECK(std::isfinite(req.temperature) && req.temperature >= 0.0, ConfigError,
                    "temperature must be a finite value >= 0");
        if (req.mask) {
            GFLOW_CHECK(req.mask->markers() == m && req.mask->frames() == th, ShapeError, "mask must be M x T_h");
        }
        const Tensor std_history = model.standardize(req.history);
        double* dst = buffer.data() + r * (th + horizon) * frame;
        for (std::size_t t = 0; t < th; ++t) {
            for (std::size_t i = 0; i < m; ++i) {
                const bool observed = !req.mask || req.mask->at(i, t) == 1;
                for (std::size_t k = 0; k < c; ++k) {
                    const std::size_t idx = (t * m + i) * c + k;
                    dst[idx] = observed ? std_history[idx] : 0.0;
                }
            }
        }
        GFLOW_CHECK(std::all_of(dst, dst + th * frame, [](double v) { return std::isfinite(v); }), NumericError,
                    "seed history contains non-finite observed values");
        rngs.push_back(num::make_rng(req.seed, req.stream));
    }

    std::vector<Tensor> out(b, Tensor({horizon, m, c}));
    flow::RecurrentStates states = model.initial_state(b);
    Tensor history = Tensor::matrix(b * th * m, c);
    Tensor controls = Tensor::matrix(b, cw);
    Tensor z = Tensor::matrix(b * m, c);
    for (std::size_t step = 0; step < horizon; ++step) {
        for (std::size_t r = 0; r < b; ++r) {
            std::copy_n(buffer.data() + (r * (th + horizon) + step) * frame, th * frame,
                        history.data() + r * th * frame);
            std::copy_n(requests[r].controls.data() + step * cc, cw, controls.data() + r * cw);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (std::size_t i = 0; i < frame; ++i) z[r * frame + i] = requests[r].temperature * normal(rngs[r]);
        }
        if (options.observer) options.observer(step, history, controls);
        Tensor x = model.destandardize(model.inverse_values(z, history, controls, states, b));
        x.reshape({b, m, c});
        if (options.hook) options.hook(step, x);
        for (std::size_t r = 0; r < b; ++r) {
            const double* row = x.data() + r * frame;
            if (!std::all_of(row, row + frame, [](double v) { return std::isfinite(v); })) {
                throw NumericError("non-finite frame at generation step " + std::to_string(step) + " (request " +
                                   std::to_string(r) + ")");
            }
            std::copy_n(row, frame, out[r].data() + step * frame);
            const Tensor standardized = model.standardize(Tensor({m, c}, std::vector<double>(row, row + frame)));
            std::copy_n(standardized.data(), frame, buffer.data() + (r * (th + horizon) + th + step) * frame);
        }
    }
    return out;
}

Tensor generate(const flow::FlowModel& model, const GenerationRequest& request, const GenerationOptions& options) {
    return std::move(generate_batch(model, {request}, options).front());
}

std::pair<Tensor, Tensor> reverse_sequence(const Tensor& frames, const Tensor& controls) {
    GFLOW_CHECK(frames.rank() >= 1 && controls.rank() == 2, ShapeError, "reverse_sequence: bad ranks");
    const std::size_t t_len = frames.dim(0);
    GFLOW_CHECK(controls.dim(0) == t_len, ShapeError, "reverse_sequence: frames and controls differ in length");
    const std::size_t frame = t_len == 0 ? 0 : frames.size() / t_len;
    const std::size_t cc = controls.dim(1);
    Tensor f(frames.shape()), u(controls.shape());
    for (std::size_t t = 0; t < t_len; ++t) {
        const std::size_t src = t_len - 1 - t;
        std::copy_n(frames.data() + src * frame, frame, f.data() + t * frame);
        for (std::size_t k = 0; k < cc; ++k) u[t * cc + k] = -controls[src * cc + k];
    }
    return {std::move(f), std::move(u)};
}

ReconstructionResult reconstruct(const flow::FlowModel& model, const ReconstructionRequest& request) {
    const auto& cfg = model.config();
    const std::size_t th = cfg.history, m = cfg.markers, c = cfg.channels, cc = cfg.control_channels;
    const std::size_t horizon = request.horizon == 0 ? th : request.horizon;
    GFLOW_CHECK(horizon >= th, ConfigError, "reconstruction horizon must be at least the history length");
    GFLOW_CHECK(request.mask.markers() == m && request.mask.frames() == th, ShapeError, "mask must be M x T_h");
    GFLOW_CHECK(request.candidates >= 1, ConfigError, "reconstruction needs at least one candidate");
    GFLOW_CHECK(request.history.rank() == 3 && request.history.dim(0) == th && request.history.size() == th * m * c,
                ShapeError, "history must be [T_h, M, C]");
    GFLOW_CHECK(request.controls.rank() == 2 && request.controls.dim(0) >= th + horizon, ShapeError,
                "control track must cover the history and the horizon");
    for (std::size_t t = 0; t < th; ++t) {
        bool any = false;
        for (std::size_t i = 0; i < m; ++i) any = any || request.mask.at(i, t) == 1;
        GFLOW_CHECK(any, ConfigError, "frame " + std::to_string(t) + " has all markers missing");
    }

    GenerationRequest forward;
    forward.history = request.history;
    forward.mask = request.mask;
    forward.controls = request.controls;
    forward.horizon = horizon;
    forward.temperature = request.temperature;
    forward.seed = request.seed;
    forward.stream = 0;
    ReconstructionResult result;
    result.future = generate(model, forward);

    // Reversed timeline: reversed future followed by the reversed past.
    Tensor span_controls({th + horizon, cc});
    std::copy_n(request.controls.data(), (th + horizon) * cc, span_controls.data());
    Tensor whole({th + horizon, m, c});
    std::copy_n(request.history.data(), th * m * c, whole.data());
    std::copy_n(result.future.data(), horizon * m * c, whole.data() + th * m * c);
    const auto [rev_frames, rev_controls] = reverse_sequence(whole, span_controls);

    // Backward pass: buffer rows are the standardized reversed future
    // followed by the backward frames as they are produced.
    const std::size_t frame = m * c, cw = cc * (th + 1), n = request.candidates;
    Tensor buffer({2 * th, frame});
    std::copy_n(model.standardize(rev_frames).data() + (horizon - th) * frame, th * frame, buffer.data());
    Tensor filled({th, m, c});
    flow::RecurrentStates states = model.initial_state(n);
    num::Rng rng = num::make_rng(request.seed, 1);
    Tensor history = Tensor::matrix(n * th * m, c), controls = Tensor::matrix(n, cw), z = Tensor::matrix(n * m, c);
    for (std::size_t step = 0; step < th; ++step) {
        const std::size_t past = th - 1 - step;
        for (std::size_t r = 0; r < n; ++r) {
            std::copy_n(buffer.data() + step * frame, th * frame, history.data() + r * th * frame);
            std::copy_n(rev_controls.data() + (horizon - th + step) * cc, cw, controls.data() + r * cw);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (std::size_t i = 0; i < frame; ++i) z[r * frame + i] = request.temperature * normal(rng);
        }
        const Tensor x = model.destandardize(model.inverse_values(z, history, controls, states, n));
        std::size_t best = 0;
        double best_score = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < n && n > 1; ++r) {
            double score = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (request.mask.at(i, past) == 0) continue;
                for (std::size_t k = 0; k < c; ++k) {
                    const double d = x[r * frame + i * c + k] - request.history[(past * m + i) * c + k];
                    score += d * d;
                }
            }
            if (score < best_score) best_score = score, best = r;
        }
        double* row = filled.data() + step * frame;
        std::copy_n(x.data() + best * frame, frame, row);
        for (std::size_t i = 0; i < m; ++i) {
            if (request.mask.at(i, past) == 1) std::copy_n(request.history.data() + (past * m + i) * c, c, row + i * c);
        }
        if (!std::all_of(row, row + frame, [](double v) { return std::isfinite(v); })) {
            throw NumericError("non-finite frame at reconstruction step " + std::to_string(step));
        }
        const Tensor standardized = model.standardize(Tensor({m, c}, std::vector<double>(row, row + frame)));
        std::copy_n(standardized.data(), frame, buffer.data() + (th + step) * frame);
        for (auto& s : states) {
            for (auto* part : {&s.h, &s.c}) {
                for (Tensor& v : *part) {
                    const std::size_t w = v.size() / n;
                    for (std::size_t r = 0; r < n; ++r) {
                        if (r != best) std::copy_n(v.data() + best * w, w, v.data() + r * w);
                    }
                }
            }
        }
    }

    result.past = request.history;
    result.provenance = MaskMatrix(m, th, 0);
    for (std::size_t t = 0; t < th; ++t) {
        const std::size_t src = th - 1 - t;
        for (std::size_t i = 0; i < m; ++i) {
            if (request.mask.at(i, t) == 1) continue;
            result.provenance.set(i, t, 1);
            std::copy_n(filled.data() + (src * m + i) * c, c, result.past.data() + (t * m + i) * c);
        }
    }
    return result;
}

}  // namespace gflow::seq
