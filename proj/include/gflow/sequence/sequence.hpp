// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Autoregressive generation and missing-marker reconstruction.
//
// Frames are [T, M, C] in physical units; control tracks are [T, 3] per-frame
// displacements as produced by the data module. A request's control track
// covers the seed history and the horizon: row t drives frame t, and the
// window for generated frame T_h + k is rows k .. k + T_h.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gflow/flow/model.hpp"

namespace gflow::seq {

using num::Tensor;

// Binary M x T_h matrix: 1 observed, 0 missing.
class MaskMatrix {
public:
    MaskMatrix() = default;
    MaskMatrix(std::size_t markers, std::size_t frames, std::uint8_t fill = 1);

    static MaskMatrix ones(std::size_t markers, std::size_t frames) { return {markers, frames, 1}; }

    std::size_t markers() const { return markers_; }
    std::size_t frames() const { return frames_; }
    std::uint8_t at(std::size_t marker, std::size_t frame) const { return values_[marker * frames_ + frame]; }
    void set(std::size_t marker, std::size_t frame, std::uint8_t v);
    void clear_marker(std::size_t marker);

    bool all_observed() const;
    std::size_t missing() const;
    const std::vector<std::uint8_t>& values() const { return values_; }

    // Elementwise product; missing in either input means missing.
    MaskMatrix operator*(const MaskMatrix& other) const;
    bool operator==(const MaskMatrix& other) const = default;

private:
    std::size_t markers_ = 0;
    std::size_t frames_ = 0;
    std::vector<std::uint8_t> values_;
};

const std::vector<std::string>& mask_preset_names();

// right_arm, left_leg, right_arm_left_leg, random4 (seeded) or none. Marker
// groups come from the skeleton's mask groups when defined, else
// right_arm = {18, 19, 20} and left_leg = {2, 3, 4}.
MaskMatrix mask_preset(const std::string& name, const skel::SkeletonSpec& skeleton, std::size_t frames,
                       std::uint64_t seed = 0);

struct GenerationRequest {
    Tensor history;                   // [T_h, M, C]
    std::optional<MaskMatrix> mask;   // missing entries are fed as zeros after standardization
    Tensor controls;                  // [>= T_h + horizon, 3]
    std::size_t horizon = 10;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

// Called once per step with the standardized history [B*T_h*M x C] and the
// control windows [B x 3*(T_h+1)] passed to the model.
using StepObserver = std::function<void(std::size_t step, const Tensor& history, const Tensor& controls)>;
// May edit the freshly generated physical frames [B, M, C] before they are
// emitted and enter the history.
using FrameHook = std::function<void(std::size_t step, Tensor& frames)>;

struct GenerationOptions {
    StepObserver observer;
    FrameHook hook;
};

// Requests must share the horizon. Each request draws its latents from its own
// (seed, stream), so results do not depend on how requests are batched.
std::vector<Tensor> generate_batch(const flow::FlowModel& model, const std::vector<GenerationRequest>& requests,
                                   const GenerationOptions& options = {});

// [horizon, M, C]; NumericError naming the step on a non-finite frame.
Tensor generate(const flow::FlowModel& model, const GenerationRequest& request, const GenerationOptions& options = {});

// Frame order reversed; control order reversed with all three channels negated.
std::pair<Tensor, Tensor> reverse_sequence(const Tensor& frames, const Tensor& controls);

struct ReconstructionResult {
    Tensor past;              // [T_h, M, C]; observed entries copied bit-exactly
    Tensor future;            // [horizon, M, C]
    MaskMatrix provenance;    // M x T_h: 1 generated, 0 observed
};

struct ReconstructionRequest {
    Tensor history;        // [T_h, M, C]; values at missing entries are ignored
    MaskMatrix mask;
    Tensor controls;       // [>= T_h + horizon, 3]
    std::size_t horizon = 0;  // 0 selects T_h
    double temperature = 1.0;
    std::uint64_t seed = 0;
    std::size_t candidates = 1;  // latent draws per backward frame
};

// Generates the future from the masked history, then generates backward over
// the past window from the reversed future (zero initial recurrent state),
// splicing observed entries into every backward frame. With several
// candidates, each backward frame keeps the draw whose observed markers lie
// closest (squared distance) to the observations, and its recurrent state.
ReconstructionResult reconstruct(const flow::FlowModel& model, const ReconstructionRequest& request);

}  // namespace gflow::seq
