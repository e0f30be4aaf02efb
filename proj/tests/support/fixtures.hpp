// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small models and random inputs shared by the unit and acceptance tests.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gflow/flow/model.hpp"
#include "gflow/numcore/random.hpp"
#include "gflow/skeleton/skeleton.hpp"

namespace gflow::testing {

// Path graph 0-1-...-(n-1) centred on `center`; mirror pairs i <-> n-1-i.
inline skel::SkeletonSpec chain_skeleton(std::size_t n, std::size_t center) {
    std::string text = "markers " + std::to_string(n) + "\ncenter " + std::to_string(center) + "\n";
    for (std::size_t i = 0; i + 1 < n; ++i) text += "edge " + std::to_string(i) + " " + std::to_string(i + 1) + "\n";
    for (std::size_t i = 0; i < n / 2; ++i) {
        if (i != n - 1 - i) text += "mirror " + std::to_string(i) + " " + std::to_string(n - 1 - i) + "\n";
    }
    return skel::parse_skeleton(text);
}

// M=4, C=2, T_h=3.
inline flow::ModelConfig tiny_config(flow::Ablation ablation = flow::Ablation::STMG) {
    flow::ModelConfig c;
    c.markers = 4;
    c.channels = 2;
    c.flow_steps = 3;
    c.kernel_schedule = {3, 3, 5};
    c.history = 3;
    c.temporal_kernel = 3;
    c.lstm_hidden = 5;
    c.lstm_layers = 2;
    c.sgcn_width = 3;
    c.stgcn_widths = {3, 4};
    c.stgcn_kernel_scale = 3;
    c.ablation = ablation;
    return c;
}

// Full-depth (16-step) model on the 21-marker skeleton with small widths.
inline flow::ModelConfig full_depth_config(flow::Ablation ablation = flow::Ablation::STMG) {
    flow::ModelConfig c;
    c.lstm_hidden = 16;
    c.sgcn_width = 4;
    c.stgcn_widths = {8, 16};
    c.ablation = ablation;
    return c;
}

// Shallow, narrow model on the 21-marker skeleton.
inline flow::ModelConfig small_skeleton_config(flow::Ablation ablation = flow::Ablation::STMG) {
    flow::ModelConfig c;
    c.flow_steps = 2;
    c.kernel_schedule = {3, 5};
    c.history = 4;
    c.temporal_kernel = 3;
    c.lstm_hidden = 8;
    c.sgcn_width = 4;
    c.stgcn_widths = {4, 4};
    c.ablation = ablation;
    return c;
}

// Random mean and std in [0.5, 2] per (marker, channel).
inline void random_standardization(flow::FlowModel& model, std::uint64_t seed) {
    num::Rng rng = num::make_rng(seed, 78);
    const auto& c = model.config();
    flow::Standardization s{num::normal({c.markers, c.channels}, rng, 10.0),
                            num::uniform({c.markers, c.channels}, rng, 0.5, 2.0)};
    model.set_standardization(std::move(s));
}

inline num::Tensor random_tensor(num::Shape shape, num::Rng& rng, double scale = 1.0) {
    return num::normal(std::move(shape), rng, scale);
}

// Moves every parameter away from its initial value so no gradient path is
// trivially zero and couplings are far from identity.
inline void randomize_parameters(flow::FlowModel& model, std::uint64_t seed, double magnitude = 0.3) {
    num::Rng rng = num::make_rng(seed, 77);
    num::ParamStore& params = model.params();
    for (std::size_t i = 0; i < params.count(); ++i) {
        const auto id = static_cast<num::ParamId>(i);
        const std::string& name = params.name(id);
        num::Tensor& v = params.value(id);
        std::normal_distribution<double> noise(0.0, magnitude);
        if (name.find("actnorm.scale") != std::string::npos) {
            for (double& x : v.values()) x *= std::exp(noise(rng));
        } else {
            for (double& x : v.values()) x += noise(rng);
        }
    }
}

inline flow::RecurrentStates random_states(const flow::FlowModel& model, std::size_t batch, num::Rng& rng,
                                           double scale = 0.5) {
    flow::RecurrentStates states = model.initial_state(batch);
    for (auto& s : states) {
        for (auto& h : s.h) h = num::uniform(h.shape(), rng, -scale, scale);
        for (auto& c : s.c) c = num::uniform(c.shape(), rng, -2 * scale, 2 * scale);
    }
    return states;
}

// Random standardized sequences [B, L, M, C] with smooth-ish controls.
inline flow::SequenceBatch random_sequences(const flow::ModelConfig& c, std::size_t batch, std::size_t length,
                                            num::Rng& rng) {
    flow::SequenceBatch b;
    b.frames = num::normal({batch, length, c.markers, c.channels}, rng);
    b.controls = num::normal({batch, length, c.control_channels}, rng, 0.5);
    return b;
}

}  // namespace gflow::testing
