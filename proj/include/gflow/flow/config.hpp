// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace gflow::flow {

// STMG: full model. SMG: spatial graph only (no temporal convolution).
// MG: no graph components; the conditioner sees flattened raw features.
enum class Ablation { STMG, SMG, MG };

std::string to_string(Ablation a);
Ablation parse_ablation(const std::string& name);

// Graph kernel scale for each of `steps` flow steps, split 10/4/2 over
// scales 3/5/7 (rescaled proportionally when steps != 16).
std::vector<std::size_t> default_kernel_schedule(std::size_t steps);

struct ModelConfig {
    std::size_t markers = 21;
    std::size_t channels = 3;
    std::size_t flow_steps = 16;
    std::vector<std::size_t> kernel_schedule = default_kernel_schedule(16);
    std::size_t history = 10;
    std::size_t temporal_kernel = 9;
    std::size_t lstm_hidden = 512;
    std::size_t lstm_layers = 2;
    std::size_t sgcn_width = 16;
    std::vector<std::size_t> stgcn_widths{32, 64};
    std::size_t stgcn_kernel_scale = 3;
    std::size_t control_channels = 3;
    Ablation ablation = Ablation::STMG;

    // Unchanged channels in the coupling split.
    std::size_t split() const { return (channels + 1) / 2; }
    std::size_t transformed() const { return channels - split(); }
    std::size_t control_window() const { return control_channels * (history + 1); }
    std::size_t conditioner_input() const;

    void validate() const;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Raw network output to coupling scale: sigmoid(raw + 2) + 1e-3.
inline constexpr double kScaleShift = 2.0;
inline constexpr double kScaleFloor = 1e-3;

}  // namespace gflow::flow
