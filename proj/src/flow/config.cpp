// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/flow/config.hpp"

#include <cmath>

#include "gflow/errors.hpp"

namespace gflow::flow {

std::string to_string(Ablation a) {
    switch (a) {
        case Ablation::STMG: return "STMG";
        case Ablation::SMG: return "SMG";
        case Ablation::MG: return "MG";
    }
    return "STMG";
}

Ablation parse_ablation(const std::string& name) {
    if (name == "STMG" || name == "stmg") return Ablation::STMG;
    if (name == "SMG" || name == "smg") return Ablation::SMG;
    if (name == "MG" || name == "mg") return Ablation::MG;
    throw ConfigError("unknown ablation '" + name + "' (expected STMG, SMG or MG)");
}

std::vector<std::size_t> default_kernel_schedule(std::size_t steps) {
    const double k = static_cast<double>(steps);
    std::size_t n3 = static_cast<std::size_t>(std::lround(k * 10.0 / 16.0));
    std::size_t n5 = static_cast<std::size_t>(std::lround(k * 4.0 / 16.0));
    if (n3 > steps) n3 = steps;
    if (n3 + n5 > steps) n5 = steps - n3;
    const std::size_t n7 = steps - n3 - n5;
    std::vector<std::size_t> schedule;
    schedule.insert(schedule.end(), n3, 3);
    schedule.insert(schedule.end(), n5, 5);
    schedule.insert(schedule.end(), n7, 7);
    return schedule;
}

std::size_t ModelConfig::conditioner_input() const {
    if (ablation == Ablation::MG) return markers * split() + history * markers * channels + control_window();
    return markers * sgcn_width + stgcn_widths.back() + control_window();
}

void ModelConfig::validate() const {
    GFLOW_CHECK(markers >= 1, ConfigError, "markers must be >= 1");
    GFLOW_CHECK(channels >= 2, ConfigError, "channels must be >= 2 for a coupling split");
    GFLOW_CHECK(flow_steps >= 1, ConfigError, "flow_steps must be >= 1");
    GFLOW_CHECK(kernel_schedule.size() == flow_steps, ConfigError,
                "kernel schedule has " + std::to_string(kernel_schedule.size()) + " entries for " +
                    std::to_string(flow_steps) + " flow steps");
    for (std::size_t d : kernel_schedule) {
        GFLOW_CHECK(d >= 3 && d % 2 == 1, ConfigError, "kernel scale " + std::to_string(d) + " must be odd and >= 3");
    }
    GFLOW_CHECK(history >= 1, ConfigError, "history must be >= 1");
    GFLOW_CHECK(temporal_kernel % 2 == 1, ConfigError, "temporal kernel must be odd");
    GFLOW_CHECK(lstm_hidden >= 1 && lstm_layers >= 1, ConfigError, "lstm hidden size and layer count must be >= 1");
    GFLOW_CHECK(sgcn_width >= 1, ConfigError, "sgcn width must be >= 1");
    GFLOW_CHECK(!stgcn_widths.empty(), ConfigError, "stgcn needs at least one block");
    for (std::size_t w : stgcn_widths) GFLOW_CHECK(w >= 1, ConfigError, "stgcn widths must be >= 1");
    GFLOW_CHECK(stgcn_kernel_scale >= 3 && stgcn_kernel_scale % 2 == 1, ConfigError,
                "stgcn kernel scale must be odd and >= 3");
    GFLOW_CHECK(control_channels >= 1, ConfigError, "control_channels must be >= 1");
}

nlohmann::json to_json(const ModelConfig& c) {
    return nlohmann::json{{"markers", c.markers},
                          {"channels", c.channels},
                          {"flow_steps", c.flow_steps},
                          {"kernel_schedule", c.kernel_schedule},
                          {"history", c.history},
                          {"temporal_kernel", c.temporal_kernel},
                          {"lstm_hidden", c.lstm_hidden},
                          {"lstm_layers", c.lstm_layers},
                          {"sgcn_width", c.sgcn_width},
                          {"stgcn_widths", c.stgcn_widths},
                          {"stgcn_kernel_scale", c.stgcn_kernel_scale},
                          {"control_channels", c.control_channels},
                          {"ablation", to_string(c.ablation)}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    try {
        c.markers = j.value("markers", c.markers);
        c.channels = j.value("channels", c.channels);
        c.flow_steps = j.value("flow_steps", c.flow_steps);
        c.kernel_schedule = j.contains("kernel_schedule")
                                ? j.at("kernel_schedule").get<std::vector<std::size_t>>()
                                : default_kernel_schedule(c.flow_steps);
        c.history = j.value("history", c.history);
        c.temporal_kernel = j.value("temporal_kernel", c.temporal_kernel);
        c.lstm_hidden = j.value("lstm_hidden", c.lstm_hidden);
        c.lstm_layers = j.value("lstm_layers", c.lstm_layers);
        c.sgcn_width = j.value("sgcn_width", c.sgcn_width);
        if (j.contains("stgcn_widths")) c.stgcn_widths = j.at("stgcn_widths").get<std::vector<std::size_t>>();
        c.stgcn_kernel_scale = j.value("stgcn_kernel_scale", c.stgcn_kernel_scale);
        c.control_channels = j.value("control_channels", c.control_channels);
        c.ablation = parse_ablation(j.value("ablation", std::string("STMG")));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace gflow::flow
