// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container:
//   "GFLOWCKP" | u32 version | u64 header bytes | JSON header | f64 payload
// The header holds the model config, skeleton text, seed, standardization,
// parameter names and shapes, and free-form training metadata. The payload
// is every parameter in header order, followed by the Adam moments when an
// optimizer state is stored. All numbers are little-endian.

#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "gflow/flow/model.hpp"
#include "gflow/numcore/optim.hpp"

namespace gflow::flow {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointExtras {
    std::optional<num::AdamState> optimizer;
    nlohmann::json training = nlohmann::json::object();
};

struct LoadedCheckpoint {
    FlowModel model;
    CheckpointExtras extras;
};

// Writes to a temporary file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const FlowModel& model, const CheckpointExtras& extras = {});
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gflow::flow
