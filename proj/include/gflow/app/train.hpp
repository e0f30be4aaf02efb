// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Maximum-likelihood training on windowed motion clips.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "gflow/data/preprocess.hpp"
#include "gflow/data/synth.hpp"
#include "gflow/flow/checkpoint.hpp"
#include "gflow/numcore/optim.hpp"
#include "gflow/numcore/random.hpp"

namespace gflow::app {

struct CorpusConfig {
    std::size_t clips = 32;
    std::size_t steps = 24;   // footsteps per clip
    double fps = 60.0;        // synthesis rate before resampling
    double target_fps = 20.0;
    double marker_noise = 0.0;  // cm
    std::uint64_t seed = 1;
};

nlohmann::json to_json(const CorpusConfig& c);
CorpusConfig corpus_config_from_json(const nlohmann::json& j);

// Synthetic walkers resampled to the target rate.
std::vector<data::SynthClip> synth_corpus(const CorpusConfig& config);

// Windows of every clip, with mirror/reverse augmentation when `augment`.
std::vector<data::TrainingWindow> make_windows(const std::vector<data::MotionClip>& clips,
                                               const skel::SkeletonSpec& skeleton, std::size_t length = 80,
                                               double overlap = 0.5, bool augment = true);

// Standardized frames [B, L, M, C] and controls [B, L, 3] of windows[indices[b]],
// frames start .. start + length (length 0 means the whole window).
flow::SequenceBatch make_batch(const flow::FlowModel& model, const std::vector<data::TrainingWindow>& windows,
                               const std::vector<std::size_t>& indices, const std::vector<std::size_t>& starts,
                               std::size_t length);

// Mean negative log-likelihood per predicted frame, in nats, over whole windows.
double mean_nll(const flow::FlowModel& model, const std::vector<data::TrainingWindow>& windows,
                std::size_t batch_size = 16);

struct TrainConfig {
    std::size_t batch_size = 8;
    std::size_t steps = 2000;
    double step_size = 1e-3;
    std::size_t crop = 0;       // frames per training sequence; 0 uses whole windows
    double grad_clip = 0.0;     // global-norm clip; 0 disables
    double jitter = 0.1;        // cm of Gaussian noise added to every training frame
    std::size_t init_batch = 32;
    double mask_prob = 0.0;         // chance a sequence starts from a masked history
    std::size_t mask_markers = 6;   // masked markers drawn uniformly from 1..mask_markers
    std::uint64_t seed = 0;

    void validate(std::size_t history) const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

class Trainer {
public:
    // Fits the standardization on `windows` (widened by the jitter) and runs
    // the data-dependent actnorm initialization unless `resume` carries a
    // previous state.
    Trainer(flow::FlowModel& model, std::vector<data::TrainingWindow> windows, TrainConfig config,
            const flow::CheckpointExtras* resume = nullptr);

    // One optimizer step; returns the batch NLL per predicted frame (nats).
    // Throws NumericError on a non-finite loss or gradient, leaving the
    // parameters at their last finite values.
    double step();

    std::size_t steps_done() const { return static_cast<std::size_t>(adam_.step); }
    const TrainConfig& config() const { return config_; }

    // Optimizer state, sampler state and step count for resuming.
    flow::CheckpointExtras extras() const;

private:
    flow::SequenceBatch sample_batch(std::size_t count);

    flow::FlowModel& model_;
    std::vector<data::TrainingWindow> windows_;
    TrainConfig config_;
    num::AdamState adam_;
    num::Rng rng_;
};

struct TrainLogEntry {
    std::size_t step = 0;
    double nll = 0.0;
};

struct TrainOptions {
    std::function<void(const TrainLogEntry&)> on_step;
    std::optional<std::filesystem::path> checkpoint;
    std::size_t checkpoint_every = 0;  // 0 writes only at the end
};

// Runs the remaining steps of `trainer`, which must train `model`. On a
// numeric failure the parameters are restored to the last finished step, a
// checkpoint is written when a path is set, and the NumericError is rethrown
// with the step number.
std::vector<TrainLogEntry> run_training(Trainer& trainer, flow::FlowModel& model, const TrainOptions& options = {});

}  // namespace gflow::app
