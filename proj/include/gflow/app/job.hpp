// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reproducible jobs behind the command-line tool. Every command reads a
// JobConfig, writes its outputs into one directory and finishes with a
// manifest.json recording the config hash, the seeds, the code version and
// a checksum of every output file.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gflow/app/train.hpp"
#include "gflow/data/clip.hpp"
#include "gflow/flow/config.hpp"

namespace gflow::app {

inline constexpr int kManifestVersion = 1;

struct GenerateConfig {
    std::size_t count = 3;
    std::size_t horizon = 100;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    std::string controls = "clip";  // clip, straight, circle_left, circle_right
};

struct ReconstructConfig {
    std::size_t count = 1;
    std::string mask = "right_arm";
    std::size_t horizon = 0;  // 0 selects the history length
    double temperature = 1.0;
    std::uint64_t seed = 0;
    std::size_t candidates = 16;  // latent draws per backward frame
};

struct MetricsConfig {
    std::vector<double> grid;  // empty selects 0..600 mm/s in steps of 1
    std::size_t min_frames = 2;
    std::string reference = "auto";  // auto, skeleton, walker, self
};

struct JobConfig {
    std::filesystem::path data_dir;
    std::filesystem::path checkpoint;
    std::filesystem::path output;
    std::filesystem::path skeleton;  // empty selects the built-in skeleton
    flow::ModelConfig model;
    std::uint64_t model_seed = 0;
    bool synthetic = false;  // train on a generated corpus instead of data_dir
    CorpusConfig corpus;
    std::size_t window = 80;
    double overlap = 0.5;
    bool augment = true;
    TrainConfig train;
    std::size_t checkpoint_every = 0;
    GenerateConfig generate;
    ReconstructConfig reconstruct;
    MetricsConfig metrics;
    data::ClipFormat format = data::ClipFormat::Text;

    // Throws ConfigError on inconsistent settings.
    void validate() const;
};

// Sections: paths, model, corpus, train, generate, reconstruct, metrics.
// Missing keys keep their defaults; unknown keys are rejected.
nlohmann::json to_json(const JobConfig& c);
JobConfig job_config_from_json(const nlohmann::json& j);
JobConfig load_job_config(const std::filesystem::path& path);

// FNV-1a of the canonical JSON dump of the configuration.
std::string config_hash(const JobConfig& c);

// Clip files (*.clip, *.gfc) of a directory in name order.
std::vector<std::filesystem::path> list_clips(const std::filesystem::path& dir);

using LogSink = std::function<void(const std::string&)>;

// synth: walker clips, their footstep ground truth and a skeleton with the
// walker's bone lengths.
void cmd_synth(const JobConfig& config, const LogSink& log = {});
// train: checkpoint (model.ckpt) and per-step log (train_log.tsv).
void cmd_train(const JobConfig& config, const LogSink& log = {});
// generate: gen_NNN clips, each seeded from a clip of the data directory.
void cmd_generate(const JobConfig& config, const LogSink& log = {});
// reconstruct: completed past windows (recon_NNN), provenance sidecars and
// metrics of the completed windows.
void cmd_reconstruct(const JobConfig& config, const LogSink& log = {});
// evaluate: report.txt, clips.tsv and sweep.tsv over the data directory.
void cmd_evaluate(const JobConfig& config, const LogSink& log = {});

// Exit status for an exception: 2 config, 3 numeric, 4 I/O, 1 otherwise.
int exit_code(const std::exception& e);

}  // namespace gflow::app
