// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// gflow: synthesize, train, generate, reconstruct and evaluate motion.

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "gflow/app/job.hpp"
#include "gflow/errors.hpp"

namespace {

using gflow::app::JobConfig;

// Flags shared by every command; values given on the command line override
// the config file.
struct Common {
    std::string config;
    std::string data;
    std::string output;
    std::string skeleton;
    std::string format;
};

template <class T>
void override_if(const CLI::App& app, const std::string& flag, T& target, const T& value) {
    if (app.count(flag) > 0) target = value;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gflow: graph-conditioned normalizing flows for skeletal motion"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(GFLOW_VERSION));

    Common common;
    JobConfig flags;
    std::string ablation, checkpoint;
    bool synthetic = false;
    std::size_t clips = 0, steps = 0;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* cmd, bool data, bool format) {
        cmd->add_option("--config", common.config, "JSON job configuration");
        if (data) cmd->add_option("--data", common.data, "input clip directory (default: $GFLOW_DATA_DIR)");
        cmd->add_option("--out", common.output, "output directory")->required();
        cmd->add_option("--skeleton", common.skeleton, "skeleton file (default: built-in 21-marker skeleton)");
        if (format) {
            cmd->add_option("--format", common.format, "clip format for written clips")
                ->check(CLI::IsMember({"text", "binary"}));
        }
    };

    CLI::App* synth = app.add_subcommand("synth", "write synthetic walker clips with ground truth");
    add_common(synth, false, true);
    synth->add_option("--clips", clips, "number of clips");
    synth->add_option("--steps", steps, "footsteps per clip");
    synth->add_option("--seed", seed, "corpus seed");
    synth->add_option("--noise", flags.corpus.marker_noise, "marker noise (cm)");

    CLI::App* train = app.add_subcommand("train", "fit a model by maximum likelihood");
    add_common(train, true, false);
    train->add_flag("--synthetic", synthetic, "train on a generated walker corpus instead of --data");
    train->add_option("--ablation", ablation, "STMG, SMG or MG")->check(CLI::IsMember({"STMG", "SMG", "MG"}));
    train->add_option("--steps", steps, "optimizer steps");
    train->add_option("--seed", seed, "training seed");
    train->add_option("--resume", checkpoint, "checkpoint to continue from");

    CLI::App* generate = app.add_subcommand("generate", "generate sequences from seed clips");
    add_common(generate, true, true);
    generate->add_option("--checkpoint", checkpoint, "trained model")->required();
    generate->add_option("--count", flags.generate.count, "number of sequences");
    generate->add_option("--horizon", flags.generate.horizon, "frames per sequence");
    generate->add_option("--temperature", flags.generate.temperature, "latent temperature");
    generate->add_option("--seed", seed, "sampling seed");
    generate->add_option("--controls", flags.generate.controls, "control preset")
        ->check(CLI::IsMember({"clip", "straight", "circle_left", "circle_right"}));

    CLI::App* reconstruct = app.add_subcommand("reconstruct", "fill masked markers of past windows");
    add_common(reconstruct, true, true);
    reconstruct->add_option("--checkpoint", checkpoint, "trained model")->required();
    reconstruct->add_option("--mask", flags.reconstruct.mask, "masking preset");
    reconstruct->add_option("--count", flags.reconstruct.count, "number of windows");
    reconstruct->add_option("--horizon", flags.reconstruct.horizon, "forward frames (0: history length)");
    reconstruct->add_option("--temperature", flags.reconstruct.temperature, "latent temperature");
    reconstruct->add_option("--seed", seed, "sampling seed");
    reconstruct->add_option("--candidates", flags.reconstruct.candidates, "latent draws per reconstructed frame");

    CLI::App* evaluate = app.add_subcommand("evaluate", "footstep and bone-length metrics of a clip directory");
    add_common(evaluate, true, false);
    evaluate->add_option("--reference", flags.metrics.reference, "bone-length reference")
        ->check(CLI::IsMember({"auto", "skeleton", "walker", "self"}));
    evaluate->add_option("--min-frames", flags.metrics.min_frames, "shortest footstep in frames");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* cmd = app.get_subcommands().front();
    try {
        JobConfig c = common.config.empty() ? JobConfig{} : gflow::app::load_job_config(common.config);
        if (!common.data.empty()) {
            c.data_dir = common.data;
        } else if (const char* env = std::getenv("GFLOW_DATA_DIR"); env != nullptr && c.data_dir.empty()) {
            c.data_dir = env;
        }
        c.output = common.output;
        if (!common.skeleton.empty()) c.skeleton = common.skeleton;
        if (!common.format.empty()) c.format = common.format == "binary" ? gflow::data::ClipFormat::Binary
                                                                         : gflow::data::ClipFormat::Text;
        if (!checkpoint.empty()) c.checkpoint = checkpoint;

        const std::string name = cmd->get_name();
        if (name == "synth") {
            override_if(*cmd, "--clips", c.corpus.clips, clips);
            override_if(*cmd, "--steps", c.corpus.steps, steps);
            override_if(*cmd, "--seed", c.corpus.seed, seed);
            override_if(*cmd, "--noise", c.corpus.marker_noise, flags.corpus.marker_noise);
        } else if (name == "train") {
            if (synthetic) c.synthetic = true;
            if (!ablation.empty()) c.model.ablation = gflow::flow::parse_ablation(ablation);
            override_if(*cmd, "--steps", c.train.steps, steps);
            override_if(*cmd, "--seed", c.train.seed, seed);
        } else if (name == "generate") {
            override_if(*cmd, "--count", c.generate.count, flags.generate.count);
            override_if(*cmd, "--horizon", c.generate.horizon, flags.generate.horizon);
            override_if(*cmd, "--temperature", c.generate.temperature, flags.generate.temperature);
            override_if(*cmd, "--seed", c.generate.seed, seed);
            override_if(*cmd, "--controls", c.generate.controls, flags.generate.controls);
        } else if (name == "reconstruct") {
            override_if(*cmd, "--mask", c.reconstruct.mask, flags.reconstruct.mask);
            override_if(*cmd, "--count", c.reconstruct.count, flags.reconstruct.count);
            override_if(*cmd, "--horizon", c.reconstruct.horizon, flags.reconstruct.horizon);
            override_if(*cmd, "--temperature", c.reconstruct.temperature, flags.reconstruct.temperature);
            override_if(*cmd, "--seed", c.reconstruct.seed, seed);
            override_if(*cmd, "--candidates", c.reconstruct.candidates, flags.reconstruct.candidates);
        } else if (name == "evaluate") {
            override_if(*cmd, "--reference", c.metrics.reference, flags.metrics.reference);
            override_if(*cmd, "--min-frames", c.metrics.min_frames, flags.metrics.min_frames);
        }

        const auto log = [](const std::string& line) {
            std::cerr << line;
            if (line.empty() || line.back() != '\n') std::cerr << '\n';
        };
        static const std::map<std::string, void (*)(const JobConfig&, const gflow::app::LogSink&)> commands{
            {"synth", gflow::app::cmd_synth},
            {"train", gflow::app::cmd_train},
            {"generate", gflow::app::cmd_generate},
            {"reconstruct", gflow::app::cmd_reconstruct},
            {"evaluate", gflow::app::cmd_evaluate},
        };
        commands.at(name)(c, log);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "gflow " << cmd->get_name() << ": " << e.what() << '\n';
        return gflow::app::exit_code(e);
    }
}
