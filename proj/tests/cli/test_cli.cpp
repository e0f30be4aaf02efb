// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end runs of the gflow executable.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gflow/data/clip.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path work(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gflow_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Exit status of `gflow <args>`; stderr goes to <dir>/stderr.txt.
int run(const fs::path& dir, const std::string& args) {
    const std::string cmd = std::string(GFLOW_CLI) + " " + args + " 2> " + (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// A narrow two-step model so the end-to-end runs take seconds.
fs::path write_small_config(const fs::path& dir, std::size_t steps = 30) {
    const nlohmann::json j = {
        {"model",
         {{"flow_steps", 2},
          {"kernel_schedule", {3, 5}},
          {"history", 4},
          {"temporal_kernel", 3},
          {"lstm_hidden", 8},
          {"sgcn_width", 4},
          {"stgcn_widths", {4, 4}},
          {"seed", 3}}},
        {"corpus", {{"clips", 3}, {"steps", 12}, {"seed", 11}, {"window", 40}}},
        {"train", {{"batch_size", 4}, {"steps", steps}, {"crop", 12}, {"step_size", 0.01}, {"init_batch", 16}, {"seed", 5}}},
        {"generate", {{"count", 3}, {"horizon", 20}, {"seed", 2}}},
    };
    const fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

void require_identical_dirs(const fs::path& a, const fs::path& b) {
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(a)) {
        if (e.path().filename() != "stderr.txt") names.insert(e.path().filename().string());
    }
    std::set<std::string> other;
    for (const auto& e : fs::directory_iterator(b)) {
        if (e.path().filename() != "stderr.txt") other.insert(e.path().filename().string());
    }
    REQUIRE(names == other);
    for (const auto& n : names) {
        INFO(n);
        CHECK(slurp(a / n) == slurp(b / n));
    }
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("synthetic ground truth evaluates to its known step counts") {
        const fs::path dir = work("truth");
        REQUIRE(run(dir, "synth --out " + (dir / "synth").string() + " --clips 4 --steps 17 --seed 21") == 0);
        REQUIRE(run(dir, "evaluate --data " + (dir / "synth").string() + " --out " + (dir / "eval").string()) == 0);
        const auto truth = lines(slurp(dir / "synth" / "truth.tsv"));
        const auto table = lines(slurp(dir / "eval" / "clips.tsv"));
        REQUIRE(truth.size() == 5);
        REQUIRE(table.size() == 5);
        for (std::size_t i = 1; i < 5; ++i) {
            const std::string name = truth[i].substr(0, truth[i].find('\t'));
            CHECK(table[i].rfind(name + "\t17\t", 0) == 0);
            CHECK(truth[i].find("\t17\t") != std::string::npos);
        }
        CHECK(lines(slurp(dir / "eval" / "report.txt"))[2] == "f_est_max_mean 17.000000");
    }

    TEST_CASE("output tables follow the documented schema") {
        const fs::path dir = work("schema");
        REQUIRE(run(dir, "synth --out " + (dir / "synth").string() + " --clips 2 --steps 10") == 0);
        REQUIRE(run(dir, "evaluate --data " + (dir / "synth").string() + " --out " + (dir / "eval").string()) == 0);
        const fs::path golden = fs::path(GFLOW_GOLDEN_DIR);
        CHECK(lines(slurp(dir / "eval" / "clips.tsv"))[0] + "\n" == slurp(golden / "clips_header.tsv"));
        CHECK(lines(slurp(dir / "eval" / "sweep.tsv"))[0] + "\n" == slurp(golden / "sweep_header.tsv"));
        const auto report = lines(slurp(dir / "eval" / "report.txt"));
        std::string keys = report[0] + "\n";
        for (std::size_t i = 1; i < report.size(); ++i) keys += report[i].substr(0, report[i].find(' ')) + "\n";
        CHECK(keys == slurp(golden / "report_keys.txt"));

        const auto manifest = nlohmann::json::parse(slurp(dir / "eval" / "manifest.json"));
        CHECK(manifest.at("schema") == "gflow-manifest");
        CHECK(manifest.at("command") == "evaluate");
        CHECK(manifest.at("version") == GFLOW_VERSION);
        CHECK(manifest.at("config_hash").get<std::string>().size() == 16);
        CHECK(manifest.at("outputs").size() == 3);
    }

    TEST_CASE("errors map to exit codes") {
        const fs::path dir = work("errors");
        fs::create_directories(dir / "empty");
        CHECK(run(dir, "evaluate --data " + (dir / "empty").string() + " --out " + (dir / "o").string()) == 2);
        CHECK(slurp(dir / "stderr.txt").find("empty batch") != std::string::npos);
        CHECK(run(dir, "evaluate --data " + (dir / "missing").string() + " --out " + (dir / "o").string()) == 4);
        CHECK(run(dir, "evaluate --bogus") == 2);
        CHECK(run(dir, "train --out " + (dir / "o").string() + " --synthetic --ablation XMG") == 2);
        std::ofstream(dir / "bad.json") << R"({"train": {"stpes": 3}})";
        CHECK(run(dir, "train --synthetic --config " + (dir / "bad.json").string() + " --out " + (dir / "o").string()) == 2);
        std::ofstream(dir / "empty" / "broken.clip") << "# gflow-clip 1\n# fps 20\nnot numbers\n";
        CHECK(run(dir, "evaluate --data " + (dir / "empty").string() + " --out " + (dir / "o").string()) == 4);
        CHECK(run(dir, "generate --checkpoint " + (dir / "none.ckpt").string() + " --data " + (dir / "empty").string() +
                           " --out " + (dir / "o").string()) == 4);
    }

    TEST_CASE("data directory from the environment") {
        const fs::path dir = work("env");
        REQUIRE(run(dir, "synth --out " + (dir / "synth").string() + " --clips 1 --steps 10") == 0);
        const std::string cmd = "GFLOW_DATA_DIR=" + (dir / "synth").string() + " " + GFLOW_CLI + " evaluate --out " +
                                (dir / "eval").string() + " 2> /dev/null";
        CHECK(std::system(cmd.c_str()) == 0);
        CHECK(fs::exists(dir / "eval" / "report.txt"));
    }

    TEST_CASE("train, generate, reconstruct and evaluate end to end") {
        const fs::path dir = work("pipeline");
        const fs::path cfg = write_small_config(dir);
        const std::string c = " --config " + cfg.string();
        REQUIRE(run(dir, "synth" + c + " --out " + (dir / "data").string()) == 0);
        REQUIRE(run(dir, "train" + c + " --data " + (dir / "data").string() + " --out " + (dir / "model").string()) == 0);
        const auto log = lines(slurp(dir / "model" / "train_log.tsv"));
        REQUIRE(log.size() == 31);
        CHECK(log[0] == "step\tnll_nats_per_frame");
        const auto manifest = nlohmann::json::parse(slurp(dir / "model" / "manifest.json"));
        CHECK(manifest.at("seeds").at("train") == 5);
        CHECK(manifest.at("seeds").at("model") == 3);
        CHECK(manifest.at("inputs").at("clips") == 3);

        // One seed history, three distinct continuations.
        fs::create_directories(dir / "one");
        fs::copy_file(dir / "data" / "synth_000.clip", dir / "one" / "synth_000.clip");
        const std::string ck = " --checkpoint " + (dir / "model" / "model.ckpt").string();
        REQUIRE(run(dir, "generate" + c + ck + " --data " + (dir / "one").string() + " --out " + (dir / "gen").string()) == 0);
        const std::string g0 = slurp(dir / "gen" / "gen_000.clip"), g1 = slurp(dir / "gen" / "gen_001.clip"),
                          g2 = slurp(dir / "gen" / "gen_002.clip");
        CHECK(g0 != g1);
        CHECK(g1 != g2);
        CHECK(g0 != g2);
        const auto clip = gflow::data::parse_clip_text(g0);
        CHECK(clip.frames() == 20);
        CHECK(clip.positions.all_finite());

        REQUIRE(run(dir, "generate" + c + ck + " --data " + (dir / "one").string() + " --out " + (dir / "cold").string() +
                             " --temperature 0") == 0);
        CHECK(slurp(dir / "cold" / "gen_000.clip") == slurp(dir / "cold" / "gen_001.clip"));

        REQUIRE(run(dir, "evaluate --data " + (dir / "gen").string() + " --out " + (dir / "gen_eval").string()) == 0);
        CHECK(slurp(dir / "gen_eval" / "report.txt").find("nan") == std::string::npos);

        // Reconstruction: preset none returns the input past, right_arm fills exactly 18, 19, 20.
        REQUIRE(run(dir, "reconstruct" + c + ck + " --data " + (dir / "one").string() + " --out " +
                             (dir / "rec_none").string() + " --mask none") == 0);
        const auto none = gflow::data::load_clip(dir / "rec_none" / "recon_000.clip");
        const auto source = gflow::data::load_clip(dir / "one" / "synth_000.clip").slice(0, 4);
        CHECK(std::memcmp(none.positions.data(), source.positions.data(), source.positions.size() * sizeof(double)) == 0);
        REQUIRE(run(dir, "reconstruct" + c + ck + " --data " + (dir / "data").string() + " --out " +
                             (dir / "rec_arm").string() + " --mask right_arm --count 6") == 0);
        const auto prov = lines(slurp(dir / "rec_arm" / "recon_004.provenance.tsv"));
        REQUIRE(prov.size() == 4 + 4);
        CHECK(prov[0] == "# gflow-provenance 1");
        for (std::size_t t = 0; t < 4; ++t) CHECK(prov[4 + t] == std::to_string(t) + "\t18,19,20");
        const auto table = lines(slurp(dir / "rec_arm" / "clips.tsv"));
        CHECK(table.size() == 7);
    }

    TEST_CASE("fixed seeds reproduce every output file") {
        const fs::path a = work("repro_a"), b = work("repro_b");
        for (const fs::path& dir : {a, b}) {
            const std::string c = " --config " + write_small_config(dir, 12).string();
            REQUIRE(run(dir, "synth" + c + " --out " + (dir / "data").string()) == 0);
            REQUIRE(run(dir, "train" + c + " --data " + (dir / "data").string() + " --out " + (dir / "model").string()) == 0);
            REQUIRE(run(dir, "generate" + c + " --checkpoint " + (dir / "model" / "model.ckpt").string() + " --data " +
                                 (dir / "data").string() + " --out " + (dir / "gen").string()) == 0);
            REQUIRE(run(dir, "evaluate" + c + " --data " + (dir / "gen").string() + " --out " + (dir / "eval").string()) == 0);
        }
        for (const char* sub : {"data", "model", "gen", "eval"}) {
            INFO(sub);
            require_identical_dirs(a / sub, b / sub);
        }
    }

    TEST_CASE("resumed training matches an uninterrupted run") {
        const fs::path dir = work("resume");
        const std::string c = " --config " + write_small_config(dir, 10).string();
        REQUIRE(run(dir, "synth" + c + " --out " + (dir / "data").string()) == 0);
        const std::string data = " --data " + (dir / "data").string();
        REQUIRE(run(dir, "train" + c + data + " --out " + (dir / "full").string()) == 0);
        REQUIRE(run(dir, "train" + c + data + " --steps 4 --out " + (dir / "part").string()) == 0);
        REQUIRE(run(dir, "train" + c + data + " --resume " + (dir / "part" / "model.ckpt").string() + " --out " +
                             (dir / "part").string()) == 0);
        CHECK(slurp(dir / "part" / "train_log.tsv") == slurp(dir / "full" / "train_log.tsv"));
        CHECK(slurp(dir / "part" / "model.ckpt") == slurp(dir / "full" / "model.ckpt"));
    }

    TEST_CASE("ablations train through the command line") {
        for (const char* ablation : {"SMG", "MG"}) {
            const fs::path dir = work(std::string("ablation_") + ablation);
            const std::string c = " --config " + write_small_config(dir, 3).string();
            CHECK(run(dir, "train" + c + " --synthetic --ablation " + ablation + " --out " + (dir / "m").string()) == 0);
            const auto manifest = nlohmann::json::parse(slurp(dir / "m" / "manifest.json"));
            CHECK(manifest.at("config").at("model").at("ablation") == ablation);
        }
    }
}
