// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/app/job.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "gflow/errors.hpp"
#include "gflow/metrics/metrics.hpp"
#include "gflow/sequence/sequence.hpp"

namespace gflow::app {

namespace fs = std::filesystem;
using nlohmann::json;
using num::Tensor;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& section) {
    GFLOW_CHECK(j.is_object(), ConfigError, "config section '" + section + "' must be an object");
    for (const auto& [key, _] : j.items()) {
        GFLOW_CHECK(allowed.count(key) > 0, ConfigError, "unknown key '" + key + "' in config section '" + section + "'");
    }
}

std::string format_name(data::ClipFormat f) { return f == data::ClipFormat::Binary ? "binary" : "text"; }

data::ClipFormat parse_format(const std::string& name) {
    if (name == "text") return data::ClipFormat::Text;
    if (name == "binary") return data::ClipFormat::Binary;
    throw ConfigError("unknown clip format '" + name + "' (expected text or binary)");
}

std::string extension(data::ClipFormat f) { return f == data::ClipFormat::Binary ? ".gfc" : ".clip"; }

std::string numbered(const std::string& stem, std::size_t i, const std::string& ext) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", i);
    return stem + "_" + buf + ext;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    GFLOW_CHECK(in.good(), IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    GFLOW_CHECK(out.good(), IoError, "cannot write " + path.string());
}

void prepare_output(const fs::path& dir) {
    GFLOW_CHECK(!dir.empty(), ConfigError, "no output directory given");
    std::error_code ec;
    fs::create_directories(dir, ec);
    GFLOW_CHECK(!ec && fs::is_directory(dir), IoError, "cannot create output directory " + dir.string());
}

skel::SkeletonSpec job_skeleton(const JobConfig& c) {
    return c.skeleton.empty() ? skel::default_skeleton() : skel::load_skeleton(c.skeleton);
}

json config_without_paths(const JobConfig& c) {
    json j = to_json(c);
    j.erase("paths");
    return j;
}

struct Inputs {
    std::vector<std::string> names;
    std::vector<data::MotionClip> clips;
    std::uint64_t hash = 0xcbf29ce484222325ULL;
};

Inputs load_inputs(const fs::path& dir, std::size_t markers) {
    Inputs in;
    for (const auto& p : list_clips(dir)) {
        in.clips.push_back(data::load_clip(p));
        GFLOW_CHECK(in.clips.back().markers() == markers, ConfigError,
                    p.filename().string() + " has " + std::to_string(in.clips.back().markers()) +
                        " markers, the skeleton has " + std::to_string(markers));
        in.names.push_back(p.filename().string());
        in.hash = data::fnv1a(hex64(data::checksum(in.clips.back())), in.hash);
    }
    return in;
}

// Manifest written after every other output of a command.
void write_manifest(const fs::path& dir, const std::string& command, const JobConfig& c, const json& seeds,
                    const json& inputs, const std::vector<std::string>& outputs) {
    json files = json::array();
    for (const auto& name : outputs) {
        files.push_back({{"file", name}, {"fnv1a", hex64(data::fnv1a(read_file(dir / name)))}});
    }
    json m;
    m["schema"] = "gflow-manifest";
    m["schema_version"] = kManifestVersion;
    m["command"] = command;
    m["version"] = GFLOW_VERSION;
    m["config_hash"] = config_hash(c);
    m["config"] = config_without_paths(c);
    m["seeds"] = seeds;
    m["inputs"] = inputs;
    m["outputs"] = files;
    write_file(dir / "manifest.json", m.dump(2) + "\n");
}

json inputs_json(const Inputs& in) { return {{"clips", in.clips.size()}, {"fnv1a", hex64(in.hash)}}; }

void emit(const LogSink& log, const std::string& line) {
    if (log) log(line);
}

std::vector<double> reference_lengths(const MetricsConfig& m, const skel::SkeletonSpec& skeleton,
                                      const data::MotionClip& clip) {
    if (m.reference == "self") return metrics::mean_bone_lengths(clip, skeleton);
    if (m.reference == "walker" || (m.reference == "auto" && skeleton.bone_lengths.empty())) {
        GFLOW_CHECK(skeleton.edges.size() == data::walker_bone_lengths().size(), ConfigError,
                    "walker reference lengths need the default skeleton layout");
        return data::walker_bone_lengths();
    }
    GFLOW_CHECK(!skeleton.bone_lengths.empty(), ConfigError, "skeleton has no bone lengths to use as reference");
    return skeleton.bone_lengths;
}

// Metrics of every clip, in input order; clips are independent jobs.
metrics::BatchReport evaluate_clips(const std::vector<std::string>& names, const std::vector<data::MotionClip>& clips,
                                    const skel::SkeletonSpec& skeleton, const MetricsConfig& m) {
    const std::vector<double> grid = m.grid.empty() ? metrics::default_grid() : m.grid;
    std::vector<metrics::ClipMetrics> out(clips.size());
    std::vector<std::string> errors(clips.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < clips.size(); ++i) {
        try {
            out[i].name = names[i];
            out[i].footsteps = metrics::footstep_sweep(clips[i], skeleton, grid, m.min_frames);
            out[i].bones = metrics::bone_length_analysis(clips[i], skeleton, reference_lengths(m, skeleton, clips[i]));
        } catch (const std::exception& e) {
            errors[i] = names[i] + ": " + e.what();
        }
    }
    for (const auto& e : errors) GFLOW_CHECK(e.empty(), ConfigError, e);
    return metrics::aggregate(std::move(out));
}

std::vector<std::string> write_reports(const fs::path& dir, const metrics::BatchReport& report) {
    write_file(dir / "report.txt", metrics::format_report(report));
    write_file(dir / "clips.tsv", metrics::format_clip_table(report));
    const auto& grid = report.clips.front().footsteps.grid;
    write_file(dir / "sweep.tsv", metrics::format_sweep_table(grid, report.mean_curve));
    return {"report.txt", "clips.tsv", "sweep.tsv"};
}

Tensor preset_controls(const std::string& preset, const data::MotionClip& seed, std::size_t history,
                       std::size_t horizon) {
    const std::size_t rows = history + horizon;
    if (preset == "clip") {
        GFLOW_CHECK(seed.frames() >= rows, ConfigError,
                    "control preset 'clip' needs " + std::to_string(rows) + " frames, the seed clip has " +
                        std::to_string(seed.frames()));
        return seed.slice(0, rows).controls;
    }
    double forward = 0.0;
    for (std::size_t t = 0; t < history; ++t) forward += seed.controls.at(t, data::kForward);
    forward /= static_cast<double>(history);
    double turn = 0.0;
    if (preset == "circle_left" || preset == "circle_right") {
        // Radius 300 cm.
        turn = (preset == "circle_left" ? 1.0 : -1.0) * forward / 300.0;
    } else {
        GFLOW_CHECK(preset == "straight", ConfigError,
                    "unknown control preset '" + preset + "' (expected clip, straight, circle_left or circle_right)");
    }
    Tensor u({rows, data::kControlChannels});
    for (std::size_t t = 0; t < rows; ++t) {
        if (t < history) {
            for (std::size_t k = 0; k < data::kControlChannels; ++k) u.at(t, k) = seed.controls.at(t, k);
        } else {
            u.at(t, data::kForward) = forward;
            u.at(t, data::kRotation) = turn;
        }
    }
    return u;
}

std::string provenance_text(const seq::MaskMatrix& p) {
    std::string out = "# gflow-provenance 1\n# markers " + std::to_string(p.markers()) + "\n# frames " +
                      std::to_string(p.frames()) + "\nframe\tgenerated_markers\n";
    for (std::size_t t = 0; t < p.frames(); ++t) {
        out += std::to_string(t) + "\t";
        bool first = true;
        for (std::size_t i = 0; i < p.markers(); ++i) {
            if (p.at(i, t) == 1) {
                out += (first ? "" : ",") + std::to_string(i);
                first = false;
            }
        }
        out += first ? "-\n" : "\n";
    }
    return out;
}

}  // namespace

void JobConfig::validate() const {
    model.validate();
    train.validate(model.history);
    GFLOW_CHECK(window > model.history, ConfigError, "window must exceed the history length");
    GFLOW_CHECK(overlap >= 0.0 && overlap < 1.0, ConfigError, "overlap must be in [0, 1)");
    GFLOW_CHECK(generate.count > 0, ConfigError, "generate.count must be positive");
    GFLOW_CHECK(generate.horizon > 0, ConfigError, "generate.horizon must be positive");
    GFLOW_CHECK(generate.temperature >= 0.0, ConfigError, "generate.temperature must be non-negative");
    GFLOW_CHECK(reconstruct.count > 0, ConfigError, "reconstruct.count must be positive");
    GFLOW_CHECK(reconstruct.candidates > 0, ConfigError, "reconstruct.candidates must be positive");
    GFLOW_CHECK(reconstruct.temperature >= 0.0, ConfigError, "reconstruct.temperature must be non-negative");
    const auto& names = seq::mask_preset_names();
    GFLOW_CHECK(std::find(names.begin(), names.end(), reconstruct.mask) != names.end(), ConfigError,
                "unknown masking preset '" + reconstruct.mask + "'");
    GFLOW_CHECK(metrics.reference == "auto" || metrics.reference == "skeleton" || metrics.reference == "walker" ||
                    metrics.reference == "self",
                ConfigError, "metrics.reference must be auto, skeleton, walker or self");
    GFLOW_CHECK(metrics.min_frames >= 1, ConfigError, "metrics.min_frames must be at least 1");
    GFLOW_CHECK(std::is_sorted(metrics.grid.begin(), metrics.grid.end()), ConfigError,
                "metrics.grid must be ascending");
}

json to_json(const JobConfig& c) {
    json j;
    j["paths"] = {{"data", c.data_dir.string()},
                  {"checkpoint", c.checkpoint.string()},
                  {"output", c.output.string()},
                  {"skeleton", c.skeleton.string()}};
    j["model"] = flow::to_json(c.model);
    j["model"]["seed"] = c.model_seed;
    j["corpus"] = to_json(c.corpus);
    j["corpus"]["synthetic"] = c.synthetic;
    j["corpus"]["window"] = c.window;
    j["corpus"]["overlap"] = c.overlap;
    j["corpus"]["augment"] = c.augment;
    j["corpus"]["format"] = format_name(c.format);
    j["train"] = to_json(c.train);
    j["train"]["checkpoint_every"] = c.checkpoint_every;
    j["generate"] = {{"count", c.generate.count},
                     {"horizon", c.generate.horizon},
                     {"temperature", c.generate.temperature},
                     {"seed", c.generate.seed},
                     {"controls", c.generate.controls}};
    j["reconstruct"] = {{"count", c.reconstruct.count},
                        {"mask", c.reconstruct.mask},
                        {"horizon", c.reconstruct.horizon},
                        {"temperature", c.reconstruct.temperature},
                        {"seed", c.reconstruct.seed},
                        {"candidates", c.reconstruct.candidates}};
    j["metrics"] = {{"grid", c.metrics.grid}, {"min_frames", c.metrics.min_frames}, {"reference", c.metrics.reference}};
    return j;
}

JobConfig job_config_from_json(const json& j) {
    JobConfig c;
    try {
        check_keys(j, {"paths", "model", "corpus", "train", "generate", "reconstruct", "metrics"}, "top level");
        if (j.contains("paths")) {
            const json& p = j.at("paths");
            check_keys(p, {"data", "checkpoint", "output", "skeleton"}, "paths");
            c.data_dir = p.value("data", std::string());
            c.checkpoint = p.value("checkpoint", std::string());
            c.output = p.value("output", std::string());
            c.skeleton = p.value("skeleton", std::string());
        }
        if (j.contains("model")) {
            json m = j.at("model");
            check_keys(m, {"markers", "channels", "flow_steps", "kernel_schedule", "history", "temporal_kernel",
                           "lstm_hidden", "lstm_layers", "sgcn_width", "stgcn_widths", "stgcn_kernel_scale",
                           "control_channels", "ablation", "seed"},
                       "model");
            c.model_seed = m.value("seed", c.model_seed);
            m.erase("seed");
            c.model = flow::model_config_from_json(m);
        }
        if (j.contains("corpus")) {
            const json& s = j.at("corpus");
            check_keys(s, {"clips", "steps", "fps", "target_fps", "marker_noise", "seed", "synthetic", "window",
                           "overlap", "augment", "format"},
                       "corpus");
            c.corpus = corpus_config_from_json(s);
            c.synthetic = s.value("synthetic", c.synthetic);
            c.window = s.value("window", c.window);
            c.overlap = s.value("overlap", c.overlap);
            c.augment = s.value("augment", c.augment);
            c.format = parse_format(s.value("format", format_name(c.format)));
        }
        if (j.contains("train")) {
            const json& t = j.at("train");
            check_keys(t, {"batch_size", "steps", "step_size", "crop", "grad_clip", "jitter", "init_batch", "mask_prob",
                           "mask_markers", "seed", "checkpoint_every"},
                       "train");
            c.train = train_config_from_json(t);
            c.checkpoint_every = t.value("checkpoint_every", c.checkpoint_every);
        }
        if (j.contains("generate")) {
            const json& g = j.at("generate");
            check_keys(g, {"count", "horizon", "temperature", "seed", "controls"}, "generate");
            c.generate.count = g.value("count", c.generate.count);
            c.generate.horizon = g.value("horizon", c.generate.horizon);
            c.generate.temperature = g.value("temperature", c.generate.temperature);
            c.generate.seed = g.value("seed", c.generate.seed);
            c.generate.controls = g.value("controls", c.generate.controls);
        }
        if (j.contains("reconstruct")) {
            const json& r = j.at("reconstruct");
            check_keys(r, {"count", "mask", "horizon", "temperature", "seed", "candidates"}, "reconstruct");
            c.reconstruct.count = r.value("count", c.reconstruct.count);
            c.reconstruct.mask = r.value("mask", c.reconstruct.mask);
            c.reconstruct.horizon = r.value("horizon", c.reconstruct.horizon);
            c.reconstruct.temperature = r.value("temperature", c.reconstruct.temperature);
            c.reconstruct.seed = r.value("seed", c.reconstruct.seed);
            c.reconstruct.candidates = r.value("candidates", c.reconstruct.candidates);
        }
        if (j.contains("metrics")) {
            const json& m = j.at("metrics");
            check_keys(m, {"grid", "min_frames", "reference"}, "metrics");
            if (m.contains("grid")) c.metrics.grid = m.at("grid").get<std::vector<double>>();
            c.metrics.min_frames = m.value("min_frames", c.metrics.min_frames);
            c.metrics.reference = m.value("reference", c.metrics.reference);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

JobConfig load_job_config(const fs::path& path) {
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return job_config_from_json(j);
}

std::string config_hash(const JobConfig& c) { return hex64(data::fnv1a(config_without_paths(c).dump())); }

std::vector<fs::path> list_clips(const fs::path& dir) {
    GFLOW_CHECK(!dir.empty(), ConfigError, "no data directory given (use --data or GFLOW_DATA_DIR)");
    std::error_code ec;
    GFLOW_CHECK(fs::is_directory(dir, ec), IoError, "data directory " + dir.string() + " does not exist");
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".clip" || ext == ".gfc")) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void cmd_synth(const JobConfig& c, const LogSink& log) {
    c.validate();
    prepare_output(c.output);
    const auto corpus = synth_corpus(c.corpus);
    std::vector<std::string> outputs;
    std::string truth = "clip\tfootsteps\tmin_swing_mm_s\tsource\n";
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const std::string name = numbered("synth", i, extension(c.format));
        data::save_clip(c.output / name, corpus[i].clip, c.format);
        outputs.push_back(name);
        char row[64];
        std::snprintf(row, sizeof row, "\t%zu\t%.6f\t", corpus[i].truth.footsteps.size(), corpus[i].truth.min_swing_speed);
        truth += name + row + corpus[i].clip.source + "\n";
    }
    write_file(c.output / "truth.tsv", truth);
    skel::SkeletonSpec s = skel::default_skeleton();
    s.bone_lengths = data::walker_bone_lengths();
    write_file(c.output / "skeleton.cfg", skel::format_skeleton(s));
    outputs.insert(outputs.end(), {"truth.tsv", "skeleton.cfg"});
    write_manifest(c.output, "synth", c, {{"corpus", c.corpus.seed}}, json::object(), outputs);
    emit(log, "wrote " + std::to_string(corpus.size()) + " clips to " + c.output.string());
}

void cmd_train(const JobConfig& c, const LogSink& log) {
    c.validate();
    prepare_output(c.output);
    const skel::SkeletonSpec skeleton = job_skeleton(c);
    GFLOW_CHECK(skeleton.marker_count == c.model.markers, ConfigError,
                "model has " + std::to_string(c.model.markers) + " markers, the skeleton " +
                    std::to_string(skeleton.marker_count));

    Inputs inputs;
    if (c.synthetic) {
        for (auto& s : synth_corpus(c.corpus)) {
            inputs.names.push_back(s.clip.source);
            inputs.hash = data::fnv1a(hex64(data::checksum(s.clip)), inputs.hash);
            inputs.clips.push_back(std::move(s.clip));
        }
    } else {
        inputs = load_inputs(c.data_dir, c.model.markers);
        GFLOW_CHECK(!inputs.clips.empty(), ConfigError, "no clips found in " + c.data_dir.string());
        for (auto& clip : inputs.clips) {
            if (clip.fps != c.corpus.target_fps) clip = data::resample(clip, c.corpus.target_fps);
        }
    }
    auto windows = make_windows(inputs.clips, skeleton, c.window, c.overlap, c.augment);
    GFLOW_CHECK(windows.size() >= 2, ConfigError,
                "the data yields " + std::to_string(windows.size()) + " windows of " + std::to_string(c.window) +
                    " frames; at least two are needed");

    std::optional<flow::LoadedCheckpoint> resumed;
    if (!c.checkpoint.empty()) {
        resumed.emplace(flow::load_checkpoint(c.checkpoint));
        GFLOW_CHECK(flow::to_json(resumed->model.config()) == flow::to_json(c.model), ConfigError,
                    "checkpoint model configuration differs from the job configuration");
        GFLOW_CHECK(resumed->extras.optimizer.has_value(), ConfigError, "checkpoint has no optimizer state to resume");
    }
    flow::FlowModel model = resumed ? std::move(resumed->model) : flow::FlowModel(c.model, skeleton, c.model_seed);
    Trainer trainer(model, std::move(windows), c.train, resumed ? &resumed->extras : nullptr);

    // The log keeps the lines of earlier runs when resuming.
    std::string log_text = "step\tnll_nats_per_frame\n";
    if (resumed && fs::exists(c.output / "train_log.tsv")) {
        std::istringstream prev(read_file(c.output / "train_log.tsv"));
        std::string line;
        std::getline(prev, line);
        while (std::getline(prev, line)) {
            const std::size_t step = std::stoul(line.substr(0, line.find('\t')));
            if (step <= trainer.steps_done()) log_text += line + "\n";
        }
    }
    TrainOptions opts;
    opts.checkpoint = c.output / "model.ckpt";
    opts.checkpoint_every = c.checkpoint_every;
    const std::size_t every = std::max<std::size_t>(1, c.train.steps / 20);
    opts.on_step = [&](const TrainLogEntry& e) {
        char row[64];
        std::snprintf(row, sizeof row, "%zu\t%.6f\n", e.step, e.nll);
        log_text += row;
        if (e.step % every == 0 || e.step == 1) emit(log, "step " + std::to_string(e.step) + " nll " + row);
    };
    try {
        run_training(trainer, model, opts);
    } catch (...) {
        write_file(c.output / "train_log.tsv", log_text);
        throw;
    }
    write_file(c.output / "train_log.tsv", log_text);
    write_manifest(c.output, "train", c, {{"model", c.model_seed}, {"train", c.train.seed}, {"corpus", c.corpus.seed}},
                   inputs_json(inputs), {"model.ckpt", "train_log.tsv"});
}

void cmd_generate(const JobConfig& c, const LogSink& log) {
    c.validate();
    GFLOW_CHECK(!c.checkpoint.empty(), ConfigError, "no checkpoint given");
    const flow::LoadedCheckpoint ck = flow::load_checkpoint(c.checkpoint);
    const flow::FlowModel& model = ck.model;
    if (!c.skeleton.empty()) {
        GFLOW_CHECK(skel::format_skeleton(job_skeleton(c)) == skel::format_skeleton(model.skeleton()), ConfigError,
                    "checkpoint skeleton does not match " + c.skeleton.string());
    }
    prepare_output(c.output);
    const std::size_t th = model.config().history;
    const Inputs inputs = load_inputs(c.data_dir, model.config().markers);
    GFLOW_CHECK(!inputs.clips.empty(), ConfigError, "no seed clips found in " + c.data_dir.string());

    std::vector<seq::GenerationRequest> requests;
    std::vector<data::MotionClip> seeds;
    for (std::size_t i = 0; i < c.generate.count; ++i) {
        data::MotionClip seed = inputs.clips[i % inputs.clips.size()];
        if (seed.fps != c.corpus.target_fps) seed = data::resample(seed, c.corpus.target_fps);
        GFLOW_CHECK(seed.frames() >= th, ConfigError,
                    inputs.names[i % inputs.clips.size()] + " is shorter than the history");
        seq::GenerationRequest r;
        r.history = seed.slice(0, th).positions;
        r.controls = preset_controls(c.generate.controls, seed, th, c.generate.horizon);
        r.horizon = c.generate.horizon;
        r.temperature = c.generate.temperature;
        r.seed = c.generate.seed;
        r.stream = i;
        requests.push_back(std::move(r));
        seeds.push_back(std::move(seed));
    }
    const std::vector<Tensor> frames = seq::generate_batch(model, requests);
    std::vector<std::string> outputs;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        data::MotionClip out;
        out.positions = frames[i];
        out.controls = Tensor({c.generate.horizon, data::kControlChannels});
        out.fps = c.corpus.target_fps;
        out.source = "generated:" + inputs.names[i % inputs.names.size()];
        for (std::size_t t = 0; t < c.generate.horizon; ++t) {
            for (std::size_t k = 0; k < data::kControlChannels; ++k) {
                out.controls.at(t, k) = requests[i].controls.at(th + t, k);
            }
        }
        const std::string name = numbered("gen", i, extension(c.format));
        data::save_clip(c.output / name, out, c.format);
        outputs.push_back(name);
    }
    write_manifest(c.output, "generate", c, {{"generate", c.generate.seed}, {"model", model.seed()}},
                   inputs_json(inputs), outputs);
    emit(log, "wrote " + std::to_string(frames.size()) + " sequences to " + c.output.string());
}

void cmd_reconstruct(const JobConfig& c, const LogSink& log) {
    c.validate();
    GFLOW_CHECK(!c.checkpoint.empty(), ConfigError, "no checkpoint given");
    const flow::LoadedCheckpoint ck = flow::load_checkpoint(c.checkpoint);
    const flow::FlowModel& model = ck.model;
    const skel::SkeletonSpec& skeleton = model.skeleton();
    prepare_output(c.output);
    const std::size_t th = model.config().history;
    const std::size_t horizon = c.reconstruct.horizon == 0 ? th : c.reconstruct.horizon;
    const Inputs inputs = load_inputs(c.data_dir, model.config().markers);
    GFLOW_CHECK(!inputs.clips.empty(), ConfigError, "no clips found in " + c.data_dir.string());

    std::vector<std::string> outputs, names;
    std::vector<data::MotionClip> completed;
    for (std::size_t i = 0; i < c.reconstruct.count; ++i) {
        const std::size_t src = i % inputs.clips.size();
        data::MotionClip clip = inputs.clips[src];
        if (clip.fps != c.corpus.target_fps) clip = data::resample(clip, c.corpus.target_fps);
        GFLOW_CHECK(clip.frames() >= th + horizon, ConfigError,
                    inputs.names[src] + " is shorter than history plus horizon");
        // Successive passes over the inputs move the window forward by one history length.
        const std::size_t starts = clip.frames() - th - horizon + 1;
        const std::size_t start = (i / inputs.clips.size()) * th % starts;
        seq::ReconstructionRequest r;
        r.history = clip.slice(start, th).positions;
        r.controls = clip.slice(start, th + horizon).controls;
        r.mask = seq::mask_preset(c.reconstruct.mask, skeleton, th, c.reconstruct.seed + i);
        r.horizon = horizon;
        r.temperature = c.reconstruct.temperature;
        r.seed = c.reconstruct.seed + i;
        r.candidates = c.reconstruct.candidates;
        for (std::size_t t = 0; t < th; ++t) {
            for (std::size_t m = 0; m < model.config().markers; ++m) {
                if (r.mask.at(m, t) == 0) {
                    for (std::size_t k = 0; k < model.config().channels; ++k) r.history.at(t, m, k) = 0.0;
                }
            }
        }
        const seq::ReconstructionResult res = seq::reconstruct(model, r);
        data::MotionClip out = clip.slice(start, th);
        out.positions = res.past;
        out.source = "reconstructed:" + inputs.names[src];
        const std::string name = numbered("recon", i, extension(c.format));
        data::save_clip(c.output / name, out, c.format);
        const std::string side = numbered("recon", i, ".provenance.tsv");
        write_file(c.output / side, provenance_text(res.provenance));
        outputs.insert(outputs.end(), {name, side});
        names.push_back(name);
        completed.push_back(std::move(out));
    }
    const auto report = evaluate_clips(names, completed, skeleton, c.metrics);
    for (const auto& f : write_reports(c.output, report)) outputs.push_back(f);
    write_manifest(c.output, "reconstruct", c, {{"reconstruct", c.reconstruct.seed}, {"model", model.seed()}},
                   inputs_json(inputs), outputs);
    emit(log, "reconstructed " + std::to_string(completed.size()) + " windows into " + c.output.string());
}

void cmd_evaluate(const JobConfig& c, const LogSink& log) {
    c.validate();
    const skel::SkeletonSpec skeleton = job_skeleton(c);
    const Inputs inputs = load_inputs(c.data_dir, skeleton.marker_count);
    GFLOW_CHECK(!inputs.clips.empty(), ConfigError, "empty batch: no clips found in " + c.data_dir.string());
    prepare_output(c.output);
    const auto report = evaluate_clips(inputs.names, inputs.clips, skeleton, c.metrics);
    const auto outputs = write_reports(c.output, report);
    write_manifest(c.output, "evaluate", c, json::object(), inputs_json(inputs), outputs);
    emit(log, "evaluated " + std::to_string(inputs.clips.size()) + " clips");
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) != nullptr) return 2;
    if (dynamic_cast<const NumericError*>(&e) != nullptr) return 3;
    if (dynamic_cast<const IoError*>(&e) != nullptr) return 4;
    return 1;
}

}  // namespace gflow::app
