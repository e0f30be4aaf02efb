// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/app/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gflow/errors.hpp"
#include "gflow/numcore/ops.hpp"

namespace gflow::app {

using num::Tensor;

nlohmann::json to_json(const CorpusConfig& c) {
    return {{"clips", c.clips},           {"steps", c.steps},       {"fps", c.fps},
            {"target_fps", c.target_fps}, {"marker_noise", c.marker_noise}, {"seed", c.seed}};
}

CorpusConfig corpus_config_from_json(const nlohmann::json& j) {
    CorpusConfig c;
    c.clips = j.value("clips", c.clips);
    c.steps = j.value("steps", c.steps);
    c.fps = j.value("fps", c.fps);
    c.target_fps = j.value("target_fps", c.target_fps);
    c.marker_noise = j.value("marker_noise", c.marker_noise);
    c.seed = j.value("seed", c.seed);
    return c;
}

std::vector<data::SynthClip> synth_corpus(const CorpusConfig& config) {
    GFLOW_CHECK(config.clips > 0, ConfigError, "corpus needs at least one clip");
    const auto params = data::random_gait_params(config.clips, config.seed);
    std::vector<data::SynthClip> out;
    out.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i];
        p.marker_noise = config.marker_noise;
        data::SynthClip s = data::synth_gait(p, config.steps, config.fps, config.seed * 1000003u + i);
        if (config.target_fps != config.fps) s.clip = data::resample(s.clip, config.target_fps);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<data::TrainingWindow> make_windows(const std::vector<data::MotionClip>& clips,
                                               const skel::SkeletonSpec& skeleton, std::size_t length,
                                               double overlap, bool augment) {
    std::vector<data::TrainingWindow> out;
    for (const auto& clip : clips) {
        for (const auto& w : data::window(clip, length, overlap)) {
            if (augment) {
                for (auto& a : data::augment(w, skeleton)) out.push_back(std::move(a));
            } else {
                out.push_back(w);
            }
        }
    }
    return out;
}

flow::SequenceBatch make_batch(const flow::FlowModel& model, const std::vector<data::TrainingWindow>& windows,
                               const std::vector<std::size_t>& indices, const std::vector<std::size_t>& starts,
                               std::size_t length) {
    GFLOW_CHECK(!indices.empty() && indices.size() == starts.size(), ShapeError, "batch indices and starts differ");
    const auto& c = model.config();
    if (length == 0) length = windows.at(indices[0]).clip.frames();
    const std::size_t frame = c.markers * c.channels, cc = c.control_channels;
    flow::SequenceBatch batch{Tensor({indices.size(), length, c.markers, c.channels}),
                              Tensor({indices.size(), length, cc})};
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const data::MotionClip& clip = windows.at(indices[b]).clip;
        GFLOW_CHECK(starts[b] + length <= clip.frames(), ShapeError,
                    "window " + std::to_string(indices[b]) + " is shorter than the requested crop");
        GFLOW_CHECK(clip.markers() == c.markers, ShapeError, "window marker count does not match the model");
        const Tensor z = model.standardize(clip.slice(starts[b], length).positions);
        std::copy(z.values().begin(), z.values().end(), batch.frames.data() + b * length * frame);
        std::copy(clip.controls.data() + starts[b] * cc, clip.controls.data() + (starts[b] + length) * cc,
                  batch.controls.data() + b * length * cc);
    }
    return batch;
}

double mean_nll(const flow::FlowModel& model, const std::vector<data::TrainingWindow>& windows,
                std::size_t batch_size) {
    GFLOW_CHECK(!windows.empty(), ConfigError, "no windows to evaluate");
    GFLOW_CHECK(batch_size > 0, ConfigError, "batch size must be positive");
    double total = 0.0, frames = 0.0;
    for (std::size_t begin = 0; begin < windows.size(); begin += batch_size) {
        const std::size_t end = std::min(windows.size(), begin + batch_size);
        std::vector<std::size_t> idx, starts(end - begin, 0);
        for (std::size_t i = begin; i < end; ++i) idx.push_back(i);
        const flow::SequenceBatch batch = make_batch(model, windows, idx, starts, 0);
        num::Tape t(&model.params(), false);
        total -= t.value(model.sequence_log_likelihood(t, batch)).item();
        frames += static_cast<double>(batch.batch() * (batch.length() - model.config().history));
    }
    return total / frames;
}

void TrainConfig::validate(std::size_t history) const {
    GFLOW_CHECK(batch_size > 0, ConfigError, "batch_size must be positive");
    GFLOW_CHECK(init_batch > 0, ConfigError, "init_batch must be positive");
    GFLOW_CHECK(step_size > 0.0 && std::isfinite(step_size), ConfigError, "step_size must be positive");
    GFLOW_CHECK(grad_clip >= 0.0, ConfigError, "grad_clip must be non-negative");
    GFLOW_CHECK(jitter >= 0.0, ConfigError, "jitter must be non-negative");
    GFLOW_CHECK(mask_prob >= 0.0 && mask_prob <= 1.0, ConfigError, "mask_prob must lie in [0, 1]");
    GFLOW_CHECK(mask_markers >= 1, ConfigError, "mask_markers must be positive");
    GFLOW_CHECK(crop == 0 || crop > history, ConfigError,
                "crop must exceed the history length " + std::to_string(history));
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"batch_size", c.batch_size}, {"steps", c.steps},         {"step_size", c.step_size},
            {"crop", c.crop},             {"grad_clip", c.grad_clip}, {"jitter", c.jitter},
            {"init_batch", c.init_batch}, {"mask_prob", c.mask_prob}, {"mask_markers", c.mask_markers},
            {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.batch_size = j.value("batch_size", c.batch_size);
    c.steps = j.value("steps", c.steps);
    c.step_size = j.value("step_size", c.step_size);
    c.crop = j.value("crop", c.crop);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.jitter = j.value("jitter", c.jitter);
    c.init_batch = j.value("init_batch", c.init_batch);
    c.mask_prob = j.value("mask_prob", c.mask_prob);
    c.mask_markers = j.value("mask_markers", c.mask_markers);
    c.seed = j.value("seed", c.seed);
    return c;
}

Trainer::Trainer(flow::FlowModel& model, std::vector<data::TrainingWindow> windows, TrainConfig config,
                 const flow::CheckpointExtras* resume)
    : model_(model), windows_(std::move(windows)), config_(config), adam_(num::AdamState::zeros_like(model.params())),
      rng_(num::make_rng(config.seed, 0x747261696e)) {
    config_.validate(model_.config().history);
    GFLOW_CHECK(windows_.size() >= 2, ConfigError, "training needs at least two windows");
    const std::size_t len = windows_.front().clip.frames();
    for (const auto& w : windows_) {
        GFLOW_CHECK(w.clip.frames() == len, ShapeError, "training windows differ in length");
    }
    GFLOW_CHECK(len > model_.config().history, ConfigError, "windows are shorter than the history");
    GFLOW_CHECK(config_.crop <= len, ConfigError, "crop is longer than the windows");

    if (resume != nullptr && resume->optimizer) {
        adam_ = *resume->optimizer;
        std::istringstream in(resume->training.at("rng").get<std::string>());
        in >> rng_;
        GFLOW_CHECK(!in.fail(), IoError, "corrupt sampler state in checkpoint");
        return;
    }
    flow::Standardization s = data::standardize_fit(windows_);
    for (double& v : s.std.values()) v = std::sqrt(v * v + config_.jitter * config_.jitter);
    model_.set_standardization(std::move(s));
    model_.initialize_actnorm(sample_batch(config_.init_batch));
}

flow::SequenceBatch Trainer::sample_batch(std::size_t count) {
    const std::size_t len = windows_.front().clip.frames();
    const std::size_t crop = config_.crop == 0 ? len : config_.crop;
    std::uniform_int_distribution<std::size_t> pick(0, windows_.size() - 1), offset(0, len - crop);
    std::vector<std::size_t> idx(count), starts(count);
    for (std::size_t b = 0; b < count; ++b) {
        idx[b] = pick(rng_);
        starts[b] = offset(rng_);
    }
    flow::SequenceBatch batch = make_batch(model_, windows_, idx, starts, crop);
    if (config_.jitter > 0.0) {
        const Tensor& sd = model_.standardization().std;
        std::normal_distribution<double> noise(0.0, 1.0);
        for (std::size_t i = 0; i < batch.frames.size(); ++i) {
            batch.frames[i] += config_.jitter / sd[i % sd.size()] * noise(rng_);
        }
    }
    if (config_.mask_prob > 0.0) {
        // The first T_h frames of a chosen sequence lose a random marker set
        // wherever they condition a prediction; targets stay complete.
        const std::size_t m = model_.config().markers, th = model_.config().history;
        const std::size_t most = std::min(config_.mask_markers, m);
        batch.observed = Tensor({count, crop, m}, 1.0);
        std::bernoulli_distribution masked(config_.mask_prob);
        std::uniform_int_distribution<std::size_t> how_many(1, most);
        std::vector<std::size_t> order(m);
        for (std::size_t b = 0; b < count; ++b) {
            if (!masked(rng_)) continue;
            std::iota(order.begin(), order.end(), std::size_t{0});
            const std::size_t k = how_many(rng_);
            for (std::size_t i = 0; i < k; ++i) {
                std::swap(order[i], order[std::uniform_int_distribution<std::size_t>(i, m - 1)(rng_)]);
                for (std::size_t t = 0; t < th; ++t) batch.observed[(b * crop + t) * m + order[i]] = 0.0;
            }
        }
    }
    return batch;
}

double Trainer::step() {
    const flow::SequenceBatch batch = sample_batch(config_.batch_size);
    const double frames = static_cast<double>(batch.batch() * (batch.length() - model_.config().history));
    num::Tape t(&model_.params());
    num::Var loss = num::ops::scale(t, model_.sequence_log_likelihood(t, batch), -1.0 / frames);
    const double nll = t.value(loss).item();
    GFLOW_CHECK(std::isfinite(nll), NumericError, "non-finite training loss");
    num::Gradients grads = t.backward(loss);
    if (config_.grad_clip > 0.0) {
        const double norm = num::global_norm(grads);
        if (std::isfinite(norm) && norm > config_.grad_clip) {
            const double f = config_.grad_clip / norm;
            for (auto& g : grads) {
                for (double& v : g.values()) v *= f;
            }
        }
    }
    num::adam_step(model_.params(), grads, adam_, config_.step_size);
    return nll;
}

flow::CheckpointExtras Trainer::extras() const {
    std::ostringstream rng;
    rng << rng_;
    flow::CheckpointExtras e;
    e.optimizer = adam_;
    e.training = {{"step", adam_.step}, {"rng", rng.str()}, {"config", to_json(config_)}};
    return e;
}

std::vector<TrainLogEntry> run_training(Trainer& trainer, flow::FlowModel& model, const TrainOptions& options) {
    std::vector<TrainLogEntry> log;
    flow::CheckpointExtras good = trainer.extras();
    std::vector<Tensor> good_values;
    const auto snapshot = [&] {
        good_values.clear();
        for (std::size_t i = 0; i < model.params().count(); ++i) {
            good_values.push_back(model.params().value(static_cast<num::ParamId>(i)));
        }
    };
    const auto save = [&](const flow::CheckpointExtras& extras) {
        if (options.checkpoint) flow::save_checkpoint(*options.checkpoint, model, extras);
    };
    snapshot();
    while (trainer.steps_done() < trainer.config().steps) {
        const std::size_t next = trainer.steps_done() + 1;
        TrainLogEntry entry{next, 0.0};
        try {
            entry.nll = trainer.step();
        } catch (const NumericError& e) {
            for (std::size_t i = 0; i < good_values.size(); ++i) {
                model.params().value(static_cast<num::ParamId>(i)) = good_values[i];
            }
            save(good);
            std::string msg = "training aborted at step " + std::to_string(next) + ": " + e.what();
            if (options.checkpoint) msg += "; last good checkpoint written to " + options.checkpoint->string();
            throw NumericError(msg);
        }
        log.push_back(entry);
        good = trainer.extras();
        snapshot();
        if (options.on_step) options.on_step(entry);
        if (options.checkpoint_every > 0 && next % options.checkpoint_every == 0) save(good);
    }
    save(good);
    return log;
}

}  // namespace gflow::app
