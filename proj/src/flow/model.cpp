// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/flow/model.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "gflow/errors.hpp"
#include "gflow/flow/layers.hpp"
#include "gflow/numcore/linalg.hpp"
#include "gflow/numcore/ops.hpp"
#include "gflow/numcore/random.hpp"

namespace gflow::flow {

namespace ops = num::ops;

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Permutation of a flat feature axis where [begin, begin + reps*M*inner) is
// laid out (rep, marker, inner).
void permute_segment(std::vector<std::size_t>& map, std::size_t begin, std::size_t reps, std::size_t inner,
                     const std::vector<std::size_t>& perm) {
    const std::size_t m = perm.size();
    for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < inner; ++j) {
                map[begin + (r * m + i) * inner + j] = begin + (r * m + perm[i]) * inner + j;
            }
        }
    }
}

std::vector<std::size_t> identity_map(std::size_t n) {
    std::vector<std::size_t> map(n);
    for (std::size_t i = 0; i < n; ++i) map[i] = i;
    return map;
}

Tensor permute_rows(const Tensor& src, const std::vector<std::size_t>& map) {
    Tensor out(src.shape());
    const std::size_t cols = src.size() / map.size();
    for (std::size_t r = 0; r < map.size(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) out[map[r] * cols + c] = src[r * cols + c];
    }
    return out;
}

Tensor permute_cols(const Tensor& src, const std::vector<std::size_t>& map) {
    Tensor out(src.shape());
    const std::size_t cols = map.size();
    const std::size_t rows = src.size() / cols;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + map[c]] = src[r * cols + c];
    }
    return out;
}

Tensor take_cols(const Tensor& x, std::size_t begin, std::size_t end) {
    const std::size_t c = x.cols(), w = end - begin;
    Tensor out = Tensor::matrix(x.rows(), w);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t j = 0; j < w; ++j) out[r * w + j] = x[r * c + begin + j];
    }
    return out;
}

}  // namespace

FlowModel::FlowModel(ModelConfig config, skel::SkeletonSpec skeleton, std::uint64_t seed)
    : config_(std::move(config)), skeleton_(std::move(skeleton)), seed_(seed) {
    config_.validate();
    skel::validate(skeleton_);
    GFLOW_CHECK(skeleton_.marker_count == config_.markers, ConfigError,
                "skeleton has " + std::to_string(skeleton_.marker_count) + " markers, model expects " +
                    std::to_string(config_.markers));
    const std::size_t m = config_.markers, c = config_.channels;
    standardization_ = {Tensor::matrix(m, c, 0.0), Tensor::matrix(m, c, 1.0)};

    std::map<std::size_t, std::shared_ptr<const skel::PartitionedAdjacency>> by_scale;
    auto adjacency = [&](std::size_t scale) {
        auto it = by_scale.find(scale);
        if (it != by_scale.end()) return it->second;
        auto a = std::make_shared<const skel::PartitionedAdjacency>(skel::partition(skeleton_, scale));
        by_scale.emplace(scale, a);
        adjacency_.push_back(a);
        return a;
    };

    num::Rng rng = num::make_rng(seed, 1);
    const bool graph = config_.ablation != Ablation::MG;
    if (graph) {
        stgcn_ = cond::make_stgcn(params_, "stgcn", adjacency(config_.stgcn_kernel_scale), c, config_.stgcn_widths,
                                  config_.history, config_.temporal_kernel, config_.ablation == Ablation::STMG, rng);
    }
    for (std::size_t k = 0; k < config_.flow_steps; ++k) {
        const std::string prefix = "step" + std::to_string(k);
        FlowStep step;
        step.kernel_scale = config_.kernel_schedule[k];
        step.actnorm_scale = params_.add(prefix + ".actnorm.scale", Tensor::matrix(m, c, 1.0));
        step.actnorm_bias = params_.add(prefix + ".actnorm.bias", Tensor::matrix(m, c, 0.0));
        step.mix = params_.add(prefix + ".mix", num::random_rotation(c, rng));
        if (graph) {
            step.sgcn = cond::make_sgcn(params_, prefix + ".sgcn", adjacency(step.kernel_scale), config_.split(),
                                        config_.sgcn_width, rng);
        }
        step.conditioner = cond::make_conditioner(params_, prefix + ".cond", config_.conditioner_input(),
                                                  config_.lstm_hidden, config_.lstm_layers,
                                                  2 * m * config_.transformed(), rng);
        steps_.push_back(std::move(step));
    }
}

std::size_t FlowModel::graph_parameter_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < params_.count(); ++i) {
        const std::string& name = params_.name(static_cast<num::ParamId>(i));
        if (name.rfind("stgcn.", 0) == 0 || name.find(".sgcn.") != std::string::npos) {
            n += params_.value(static_cast<num::ParamId>(i)).size();
        }
    }
    return n;
}

std::size_t FlowModel::temporal_parameter_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < params_.count(); ++i) {
        if (params_.name(static_cast<num::ParamId>(i)).find(".tconv") != std::string::npos) {
            n += params_.value(static_cast<num::ParamId>(i)).size();
        }
    }
    return n;
}

void FlowModel::set_standardization(Standardization s) {
    const std::size_t frame = config_.markers * config_.channels;
    GFLOW_CHECK(s.mean.size() == frame && s.std.size() == frame, ShapeError,
                "standardization must hold " + std::to_string(frame) + " entries");
    for (double v : s.std.values()) {
        GFLOW_CHECK(v > 0.0 && std::isfinite(v), NumericError, "standardization std entries must be positive");
    }
    s.mean = s.mean.reshaped({config_.markers, config_.channels});
    s.std = s.std.reshaped({config_.markers, config_.channels});
    standardization_ = std::move(s);
}

Tensor FlowModel::standardize(const Tensor& frames) const {
    const std::size_t frame = standardization_.mean.size();
    GFLOW_CHECK(frames.size() % frame == 0, ShapeError, "standardize: size not a multiple of M*C");
    Tensor out(frames.shape());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        out[i] = (frames[i] - standardization_.mean[i % frame]) / standardization_.std[i % frame];
    }
    return out;
}

Tensor FlowModel::destandardize(const Tensor& frames) const {
    const std::size_t frame = standardization_.mean.size();
    GFLOW_CHECK(frames.size() % frame == 0, ShapeError, "destandardize: size not a multiple of M*C");
    Tensor out(frames.shape());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        out[i] = frames[i] * standardization_.std[i % frame] + standardization_.mean[i % frame];
    }
    return out;
}

double FlowModel::standardization_logdet() const {
    double s = 0.0;
    for (double v : standardization_.std.values()) s -= std::log(v);
    return s;
}

RecurrentStates FlowModel::initial_state(std::size_t batch) const {
    RecurrentStates states;
    for (const FlowStep& step : steps_) states.push_back(cond::RecurrentValues::zeros(step.conditioner, batch));
    return states;
}

Context FlowModel::context(Tape& t, const Tensor& history, const Tensor& controls, std::size_t batch) const {
    const std::size_t m = config_.markers, c = config_.channels, th = config_.history;
    if (history.size() != batch * th * m * c) {
        throw ShapeError("history " + num::shape_string(history.shape()) + " does not hold " + std::to_string(batch) +
                         " windows of " + std::to_string(th) + " frames");
    }
    if (controls.size() != batch * config_.control_window()) {
        throw ShapeError("control window " + num::shape_string(controls.shape()) + " does not hold " +
                         std::to_string(batch) + " windows of " + std::to_string(config_.control_window()));
    }
    Context ctx;
    ctx.batch = batch;
    if (config_.ablation == Ablation::MG) {
        ctx.history = t.constant(history.reshaped({batch, th * m * c}));
    } else {
        ctx.history = cond::stgcn_apply(t, stgcn_, t.constant(history.reshaped({batch * th * m, c})), batch);
    }
    ctx.controls = t.constant(controls.reshaped({batch, config_.control_window()}));
    return ctx;
}

Var FlowModel::coupling_raw(Tape& t, std::size_t k, Var unchanged, const Context& ctx,
                            cond::RecurrentState& state) const {
    const FlowStep& step = steps_.at(k);
    const std::size_t b = ctx.batch, m = config_.markers;
    Var g;
    if (config_.ablation == Ablation::MG) {
        g = ops::reshape(t, unchanged, {b, m * config_.split()});
    } else {
        g = ops::tanh(t, cond::sgcn_apply(t, step.sgcn, unchanged, b));
        g = ops::reshape(t, g, {b, m * config_.sgcn_width});
    }
    const Var parts[] = {g, ctx.history, ctx.controls};
    return cond::condition(t, step.conditioner, ops::concat_cols(t, parts), state);
}

Var FlowModel::step_forward(Tape& t, std::size_t k, Var x, const Context& ctx, cond::RecurrentState& state,
                            Var* sample_logdet) const {
    const FlowStep& step = steps_.at(k);
    const std::size_t b = ctx.batch, m = config_.markers, c = config_.channels, c1 = config_.split();
    const std::size_t w = config_.transformed();
    Var a = ops::actnorm(t, x, t.param(step.actnorm_scale), t.param(step.actnorm_bias));
    Var mixed = ops::matmul(t, a, t.param(step.mix));
    Var x1 = ops::slice_cols(t, mixed, 0, c1);
    Var x2 = ops::slice_cols(t, mixed, c1, c);
    Var raw = coupling_raw(t, k, x1, ctx, state);
    Var raw_s = ops::reshape(t, ops::slice_cols(t, raw, 0, m * w), {b * m, w});
    Var shift = ops::reshape(t, ops::slice_cols(t, raw, m * w, 2 * m * w), {b * m, w});
    Var s = ops::add_scalar(t, ops::sigmoid(t, ops::add_scalar(t, raw_s, kScaleShift)), kScaleFloor);
    Var h2 = ops::mul(t, ops::add(t, x2, shift), s);
    if (sample_logdet != nullptr) *sample_logdet = ops::group_sum(t, ops::log(t, s), b);
    const Var parts[] = {x1, h2};
    return ops::concat_cols(t, parts);
}

FrameForward FlowModel::forward_frame(Tape& t, Var x, const Context& ctx,
                                      std::vector<cond::RecurrentState>& states) const {
    GFLOW_CHECK(states.size() == steps_.size(), ShapeError, "one recurrent state per flow step expected");
    FrameForward out;
    Var h = x;
    for (std::size_t k = 0; k < steps_.size(); ++k) {
        Var ld;
        h = step_forward(t, k, h, ctx, states[k], &ld);
        out.sample_logdet = out.sample_logdet.valid() ? ops::add(t, out.sample_logdet, ld) : ld;
    }
    out.z = h;
    return out;
}

Var FlowModel::parameter_logdet(Tape& t) const {
    const double m = static_cast<double>(config_.markers);
    Var total;
    for (const FlowStep& step : steps_) {
        Var an = ops::sum(t, ops::log_abs(t, t.param(step.actnorm_scale)));
        Var mix = ops::scale(t, ops::logabsdet(t, t.param(step.mix)), m);
        Var s = ops::add(t, an, mix);
        total = total.valid() ? ops::add(t, total, s) : s;
    }
    return total;
}

Var FlowModel::sequence_log_likelihood(Tape& t, const SequenceBatch& batch, const RecurrentStates* initial) const {
    const std::size_t b = batch.batch(), len = batch.length(), th = config_.history;
    GFLOW_CHECK(len > th, ShapeError,
                "sequence of " + std::to_string(len) + " frames is too short for a history of " + std::to_string(th));
    const std::size_t m = config_.markers, c = config_.channels;
    GFLOW_CHECK(initial == nullptr || initial->size() == steps_.size(), ShapeError,
                "one recurrent state per flow step expected");
    std::vector<cond::RecurrentState> states;
    for (std::size_t k = 0; k < steps_.size(); ++k) {
        states.push_back(initial != nullptr ? (*initial)[k].on_tape(t)
                                            : cond::RecurrentValues::zeros(steps_[k].conditioner, b).on_tape(t));
    }
    Var total;
    for (std::size_t f = th; f < len; ++f) {
        Context ctx = context(t, gather_history(batch, f, th), gather_controls(batch, f, th), b);
        Tensor x = Tensor::matrix(b * m, c);
        for (std::size_t s = 0; s < b; ++s) {
            for (std::size_t i = 0; i < m * c; ++i) x[s * m * c + i] = batch.frames[(s * len + f) * m * c + i];
        }
        FrameForward fw = forward_frame(t, t.constant(std::move(x)), ctx, states);
        Var lp = ops::sum(t, ops::add(t, ops::gaussian_logpdf(t, fw.z, b), fw.sample_logdet));
        total = total.valid() ? ops::add(t, total, lp) : lp;
    }
    const double frames = static_cast<double>(b * (len - th));
    Var per_frame = ops::scale(t, parameter_logdet(t), frames);
    return ops::add_scalar(t, ops::add(t, total, per_frame), frames * standardization_logdet());
}

Tensor FlowModel::forward_values(const Tensor& x, const Tensor& history, const Tensor& controls,
                                 RecurrentStates& states, std::size_t batch, std::vector<double>* logdet) const {
    GFLOW_CHECK(states.size() == steps_.size(), ShapeError, "one recurrent state per flow step expected");
    const std::size_t m = config_.markers, c = config_.channels;
    GFLOW_CHECK(x.size() == batch * m * c, ShapeError, "frame batch " + num::shape_string(x.shape()));
    Tape t(&params_, false);
    Context ctx = context(t, history, controls, batch);
    std::vector<cond::RecurrentState> st;
    for (const auto& s : states) st.push_back(s.on_tape(t));
    FrameForward fw = forward_frame(t, t.constant(x.reshaped({batch * m, c})), ctx, st);
    for (std::size_t k = 0; k < steps_.size(); ++k) states[k] = cond::RecurrentValues::from_tape(t, st[k]);
    if (logdet != nullptr) {
        const double shared = t.value(parameter_logdet(t)).item();
        const Tensor& ld = t.value(fw.sample_logdet);
        logdet->assign(batch, shared);
        for (std::size_t s = 0; s < batch; ++s) (*logdet)[s] += ld[s];
    }
    return t.value(fw.z);
}

Tensor FlowModel::inverse_values(const Tensor& z, const Tensor& history, const Tensor& controls,
                                 RecurrentStates& states, std::size_t batch) const {
    GFLOW_CHECK(states.size() == steps_.size(), ShapeError, "one recurrent state per flow step expected");
    const std::size_t m = config_.markers, c = config_.channels, c1 = config_.split(), w = config_.transformed();
    GFLOW_CHECK(z.size() == batch * m * c, ShapeError, "latent batch " + num::shape_string(z.shape()));
    Tape t(&params_, false);
    Context ctx = context(t, history, controls, batch);
    std::vector<cond::RecurrentState> st;
    for (const auto& s : states) st.push_back(s.on_tape(t));
    Tensor y = z.reshaped({batch * m, c});
    for (std::size_t k = steps_.size(); k-- > 0;) {
        const FlowStep& step = steps_[k];
        const Tensor& raw = t.value(coupling_raw(t, k, t.constant(take_cols(y, 0, c1)), ctx, st[k]));
        const Tensor s = coupling_scale(take_cols(raw, 0, m * w).reshaped({batch * m, w}));
        const Tensor shift = take_cols(raw, m * w, 2 * m * w).reshaped({batch * m, w});
        y = coupling_inverse(y, s, shift, c1);
        y = invconv_inverse(y, params_.value(step.mix));
        y = actnorm_inverse(y, params_.value(step.actnorm_scale), params_.value(step.actnorm_bias));
    }
    for (std::size_t k = 0; k < steps_.size(); ++k) states[k] = cond::RecurrentValues::from_tape(t, st[k]);
    return y;
}

std::vector<double> FlowModel::log_likelihood(const Tensor& frames, const Tensor& history, const Tensor& controls,
                                              RecurrentStates& states, std::size_t batch) const {
    std::vector<double> logdet;
    const Tensor z = forward_values(standardize(frames), history, controls, states, batch, &logdet);
    const std::size_t block = z.size() / batch;
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    std::vector<double> out(batch);
    for (std::size_t s = 0; s < batch; ++s) {
        double lp = 0.0;
        for (std::size_t i = 0; i < block; ++i) {
            const double v = z[s * block + i];
            lp += -0.5 * v * v - half_log_2pi;
        }
        out[s] = lp + logdet[s] + standardization_logdet();
        GFLOW_CHECK(std::isfinite(out[s]), NumericError, "non-finite log-likelihood for sample " + std::to_string(s));
    }
    return out;
}

Tensor FlowModel::sample_frame(const Tensor& z, const Tensor& history, const Tensor& controls, double temperature,
                               RecurrentStates& states, std::size_t batch) const {
    GFLOW_CHECK(temperature >= 0.0 && std::isfinite(temperature), ConfigError, "temperature must be >= 0");
    Tensor scaled = z;
    for (double& v : scaled.values()) v *= temperature;
    return destandardize(inverse_values(scaled, history, controls, states, batch));
}

void FlowModel::initialize_actnorm(const SequenceBatch& batch) {
    const std::size_t b = batch.batch(), len = batch.length(), th = config_.history;
    GFLOW_CHECK(len > th, ShapeError, "actnorm init needs sequences longer than the history");
    const std::size_t m = config_.markers, c = config_.channels, cw = config_.control_window();
    const std::size_t n = b * (len - th);
    Tensor hist = Tensor::matrix(n * th * m, c);
    Tensor ctrl = Tensor::matrix(n, cw);
    Tensor x = Tensor::matrix(n * m, c);
    std::size_t row = 0;
    for (std::size_t f = th; f < len; ++f) {
        const Tensor h = gather_history(batch, f, th);
        const Tensor u = gather_controls(batch, f, th);
        for (std::size_t s = 0; s < b; ++s, ++row) {
            std::copy_n(h.data() + s * th * m * c, th * m * c, hist.data() + row * th * m * c);
            std::copy_n(u.data() + s * cw, cw, ctrl.data() + row * cw);
            std::copy_n(batch.frames.data() + (s * len + f) * m * c, m * c, x.data() + row * m * c);
        }
    }
    Tape t(&params_, false);
    Context ctx = context(t, hist, ctrl, n);
    for (std::size_t k = 0; k < steps_.size(); ++k) {
        ActnormParams p = actnorm_init(x, m);
        params_.value(steps_[k].actnorm_scale) = std::move(p.scale);
        params_.value(steps_[k].actnorm_bias) = std::move(p.bias);
        cond::RecurrentState state = cond::RecurrentValues::zeros(steps_[k].conditioner, n).on_tape(t);
        x = t.value(step_forward(t, k, t.constant(x), ctx, state, nullptr));
    }
}

FlowModel FlowModel::clone() const {
    FlowModel out(config_, skeleton_, seed_);
    for (std::size_t i = 0; i < params_.count(); ++i) {
        out.params_.value(static_cast<num::ParamId>(i)) = params_.value(static_cast<num::ParamId>(i));
    }
    out.standardization_ = standardization_;
    return out;
}

FlowModel FlowModel::relabeled(const std::vector<std::size_t>& perm) const {
    const std::size_t m = config_.markers, c = config_.channels;
    GFLOW_CHECK(perm.size() == m, ShapeError, "permutation size does not match marker count");
    FlowModel out(config_, skel::relabel(skeleton_, perm), seed_);

    std::vector<std::size_t> frame_map = identity_map(m);
    permute_segment(frame_map, 0, 1, 1, perm);
    out.standardization_.mean = permute_rows(standardization_.mean, frame_map);
    out.standardization_.std = permute_rows(standardization_.std, frame_map);

    std::vector<std::size_t> input_map = identity_map(config_.conditioner_input());
    if (config_.ablation == Ablation::MG) {
        permute_segment(input_map, 0, 1, config_.split(), perm);
        permute_segment(input_map, m * config_.split(), config_.history, c, perm);
    } else {
        permute_segment(input_map, 0, 1, config_.sgcn_width, perm);
    }
    std::vector<std::size_t> output_map = identity_map(2 * m * config_.transformed());
    permute_segment(output_map, 0, 2, config_.transformed(), perm);

    for (std::size_t i = 0; i < params_.count(); ++i) {
        const auto id = static_cast<num::ParamId>(i);
        const std::string& name = params_.name(id);
        const Tensor& v = params_.value(id);
        Tensor& dst = out.params_.value(id);
        if (ends_with(name, ".actnorm.scale") || ends_with(name, ".actnorm.bias")) {
            dst = permute_rows(v, frame_map);
        } else if (ends_with(name, ".cond.lstm0.wx")) {
            dst = permute_rows(v, input_map);
        } else if (ends_with(name, ".cond.out_w") || ends_with(name, ".cond.out_b")) {
            dst = permute_cols(v, output_map);
        } else {
            dst = v;
        }
    }
    return out;
}

Tensor gather_history(const SequenceBatch& batch, std::size_t t, std::size_t history) {
    const std::size_t b = batch.batch(), len = batch.length();
    const std::size_t frame = batch.frames.size() / (b * len);
    GFLOW_CHECK(t >= history && t < len, ShapeError, "history window out of range");
    const std::size_t c = batch.frames.dim(3);
    Tensor out = Tensor::matrix(b * history * frame / c, c);
    for (std::size_t s = 0; s < b; ++s) {
        std::copy_n(batch.frames.data() + (s * len + t - history) * frame, history * frame,
                    out.data() + s * history * frame);
    }
    if (batch.observed.size() > 0) {
        const std::size_t m = frame / c;
        GFLOW_CHECK(batch.observed.size() == b * len * m, ShapeError, "observed mask does not match the frame batch");
        for (std::size_t s = 0; s < b; ++s) {
            for (std::size_t h = 0; h < history; ++h) {
                for (std::size_t j = 0; j < m; ++j) {
                    if (batch.observed[(s * len + t - history + h) * m + j] != 0.0) continue;
                    std::fill_n(out.data() + ((s * history + h) * m + j) * c, c, 0.0);
                }
            }
        }
    }
    return out;
}

Tensor gather_controls(const SequenceBatch& batch, std::size_t t, std::size_t history) {
    const std::size_t b = batch.batch(), len = batch.length();
    const std::size_t cc = batch.controls.dim(2);
    GFLOW_CHECK(batch.controls.dim(0) == b && batch.controls.dim(1) == len, ShapeError,
                "controls do not match the frame batch");
    GFLOW_CHECK(t >= history && t < len, ShapeError, "control window out of range");
    Tensor out = Tensor::matrix(b, cc * (history + 1));
    for (std::size_t s = 0; s < b; ++s) {
        std::copy_n(batch.controls.data() + (s * len + t - history) * cc, cc * (history + 1),
                    out.data() + s * cc * (history + 1));
    }
    return out;
}

}  // namespace gflow::flow
