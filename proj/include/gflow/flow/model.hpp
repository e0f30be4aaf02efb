// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Graph-conditioned autoregressive normalizing flow over single frames.
//
// A frame [M x C] is standardized, then passed through K steps of
// actnorm -> 1x1 channel convolution -> affine coupling. The coupling's scale
// and bias come from a per-step recurrent conditioner that sees the unchanged
// half of the frame (through an S-GCN), the history window (through a shared
// ST-GCN) and the control window.
//
// Batches are folded into rows: a batch of B frames is [B*M x C], a batch of
// histories is [B*T_h*M x C] (rows ordered sample, time, marker) and a batch
// of control windows is [B x controls*(T_h+1)] (time-major).
//
// Every history argument is in standardized units.

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "gflow/conditioning/conditioning.hpp"
#include "gflow/flow/config.hpp"
#include "gflow/skeleton/skeleton.hpp"

namespace gflow::flow {

using num::Tape;
using num::Tensor;
using num::Var;

struct FlowStep {
    num::ParamId actnorm_scale = -1;  // [M x C]
    num::ParamId actnorm_bias = -1;   // [M x C]
    num::ParamId mix = -1;            // [C x C]
    std::size_t kernel_scale = 0;
    cond::SgcnLayer sgcn;             // unused for the MG ablation
    cond::RecurrentConditioner conditioner;
};

struct Standardization {
    Tensor mean;  // [M x C]
    Tensor std;   // [M x C]
};

using RecurrentStates = std::vector<cond::RecurrentValues>;

// Per-frame conditioning shared by all flow steps.
struct Context {
    Var history;   // pooled ST-GCN features, or flattened history for MG
    Var controls;  // [B x control window]
    std::size_t batch = 0;
};

struct FrameForward {
    Var z;              // [B*M x C]
    Var sample_logdet;  // [B x 1], coupling terms
};

// Training windows: B sequences of L frames in standardized units.
struct SequenceBatch {
    Tensor frames;    // [B, L, M, C]
    Tensor controls;  // [B, L, control channels]
    Tensor observed;  // [B, L, M] or empty; 0 cells are fed as zeros wherever the frame is history
    std::size_t batch() const { return frames.dim(0); }
    std::size_t length() const { return frames.dim(1); }
};

class FlowModel {
public:
    FlowModel(ModelConfig config, skel::SkeletonSpec skeleton, std::uint64_t seed);

    FlowModel(const FlowModel&) = delete;
    FlowModel& operator=(const FlowModel&) = delete;
    FlowModel(FlowModel&&) = default;
    FlowModel& operator=(FlowModel&&) = default;

    const ModelConfig& config() const { return config_; }
    const skel::SkeletonSpec& skeleton() const { return skeleton_; }
    std::uint64_t seed() const { return seed_; }
    num::ParamStore& params() { return params_; }
    const num::ParamStore& params() const { return params_; }
    const std::vector<FlowStep>& steps() const { return steps_; }

    // Parameter entries that belong to graph convolutions (S-GCN and ST-GCN).
    std::size_t graph_parameter_count() const;
    std::size_t temporal_parameter_count() const;

    const Standardization& standardization() const { return standardization_; }
    void set_standardization(Standardization s);
    // Works on any tensor whose size is a multiple of M*C.
    Tensor standardize(const Tensor& frames) const;
    Tensor destandardize(const Tensor& frames) const;
    // Log-determinant of the standardization for one frame: -sum log std.
    double standardization_logdet() const;

    RecurrentStates initial_state(std::size_t batch) const;

    // ---- Differentiable path --------------------------------------------

    Context context(Tape& t, const Tensor& history, const Tensor& controls, std::size_t batch) const;

    // Raw conditioner output [B x 2*M*(C-c1)] for step k from the unchanged half.
    Var coupling_raw(Tape& t, std::size_t k, Var unchanged, const Context& ctx, cond::RecurrentState& state) const;

    // One step on standardized input; `sample_logdet` receives the per-sample
    // coupling log-determinant [B x 1].
    Var step_forward(Tape& t, std::size_t k, Var x, const Context& ctx, cond::RecurrentState& state,
                     Var* sample_logdet) const;

    FrameForward forward_frame(Tape& t, Var x, const Context& ctx, std::vector<cond::RecurrentState>& states) const;

    // Parameter-only log-determinant of all actnorm and 1x1 layers for one frame.
    Var parameter_logdet(Tape& t) const;

    // Sum over the batch and over predicted frames (t >= T_h) of log p(x_t | ...),
    // including the standardization term. Recurrent states start at zero
    // unless `initial` is given.
    Var sequence_log_likelihood(Tape& t, const SequenceBatch& batch, const RecurrentStates* initial = nullptr) const;

    // ---- Value path -------------------------------------------------------

    // Log density of physical frames [B*M x C]; advances `states`.
    std::vector<double> log_likelihood(const Tensor& frames, const Tensor& history, const Tensor& controls,
                                       RecurrentStates& states, std::size_t batch) const;

    // Standardized frame -> latent; advances `states`. Also returns the total
    // per-sample log-determinant of the standardized-space flow.
    Tensor forward_values(const Tensor& x, const Tensor& history, const Tensor& controls, RecurrentStates& states,
                          std::size_t batch, std::vector<double>* logdet = nullptr) const;

    // Latent -> standardized frame; advances `states` exactly as the forward pass.
    Tensor inverse_values(const Tensor& z, const Tensor& history, const Tensor& controls, RecurrentStates& states,
                          std::size_t batch) const;

    // x = destandardize(f^-1(tau * z)).
    Tensor sample_frame(const Tensor& z, const Tensor& history, const Tensor& controls, double temperature,
                        RecurrentStates& states, std::size_t batch) const;

    // Data-dependent actnorm initialization: every predicted frame of the
    // batch is an independent sample with zero recurrent state; step k is
    // initialized on the outputs of steps 0..k-1.
    void initialize_actnorm(const SequenceBatch& batch);

    // Copy with markers relabelled: new index of old marker i is perm[i].
    FlowModel relabeled(const std::vector<std::size_t>& perm) const;

    // Copy with identical configuration, standardization and parameter values.
    FlowModel clone() const;

private:
    ModelConfig config_;
    skel::SkeletonSpec skeleton_;
    std::uint64_t seed_;
    num::ParamStore params_;
    std::vector<FlowStep> steps_;
    cond::Stgcn stgcn_;
    Standardization standardization_;
    std::vector<std::shared_ptr<const skel::PartitionedAdjacency>> adjacency_;
};

// Gathers histories and control windows for predicting frame t of every
// sequence in `batch`: history [B*T_h*M x C], controls [B x cc*(T_h+1)].
Tensor gather_history(const SequenceBatch& batch, std::size_t t, std::size_t history);
Tensor gather_controls(const SequenceBatch& batch, std::size_t t, std::size_t history);

}  // namespace gflow::flow
