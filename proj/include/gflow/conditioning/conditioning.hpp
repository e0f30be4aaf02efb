// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Networks that produce the coupling scale and bias: a spatial graph
// convolution over the unchanged half of the current frame, a spatial-temporal
// graph network over the history window, and a stacked LSTM that consumes
// both together with the control window.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gflow/numcore/ops.hpp"
#include "gflow/numcore/params.hpp"
#include "gflow/numcore/random.hpp"
#include "gflow/numcore/tape.hpp"
#include "gflow/skeleton/skeleton.hpp"

namespace gflow::cond {

using num::ParamId;
using num::ParamStore;
using num::Tape;
using num::Tensor;
using num::Var;

// y = sum_k A_k x W_k + bias. Weights are stored side by side as
// [in x D*out] so one matmul feeds the sparse aggregation.
struct SgcnLayer {
    ParamId weight = -1;
    ParamId bias = -1;
    std::size_t in = 0;
    std::size_t out = 0;
    std::shared_ptr<const skel::PartitionedAdjacency> adjacency;
};

SgcnLayer make_sgcn(ParamStore& params, const std::string& name,
                    std::shared_ptr<const skel::PartitionedAdjacency> adjacency, std::size_t in,
                    std::size_t out, num::Rng& rng);

// features: [batch*M x in] -> [batch*M x out]. Linear; no activation.
Var sgcn_apply(Tape& t, const SgcnLayer& layer, Var features, std::size_t batch);

struct StgcnBlock {
    SgcnLayer sgcn;
    bool temporal = true;
    ParamId temporal_kernel = -1;  // [taps x out]
    ParamId temporal_bias = -1;    // [out]
    ParamId residual = -1;         // [in x out]; -1 when in == out
};

struct Stgcn {
    std::vector<StgcnBlock> blocks;
    std::size_t history = 0;
    std::size_t output_width() const { return blocks.empty() ? 0 : blocks.back().sgcn.out; }
};

// Blocks of tanh(S-GCN) -> temporal conv -> + residual -> tanh. With
// `temporal` off the temporal convolution is skipped (spatial-only variant).
Stgcn make_stgcn(ParamStore& params, const std::string& name,
                 std::shared_ptr<const skel::PartitionedAdjacency> adjacency, std::size_t in_channels,
                 const std::vector<std::size_t>& widths, std::size_t history, std::size_t taps, bool temporal,
                 num::Rng& rng);

// One residual block on [batch*T*M x in] -> [batch*T*M x out].
Var stgcn_block_apply(Tape& t, const StgcnBlock& block, Var x, std::size_t batch, std::size_t time);

// history: [batch*T_h*M x C] -> pooled features [batch x width].
Var stgcn_apply(Tape& t, const Stgcn& net, Var history, std::size_t batch);

struct LstmLayer {
    ParamId wx = -1;  // [in x 4H]
    ParamId wh = -1;  // [H x 4H]
    ParamId b = -1;   // [4H]
    std::size_t in = 0;
    std::size_t hidden = 0;
};

struct RecurrentConditioner {
    std::vector<LstmLayer> layers;
    ParamId out_w = -1;  // [H x out], zero at construction
    ParamId out_b = -1;
    std::size_t input_width = 0;
    std::size_t output_width = 0;
    std::size_t hidden() const { return layers.front().hidden; }
};

RecurrentConditioner make_conditioner(ParamStore& params, const std::string& name, std::size_t input_width,
                                      std::size_t hidden, std::size_t layers, std::size_t output_width,
                                      num::Rng& rng);

// Per-layer (h, c) on a tape.
struct RecurrentState {
    std::vector<Var> h;
    std::vector<Var> c;
};

// Per-layer (h, c) as plain values, carried between per-frame tapes.
struct RecurrentValues {
    std::vector<Tensor> h;
    std::vector<Tensor> c;

    static RecurrentValues zeros(const RecurrentConditioner& net, std::size_t batch);
    RecurrentState on_tape(Tape& t) const;
    static RecurrentValues from_tape(const Tape& t, const RecurrentState& s);
};

// input [batch x input_width] -> raw [batch x output_width]; advances state.
Var condition(Tape& t, const RecurrentConditioner& net, Var input, RecurrentState& state);

}  // namespace gflow::cond
