// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/conditioning/conditioning.hpp"

#include <cmath>

#include "gflow/errors.hpp"

namespace gflow::cond {

namespace {

Tensor xavier(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out, num::Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return num::uniform({rows, cols}, rng, -limit, limit);
}

}  // namespace

SgcnLayer make_sgcn(ParamStore& params, const std::string& name,
                    std::shared_ptr<const skel::PartitionedAdjacency> adjacency, std::size_t in,
                    std::size_t out, num::Rng& rng) {
    GFLOW_CHECK(adjacency != nullptr, ConfigError, "sgcn " + name + ": missing adjacency");
    GFLOW_CHECK(in > 0 && out > 0, ConfigError, "sgcn " + name + ": zero width");
    const std::size_t d = adjacency->stack.subsets.size();
    SgcnLayer layer;
    layer.in = in;
    layer.out = out;
    layer.weight = params.add(name + ".weight", xavier(in, d * out, in, out, rng));
    layer.bias = params.add(name + ".bias", Tensor({out}));
    layer.adjacency = std::move(adjacency);
    return layer;
}

Var sgcn_apply(Tape& t, const SgcnLayer& layer, Var features, std::size_t batch) {
    Var xw = num::ops::matmul(t, features, t.param(layer.weight));
    Var y = num::ops::graph_aggregate(t, xw, layer.adjacency->stack, batch);
    return num::ops::add_row(t, y, t.param(layer.bias));
}

Stgcn make_stgcn(ParamStore& params, const std::string& name,
                 std::shared_ptr<const skel::PartitionedAdjacency> adjacency, std::size_t in_channels,
                 const std::vector<std::size_t>& widths, std::size_t history, std::size_t taps, bool temporal,
                 num::Rng& rng) {
    GFLOW_CHECK(!widths.empty(), ConfigError, "stgcn needs at least one block");
    GFLOW_CHECK(taps % 2 == 1, ConfigError, "temporal kernel size must be odd");
    Stgcn net;
    net.history = history;
    std::size_t in = in_channels;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        const std::string prefix = name + ".block" + std::to_string(i);
        StgcnBlock block;
        block.sgcn = make_sgcn(params, prefix + ".sgcn", adjacency, in, widths[i], rng);
        block.temporal = temporal;
        if (temporal) {
            const double limit = 1.0 / std::sqrt(static_cast<double>(taps));
            block.temporal_kernel = params.add(prefix + ".tconv", num::uniform({taps, widths[i]}, rng, -limit, limit));
            block.temporal_bias = params.add(prefix + ".tconv_bias", Tensor({widths[i]}));
        }
        if (in != widths[i]) {
            block.residual = params.add(prefix + ".residual", xavier(in, widths[i], in, widths[i], rng));
        }
        net.blocks.push_back(std::move(block));
        in = widths[i];
    }
    return net;
}

Var stgcn_block_apply(Tape& t, const StgcnBlock& block, Var x, std::size_t batch, std::size_t time) {
    const std::size_t markers = block.sgcn.adjacency->markers();
    Var h = num::ops::tanh(t, sgcn_apply(t, block.sgcn, x, batch * time));
    if (block.temporal) {
        h = num::ops::temporal_conv(t, h, t.param(block.temporal_kernel), batch, time, markers);
        h = num::ops::add_row(t, h, t.param(block.temporal_bias));
    }
    Var r = block.residual >= 0 ? num::ops::matmul(t, x, t.param(block.residual)) : x;
    return num::ops::tanh(t, num::ops::add(t, h, r));
}

Var stgcn_apply(Tape& t, const Stgcn& net, Var history, std::size_t batch) {
    GFLOW_CHECK(!net.blocks.empty(), ConfigError, "empty stgcn");
    const std::size_t markers = net.blocks.front().sgcn.adjacency->markers();
    if (t.value(history).rows() != batch * net.history * markers) {
        throw ShapeError("stgcn: history " + num::shape_string(t.value(history).shape()) + " for batch " +
                         std::to_string(batch));
    }
    Var x = history;
    for (const StgcnBlock& block : net.blocks) x = stgcn_block_apply(t, block, x, batch, net.history);
    return num::ops::block_mean_rows(t, x, net.history * markers);
}

RecurrentConditioner make_conditioner(ParamStore& params, const std::string& name, std::size_t input_width,
                                      std::size_t hidden, std::size_t layers, std::size_t output_width,
                                      num::Rng& rng) {
    GFLOW_CHECK(hidden > 0 && layers > 0, ConfigError, "conditioner needs hidden > 0 and layers > 0");
    RecurrentConditioner net;
    net.input_width = input_width;
    net.output_width = output_width;
    const double limit = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::size_t in = input_width;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::string prefix = name + ".lstm" + std::to_string(l);
        LstmLayer layer;
        layer.in = in;
        layer.hidden = hidden;
        layer.wx = params.add(prefix + ".wx", num::uniform({in, 4 * hidden}, rng, -limit, limit));
        layer.wh = params.add(prefix + ".wh", num::uniform({hidden, 4 * hidden}, rng, -limit, limit));
        Tensor bias({4 * hidden});
        for (std::size_t u = hidden; u < 2 * hidden; ++u) bias[u] = 1.0;
        layer.b = params.add(prefix + ".bias", std::move(bias));
        net.layers.push_back(layer);
        in = hidden;
    }
    net.out_w = params.add(name + ".out_w", Tensor::matrix(hidden, output_width));
    net.out_b = params.add(name + ".out_b", Tensor({output_width}));
    return net;
}

RecurrentValues RecurrentValues::zeros(const RecurrentConditioner& net, std::size_t batch) {
    RecurrentValues v;
    for (const LstmLayer& layer : net.layers) {
        v.h.push_back(Tensor::matrix(batch, layer.hidden));
        v.c.push_back(Tensor::matrix(batch, layer.hidden));
    }
    return v;
}

RecurrentState RecurrentValues::on_tape(Tape& t) const {
    RecurrentState s;
    for (std::size_t l = 0; l < h.size(); ++l) {
        s.h.push_back(t.constant(h[l]));
        s.c.push_back(t.constant(c[l]));
    }
    return s;
}

RecurrentValues RecurrentValues::from_tape(const Tape& t, const RecurrentState& s) {
    RecurrentValues v;
    for (std::size_t l = 0; l < s.h.size(); ++l) {
        v.h.push_back(t.value(s.h[l]));
        v.c.push_back(t.value(s.c[l]));
    }
    return v;
}

Var condition(Tape& t, const RecurrentConditioner& net, Var input, RecurrentState& state) {
    if (state.h.size() != net.layers.size() || state.c.size() != net.layers.size()) {
        throw ShapeError("conditioner state has " + std::to_string(state.h.size()) + " layers, expected " +
                         std::to_string(net.layers.size()));
    }
    if (t.value(input).cols() != net.input_width) {
        throw ShapeError("conditioner input width " + std::to_string(t.value(input).cols()) + ", expected " +
                         std::to_string(net.input_width));
    }
    Var x = input;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const LstmLayer& layer = net.layers[l];
        Var gates = num::ops::add(t, num::ops::matmul(t, x, t.param(layer.wx)),
                                  num::ops::matmul(t, state.h[l], t.param(layer.wh)));
        gates = num::ops::add_row(t, gates, t.param(layer.b));
        Var out = num::ops::lstm_cell(t, gates, state.c[l]);
        state.h[l] = num::ops::slice_cols(t, out, 0, layer.hidden);
        state.c[l] = num::ops::slice_cols(t, out, layer.hidden, 2 * layer.hidden);
        x = state.h[l];
    }
    Var raw = num::ops::matmul(t, x, t.param(net.out_w));
    return num::ops::add_row(t, raw, t.param(net.out_b));
}

}  // namespace gflow::cond
