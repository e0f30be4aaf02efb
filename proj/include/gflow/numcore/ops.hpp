// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable operations recorded on a Tape. Unless noted otherwise a
// tensor is viewed as a matrix [rows x cols] with cols = last dimension.

#pragma once

#include <span>

#include "gflow/kernels/kernels.hpp"
#include "gflow/numcore/tape.hpp"

namespace gflow::num::ops {

Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var div(Tape& t, Var a, Var b);
// a [n x m] + row [m], broadcast over rows.
Var add_row(Tape& t, Var a, Var row);
// a + s where s holds a single value.
Var add_broadcast(Tape& t, Var a, Var s);
Var scale(Tape& t, Var a, double c);
Var add_scalar(Tape& t, Var a, double c);

Var sigmoid(Tape& t, Var a);
Var tanh(Tape& t, Var a);
Var relu(Tape& t, Var a);
Var log(Tape& t, Var a);
Var log_abs(Tape& t, Var a);
Var square(Tape& t, Var a);

Var sum(Tape& t, Var a);
// Splits the flat values into `groups` contiguous blocks and sums each: [groups x 1].
Var group_sum(Tape& t, Var a, std::size_t groups);
// Mean over consecutive blocks of `block_rows` rows: [rows/block_rows x cols].
Var block_mean_rows(Tape& t, Var a, std::size_t block_rows);

Var reshape(Tape& t, Var a, Shape shape);
Var slice_cols(Tape& t, Var a, std::size_t begin, std::size_t end);
Var concat_cols(Tape& t, std::span<const Var> parts);

// Graph aggregation over a stack of subset matrices for `batch` stacked graphs.
// xw: [batch*M x D*width] -> [batch*M x width].
Var graph_aggregate(Tape& t, Var xw, const kernels::SubsetStack& stack, std::size_t batch);

// Depthwise temporal convolution, mirror padding. x rows are (sample, time,
// marker), kernel is [taps x channels].
Var temporal_conv(Tape& t, Var x, Var kernel, std::size_t batch, std::size_t time, std::size_t markers);

// LSTM cell nonlinearity: gates [n x 4H] (i, f, g, o), c [n x H] -> [n x 2H] = (h', c').
Var lstm_cell(Tape& t, Var gates, Var c);

// (x + bias) * scale with per-(marker, channel) parameters; x is [batch*M x C].
Var actnorm(Tape& t, Var x, Var scale, Var bias);

// log |det W| as a one-element tensor.
Var logabsdet(Tape& t, Var w);

// Per-group standard-normal log density: [groups x 1].
Var gaussian_logpdf(Tape& t, Var z, std::size_t groups);

}  // namespace gflow::num::ops
