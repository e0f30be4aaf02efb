// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Value-level flow layers on frames laid out [rows x C] (rows = batch * M).
// FlowModel records the same arithmetic on a tape for training; these are
// used on the inverse path and as small reference implementations.

#pragma once

#include "gflow/numcore/tensor.hpp"

namespace gflow::flow {

using num::Tensor;

struct LayerOutput {
    Tensor y;
    double logdet = 0.0;
};

// y = (x + bias) * scale per (marker, channel); scale and bias are [M x C]
// and broadcast over the batch. logdet = batch * sum log|scale|.
LayerOutput actnorm_forward(const Tensor& x, const Tensor& scale, const Tensor& bias);
Tensor actnorm_inverse(const Tensor& y, const Tensor& scale, const Tensor& bias);

struct ActnormParams {
    Tensor scale;
    Tensor bias;
};

// bias = -mean, scale = 1/std per (marker, channel) over the samples of
// `x` ([N*M x C]). Throws NumericError on a degenerate batch.
ActnormParams actnorm_init(const Tensor& x, std::size_t markers);

// y[r, :] = x[r, :] W; logdet = rows * log|det W|.
LayerOutput invconv_forward(const Tensor& x, const Tensor& w);
Tensor invconv_inverse(const Tensor& y, const Tensor& w);

// Coupling scale from the raw network output.
Tensor coupling_scale(const Tensor& raw);

// h1 = x[:, :split], h2 = (x[:, split:] + b) * s; s and b are [rows x C-split].
LayerOutput coupling_forward(const Tensor& x, const Tensor& s, const Tensor& b, std::size_t split);
Tensor coupling_inverse(const Tensor& h, const Tensor& s, const Tensor& b, std::size_t split);

}  // namespace gflow::flow
