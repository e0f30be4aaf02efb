// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/flow/layers.hpp"

#include <cmath>

#include "gflow/errors.hpp"
#include "gflow/flow/config.hpp"
#include "gflow/numcore/linalg.hpp"

namespace gflow::flow {

namespace {

void check_frame_params(const Tensor& x, const Tensor& scale, const Tensor& bias) {
    if (scale.size() != bias.size() || scale.size() == 0 || x.size() % scale.size() != 0) {
        throw ShapeError("actnorm: input " + num::shape_string(x.shape()) + " vs parameters " +
                         num::shape_string(scale.shape()));
    }
}

void check_coupling(const Tensor& x, const Tensor& s, const Tensor& b, std::size_t split) {
    const std::size_t c = x.cols();
    if (split == 0 || split >= c || s.cols() != c - split || s.rows() != x.rows() || b.size() != s.size()) {
        throw ShapeError("coupling: input " + num::shape_string(x.shape()) + ", scale " +
                         num::shape_string(s.shape()) + ", split " + std::to_string(split));
    }
}

}  // namespace

LayerOutput actnorm_forward(const Tensor& x, const Tensor& scale, const Tensor& bias) {
    check_frame_params(x, scale, bias);
    const std::size_t frame = scale.size();
    const std::size_t batch = x.size() / frame;
    LayerOutput out{Tensor(x.shape()), 0.0};
    for (std::size_t i = 0; i < frame; ++i) {
        GFLOW_CHECK(scale[i] != 0.0, NumericError, "actnorm: zero scale at entry " + std::to_string(i));
        out.logdet += std::log(std::abs(scale[i]));
    }
    out.logdet *= static_cast<double>(batch);
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t i = 0; i < frame; ++i) out.y[n * frame + i] = (x[n * frame + i] + bias[i]) * scale[i];
    }
    return out;
}

Tensor actnorm_inverse(const Tensor& y, const Tensor& scale, const Tensor& bias) {
    check_frame_params(y, scale, bias);
    const std::size_t frame = scale.size();
    const std::size_t batch = y.size() / frame;
    Tensor x(y.shape());
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t i = 0; i < frame; ++i) x[n * frame + i] = y[n * frame + i] / scale[i] - bias[i];
    }
    return x;
}

ActnormParams actnorm_init(const Tensor& x, std::size_t markers) {
    const std::size_t c = x.cols();
    GFLOW_CHECK(markers > 0 && x.rows() % markers == 0, ShapeError, "actnorm_init: rows not a multiple of markers");
    const std::size_t n = x.rows() / markers;
    GFLOW_CHECK(n >= 2, ConfigError, "actnorm_init: batch size must be >= 2");
    const std::size_t frame = markers * c;
    ActnormParams p{Tensor::matrix(markers, c), Tensor::matrix(markers, c)};
    for (std::size_t i = 0; i < frame; ++i) {
        double mean = 0.0;
        for (std::size_t s = 0; s < n; ++s) mean += x[s * frame + i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            const double d = x[s * frame + i] - mean;
            var += d * d;
        }
        const double sd = std::sqrt(var / static_cast<double>(n));
        if (!(sd >= 1e-8)) {
            throw NumericError("actnorm_init: degenerate batch, std " + std::to_string(sd) + " at marker " +
                               std::to_string(i / c) + " channel " + std::to_string(i % c));
        }
        p.bias[i] = -mean;
        p.scale[i] = 1.0 / sd;
    }
    return p;
}

LayerOutput invconv_forward(const Tensor& x, const Tensor& w) {
    const double ld = num::logabsdet(w);
    return {num::matmul(x, w), static_cast<double>(x.rows()) * ld};
}

Tensor invconv_inverse(const Tensor& y, const Tensor& w) { return num::matmul(y, num::inverse(w)); }

Tensor coupling_scale(const Tensor& raw) {
    Tensor s(raw.shape());
    for (std::size_t i = 0; i < raw.size(); ++i) s[i] = 1.0 / (1.0 + std::exp(-(raw[i] + kScaleShift))) + kScaleFloor;
    return s;
}

LayerOutput coupling_forward(const Tensor& x, const Tensor& s, const Tensor& b, std::size_t split) {
    check_coupling(x, s, b, split);
    const std::size_t c = x.cols(), w = c - split;
    LayerOutput out{x, 0.0};
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t j = 0; j < w; ++j) {
            const double sv = s[r * w + j];
            out.y[r * c + split + j] = (x[r * c + split + j] + b[r * w + j]) * sv;
            out.logdet += std::log(sv);
        }
    }
    return out;
}

Tensor coupling_inverse(const Tensor& h, const Tensor& s, const Tensor& b, std::size_t split) {
    check_coupling(h, s, b, split);
    const std::size_t c = h.cols(), w = c - split;
    Tensor x = h;
    for (std::size_t r = 0; r < h.rows(); ++r) {
        for (std::size_t j = 0; j < w; ++j) x[r * c + split + j] = h[r * c + split + j] / s[r * w + j] - b[r * w + j];
    }
    return x;
}

}  // namespace gflow::flow
