// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations. Straight loops, no threading; the OpenMP kernels
// must reproduce these bit for bit.

#include <cmath>

#include "gflow/kernels/kernels.hpp"

namespace gflow::kernels::serial {

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

void gemm_nn(std::size_t n, std::size_t k, std::size_t m, const double* a, const double* b, double* c,
             bool accumulate) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * m + j];
            c[i * m + j] = accumulate ? c[i * m + j] + s : s;
        }
    }
}

void gemm_tn(std::size_t n, std::size_t k, std::size_t m, const double* a, const double* b, double* c,
             bool accumulate) {
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += a[i * k + p] * b[i * m + j];
            c[p * m + j] = accumulate ? c[p * m + j] + s : s;
        }
    }
}

void gemm_nt(std::size_t n, std::size_t m, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t q = 0; q < k; ++q) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += a[i * m + j] * b[q * m + j];
            c[i * k + q] = accumulate ? c[i * k + q] + s : s;
        }
    }
}

void graph_aggregate(const SubsetStack& stack, std::size_t batch, std::size_t width, const double* xw,
                     double* y) {
    const std::size_t markers = stack.markers;
    const std::size_t in_cols = stack.subsets.size() * width;
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < markers; ++i) {
            for (std::size_t o = 0; o < width; ++o) {
                double s = 0.0;
                for (std::size_t k = 0; k < stack.subsets.size(); ++k) {
                    const SparseRows& a = stack.subsets[k];
                    for (std::size_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
                        s += a.weight[e] * xw[(b * markers + a.col[e]) * in_cols + k * width + o];
                    }
                }
                y[(b * markers + i) * width + o] = s;
            }
        }
    }
}

void graph_aggregate_adjoint(const SubsetStack& stack, std::size_t batch, std::size_t width,
                             const double* dy, double* dxw) {
    const std::size_t markers = stack.markers;
    const std::size_t in_cols = stack.subsets.size() * width;
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < markers; ++j) {
            for (std::size_t k = 0; k < stack.subsets_t.size(); ++k) {
                const SparseRows& at = stack.subsets_t[k];
                for (std::size_t o = 0; o < width; ++o) {
                    double s = 0.0;
                    for (std::size_t e = at.row_ptr[j]; e < at.row_ptr[j + 1]; ++e) {
                        s += at.weight[e] * dy[(b * markers + at.col[e]) * width + o];
                    }
                    dxw[(b * markers + j) * in_cols + k * width + o] += s;
                }
            }
        }
    }
}

void temporal_conv(std::size_t batch, std::size_t time, std::size_t markers, std::size_t channels,
                   std::size_t taps, const double* x, const double* kernel, double* y) {
    const long half = static_cast<long>(taps / 2);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t t = 0; t < time; ++t) {
            for (std::size_t m = 0; m < markers; ++m) {
                for (std::size_t c = 0; c < channels; ++c) {
                    double s = 0.0;
                    for (std::size_t q = 0; q < taps; ++q) {
                        const std::size_t src = mirror_index(static_cast<long>(t + q) - half, time);
                        s += kernel[q * channels + c] * x[((b * time + src) * markers + m) * channels + c];
                    }
                    y[((b * time + t) * markers + m) * channels + c] = s;
                }
            }
        }
    }
}

void temporal_conv_backward(std::size_t batch, std::size_t time, std::size_t markers,
                            std::size_t channels, std::size_t taps, const double* x,
                            const double* kernel, const double* dy, double* dx, double* dkernel) {
    const long half = static_cast<long>(taps / 2);
    if (dx != nullptr) {
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t t = 0; t < time; ++t) {
                for (std::size_t q = 0; q < taps; ++q) {
                    const std::size_t src = mirror_index(static_cast<long>(t + q) - half, time);
                    for (std::size_t m = 0; m < markers; ++m) {
                        for (std::size_t c = 0; c < channels; ++c) {
                            dx[((b * time + src) * markers + m) * channels + c] +=
                                kernel[q * channels + c] * dy[((b * time + t) * markers + m) * channels + c];
                        }
                    }
                }
            }
        }
    }
    if (dkernel != nullptr) {
        for (std::size_t q = 0; q < taps; ++q) {
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t t = 0; t < time; ++t) {
                    const std::size_t src = mirror_index(static_cast<long>(t + q) - half, time);
                    for (std::size_t m = 0; m < markers; ++m) {
                        for (std::size_t c = 0; c < channels; ++c) {
                            dkernel[q * channels + c] += x[((b * time + src) * markers + m) * channels + c] *
                                                         dy[((b * time + t) * markers + m) * channels + c];
                        }
                    }
                }
            }
        }
    }
}

void lstm_pointwise(std::size_t n, std::size_t hidden, const double* gates, const double* c, double* out) {
    for (std::size_t r = 0; r < n; ++r) {
        const double* g = gates + r * 4 * hidden;
        for (std::size_t u = 0; u < hidden; ++u) {
            const double ig = sigmoid(g[u]);
            const double fg = sigmoid(g[hidden + u]);
            const double cg = std::tanh(g[2 * hidden + u]);
            const double og = sigmoid(g[3 * hidden + u]);
            const double c_new = fg * c[r * hidden + u] + ig * cg;
            out[r * 2 * hidden + u] = og * std::tanh(c_new);
            out[r * 2 * hidden + hidden + u] = c_new;
        }
    }
}

void lstm_pointwise_backward(std::size_t n, std::size_t hidden, const double* gates, const double* c,
                             const double* out, const double* dout, double* dgates, double* dc) {
    for (std::size_t r = 0; r < n; ++r) {
        const double* g = gates + r * 4 * hidden;
        for (std::size_t u = 0; u < hidden; ++u) {
            const double ig = sigmoid(g[u]);
            const double fg = sigmoid(g[hidden + u]);
            const double cg = std::tanh(g[2 * hidden + u]);
            const double og = sigmoid(g[3 * hidden + u]);
            const double c_new = out[r * 2 * hidden + hidden + u];
            const double tc = std::tanh(c_new);
            const double dh = dout[r * 2 * hidden + u];
            const double dcn = dout[r * 2 * hidden + hidden + u] + dh * og * (1.0 - tc * tc);
            double* dg = dgates + r * 4 * hidden;
            dg[u] += dcn * cg * ig * (1.0 - ig);
            dg[hidden + u] += dcn * c[r * hidden + u] * fg * (1.0 - fg);
            dg[2 * hidden + u] += dcn * ig * (1.0 - cg * cg);
            dg[3 * hidden + u] += dh * tc * og * (1.0 - og);
            if (dc != nullptr) dc[r * hidden + u] += dcn * fg;
        }
    }
}

}  // namespace gflow::kernels::serial
