// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// OpenMP kernels. Work is split over independent output rows only; each
// output element is accumulated in the same order as the serial reference.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <vector>

#include "gflow/kernels/kernels.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace gflow::kernels {

namespace {
std::atomic<Policy> g_policy{Policy::Parallel};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 14;
}  // namespace

void set_policy(Policy p) { g_policy.store(p); }
Policy policy() { return g_policy.load(); }

int max_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::size_t mirror_index(long t, std::size_t n) {
    const long period = 2 * static_cast<long>(n);
    long r = t % period;
    if (r < 0) r += period;
    return r < static_cast<long>(n) ? static_cast<std::size_t>(r) : static_cast<std::size_t>(period - 1 - r);
}

SparseRows SparseRows::transposed() const {
    SparseRows t;
    t.rows = cols;
    t.cols = rows;
    t.row_ptr.assign(cols + 1, 0);
    for (std::size_t c : col) ++t.row_ptr[c + 1];
    for (std::size_t i = 0; i < cols; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
    t.col.resize(col.size());
    t.weight.resize(weight.size());
    std::vector<std::size_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) {
            const std::size_t dst = cursor[col[e]]++;
            t.col[dst] = r;
            t.weight[dst] = weight[e];
        }
    }
    return t;
}

namespace parallel {

void gemm_nn(std::size_t n, std::size_t k, std::size_t m, const double* a, const double* b, double* c,
             bool accumulate) {
    const long rows = static_cast<long>(n);
#pragma omp parallel if (n * k * m > kParallelWork)
    {
        std::vector<double> acc(m);
#pragma omp for schedule(static)
        for (long i = 0; i < rows; ++i) {
            std::fill(acc.begin(), acc.end(), 0.0);
            const double* arow = a + i * k;
            for (std::size_t p = 0; p < k; ++p) {
                const double aip = arow[p];
                const double* brow = b + p * m;
                for (std::size_t j = 0; j < m; ++j) acc[j] += aip * brow[j];
            }
            double* crow = c + i * m;
            if (accumulate) {
                for (std::size_t j = 0; j < m; ++j) crow[j] += acc[j];
            } else {
                std::copy(acc.begin(), acc.end(), crow);
            }
        }
    }
}

void gemm_tn(std::size_t n, std::size_t k, std::size_t m, const double* a, const double* b, double* c,
             bool accumulate) {
    const long outs = static_cast<long>(k);
#pragma omp parallel if (n * k * m > kParallelWork)
    {
        std::vector<double> acc(m);
#pragma omp for schedule(static)
        for (long p = 0; p < outs; ++p) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double aip = a[i * k + p];
                const double* brow = b + i * m;
                for (std::size_t j = 0; j < m; ++j) acc[j] += aip * brow[j];
            }
            double* crow = c + p * m;
            if (accumulate) {
                for (std::size_t j = 0; j < m; ++j) crow[j] += acc[j];
            } else {
                std::copy(acc.begin(), acc.end(), crow);
            }
        }
    }
}

void gemm_nt(std::size_t n, std::size_t m, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
    const long rows = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (n * k * m > kParallelWork)
    for (long i = 0; i < rows; ++i) {
        const double* arow = a + i * m;
        for (std::size_t q = 0; q < k; ++q) {
            const double* brow = b + q * m;
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += arow[j] * brow[j];
            c[i * k + q] = accumulate ? c[i * k + q] + s : s;
        }
    }
}

void graph_aggregate(const SubsetStack& stack, std::size_t batch, std::size_t width, const double* xw,
                     double* y) {
    const std::size_t markers = stack.markers;
    const std::size_t in_cols = stack.subsets.size() * width;
    const long rows = static_cast<long>(batch * markers);
#pragma omp parallel if (batch * markers * in_cols > kParallelWork)
    {
        std::vector<double> acc(width);
#pragma omp for schedule(static)
        for (long r = 0; r < rows; ++r) {
            const std::size_t b = static_cast<std::size_t>(r) / markers;
            const std::size_t i = static_cast<std::size_t>(r) % markers;
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t k = 0; k < stack.subsets.size(); ++k) {
                const SparseRows& a = stack.subsets[k];
                for (std::size_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
                    const double w = a.weight[e];
                    const double* src = xw + (b * markers + a.col[e]) * in_cols + k * width;
                    for (std::size_t o = 0; o < width; ++o) acc[o] += w * src[o];
                }
            }
            std::copy(acc.begin(), acc.end(), y + r * width);
        }
    }
}

void graph_aggregate_adjoint(const SubsetStack& stack, std::size_t batch, std::size_t width,
                             const double* dy, double* dxw) {
    const std::size_t markers = stack.markers;
    const std::size_t in_cols = stack.subsets.size() * width;
    const long rows = static_cast<long>(batch * markers);
#pragma omp parallel if (batch * markers * in_cols > kParallelWork)
    {
        std::vector<double> acc(width);
#pragma omp for schedule(static)
        for (long r = 0; r < rows; ++r) {
            const std::size_t b = static_cast<std::size_t>(r) / markers;
            const std::size_t j = static_cast<std::size_t>(r) % markers;
            for (std::size_t k = 0; k < stack.subsets_t.size(); ++k) {
                const SparseRows& at = stack.subsets_t[k];
                std::fill(acc.begin(), acc.end(), 0.0);
                for (std::size_t e = at.row_ptr[j]; e < at.row_ptr[j + 1]; ++e) {
                    const double w = at.weight[e];
                    const double* src = dy + (b * markers + at.col[e]) * width;
                    for (std::size_t o = 0; o < width; ++o) acc[o] += w * src[o];
                }
                double* dst = dxw + r * in_cols + k * width;
                for (std::size_t o = 0; o < width; ++o) dst[o] += acc[o];
            }
        }
    }
}

void temporal_conv(std::size_t batch, std::size_t time, std::size_t markers, std::size_t channels,
                   std::size_t taps, const double* x, const double* kernel, double* y) {
    const long half = static_cast<long>(taps / 2);
    const long frames = static_cast<long>(batch * time);
    const std::size_t stride = markers * channels;
#pragma omp parallel if (batch * time * stride * taps > kParallelWork)
    {
        std::vector<double> acc(stride);
#pragma omp for schedule(static)
        for (long bt = 0; bt < frames; ++bt) {
            const std::size_t b = static_cast<std::size_t>(bt) / time;
            const std::size_t t = static_cast<std::size_t>(bt) % time;
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t q = 0; q < taps; ++q) {
                const std::size_t src = mirror_index(static_cast<long>(t + q) - half, time);
                const double* xs = x + (b * time + src) * stride;
                const double* kq = kernel + q * channels;
                for (std::size_t m = 0; m < markers; ++m) {
                    for (std::size_t c = 0; c < channels; ++c) acc[m * channels + c] += kq[c] * xs[m * channels + c];
                }
            }
            std::copy(acc.begin(), acc.end(), y + bt * stride);
        }
    }
}

void temporal_conv_backward(std::size_t batch, std::size_t time, std::size_t markers,
                            std::size_t channels, std::size_t taps, const double* x,
                            const double* kernel, const double* dy, double* dx, double* dkernel) {
    const long half = static_cast<long>(taps / 2);
    const std::size_t stride = markers * channels;
    const std::size_t work = batch * time * stride * taps;
    if (dx != nullptr) {
        const long samples = static_cast<long>(batch);
#pragma omp parallel for schedule(static) if (work > kParallelWork)
        for (long b = 0; b < samples; ++b) {
            for (std::size_t t = 0; t < time; ++t) {
                const double* dyt = dy + (b * time + t) * stride;
                for (std::size_t q = 0; q < taps; ++q) {
                    const std::size_t src = mirror_index(static_cast<long>(t + q) - half, time);
                    double* dxs = dx + (b * time + src) * stride;
                    const double* kq = kernel + q * channels;
                    for (std::size_t m = 0; m < markers; ++m) {
                        for (std::size_t c = 0; c < channels; ++c) dxs[m * channels + c] += kq[c] * dyt[m * channels + c];
                    }
                }
            }
        }
    }
    if (dkernel != nullptr) {
        const long ntaps = static_cast<long>(taps);
#pragma omp parallel for schedule(static) if (work > kParallelWork)
        for (long q = 0; q < ntaps; ++q) {
            double* dk = dkernel + q * channels;
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t t = 0; t < time; ++t) {
                    const std::size_t src = mirror_index(static_cast<long>(t) + q - half, time);
                    const double* xs = x + (b * time + src) * stride;
                    const double* dyt = dy + (b * time + t) * stride;
                    for (std::size_t m = 0; m < markers; ++m) {
                        for (std::size_t c = 0; c < channels; ++c) dk[c] += xs[m * channels + c] * dyt[m * channels + c];
                    }
                }
            }
        }
    }
}

void lstm_pointwise(std::size_t n, std::size_t hidden, const double* gates, const double* c, double* out) {
    const long rows = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (n * hidden > kParallelWork / 8)
    for (long r = 0; r < rows; ++r) {
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
    const long rows = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (n * hidden > kParallelWork / 8)
    for (long r = 0; r < rows; ++r) {
        const double* g = gates + r * 4 * hidden;
        double* dg = dgates + r * 4 * hidden;
        for (std::size_t u = 0; u < hidden; ++u) {
            const double ig = sigmoid(g[u]);
            const double fg = sigmoid(g[hidden + u]);
            const double cg = std::tanh(g[2 * hidden + u]);
            const double og = sigmoid(g[3 * hidden + u]);
            const double c_new = out[r * 2 * hidden + hidden + u];
            const double tc = std::tanh(c_new);
            const double dh = dout[r * 2 * hidden + u];
            const double dcn = dout[r * 2 * hidden + hidden + u] + dh * og * (1.0 - tc * tc);
            dg[u] += dcn * cg * ig * (1.0 - ig);
            dg[hidden + u] += dcn * c[r * hidden + u] * fg * (1.0 - fg);
            dg[2 * hidden + u] += dcn * ig * (1.0 - cg * cg);
            dg[3 * hidden + u] += dh * tc * og * (1.0 - og);
            if (dc != nullptr) dc[r * hidden + u] += dcn * fg;
        }
    }
}

}  // namespace parallel

#define GFLOW_DISPATCH(name, ...)                                                                    \
    (policy() == Policy::Serial ? serial::name(__VA_ARGS__) : parallel::name(__VA_ARGS__))

void gemm_nn(std::size_t n, std::size_t k, std::size_t m, const double* a, const double* b, double* c,
             bool accumulate) {
    GFLOW_DISPATCH(gemm_nn, n, k, m, a, b, c, accumulate);
}
void gemm_tn(std::size_t n, std::size_t k, std::size_t m, const double* a, const double* b, double* c,
             bool accumulate) {
    GFLOW_DISPATCH(gemm_tn, n, k, m, a, b, c, accumulate);
}
void gemm_nt(std::size_t n, std::size_t m, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
    GFLOW_DISPATCH(gemm_nt, n, m, k, a, b, c, accumulate);
}
void graph_aggregate(const SubsetStack& stack, std::size_t batch, std::size_t width, const double* xw,
                     double* y) {
    GFLOW_DISPATCH(graph_aggregate, stack, batch, width, xw, y);
}
void graph_aggregate_adjoint(const SubsetStack& stack, std::size_t batch, std::size_t width,
                             const double* dy, double* dxw) {
    GFLOW_DISPATCH(graph_aggregate_adjoint, stack, batch, width, dy, dxw);
}
void temporal_conv(std::size_t batch, std::size_t time, std::size_t markers, std::size_t channels,
                   std::size_t taps, const double* x, const double* kernel, double* y) {
    GFLOW_DISPATCH(temporal_conv, batch, time, markers, channels, taps, x, kernel, y);
}
void temporal_conv_backward(std::size_t batch, std::size_t time, std::size_t markers,
                            std::size_t channels, std::size_t taps, const double* x,
                            const double* kernel, const double* dy, double* dx, double* dkernel) {
    GFLOW_DISPATCH(temporal_conv_backward, batch, time, markers, channels, taps, x, kernel, dy, dx, dkernel);
}
void lstm_pointwise(std::size_t n, std::size_t hidden, const double* gates, const double* c, double* out) {
    GFLOW_DISPATCH(lstm_pointwise, n, hidden, gates, c, out);
}
void lstm_pointwise_backward(std::size_t n, std::size_t hidden, const double* gates, const double* c,
                             const double* out, const double* dout, double* dgates, double* dc) {
    GFLOW_DISPATCH(lstm_pointwise_backward, n, hidden, gates, c, out, dout, dgates, dc);
}

#undef GFLOW_DISPATCH

}  // namespace gflow::kernels
