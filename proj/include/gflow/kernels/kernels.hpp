// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense and sparse inner loops used by the autodiff ops. Every kernel has a
// plain serial reference (namespace serial) and an OpenMP version (namespace
// parallel). Both accumulate in the same order per output element, so the two
// produce bit-identical results; tests/unit/test_kernels.cpp pins that down.

#pragma once

#include <cstddef>
#include <vector>

namespace gflow::kernels {

enum class Policy { Serial, Parallel };

void set_policy(Policy policy);
Policy policy();
int max_threads();

// Row-compressed sparse matrix with `rows` rows. Used for the normalized
// subset adjacency matrices of the skeleton graph.
struct SparseRows {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr;  // size rows + 1
    std::vector<std::size_t> col;
    std::vector<double> weight;

    SparseRows transposed() const;
};

// A stack of D subset matrices (all markers x markers) applied jointly:
//   y[b*M + i, o] = sum_k sum_j A_k[i, j] * xw[b*M + j, k*width + o]
struct SubsetStack {
    std::vector<SparseRows> subsets;
    std::vector<SparseRows> subsets_t;  // transposes, for the backward gather
    std::size_t markers = 0;
};

#define GFLOW_KERNEL_DECLS                                                                          \
    /* c[n x m] (+)= a[n x k] * b[k x m] */                                                          \
    void gemm_nn(std::size_t n, std::size_t k, std::size_t m, const double* a, const double* b,     \
                 double* c, bool accumulate);                                                       \
    /* c[k x m] (+)= a[n x k]^T * b[n x m] */                                                        \
    void gemm_tn(std::size_t n, std::size_t k, std::size_t m, const double* a, const double* b,     \
                 double* c, bool accumulate);                                                       \
    /* c[n x k] (+)= a[n x m] * b[k x m]^T */                                                        \
    void gemm_nt(std::size_t n, std::size_t m, std::size_t k, const double* a, const double* b,     \
                 double* c, bool accumulate);                                                       \
    /* Forward subset aggregation, batch of `batch` graphs stacked along rows. */                    \
    void graph_aggregate(const SubsetStack& stack, std::size_t batch, std::size_t width,            \
                         const double* xw, double* y);                                              \
    /* Adjoint of graph_aggregate: dxw += A^T dy. */                                                 \
    void graph_aggregate_adjoint(const SubsetStack& stack, std::size_t batch, std::size_t width,    \
                                 const double* dy, double* dxw);                                    \
    /* Depthwise temporal convolution with symmetric (mirror) padding. Layout */                     \
    /* rows = (sample, time, marker), cols = channels; kernel is [taps x channels]. */               \
    void temporal_conv(std::size_t batch, std::size_t time, std::size_t markers,                    \
                       std::size_t channels, std::size_t taps, const double* x,                     \
                       const double* kernel, double* y);                                            \
    void temporal_conv_backward(std::size_t batch, std::size_t time, std::size_t markers,           \
                                std::size_t channels, std::size_t taps, const double* x,            \
                                const double* kernel, const double* dy, double* dx,                 \
                                double* dkernel);                                                   \
    /* LSTM gate nonlinearity. gates [n x 4H] in order (i, f, g, o); c [n x H]; */                   \
    /* out [n x 2H] = (h', c'). */                                                                   \
    void lstm_pointwise(std::size_t n, std::size_t hidden, const double* gates, const double* c,    \
                        double* out);                                                               \
    void lstm_pointwise_backward(std::size_t n, std::size_t hidden, const double* gates,            \
                                 const double* c, const double* out, const double* dout,            \
                                 double* dgates, double* dc);

namespace serial {
GFLOW_KERNEL_DECLS
}
namespace parallel {
GFLOW_KERNEL_DECLS
}

#undef GFLOW_KERNEL_DECLS

// Dispatch on the process-wide policy.
void gemm_nn(std::size_t n, std::size_t k, std::size_t m, const double* a, const double* b, double* c,
             bool accumulate);
void gemm_tn(std::size_t n, std::size_t k, std::size_t m, const double* a, const double* b, double* c,
             bool accumulate);
void gemm_nt(std::size_t n, std::size_t m, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);
void graph_aggregate(const SubsetStack& stack, std::size_t batch, std::size_t width, const double* xw,
                     double* y);
void graph_aggregate_adjoint(const SubsetStack& stack, std::size_t batch, std::size_t width,
                             const double* dy, double* dxw);
void temporal_conv(std::size_t batch, std::size_t time, std::size_t markers, std::size_t channels,
                   std::size_t taps, const double* x, const double* kernel, double* y);
void temporal_conv_backward(std::size_t batch, std::size_t time, std::size_t markers,
                            std::size_t channels, std::size_t taps, const double* x,
                            const double* kernel, const double* dy, double* dx, double* dkernel);
void lstm_pointwise(std::size_t n, std::size_t hidden, const double* gates, const double* c,
                    double* out);
void lstm_pointwise_backward(std::size_t n, std::size_t hidden, const double* gates, const double* c,
                             const double* out, const double* dout, double* dgates, double* dc);

// Index into a length-`n` signal extended by mirror reflection (edge sample
// repeated), e.g. n=3: ... x1 x0 | x0 x1 x2 | x2 x1 ...
std::size_t mirror_index(long t, std::size_t n);

}  // namespace gflow::kernels
