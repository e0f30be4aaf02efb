// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/numcore/linalg.hpp"

#include <cmath>
#include <utility>

#include "gflow/errors.hpp"
#include "gflow/kernels/kernels.hpp"

namespace gflow::num {

namespace {
constexpr double kMinLogAbsDet = -690.7755278982137;  // log(1e-300)

void require_square(const Tensor& a, const char* what) {
    if (a.rank() != 2 || a.dim(0) != a.dim(1)) {
        throw ShapeError(std::string(what) + ": expected a square matrix, got " + shape_string(a.shape()));
    }
}
}  // namespace

LuFactors lu_decompose(const Tensor& square) {
    require_square(square, "lu_decompose");
    const std::size_t n = square.dim(0);
    LuFactors f{square, std::vector<std::size_t>(n), 1};
    Tensor& a = f.lu;
    for (std::size_t i = 0; i < n; ++i) f.pivot[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t best = k;
        for (std::size_t r = k + 1; r < n; ++r) {
            if (std::abs(a.at(r, k)) > std::abs(a.at(best, k))) best = r;
        }
        if (best != k) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a.at(k, c), a.at(best, c));
            std::swap(f.pivot[k], f.pivot[best]);
            f.sign = -f.sign;
        }
        const double piv = a.at(k, k);
        if (piv == 0.0) continue;
        for (std::size_t r = k + 1; r < n; ++r) {
            const double l = a.at(r, k) / piv;
            a.at(r, k) = l;
            for (std::size_t c = k + 1; c < n; ++c) a.at(r, c) -= l * a.at(k, c);
        }
    }
    return f;
}

double logabsdet(const Tensor& square) {
    const LuFactors f = lu_decompose(square);
    double s = 0.0;
    for (std::size_t i = 0; i < f.lu.dim(0); ++i) {
        const double d = std::abs(f.lu.at(i, i));
        if (d == 0.0) throw NumericError("logabsdet: singular matrix");
        s += std::log(d);
    }
    if (s < kMinLogAbsDet) throw NumericError("logabsdet: determinant underflows 1e-300");
    return s;
}

Tensor inverse(const Tensor& square) {
    const LuFactors f = lu_decompose(square);
    const std::size_t n = f.lu.dim(0);
    for (std::size_t i = 0; i < n; ++i) {
        if (f.lu.at(i, i) == 0.0) throw NumericError("inverse: singular matrix");
    }
    Tensor inv = Tensor::matrix(n, n);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        // Solve A x = e_j with P A = L U.
        for (std::size_t i = 0; i < n; ++i) col[i] = f.pivot[i] == j ? 1.0 : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < i; ++k) col[i] -= f.lu.at(i, k) * col[k];
        }
        for (std::size_t ii = n; ii-- > 0;) {
            for (std::size_t k = ii + 1; k < n; ++k) col[ii] -= f.lu.at(ii, k) * col[k];
            col[ii] /= f.lu.at(ii, ii);
        }
        for (std::size_t i = 0; i < n; ++i) inv.at(i, j) = col[i];
    }
    return inv;
}

Tensor transpose(const Tensor& m) {
    Tensor t = Tensor::matrix(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) t.at(j, i) = m.at(i, j);
    }
    return t;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
    }
    Tensor c = Tensor::matrix(a.rows(), b.cols());
    kernels::gemm_nn(a.rows(), a.cols(), b.cols(), a.data(), b.data(), c.data(), false);
    return c;
}

Tensor identity(std::size_t n) {
    Tensor t = Tensor::matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

}  // namespace gflow::num
