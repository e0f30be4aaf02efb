// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "gflow/numcore/tensor.hpp"

namespace gflow::num {

// LU factorization with partial pivoting of a square matrix.
struct LuFactors {
    Tensor lu;
    std::vector<std::size_t> pivot;
    int sign = 1;
};

LuFactors lu_decompose(const Tensor& square);

// log |det A|. Throws NumericError when the determinant underflows 1e-300.
double logabsdet(const Tensor& square);

Tensor inverse(const Tensor& square);
Tensor transpose(const Tensor& matrix);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor identity(std::size_t n);

}  // namespace gflow::num
