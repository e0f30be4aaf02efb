// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/numcore/random.hpp"

#include <cmath>

#include "gflow/numcore/linalg.hpp"

namespace gflow::num {

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 1)));
}

Tensor normal(Shape shape, Rng& rng, double stddev) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : t.values()) v = dist(rng);
    return t;
}

Tensor uniform(Shape shape, Rng& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : t.values()) v = dist(rng);
    return t;
}

Tensor random_rotation(std::size_t n, Rng& rng) {
    // Gram-Schmidt on a Gaussian matrix gives a Haar-distributed orthogonal
    // matrix; flipping one column fixes the determinant to +1.
    Tensor q = normal({n, n}, rng);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += q.at(i, j) * q.at(i, k);
            for (std::size_t i = 0; i < n; ++i) q.at(i, j) -= dot * q.at(i, k);
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += q.at(i, j) * q.at(i, j);
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < n; ++i) q.at(i, j) /= norm;
    }
    const LuFactors f = lu_decompose(q);
    double sign = f.sign;
    for (std::size_t i = 0; i < n; ++i) sign *= f.lu.at(i, i) < 0 ? -1.0 : 1.0;
    if (sign < 0) {
        for (std::size_t i = 0; i < n; ++i) q.at(i, 0) = -q.at(i, 0);
    }
    return q;
}

}  // namespace gflow::num
