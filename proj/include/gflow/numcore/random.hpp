// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "gflow/numcore/tensor.hpp"

namespace gflow::num {

// All stochastic code takes one of these explicitly; nothing draws from a
// global generator.
using Rng = std::mt19937_64;

// Independent stream for (seed, stream index); splitmix64 on the pair.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

Tensor normal(Shape shape, Rng& rng, double stddev = 1.0);
Tensor uniform(Shape shape, Rng& rng, double lo, double hi);

// Uniformly random rotation matrix (det +1) of size n x n.
Tensor random_rotation(std::size_t n, Rng& rng);

}  // namespace gflow::num
