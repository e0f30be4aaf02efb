// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "gflow/numcore/params.hpp"

namespace gflow::num {

struct AdamState {
    Gradients first_moment;
    Gradients second_moment;
    std::int64_t step = 0;

    static AdamState zeros_like(const ParamStore& params);
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// One bias-corrected Adam update. Throws NumericError (naming the parameter)
// if any gradient entry is not finite; parameters are left untouched then.
void adam_step(ParamStore& params, const Gradients& grads, AdamState& state, double step_size,
               const AdamConfig& config = {});

// Same update on a flat parameter vector.
void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
               std::span<double> v, std::int64_t& step, double step_size, const AdamConfig& config = {});

// max_i |analytic_i - fd_i| / (|fd_i| + 1e-8), with fd the fourth-order
// central difference (f(-2h) - 8f(-h) + 8f(h) - f(2h)) / 12h of `loss` around the current contents of `params` (restored afterwards).
// `loss` must read `params` by reference.
double max_relative_error(std::span<double> params, std::span<const double> analytic,
                          const std::function<double()>& loss, double step);

// Functional form: `fn` maps a parameter vector to (value, gradient).
struct ScalarFunction {
    std::function<double(const std::vector<double>&)> value;
    std::function<std::vector<double>(const std::vector<double>&)> gradient;
};

double grad_check(const ScalarFunction& fn, std::vector<double> params, double step);

}  // namespace gflow::num
