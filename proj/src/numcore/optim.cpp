// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/numcore/optim.hpp"

#include <algorithm>
#include <cmath>

#include "gflow/errors.hpp"

namespace gflow::num {

AdamState AdamState::zeros_like(const ParamStore& params) {
    return AdamState{params.zero_gradients(), params.zero_gradients(), 0};
}

void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
               std::span<double> v, std::int64_t& step, double step_size, const AdamConfig& config) {
    if (params.size() != grads.size() || m.size() != params.size() || v.size() != params.size()) {
        throw ShapeError("adam_step: parameter/gradient/state sizes differ");
    }
    for (double g : grads) {
        if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");
    }
    ++step;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grads[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
        const double mh = m[i] / c1;
        const double vh = v[i] / c2;
        params[i] -= step_size * mh / (std::sqrt(vh) + config.epsilon);
    }
}

void adam_step(ParamStore& params, const Gradients& grads, AdamState& state, double step_size,
               const AdamConfig& config) {
    if (grads.size() != params.count() || state.first_moment.size() != params.count()) {
        throw ShapeError("adam_step: gradient set does not match parameters");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        for (double g : grads[i].values()) {
            if (!std::isfinite(g)) {
                throw NumericError("non-finite gradient in parameter '" + params.name(static_cast<ParamId>(i)) + "'");
            }
        }
    }
    const std::int64_t base = state.step;
    for (std::size_t i = 0; i < grads.size(); ++i) {
        std::int64_t step = base;
        adam_step(params.value(static_cast<ParamId>(i)).values(), grads[i].values(),
                  state.first_moment[i].values(), state.second_moment[i].values(), step, step_size, config);
    }
    state.step = base + 1;
}

double max_relative_error(std::span<double> params, std::span<const double> analytic,
                          const std::function<double()>& loss, double step) {
    if (!(step > 0.0 && step <= 1e-2)) throw ConfigError("grad_check: step must lie in (0, 1e-2]");
    if (analytic.size() != params.size()) throw ShapeError("grad_check: analytic gradient size mismatch");
    const double base = loss();
    if (!std::isfinite(base)) throw NumericError("grad_check: non-finite loss");
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        double f[4];
        const double offsets[4] = {step, -step, 2.0 * step, -2.0 * step};
        for (int k = 0; k < 4; ++k) {
            params[i] = saved + offsets[k];
            f[k] = loss();
            if (!std::isfinite(f[k])) {
                params[i] = saved;
                throw NumericError("grad_check: non-finite loss");
            }
        }
        params[i] = saved;
        const double fd = (8.0 * (f[0] - f[1]) - (f[2] - f[3])) / (12.0 * step);
        worst = std::max(worst, std::abs(analytic[i] - fd) / (std::abs(fd) + 1e-8));
    }
    return worst;
}

double grad_check(const ScalarFunction& fn, std::vector<double> params, double step) {
    const std::vector<double> analytic = fn.gradient(params);
    return max_relative_error(params, analytic, [&] { return fn.value(params); }, step);
}

}  // namespace gflow::num
