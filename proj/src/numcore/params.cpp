// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/numcore/params.hpp"

#include <cmath>

#include "gflow/errors.hpp"

namespace gflow::num {

ParamId ParamStore::add(std::string name, Tensor init) {
    if (find(name)) throw ConfigError("duplicate parameter name: " + name);
    names_.push_back(std::move(name));
    values_.push_back(std::move(init));
    return static_cast<ParamId>(values_.size() - 1);
}

std::size_t ParamStore::total_size() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

std::optional<ParamId> ParamStore::find(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return static_cast<ParamId>(i);
    }
    return std::nullopt;
}

Gradients ParamStore::zero_gradients() const {
    Gradients g;
    g.reserve(values_.size());
    for (const auto& v : values_) g.emplace_back(v.shape(), 0.0);
    return g;
}

void accumulate(Gradients& into, const Gradients& from) {
    if (into.size() != from.size()) throw ShapeError("gradient sets differ in length");
    for (std::size_t i = 0; i < into.size(); ++i) {
        if (into[i].size() != from[i].size()) throw ShapeError("gradient shape mismatch");
        for (std::size_t j = 0; j < into[i].size(); ++j) into[i][j] += from[i][j];
    }
}

double global_norm(const Gradients& grads) {
    double s = 0.0;
    for (const auto& g : grads) {
        for (double v : g.values()) s += v * v;
    }
    return std::sqrt(s);
}

}  // namespace gflow::num
