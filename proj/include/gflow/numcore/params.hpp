// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gflow/numcore/tensor.hpp"

namespace gflow::num {

using ParamId = int;

// Gradients aligned with a ParamStore: entry i has the shape of parameter i.
using Gradients = std::vector<Tensor>;

// Named, ordered collection of trainable tensors.
class ParamStore {
public:
    ParamId add(std::string name, Tensor init);

    Tensor& value(ParamId id) { return values_.at(static_cast<std::size_t>(id)); }
    const Tensor& value(ParamId id) const { return values_.at(static_cast<std::size_t>(id)); }
    const std::string& name(ParamId id) const { return names_.at(static_cast<std::size_t>(id)); }

    std::size_t count() const { return values_.size(); }
    std::size_t total_size() const;
    std::optional<ParamId> find(const std::string& name) const;

    Gradients zero_gradients() const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

void accumulate(Gradients& into, const Gradients& from);
double global_norm(const Gradients& grads);

}  // namespace gflow::num
