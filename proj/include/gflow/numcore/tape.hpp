// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

#include "gflow/numcore/params.hpp"
#include "gflow/numcore/tensor.hpp"

namespace gflow::num {

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode gradient tape over whole-tensor operations.
//
// Nodes are appended in evaluation order; backward() walks them in reverse.
// Parameters enter through param(), which refers to the ParamStore storage
// without copying it. A tape built with record=false keeps values only and is
// what the sampling / inverse paths use.
//
// A tape is single-threaded. The kernels invoked by its ops may use OpenMP.
class Tape {
public:
    using Backward = std::function<void(Tape&, int self)>;

    explicit Tape(const ParamStore* params = nullptr, bool record = true);

    bool recording() const { return record_; }

    Var constant(Tensor value);
    Var param(ParamId id);
    Var push(Tensor value, std::initializer_list<Var> parents, Backward backward);
    Var push(Tensor value, const std::vector<Var>& parents, Backward backward);

    const Tensor& value(Var v) const;
    bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }

    // Gradient buffer of v, zero-filled on first access during backward.
    Tensor& grad(Var v);
    Tensor& grad(int id) { return grad(Var{id}); }
    bool has_grad(int id) const { return !nodes_[static_cast<std::size_t>(id)].grad.empty(); }

    // d(loss)/d(parameter) for every parameter of the store; parameters the
    // loss does not touch get exact zeros. Can be called repeatedly.
    Gradients backward(Var loss);

    std::size_t size() const { return nodes_.size(); }
    void clear();

private:
    struct Node {
        Tensor owned;
        const Tensor* ref = nullptr;
        Tensor grad;
        Backward backward;
        int param = -1;
        bool requires_grad = false;
    };

    const ParamStore* params_;
    bool record_;
    std::vector<Node> nodes_;
    std::vector<int> param_nodes_;
};

}  // namespace gflow::num
