// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/numcore/tape.hpp"

#include "gflow/errors.hpp"

namespace gflow::num {

Tape::Tape(const ParamStore* params, bool record) : params_(params), record_(record) {
    if (params_ != nullptr) param_nodes_.assign(params_->count(), -1);
}

Var Tape::constant(Tensor value) {
    Node n;
    n.owned = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(ParamId id) {
    if (params_ == nullptr) throw ConfigError("tape has no parameter store");
    int& slot = param_nodes_.at(static_cast<std::size_t>(id));
    if (slot >= 0) return Var{slot};
    Node n;
    n.ref = &params_->value(id);
    n.param = id;
    n.requires_grad = record_;
    nodes_.push_back(std::move(n));
    slot = static_cast<int>(nodes_.size() - 1);
    return Var{slot};
}

Var Tape::push(Tensor value, std::initializer_list<Var> parents, Backward backward) {
    Node n;
    n.owned = std::move(value);
    if (record_) {
        for (Var p : parents) {
            if (nodes_[static_cast<std::size_t>(p.id)].requires_grad) {
                n.requires_grad = true;
                break;
            }
        }
        if (n.requires_grad) n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Tape::push(Tensor value, const std::vector<Var>& parents, Backward backward) {
    Node n;
    n.owned = std::move(value);
    if (record_) {
        for (Var p : parents) {
            if (nodes_[static_cast<std::size_t>(p.id)].requires_grad) {
                n.requires_grad = true;
                break;
            }
        }
        if (n.requires_grad) n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
}

const Tensor& Tape::value(Var v) const {
    const Node& n = nodes_.at(static_cast<std::size_t>(v.id));
    return n.ref != nullptr ? *n.ref : n.owned;
}

Tensor& Tape::grad(Var v) {
    Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (n.grad.empty()) {
        const Tensor& val = n.ref != nullptr ? *n.ref : n.owned;
        n.grad = Tensor(val.shape(), 0.0);
    }
    return n.grad;
}

Gradients Tape::backward(Var loss) {
    if (!record_) throw ConfigError("backward() on a tape built without recording");
    if (value(loss).size() != 1) throw ShapeError("backward() needs a scalar loss");
    for (auto& n : nodes_) n.grad = Tensor();

    Gradients out = params_ != nullptr ? params_->zero_gradients() : Gradients{};
    if (!nodes_[static_cast<std::size_t>(loss.id)].requires_grad) return out;

    grad(loss)[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.grad.empty() || !n.backward) continue;
        n.backward(*this, i);
    }
    for (const auto& n : nodes_) {
        if (n.param >= 0 && !n.grad.empty()) out[static_cast<std::size_t>(n.param)] = n.grad;
    }
    return out;
}

void Tape::clear() {
    nodes_.clear();
    if (params_ != nullptr) param_nodes_.assign(params_->count(), -1);
}

}  // namespace gflow::num
