// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/numcore/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gflow/errors.hpp"

namespace gflow::num {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_size(shape_) != values_.size()) {
        throw ShapeError("tensor shape " + shape_string(shape_) + " does not match " +
                         std::to_string(values_.size()) + " values");
    }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) { return Tensor({rows, cols}, fill); }

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

double Tensor::item() const {
    if (values_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape_));
    return values_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
    Tensor out = *this;
    out.reshape(std::move(shape));
    return out;
}

void Tensor::reshape(Shape shape) {
    if (shape_size(shape) != values_.size()) {
        throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    shape_ = std::move(shape);
}

void Tensor::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

bool Tensor::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.size() != b.size()) throw ShapeError("max_abs_diff: size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace gflow::num
