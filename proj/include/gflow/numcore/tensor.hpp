// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gflow::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. Most kernels treat a tensor as a matrix
// whose column count is the last dimension and whose row count is the product
// of the leading dimensions.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    static Tensor scalar(double value);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }
    std::size_t rows() const { return cols() == 0 ? 0 : size() / cols(); }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& storage() { return values_; }
    const std::vector<double>& storage() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }

    double item() const;

    // Same values, new shape; the element count must match.
    Tensor reshaped(Shape shape) const;
    void reshape(Shape shape);

    void fill(double value);
    bool all_finite() const;
    double sum() const;
    double max_abs() const;

private:
    Shape shape_;
    std::vector<double> values_;
};

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace gflow::num
