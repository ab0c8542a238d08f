#include "flowguard/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "flowguard/error.hpp"

namespace flowguard {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + flowguard::shape_string(Shape{rows, cols}));
    }
}

Tensor Tensor::row_vector(std::initializer_list<double> values) {
    return Tensor(1, values.size(), std::vector<double>(values));
}

Tensor Tensor::column_vector(std::initializer_list<double> values) {
    return Tensor(values.size(), 1, std::vector<double>(values));
}

double Tensor::item() const {
    if (rows_ != 1 || cols_ != 1) {
        throw ShapeError("item() on non-scalar tensor of shape " + shape_string());
    }
    return data_[0];
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

std::string Tensor::shape_string() const { return flowguard::shape_string(shape()); }

std::string shape_string(Tensor::Shape shape) {
    return "[" + std::to_string(shape[0]) + "x" + std::to_string(shape[1]) + "]";
}

}  // namespace flowguard
