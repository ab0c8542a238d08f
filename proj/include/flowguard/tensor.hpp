#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace flowguard {

/// Dense row-major matrix of doubles. Every numeric carrier in the toolkit is
/// rank 2: vectors are 1 x n (row) or n x 1 (column), scalars are 1 x 1.
/// Zero-sized dimensions are allowed.
class Tensor {
public:
    using Shape = std::array<std::size_t, 2>;

    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
    /// Throws ShapeError if data.size() != rows * cols.
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

    [[nodiscard]] static Tensor scalar(double value) { return Tensor(1, 1, value); }
    [[nodiscard]] static Tensor row_vector(std::initializer_list<double> values);
    [[nodiscard]] static Tensor column_vector(std::initializer_list<double> values);

    [[nodiscard]] Shape shape() const noexcept { return {rows_, cols_}; }
    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] std::span<double> row(std::size_t r) noexcept {
        return std::span<double>(data_).subspan(r * cols_, cols_);
    }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
        return std::span<const double>(data_).subspan(r * cols_, cols_);
    }

    /// Value of a 1 x 1 tensor; throws ShapeError otherwise.
    [[nodiscard]] double item() const;
    [[nodiscard]] bool all_finite() const noexcept;
    void fill(double value) noexcept;

    [[nodiscard]] std::string shape_string() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[nodiscard]] std::string shape_string(Tensor::Shape shape);

}  // namespace flowguard
