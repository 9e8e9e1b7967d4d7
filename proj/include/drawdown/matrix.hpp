#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace drawdown {

/// Dense row-major matrix; rows are c-levels, columns are spatial nodes.
template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    T& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    const T& operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    std::span<T> row(std::size_t i) {
        return std::span<T>(data_).subspan(i * cols_, cols_);
    }
    std::span<const T> row(std::size_t i) const {
        return std::span<const T>(data_).subspan(i * cols_, cols_);
    }

    std::span<const T> data() const noexcept { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

}  // namespace drawdown
