#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hln {

// Owning row-major matrix. Rows are contiguous, no padding between rows.
template <typename T>
class Matrix {
public:
    Matrix() = default;

    Matrix(std::int64_t rows, std::int64_t cols) : rows_(rows), cols_(cols) {
        if (rows < 0 || cols < 0) {
            throw std::invalid_argument("Matrix: negative shape");
        }
        data_.resize(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    }

    Matrix(std::int64_t rows, std::int64_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (rows < 0 || cols < 0) {
            throw std::invalid_argument("Matrix: negative shape");
        }
        if (data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
            throw std::invalid_argument("Matrix: data size does not match shape");
        }
    }

    std::int64_t rows() const { return rows_; }
    std::int64_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    std::span<const T> row(std::int64_t i) const {
        return {data_.data() + i * cols_, static_cast<std::size_t>(cols_)};
    }
    std::span<T> row(std::int64_t i) {
        return {data_.data() + i * cols_, static_cast<std::size_t>(cols_)};
    }

    T at(std::int64_t i, std::int64_t j) const { return data_[i * cols_ + j]; }
    T& at(std::int64_t i, std::int64_t j) { return data_[i * cols_ + j]; }

    const T* data() const { return data_.data(); }
    T* data() { return data_.data(); }
    std::size_t size() const { return data_.size(); }

    bool operator==(const Matrix&) const = default;

private:
    std::int64_t rows_ = 0;
    std::int64_t cols_ = 0;
    std::vector<T> data_;
};

using FloatMatrix = Matrix<float>;

}  // namespace hln
