#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace censoring::nn {

/// Dense row-major matrix of 64-bit reals. Batches are stored one sample per row.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool all_finite() const noexcept;
    std::string shape_string() const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// a * b^T, the layout used by dense layers (weights stored out x in).
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
/// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b
Matrix transposed_matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

/// Horizontal concatenation; all parts must have the same row count.
Matrix hconcat(std::span<const Matrix> parts);
/// Columns [first, first + count).
Matrix column_slice(const Matrix& m, std::size_t first, std::size_t count);
/// Rows picked by index, in the given order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);
/// Stacks b under a.
Matrix vconcat(const Matrix& a, const Matrix& b);
/// Rows [first, first + count).
Matrix row_slice(const Matrix& m, std::size_t first, std::size_t count);

/// One-hot rows; throws std::out_of_range for labels outside [0, classes).
Matrix one_hot(std::span<const int> labels, std::size_t classes);

void add_in_place(Matrix& acc, const Matrix& other);
void scale_in_place(Matrix& m, double factor);

}  // namespace censoring::nn
