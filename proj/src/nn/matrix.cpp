#include "censoring/nn/matrix.hpp"

#include "censoring/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace censoring::nn {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

bool Matrix::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Matrix::shape_string() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_transposed: " + a.shape_string() + " vs " + b.shape_string());
    }
    Matrix out(a.rows(), b.rows());
    const std::size_t k = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ar = a.data().data() + i * k;
        double* orow = out.data().data() + i * b.rows();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* br = b.data().data() + j * k;
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += ar[t] * br[t];
            orow[j] = acc;
        }
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + a.shape_string() + " vs " + b.shape_string());
    }
    Matrix out(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* orow = out.data().data() + i * n;
        for (std::size_t t = 0; t < a.cols(); ++t) {
            const double av = a(i, t);
            if (av == 0.0) continue;
            const double* brow = b.data().data() + t * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Matrix transposed_matmul(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("transposed_matmul: " + a.shape_string() + " vs " + b.shape_string());
    }
    Matrix out(a.cols(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* brow = b.data().data() + r * n;
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double av = a(r, i);
            if (av == 0.0) continue;
            double* orow = out.data().data() + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
    }
    return out;
}

Matrix hconcat(std::span<const Matrix> parts) {
    if (parts.empty()) return {};
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) {
            throw ShapeError("hconcat: row mismatch " + parts.front().shape_string() + " vs " + p.shape_string());
        }
        cols += p.cols();
    }
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t offset = 0;
        for (const auto& p : parts) {
            for (std::size_t c = 0; c < p.cols(); ++c) out(r, offset + c) = p(r, c);
            offset += p.cols();
        }
    }
    return out;
}

Matrix column_slice(const Matrix& m, std::size_t first, std::size_t count) {
    if (first + count > m.cols()) {
        throw ShapeError("column_slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                         ") out of range for " + m.shape_string());
    }
    Matrix out(m.rows(), count);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < count; ++c) out(r, c) = m(r, first + c);
    }
    return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
    Matrix out(indices.size(), m.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= m.rows()) throw std::out_of_range("gather_rows: index out of range");
        auto src = m.row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Matrix vconcat(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ShapeError("vconcat: " + a.shape_string() + " vs " + b.shape_string());
    std::vector<double> data;
    data.reserve(a.size() + b.size());
    data.insert(data.end(), a.data().begin(), a.data().end());
    data.insert(data.end(), b.data().begin(), b.data().end());
    return Matrix(a.rows() + b.rows(), a.cols(), std::move(data));
}

Matrix row_slice(const Matrix& m, std::size_t first, std::size_t count) {
    if (first + count > m.rows()) throw ShapeError("row_slice out of range for " + m.shape_string());
    auto begin = m.data().begin() + static_cast<std::ptrdiff_t>(first * m.cols());
    return Matrix(count, m.cols(), std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count * m.cols())));
}

Matrix one_hot(std::span<const int> labels, std::size_t classes) {
    Matrix out(labels.size(), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int l = labels[i];
        if (l < 0 || static_cast<std::size_t>(l) >= classes) {
            throw std::out_of_range("one_hot: label " + std::to_string(l) + " outside [0, " +
                                    std::to_string(classes) + ")");
        }
        out(i, static_cast<std::size_t>(l)) = 1.0;
    }
    return out;
}

void add_in_place(Matrix& acc, const Matrix& other) {
    if (acc.rows() != other.rows() || acc.cols() != other.cols()) {
        throw ShapeError("add_in_place: " + acc.shape_string() + " vs " + other.shape_string());
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += other.data()[i];
}

void scale_in_place(Matrix& m, double factor) {
    for (double& v : m.data()) v *= factor;
}

}  // namespace censoring::nn
