#include "oal/core/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "oal/simd/kernels.hpp"

namespace oal {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw std::invalid_argument("matrix data length " + std::to_string(data_.size()) +
                                    " does not match shape " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw std::invalid_argument("ragged matrix initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::row_vector(std::span<const double> v) {
    return Matrix(1, v.size(), std::vector<double>(v.begin(), v.end()));
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
    // x * 0 is NaN exactly when x is NaN or infinite.
    double acc = 0.0;
    for (double x : data_) acc += x * 0.0;
    return acc == 0.0;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul shape mismatch: " + shape_string(a) + " * " + shape_string(b));
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* dst = out.row(i).data();
        for (std::size_t p = 0; p < a.cols(); ++p) {
            const double s = a(i, p);
            if (s != 0.0) simd::axpy(s, b.row(p).data(), dst, b.cols());
        }
    }
    return out;
}

void add_row_inplace(Matrix& a, const Matrix& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw std::invalid_argument("row broadcast shape mismatch: " + shape_string(a) + " + " + shape_string(row));
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += row(0, j);
    }
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
    Matrix out(indices.size(), m.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= m.rows()) throw std::out_of_range("gather_rows index out of range");
        std::copy_n(m.row(indices[i]).data(), m.cols(), out.row(i).data());
    }
    return out;
}

Matrix stack_rows(const std::vector<Vector>& rows, std::size_t width) {
    Matrix out(rows.size(), width);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != width) throw std::invalid_argument("stack_rows: inconsistent row width");
        std::copy(rows[i].begin(), rows[i].end(), out.row(i).data());
    }
    return out;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                                    shape_string(b));
    }
}

std::string shape_string(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace oal
