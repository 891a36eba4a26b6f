#pragma once

// Dense 64-bit matrices and vectors.
//
// Storage is row-major and contiguous. Every public operation rejects
// non-finite inputs and results; shapes must match exactly.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace muonkit {

class Vector {
public:
    Vector() = default;
    /// Zero vector of length `len`.
    explicit Vector(std::size_t len);
    /// Takes ownership of `data`; throws NonFiniteError on NaN/Inf.
    explicit Vector(std::vector<double> data);
    Vector(std::initializer_list<double> values);

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double operator[](std::size_t i) const noexcept { return data_[i]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    friend bool operator==(const Vector&, const Vector&) = default;

private:
    std::vector<double> data_;
};

class Matrix {
public:
    Matrix() = default;
    /// Zero matrix.
    Matrix(std::size_t rows, std::size_t cols);
    /// Row-major `data` of length rows*cols; throws ShapeError or NonFiniteError.
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    /// Nested rows, e.g. `Matrix{{1, 2}, {3, 4}}`.
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

bool all_finite(std::span<const double> values) noexcept;

/// Throws NonFiniteError naming `what` if any entry is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);

/// Matrix product. Each output entry accumulates over the inner dimension
/// in increasing index order, so results are bit-reproducible.
Matrix matmul(const Matrix& a, const Matrix& b);

/// a * aᵀ. Computes the upper triangle and mirrors it; the result is exactly
/// symmetric and each entry matches matmul(a, transpose(a)) bit-for-bit.
Matrix gram(const Matrix& a);

Matrix transpose(const Matrix& a);

double frobenius_norm(const Matrix& a);
double euclidean_norm(const Vector& v);

/// alpha*x + beta*y, elementwise.
Matrix axpy_scale(double alpha, const Matrix& x, double beta, const Matrix& y);
Vector axpy_scale(double alpha, const Vector& x, double beta, const Vector& y);

Matrix scale(double alpha, const Matrix& x);
Vector scale(double alpha, const Vector& x);

/// Square matrix with `v` on the main diagonal and exact zeros elsewhere.
Matrix diag_embed(const Vector& v);

/// Main diagonal of a square matrix. Off-diagonal entries are ignored.
Vector diag_extract(const Matrix& m);

}    // namespace muonkit
