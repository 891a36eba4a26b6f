#include "muonkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "muonkit/error.hpp"

namespace muonkit {

namespace {

void require_same_shape(const Matrix& x, const Matrix& y, const char* op) {
    if (!x.same_shape(y)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + " vs " + std::to_string(y.rows()) + "x" +
                         std::to_string(y.cols()));
    }
}

}    // namespace

bool all_finite(std::span<const double> values) noexcept {
    return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

void require_finite(std::span<const double> values, const char* what) {
    if (!all_finite(values)) {
        throw NonFiniteError(std::string(what) + ": non-finite entry");
    }
}

Vector::Vector(std::size_t len) : data_(len, 0.0) {}

Vector::Vector(std::vector<double> data) : data_(std::move(data)) {
    require_finite(data_, "Vector");
}

Vector::Vector(std::initializer_list<double> values) : data_(values) {
    require_finite(data_, "Vector");
}

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("Matrix: data length " + std::to_string(data_.size()) + " != " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    require_finite(data_, "Matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw ShapeError("Matrix: ragged initializer");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
    require_finite(data_, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out(i, i) = 1.0;
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + ")");
    }
    require_finite(a.data(), "matmul lhs");
    require_finite(b.data(), "matmul rhs");

    const std::size_t n = a.rows();
    const std::size_t inner = a.cols();
    const std::size_t m = b.cols();
    Matrix out(n, m);
    // i-k-j order: out(i, j) sees k = 0, 1, ... in sequence.
    for (std::size_t i = 0; i < n; ++i) {
        double* out_row = out.row(i).data();
        const double* a_row = a.row(i).data();
        for (std::size_t k = 0; k < inner; ++k) {
            const double aik = a_row[k];
            const double* b_row = b.row(k).data();
            for (std::size_t j = 0; j < m; ++j) {
                out_row[j] += aik * b_row[j];
            }
        }
    }
    require_finite(out.data(), "matmul result");
    return out;
}

Matrix gram(const Matrix& a) {
    require_finite(a.data(), "gram");
    const Matrix at = transpose(a);
    const std::size_t n = a.rows();
    const std::size_t inner = a.cols();
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double* out_row = out.row(i).data();
        const double* a_row = a.row(i).data();
        for (std::size_t k = 0; k < inner; ++k) {
            const double aik = a_row[k];
            const double* at_row = at.row(k).data();
            for (std::size_t j = i; j < n; ++j) {
                out_row[j] += aik * at_row[j];
            }
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            out(j, i) = out_row[j];
        }
    }
    require_finite(out.data(), "gram result");
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out(j, i) = a(i, j);
        }
    }
    return out;
}

namespace {

// Squares are summed in ascending order, so the result depends only on the
// multiset of entries (a matrix and its transpose agree exactly).
double l2_norm(std::span<const double> values) {
    require_finite(values, "norm");
    std::vector<double> squares(values.size());
    std::transform(values.begin(), values.end(), squares.begin(), [](double x) { return x * x; });
    std::sort(squares.begin(), squares.end());
    double sum = 0.0;
    for (double sq : squares) {
        sum += sq;
    }
    return std::sqrt(sum);
}

}    // namespace

double frobenius_norm(const Matrix& a) { return l2_norm(a.data()); }

double euclidean_norm(const Vector& v) { return l2_norm(v.data()); }

Matrix axpy_scale(double alpha, const Matrix& x, double beta, const Matrix& y) {
    require_same_shape(x, y, "axpy_scale");
    Matrix out(x.rows(), x.cols());
    auto xs = x.data();
    auto ys = y.data();
    auto os = out.data();
    for (std::size_t i = 0; i < os.size(); ++i) {
        os[i] = alpha * xs[i] + beta * ys[i];
    }
    require_finite(os, "axpy_scale result");
    return out;
}

Vector axpy_scale(double alpha, const Vector& x, double beta, const Vector& y) {
    if (x.size() != y.size()) {
        throw ShapeError("axpy_scale: length mismatch " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
    }
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = alpha * x[i] + beta * y[i];
    }
    require_finite(out.data(), "axpy_scale result");
    return out;
}

Matrix scale(double alpha, const Matrix& x) {
    Matrix out = x;
    for (double& v : out.data()) {
        v *= alpha;
    }
    require_finite(out.data(), "scale result");
    return out;
}

Vector scale(double alpha, const Vector& x) {
    Vector out = x;
    for (double& v : out.data()) {
        v *= alpha;
    }
    require_finite(out.data(), "scale result");
    return out;
}

Matrix diag_embed(const Vector& v) {
    if (v.empty()) {
        throw InvalidArgument("diag_embed: empty vector");
    }
    Matrix out(v.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out(i, i) = v[i];
    }
    return out;
}

Vector diag_extract(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw ShapeError("diag_extract: matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", not square");
    }
    Vector out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out[i] = m(i, i);
    }
    return out;
}

}    // namespace muonkit
