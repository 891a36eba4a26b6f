#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "muonkit/error.hpp"
#include "muonkit/tensor.hpp"
#include "test_util.hpp"

using namespace muonkit;
using muonkit::testing::random_matrix;
using muonkit::testing::random_vector;

namespace {

// Reference product, independent of the library's loop order.
Matrix triple_loop(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(k, j);
            out(i, j) = sum;
        }
    }
    return out;
}

}    // namespace

TEST_CASE("matmul") {
    SplitMix64 rng(11);
    SUBCASE("identity") {
        const Matrix a = random_matrix(rng, 3, 4);
        CHECK(matmul(Matrix::identity(3), a) == a);
    }
    SUBCASE("2x2 by hand") {
        CHECK(matmul(Matrix{{1, 2}, {3, 4}}, Matrix{{5, 6}, {7, 8}}) == Matrix{{19, 22}, {43, 50}});
    }
    SUBCASE("random 8x8 equals the triple loop exactly") {
        const Matrix a = random_matrix(rng, 8, 8);
        const Matrix b = random_matrix(rng, 8, 8);
        CHECK(matmul(a, b) == triple_loop(a, b));
    }
    SUBCASE("rectangular") {
        const Matrix a = random_matrix(rng, 5, 3);
        const Matrix b = random_matrix(rng, 3, 7);
        const Matrix c = matmul(a, b);
        CHECK(c.rows() == 5);
        CHECK(c.cols() == 7);
        CHECK(c == triple_loop(a, b));
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
    }
    SUBCASE("non-finite result") {
        const double big = std::numeric_limits<double>::max();
        CHECK_THROWS_AS(matmul(Matrix{{big, big}}, Matrix{{big}, {big}}), NonFiniteError);
    }
    SUBCASE("repeatable") {
        const Matrix a = random_matrix(rng, 17, 9);
        const Matrix b = random_matrix(rng, 9, 13);
        CHECK(matmul(a, b) == matmul(a, b));
    }
}

TEST_CASE("gram matches matmul with the transpose bit-for-bit") {
    SplitMix64 rng(12);
    for (int i = 0; i < 10; ++i) {
        const Matrix a = random_matrix(rng, 1 + rng.below(12), 1 + rng.below(12));
        const Matrix g = gram(a);
        CHECK(g == matmul(a, transpose(a)));
        CHECK(g == transpose(g));
    }
}

TEST_CASE("matmul associativity on random triples") {
    SplitMix64 rng(13);
    for (int i = 0; i < 25; ++i) {
        const auto n = 1 + rng.below(8), k = 1 + rng.below(8), m = 1 + rng.below(8), p = 1 + rng.below(8);
        const Matrix a = random_matrix(rng, n, k);
        const Matrix b = random_matrix(rng, k, m);
        const Matrix c = random_matrix(rng, m, p);
        CHECK(testing::relative_frobenius(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) <= 1e-10);
    }
}

TEST_CASE("transpose") {
    CHECK(transpose(Matrix{{1, 2, 3}}) == Matrix{{1}, {2}, {3}});
    const Matrix s{{2, -1, 0}, {-1, 3, 4}, {0, 4, 5}};
    CHECK(transpose(s) == s);
    SplitMix64 rng(14);
    const Matrix a = random_matrix(rng, 5, 3);
    CHECK(transpose(transpose(a)) == a);
}

TEST_CASE("frobenius_norm") {
    CHECK(frobenius_norm(Matrix{{3, 4}}) == 5.0);
    CHECK(frobenius_norm(Matrix(4, 2)) == 0.0);
    const Vector v{1.5, -2.0, 0.25};
    CHECK(frobenius_norm(diag_embed(v)) == doctest::Approx(euclidean_norm(v)).epsilon(1e-15));
    SplitMix64 rng(15);
    for (int i = 0; i < 10; ++i) {
        const Matrix a = random_matrix(rng, 1 + rng.below(9), 1 + rng.below(9));
        CHECK(frobenius_norm(a) == frobenius_norm(transpose(a)));
        CHECK(frobenius_norm(a) > 0.0);
    }
}

TEST_CASE("axpy_scale") {
    SplitMix64 rng(16);
    const Matrix x = random_matrix(rng, 3, 2);
    const Matrix y = random_matrix(rng, 3, 2);
    CHECK(axpy_scale(1.0, x, 0.0, y) == x);
    CHECK(axpy_scale(0.0, x, 1.0, y) == y);
    CHECK(axpy_scale(2.0, Matrix{{1}}, 3.0, Matrix{{2}}) == Matrix{{8}});
    CHECK_THROWS_AS(axpy_scale(1.0, x, 1.0, Matrix(2, 3)), ShapeError);
    CHECK_THROWS_AS(axpy_scale(1.0, Vector{1, 2}, 1.0, Vector{1}), ShapeError);
}

TEST_CASE("diag_embed and diag_extract") {
    CHECK(diag_embed(Vector{3, -4}) == Matrix{{3, 0}, {0, -4}});
    CHECK(diag_embed(Vector{7.5}) == Matrix{{7.5}});
    CHECK(diag_extract(Matrix{{3, 0}, {0, -4}}) == Vector{3, -4});
    CHECK(diag_extract(Matrix::identity(4)) == Vector{1, 1, 1, 1});
    CHECK(diag_extract(Matrix{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}) == Vector{1, 5, 9});
    CHECK_THROWS_AS(diag_extract(Matrix(2, 3)), ShapeError);
    CHECK_THROWS_AS(diag_embed(Vector()), InvalidArgument);

    SplitMix64 rng(17);
    for (int i = 0; i < 10; ++i) {
        const Vector v = random_vector(rng, 1 + rng.below(20));
        CHECK(diag_extract(diag_embed(v)) == v);
    }
}

TEST_CASE("construction rejects bad data") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Matrix(1, 2, {1.0, nan}), NonFiniteError);
    CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), ShapeError);
    CHECK_THROWS_AS((Vector{1.0, std::numeric_limits<double>::infinity()}), NonFiniteError);
    CHECK_THROWS_AS((Matrix{{1, 2}, {3}}), ShapeError);
}
