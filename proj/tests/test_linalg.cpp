#include <doctest.h>

#include <cmath>

#include "opnorm/error.hpp"
#include "opnorm/linalg.hpp"

using namespace opnorm;

namespace {

Matrix reconstruct(const SvdResult& r) {
    Matrix us = r.u;
    for (std::size_t i = 0; i < us.rows(); ++i) {
        for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= r.s[j];
    }
    return matmul_nt(us, r.v);
}

double orthonormality_error(const Matrix& q) {
    const Matrix g = matmul_tn(q, q);
    return max_abs_diff(g, Matrix::identity(g.rows()));
}

}  // namespace

TEST_CASE("constructors reject empty and non-finite data") {
    CHECK_THROWS_AS(Vector(0), DomainError);
    CHECK_THROWS_AS(Matrix(0, 3), DomainError);
    CHECK_THROWS_AS(Vector({1.0, NAN}), DomainError);
    CHECK_THROWS_AS(Matrix(1, 2, std::vector<double>{1.0, INFINITY}), DomainError);
    CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1.0, 2.0, 3.0}), ShapeError);
}

TEST_CASE("matmul examples") {
    Rng rng(3);
    const Matrix a = gaussian_matrix(3, 3, rng);
    CHECK(matmul(Matrix::identity(3), a) == a);

    const Matrix p = matmul(Matrix::from_rows({{1, 2}, {3, 4}}), Matrix::from_rows({{0}, {1}}));
    CHECK(p == Matrix::from_rows({{2}, {4}}));

    const Matrix x = gaussian_matrix(7, 5, rng);
    const Matrix y = gaussian_matrix(5, 3, rng);
    const Matrix oracle = matmul(y.transpose(), x.transpose()).transpose();
    CHECK(max_abs_diff(matmul(x, y), oracle) <= 1e-12);
    CHECK(max_abs_diff(matmul_tn(x.transpose(), y), matmul(x, y)) <= 1e-12);
    CHECK(max_abs_diff(matmul_nt(x, y.transpose()), matmul(x, y)) <= 1e-12);
}

TEST_CASE("matmul shape errors name both shapes") {
    try {
        matmul(Matrix(2, 3), Matrix(2, 3));
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);
    }
}

TEST_CASE("tiled products agree with a naive triple loop bit for bit") {
    Rng rng(11);
    for (auto [n, m, p] : {std::array<std::size_t, 3>{1, 1, 1}, {5, 131, 7}, {70, 300, 260}, {3, 4, 513}}) {
        const Matrix a = gaussian_matrix(n, m, rng);
        const Matrix b = gaussian_matrix(m, p, rng);
        Matrix naive(n, p);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < m; ++k) {
                for (std::size_t j = 0; j < p; ++j) naive(i, j) += a(i, k) * b(k, j);
            }
        }
        CHECK(matmul(a, b) == naive);
        CHECK(matmul_tn(a.transpose(), b) == naive);
    }
}

TEST_CASE("svd examples") {
    const std::vector<double> d{3.0, 2.0, 1.0};
    const SvdResult r = svd(Matrix::diagonal(d));
    for (std::size_t i = 0; i < 3; ++i) CHECK(r.s[i] == doctest::Approx(d[i]).epsilon(1e-14));

    Rng rng(5);
    const Matrix q = svd(gaussian_matrix(6, 6, rng)).u;
    for (double s : svd(q).s) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));

    const Matrix a = gaussian_matrix(6, 4, rng);
    CHECK(frobenius_norm(reconstruct(svd(a)) - a) / frobenius_norm(a) <= 1e-8);
}

TEST_CASE("svd fuzz over random shapes") {
    Rng rng(17);
    std::uniform_int_distribution<std::size_t> dim(1, 24);
    for (int t = 0; t < 120; ++t) {
        const std::size_t m = dim(rng);
        const std::size_t n = dim(rng);
        Matrix a = gaussian_matrix(m, n, rng);
        if (t % 10 == 0 && m > 1) {
            // Rank-deficient: duplicate a row.
            std::copy(a.row(0).begin(), a.row(0).end(), a.row(1).begin());
        }
        const SvdResult r = svd(a);
        REQUIRE(r.s.size() == std::min(m, n));
        CHECK(frobenius_norm(reconstruct(r) - a) / frobenius_norm(a) <= 1e-8);
        CHECK(orthonormality_error(r.u) <= 1e-10);
        CHECK(orthonormality_error(r.v) <= 1e-10);
        for (std::size_t i = 0; i + 1 < r.s.size(); ++i) CHECK(r.s[i] >= r.s[i + 1]);
        CHECK(r.s[r.s.size() - 1] >= 0.0);
    }
}

TEST_CASE("svd of a zero matrix") {
    const SvdResult r = svd(Matrix(3, 2));
    CHECK(max_abs(r.s.span()) == 0.0);
    CHECK(orthonormality_error(r.u) <= 1e-12);
    CHECK(orthonormality_error(r.v) <= 1e-12);
}

TEST_CASE("power iteration") {
    CHECK(spectral_norm_power(Matrix::diagonal(std::vector<double>{5.0, 1.0}), 50, 1) ==
          doctest::Approx(5.0).epsilon(1e-12));

    Matrix d(64, 64);
    for (std::size_t i = 0; i < 64; ++i) d(i, 0) = std::pow(64.0, -1.0 / 3.0);
    CHECK(spectral_norm_power(d, 5, 2) == doctest::Approx(2.0).epsilon(1e-12));

    CHECK(spectral_norm_power(Matrix(3, 4), 10, 1) == 0.0);
    CHECK_THROWS_AS(spectral_norm_power(Matrix(2, 2, 1.0), 0, 1), DomainError);

    Rng rng(9);
    for (int t = 0; t < 10; ++t) {
        const Matrix a = gaussian_matrix(8, 8, rng);
        const double exact = svd(a).s[0];
        CHECK(std::abs(spectral_norm_power(a, 200, 4) - exact) / exact <= 1e-6);
        CHECK(std::abs(spectral_norm_power(a, 200, 4) - spectral_norm_power(a.transpose(), 200, 4)) <= 1e-9);
        double prev = 0.0;
        for (int iters : {1, 2, 5, 10, 40}) {
            const double v = spectral_norm_power(a, iters, 4);
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("determinism") {
    Rng r1(42), r2(42);
    const Matrix a = gaussian_matrix(9, 7, r1);
    CHECK(a == gaussian_matrix(9, 7, r2));
    const SvdResult s1 = svd(a);
    const SvdResult s2 = svd(a);
    CHECK(s1.s == s2.s);
    CHECK(s1.u == s2.u);
    CHECK(spectral_norm_power(a, 30, 3) == spectral_norm_power(a, 30, 3));
}
