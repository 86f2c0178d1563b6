#pragma once

// Dense row-major matrices and vectors in double precision.
//
// Orientation convention used throughout the library: a weight matrix has
// rows = fan-out (d_out) and cols = fan-in (d_in).

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace opnorm {

using Rng = std::mt19937_64;

class Vector {
  public:
    Vector() = default;
    explicit Vector(std::size_t n, double fill = 0.0);
    explicit Vector(std::vector<double> data);
    Vector(std::initializer_list<double> values);

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<double> span() noexcept { return data_; }
    std::span<const double> span() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    friend bool operator==(const Vector&, const Vector&) = default;

  private:
    std::vector<double> data_;
};

class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> diag);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    Vector col(std::size_t c) const;

    std::span<double> span() noexcept { return data_; }
    std::span<const double> span() const noexcept { return data_; }

    Matrix transpose() const;
    std::string shape_string() const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s) noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);
Matrix operator*(Matrix a, double s);

/// Standard product with row-major, left-to-right accumulation per entry.
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a·bᵀ.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, std::span<const double> x);
/// aᵀ·x.
Vector matvec_t(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
/// Frobenius inner product ⟨a, b⟩ = Σ a_ij b_ij.
double inner(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);
double max_abs(std::span<const double> x);
double max_abs_diff(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
bool all_finite(std::span<const double> x);

struct SvdResult {
    Matrix u;  // rows x r
    Vector s;  // r singular values, descending
    Matrix v;  // cols x r
};

inline constexpr int kSvdMaxSweeps = 60;
inline constexpr double kSvdTolerance = 1e-12;

/// Thin SVD by one-sided (Hestenes) Jacobi rotations.
///
/// Columns of u for exactly-zero singular values are completed to an
/// orthonormal set. Throws ConvergenceError when the off-diagonal test still
/// fails after kSvdMaxSweeps sweeps.
SvdResult svd(const Matrix& a);

/// Largest singular value by power iteration on aᵀa from a seeded Gaussian
/// start. Returns the running maximum of ‖a v_k‖, so the estimate never
/// decreases with iters.
double spectral_norm_power(const Matrix& a, int iters, std::uint64_t seed);

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, double stddev = 1.0);
Vector gaussian_vector(std::size_t n, Rng& rng, double stddev = 1.0);

}  // namespace opnorm
