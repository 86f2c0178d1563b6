#include "opnorm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "opnorm/error.hpp"

namespace opnorm {

namespace {

void require_finite(std::span<const double> x, const char* what) {
    if (!all_finite(x)) {
        throw DomainError(std::string(what) + ": non-finite entry");
    }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
    }
}

}  // namespace

// ---------------------------------------------------------------- Vector

Vector::Vector(std::size_t n, double fill) : data_(n, fill) {
    if (n == 0) throw DomainError("Vector: length must be >= 1");
    require_finite(data_, "Vector");
}

Vector::Vector(std::vector<double> data) : data_(std::move(data)) {
    if (data_.empty()) throw DomainError("Vector: length must be >= 1");
    require_finite(data_, "Vector");
}

Vector::Vector(std::initializer_list<double> values) : Vector(std::vector<double>(values)) {}

// ---------------------------------------------------------------- Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) throw DomainError("Matrix: dimensions must be >= 1");
    require_finite(data_, "Matrix");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    if (rows == 0 || cols == 0) throw DomainError("Matrix: dimensions must be >= 1");
    if (data_.size() != rows * cols) {
        throw ShapeError("Matrix: expected " + std::to_string(rows * cols) + " entries, got " +
                         std::to_string(data_.size()));
    }
    require_finite(data_, "Matrix");
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("Matrix::from_rows: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    require_finite(m.span(), "Matrix::diagonal");
    return m;
}

Vector Matrix::col(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return Vector(std::move(out));
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

std::string Matrix::shape_string() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Matrix& Matrix::operator+=(const Matrix& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
    for (double& x : data_) x *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }
Matrix operator*(Matrix a, double s) { return a *= s; }

// ---------------------------------------------------------------- products

namespace {
constexpr std::size_t kTileI = 64;
constexpr std::size_t kTileJ = 256;
constexpr std::size_t kTileK = 128;
}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ " + a.shape_string() + " * " +
                         b.shape_string());
    }
    const std::size_t n = a.rows(), m = a.cols(), p = b.cols();
    Matrix c(n, p);
    // Tiles keep a block of b in cache. Each c(i,j) still accumulates over
    // k in increasing order, so the result matches the untiled loop bit for bit.
    for (std::size_t k0 = 0; k0 < m; k0 += kTileK) {
        const std::size_t k1 = std::min(m, k0 + kTileK);
        for (std::size_t j0 = 0; j0 < p; j0 += kTileJ) {
            const std::size_t j1 = std::min(p, j0 + kTileJ);
            for (std::size_t i = 0; i < n; ++i) {
                double* ci = c.row(i).data();
                const double* ai = a.row(i).data();
                std::size_t k = k0;
                for (; k + 4 <= k1; k += 4) {
                    const double a0 = ai[k], a1 = ai[k + 1], a2 = ai[k + 2], a3 = ai[k + 3];
                    const double* b0 = b.row(k).data();
                    const double* b1 = b.row(k + 1).data();
                    const double* b2 = b.row(k + 2).data();
                    const double* b3 = b.row(k + 3).data();
                    for (std::size_t j = j0; j < j1; ++j) {
                        double t = ci[j];
                        t += a0 * b0[j];
                        t += a1 * b1[j];
                        t += a2 * b2[j];
                        t += a3 * b3[j];
                        ci[j] = t;
                    }
                }
                for (; k < k1; ++k) {
                    const double aik = ai[k];
                    const double* bk = b.row(k).data();
                    for (std::size_t j = j0; j < j1; ++j) ci[j] += aik * bk[j];
                }
            }
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_tn: row counts differ " + a.shape_string() + "^T * " +
                         b.shape_string());
    }
    const std::size_t n = a.cols(), m = a.rows(), p = b.cols();
    Matrix c(n, p);
    for (std::size_t i0 = 0; i0 < n; i0 += kTileI) {
        const std::size_t i1 = std::min(n, i0 + kTileI);
        for (std::size_t j0 = 0; j0 < p; j0 += kTileJ) {
            const std::size_t j1 = std::min(p, j0 + kTileJ);
            std::size_t k = 0;
            for (; k + 4 <= m; k += 4) {
                const double* a0 = a.row(k).data();
                const double* a1 = a.row(k + 1).data();
                const double* a2 = a.row(k + 2).data();
                const double* a3 = a.row(k + 3).data();
                const double* b0 = b.row(k).data();
                const double* b1 = b.row(k + 1).data();
                const double* b2 = b.row(k + 2).data();
                const double* b3 = b.row(k + 3).data();
                for (std::size_t i = i0; i < i1; ++i) {
                    const double x0 = a0[i], x1 = a1[i], x2 = a2[i], x3 = a3[i];
                    double* ci = c.row(i).data();
                    for (std::size_t j = j0; j < j1; ++j) {
                        double t = ci[j];
                        t += x0 * b0[j];
                        t += x1 * b1[j];
                        t += x2 * b2[j];
                        t += x3 * b3[j];
                        ci[j] = t;
                    }
                }
            }
            for (; k < m; ++k) {
                const double* ak = a.row(k).data();
                const double* bk = b.row(k).data();
                for (std::size_t i = i0; i < i1; ++i) {
                    const double aki = ak[i];
                    double* ci = c.row(i).data();
                    for (std::size_t j = j0; j < j1; ++j) ci[j] += aki * bk[j];
                }
            }
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: column counts differ " + a.shape_string() + " * " +
                         b.shape_string() + "^T");
    }
    return matmul(a, b.transpose());
}

Vector matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) {
        throw ShapeError("matvec: " + a.shape_string() + " times vector of length " +
                         std::to_string(x.size()));
    }
    Vector y(a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) y[r] = dot(a.row(r), x);
    return y;
}

Vector matvec_t(const Matrix& a, std::span<const double> x) {
    if (a.rows() != x.size()) {
        throw ShapeError("matvec_t: " + a.shape_string() + "^T times vector of length " +
                         std::to_string(x.size()));
    }
    Vector y(a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto row = a.row(r);
        for (std::size_t c = 0; c < a.cols(); ++c) y[c] += row[c] * x[r];
    }
    return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeError("dot: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double inner(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "inner");
    return dot(a.span(), b.span());
}

double frobenius_norm(const Matrix& a) {
    const double m = max_abs(a.span());
    if (m == 0.0) return 0.0;
    double s = 0.0;
    for (double x : a.span()) {
        const double t = x / m;
        s += t * t;
    }
    return m * std::sqrt(s);
}

double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.span()[i] - b.span()[i]));
    return m;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.span()[i] *= b.span()[i];
    return c;
}

bool all_finite(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------- SVD

namespace {

// Works on a column-major copy: columns are contiguous, which is what the
// Jacobi rotations touch.
struct ColumnSet {
    std::size_t len = 0;
    std::size_t count = 0;
    std::vector<double> data;

    double* col(std::size_t j) { return data.data() + j * len; }
    const double* col(std::size_t j) const { return data.data() + j * len; }
};

double col_dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void rotate(double* x, double* y, std::size_t n, double c, double s) {
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

// Fill `out` with a unit vector orthogonal to the first `filled` columns of `basis`.
bool complete_column(const ColumnSet& basis, std::size_t filled, std::size_t k, double* out) {
    const std::size_t n = basis.len;
    std::fill(out, out + n, 0.0);
    out[k] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < filled; ++j) {
            const double* b = basis.col(j);
            const double proj = col_dot(out, b, n);
            for (std::size_t i = 0; i < n; ++i) out[i] -= proj * b[i];
        }
    }
    const double norm = std::sqrt(col_dot(out, out, n));
    if (norm < 0.5) return false;
    for (std::size_t i = 0; i < n; ++i) out[i] /= norm;
    return true;
}

// Requires a.rows() >= a.cols().
SvdResult svd_tall(const Matrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    ColumnSet u{m, n, std::vector<double>(m * n)};
    ColumnSet v{n, n, std::vector<double>(n * n, 0.0)};
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) u.col(c)[r] = a(r, c);
    for (std::size_t c = 0; c < n; ++c) v.col(c)[c] = 1.0;

    bool converged = false;
    for (int sweep = 0; sweep < kSvdMaxSweeps && !converged; ++sweep) {
        converged = true;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double* ui = u.col(i);
                double* uj = u.col(j);
                const double alpha = col_dot(ui, ui, m);
                const double beta = col_dot(uj, uj, m);
                const double gamma = col_dot(ui, uj, m);
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::abs(gamma) <= kSvdTolerance * std::sqrt(alpha) * std::sqrt(beta)) continue;
                converged = false;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = c * t;
                rotate(ui, uj, m, c, s);
                rotate(v.col(i), v.col(j), n, c, s);
            }
        }
    }
    if (!converged) {
        throw ConvergenceError("svd: off-diagonal tolerance not reached after " +
                               std::to_string(kSvdMaxSweeps) + " Jacobi sweeps");
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(col_dot(u.col(j), u.col(j), m));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    ColumnSet us{m, n, std::vector<double>(m * n, 0.0)};
    std::vector<double> s_sorted(n);
    std::size_t nonzero = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        s_sorted[k] = sigma[j];
        if (sigma[j] > std::numeric_limits<double>::min()) {
            const double* src = u.col(j);
            double* dst = us.col(k);
            for (std::size_t r = 0; r < m; ++r) dst[r] = src[r] / sigma[j];
            ++nonzero;
        } else {
            s_sorted[k] = 0.0;
        }
    }
    // Zero singular values sort last, so the first `nonzero` columns are set.
    std::size_t basis_index = 0;
    for (std::size_t k = nonzero; k < n; ++k) {
        while (!complete_column(us, k, basis_index, us.col(k))) ++basis_index;
        ++basis_index;
    }

    SvdResult out{Matrix(m, n), Vector(std::move(s_sorted)), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        const double* uc = us.col(k);
        for (std::size_t r = 0; r < m; ++r) out.u(r, k) = uc[r];
        const double* vc = v.col(order[k]);
        for (std::size_t r = 0; r < n; ++r) out.v(r, k) = vc[r];
    }
    return out;
}

}  // namespace

SvdResult svd(const Matrix& a) {
    require_finite(a.span(), "svd");
    if (a.rows() >= a.cols()) return svd_tall(a);
    SvdResult t = svd_tall(a.transpose());
    return SvdResult{std::move(t.v), std::move(t.s), std::move(t.u)};
}

// ---------------------------------------------------------------- power iteration

double spectral_norm_power(const Matrix& a, int iters, std::uint64_t seed) {
    if (iters < 1) throw DomainError("spectral_norm_power: iters must be >= 1");
    if (max_abs(a.span()) == 0.0) return 0.0;

    Rng rng(seed);
    Vector v = gaussian_vector(a.cols(), rng);
    auto normalize = [](Vector& x) {
        const double n = std::sqrt(dot(x.span(), x.span()));
        if (n == 0.0) return false;
        for (double& e : x) e /= n;
        return true;
    };
    if (!normalize(v)) v[0] = 1.0;

    Vector av = matvec(a, v.span());
    double best = std::sqrt(dot(av.span(), av.span()));
    for (int it = 0; it < iters; ++it) {
        Vector w = matvec_t(a, av.span());
        if (!normalize(w)) break;
        v = std::move(w);
        av = matvec(a, v.span());
        best = std::max(best, std::sqrt(dot(av.span(), av.span())));
    }
    return best;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> data(rows * cols);
    for (double& x : data) x = dist(rng);
    return Matrix(rows, cols, std::move(data));
}

Vector gaussian_vector(std::size_t n, Rng& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> data(n);
    for (double& x : data) x = dist(rng);
    return Vector(std::move(data));
}

}  // namespace opnorm
