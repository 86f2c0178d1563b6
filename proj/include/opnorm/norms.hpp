#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>

#include <json.hpp>

#include "opnorm/linalg.hpp"
#include "opnorm/params.hpp"

namespace opnorm {

/// p = ∞ sentinel. Every exponent branch tests for it explicitly.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// ℓp, or the mean-normalized (p,mean) norm (1/n Σ|x_i|^p)^{1/p}.
struct VectorNormSpec {
    double p = 2.0;
    bool mean = false;

    void validate() const;
    std::string str() const;
    friend bool operator==(const VectorNormSpec&, const VectorNormSpec&) = default;
};

struct OperatorNormSpec {
    VectorNormSpec input;
    VectorNormSpec output;

    std::string str() const;
    friend bool operator==(const OperatorNormSpec&, const OperatorNormSpec&) = default;
};

/// p* = p/(p-1), with 1 <-> ∞.
double dual_exponent(double p);
/// 1/p with 1/∞ = 0.
double inv_exponent(double p);

double vec_norm(std::span<const double> x, VectorNormSpec spec);
inline double vec_norm(const Vector& x, VectorNormSpec spec) { return vec_norm(x.span(), spec); }

/// True for 1→q, p→∞ and 2→2, with or without mean normalization.
bool is_computable(const OperatorNormSpec& spec);

/// (mean_in ? d_in^{1/p} : 1) / (mean_out ? d_out^{1/q} : 1).
double mean_factor(const OperatorNormSpec& spec, std::size_t d_in, std::size_t d_out);

/// Closed form: max column q-norm (1→q), max row p*-norm (p→∞), top singular
/// value (2→2), times mean_factor. Throws UnsupportedError otherwise.
double op_norm_exact(const Matrix& a, const OperatorNormSpec& spec);

/// Lower estimate of the operator norm by sampling unit input vectors.
///
/// Candidates are Gaussian and random sign vectors rescaled onto the
/// input-norm sphere plus every signed standard basis vector; the best few
/// are then refined by the nonlinear power iteration for p→q norms. Every
/// candidate is feasible, so the result never exceeds the true norm.
double op_norm_bruteforce(const Matrix& a, const OperatorNormSpec& spec, int samples,
                          std::uint64_t seed);

/// ‖u vᵀ‖ for any p→q, mean-normalized or not: ‖u‖_out times the dual
/// input norm of v. Exact without forming the matrix.
double rank_one_op_norm(std::span<const double> u, std::span<const double> v,
                        const OperatorNormSpec& spec);

struct BlockTerms {
    double first = 0.0;   // ‖W_1‖_{1→(q,mean)}
    double hidden = 0.0;  // max over 2 ≤ i ≤ K-1 of ‖W_i‖_{(p,mean)→(q,mean)}
    double last = 0.0;    // ‖W_K‖_{(p,mean)→∞}
    double bias = 0.0;    // max_i ‖b_i‖_∞

    double max() const;
};

BlockTerms block_terms(const BlockSet& params, double p, double q);
double block_norm(const BlockSet& params, double p, double q);

/// Operator-norm spec of layer i (0-based) inside the block norm.
OperatorNormSpec layer_spec(std::size_t layer, std::size_t depth, double p, double q);

struct LemmaReport {
    int trials = 0;
    int violations = 0;
    /// lhs / rhs maxima for: monotonicity, norm comparison, Hadamard bound,
    /// inner-product bound.
    std::array<double, 4> worst_ratio{};

    nlohmann::json to_json() const;
};

/// Fuzzes the four (p,mean) inequalities on random n ∈ [2,512] and
/// p, q ∈ [1,8] ∪ {∞}. Violations are counted, not thrown.
LemmaReport check_lemma_inequalities(int trials, std::uint64_t seed);

}  // namespace opnorm
