#pragma once

#include <cstddef>
#include <string>

#include "opnorm/linalg.hpp"
#include "opnorm/norms.hpp"

namespace opnorm {

enum class Family { Sign, ColNorm, RowNorm, Spectral };

/// Steepest-descent geometry of one weight block.
///
///   Sign         ℓ1 → ℓ∞
///   ColNorm(q)   ℓ1 → ℓq
///   RowNorm(p)   ℓp → ℓ∞
///   Spectral     ℓ2 → ℓ2
///
/// With `mean` set, the unit ball is moga_scale(spec, d_in, d_out) times the
/// base ball.
struct GeometrySpec {
    Family family = Family::Sign;
    double exponent = kInf;  // q for ColNorm, p for RowNorm; unused otherwise
    bool mean = false;

    static GeometrySpec sign(bool mean = false) { return {Family::Sign, kInf, mean}; }
    static GeometrySpec colnorm(double q, bool mean = false) { return {Family::ColNorm, q, mean}; }
    static GeometrySpec rownorm(double p, bool mean = false) { return {Family::RowNorm, p, mean}; }
    static GeometrySpec spectral(bool mean = false) { return {Family::Spectral, 2.0, mean}; }

    void validate() const;
    std::string str() const;
    /// Operator-norm spec of the base (non-mean) geometry.
    OperatorNormSpec base_norm() const;

    friend bool operator==(const GeometrySpec&, const GeometrySpec&) = default;
};

/// Parses "sign", "spectral", "colnorm:<q>", "rownorm:<p>" with an optional
/// ",mean" suffix; "inf" is accepted as an exponent.
GeometrySpec parse_geometry(const std::string& text);

/// Width factor that turns a unit base-norm direction into a unit
/// mean-normalized one: Sign 1/d_in, ColNorm(q) d_out^{1/q}/d_in,
/// RowNorm(p) d_in^{-1/p}, Spectral sqrt(d_in/d_out).
/// ColNorm and RowNorm require the mean flag.
double moga_scale(const GeometrySpec& spec, std::size_t d_in, std::size_t d_out);

/// Minimizer of ⟨g, D⟩ over the unit ball of `spec`. Zero rows or columns of
/// g give zero rows or columns; sign(0) = 0.
Matrix descent_direction(const Matrix& g, const GeometrySpec& spec);

/// sup ⟨g, D⟩ over the unit ball of `spec`.
double dual_norm(const Matrix& g, const GeometrySpec& spec);

/// ⟨g, d⟩ + dual_norm(g). Throws DomainError if d lies outside the unit ball.
double duality_gap(const Matrix& g, const Matrix& d, const GeometrySpec& spec);

struct NsCoefficients {
    double a = 15.0 / 8.0;
    double b = -10.0 / 8.0;
    double c = 3.0 / 8.0;
};

inline constexpr NsCoefficients kNsQuintic{15.0 / 8.0, -10.0 / 8.0, 3.0 / 8.0};
inline constexpr NsCoefficients kNsCubic{1.5, -0.5, 0.0};
inline constexpr NsCoefficients kNsMuon{3.4445, -4.7750, 2.0315};

NsCoefficients parse_ns_coefficients(const std::string& name);

struct NewtonSchulzResult {
    Matrix x;
    bool zero_input = false;
};

/// X_0 = G / ‖G‖_F, then X ← aX + b(XXᵀ)X + c(XXᵀ)²X.
NewtonSchulzResult newton_schulz(const Matrix& g, int iters, NsCoefficients coeffs = kNsQuintic);
Matrix newton_schulz_sign(const Matrix& g, int iters = 10, NsCoefficients coeffs = kNsQuintic);

/// UVᵀ over the nonzero singular triplets of g.
Matrix matrix_sign_svd(const Matrix& g);

enum class Role {
    Embedding,
    HiddenWeight,
    OutputWeight,
    Bias,
    LayerNormWeight,
    LayerNormBias,
    AttentionQKV,
    AttentionOut,
    Unembedding,
};

struct ParamRole {
    Role role = Role::HiddenWeight;
    std::size_t d_in = 1;
    std::size_t d_out = 1;
};

struct RoleRule {
    GeometrySpec geometry;
    double scale = 1.0;
};

/// Per-role update geometry and multiplier. Embeddings (and the tied
/// unembedding) take colnorm with scale d_out^{1/q} when the base family is
/// ColNorm, otherwise Sign with scale 1; `embedding_sign` forces the latter.
RoleRule role_rule(const ParamRole& role, const GeometrySpec& base, bool embedding_sign = false);

/// Multiplier on q·k logits that keeps them O(1) in d_v.
double attention_logit_scale(const GeometrySpec& geometry, std::size_t d_v);

}  // namespace opnorm
