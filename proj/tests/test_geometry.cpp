#include <doctest.h>

#include <cmath>

#include "opnorm/error.hpp"
#include "opnorm/experiments.hpp"
#include "opnorm/geometry.hpp"

using namespace opnorm;

namespace {

std::vector<GeometrySpec> base_families() {
    return {GeometrySpec::sign(),         GeometrySpec::colnorm(1.0), GeometrySpec::colnorm(2.0),
            GeometrySpec::colnorm(3.5),   GeometrySpec::colnorm(kInf), GeometrySpec::rownorm(1.0),
            GeometrySpec::rownorm(2.0),   GeometrySpec::rownorm(6.0), GeometrySpec::rownorm(kInf),
            GeometrySpec::spectral()};
}

GeometrySpec with_mean(GeometrySpec g) {
    g.mean = true;
    return g;
}

}  // namespace

TEST_CASE("descent_direction examples") {
    const Matrix d = descent_direction(Matrix::from_rows({{3}, {4}}), GeometrySpec::colnorm(2.0));
    CHECK(d(0, 0) == doctest::Approx(-0.6).epsilon(1e-15));
    CHECK(d(1, 0) == doctest::Approx(-0.8).epsilon(1e-15));

    const Matrix s = descent_direction(Matrix::diagonal(std::vector<double>{2.0, 5.0}), GeometrySpec::spectral());
    CHECK(max_abs_diff(s, -1.0 * Matrix::identity(2)) <= 1e-12);
}

TEST_CASE("degeneracy chain rownorm(1) = sign = colnorm(inf)") {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        Matrix g = gaussian_matrix(1 + t % 7, 1 + t % 5, rng);
        if (t % 3 == 0) g(0, 0) = 0.0;
        const Matrix sign = descent_direction(g, GeometrySpec::sign());
        CHECK(descent_direction(g, GeometrySpec::rownorm(1.0)) == sign);
        CHECK(descent_direction(g, GeometrySpec::colnorm(kInf)) == sign);
    }
}

TEST_CASE("unit norm and zero rows or columns") {
    Rng rng(2);
    for (const auto& spec : base_families()) {
        for (int t = 0; t < 20; ++t) {
            const Matrix g = gaussian_matrix(3 + t % 4, 2 + t % 5, rng);
            const Matrix d = descent_direction(g, spec);
            CHECK(std::abs(op_norm_exact(d, spec.base_norm()) - 1.0) <= 1e-9);
        }
    }
    const Matrix g = Matrix::from_rows({{1, 0, 2}, {0, 0, 0}, {3, 0, -1}});
    const Matrix rows = descent_direction(g, GeometrySpec::rownorm(2.0));
    for (std::size_t j = 0; j < 3; ++j) CHECK(rows(1, j) == 0.0);
    const Matrix cols = descent_direction(g, GeometrySpec::colnorm(2.0));
    for (std::size_t i = 0; i < 3; ++i) CHECK(cols(i, 1) == 0.0);
    CHECK(descent_direction(Matrix(2, 2), GeometrySpec::spectral()) == Matrix(2, 2));
    CHECK(all_finite(descent_direction(Matrix::from_rows({{1e-300, -1e300}}), GeometrySpec::rownorm(9.0)).span()));
}

TEST_CASE("duality gap") {
    Rng rng(3);
    for (const auto& spec : base_families()) {
        for (int t = 0; t < 100; ++t) {
            const Matrix g = gaussian_matrix(1 + t % 6, 1 + t % 4, rng);
            const Matrix d = descent_direction(g, spec);
            CHECK(std::abs(duality_gap(g, d, spec)) <= 1e-9);
            CHECK(duality_gap(g, Matrix(g.rows(), g.cols()), spec) == doctest::Approx(dual_norm(g, spec)));
            CHECK(dual_norm(g, spec) > 0.0);
        }
    }
    const Matrix g = Matrix::from_rows({{1, -2}, {3, 0.5}});
    CHECK(dual_norm(g, GeometrySpec::sign()) == 6.5);
    CHECK_THROWS_AS(duality_gap(g, 2.0 * Matrix::identity(2), GeometrySpec::spectral()), DomainError);
}

TEST_CASE("random feasible directions never beat the closed form") {
    const DualityReport r = duality_suite(200, 10, 9);
    CHECK(r.worst_gap <= 1e-9);
    CHECK(r.best_random_advantage <= 1e-9);
    CHECK(r.worst_feasibility_error <= 1e-9);
}

TEST_CASE("scale identity for mean geometries") {
    Rng rng(4);
    for (const auto& spec : base_families()) {
        if (spec.family == Family::ColNorm && spec.exponent == 1.0) continue;
        const GeometrySpec m = with_mean(spec);
        for (int t = 0; t < 10; ++t) {
            const Matrix g = gaussian_matrix(2 + t, 3 + 2 * t, rng);
            const double scale = moga_scale(m, g.cols(), g.rows());
            const Matrix expect = scale * descent_direction(g, spec);
            CHECK(max_abs_diff(descent_direction(g, m), expect) <= 1e-12 * std::max(1.0, max_abs(expect.span())));
            // Unit norm in the mean-normalized operator norm. The spectral
            // width rule is not that normalization, so it is left out.
            if (spec.family != Family::Sign && spec.family != Family::Spectral) {
                OperatorNormSpec mean_norm = spec.base_norm();
                mean_norm.input.mean = true;
                mean_norm.output.mean = true;
                CHECK(op_norm_exact(descent_direction(g, m), mean_norm) == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("moga_scale examples") {
    CHECK(moga_scale(GeometrySpec::sign(true), 50, 7) == 1.0 / 50.0);
    CHECK(moga_scale(GeometrySpec::colnorm(kInf, true), 50, 7) == doctest::Approx(1.0 / 50.0));
    CHECK(moga_scale(GeometrySpec::rownorm(2.0, true), 1024, 3) == 1.0 / 32.0);
    CHECK(moga_scale(GeometrySpec::spectral(true), 64, 64) == 1.0);
    CHECK(moga_scale(GeometrySpec::colnorm(2.0, true), 16, 64) == doctest::Approx(8.0 / 16.0));
    CHECK_THROWS(moga_scale(GeometrySpec::rownorm(2.0, false), 4, 4));
}

TEST_CASE("geometry parsing") {
    CHECK(parse_geometry("rownorm:2,mean") == GeometrySpec::rownorm(2.0, true));
    CHECK(parse_geometry("colnorm:inf") == GeometrySpec::colnorm(kInf));
    CHECK(parse_geometry("spectral") == GeometrySpec::spectral());
    CHECK(parse_geometry("sign,mean") == GeometrySpec::sign(true));
    CHECK_THROWS(parse_geometry("rownorm"));
    CHECK_THROWS(parse_geometry("rownorm:0.5"));
    CHECK_THROWS(parse_geometry("frobenius"));
    for (const auto& g : base_families()) CHECK(parse_geometry(g.str()) == g);
}

TEST_CASE("newton-schulz") {
    Rng rng(5);
    const Matrix q = svd(gaussian_matrix(5, 5, rng)).u;
    CHECK(max_abs_diff(newton_schulz_sign(q, 10), q) <= 1e-2);
    CHECK(max_abs_diff(newton_schulz_sign(q, 30), q) <= 1e-10);

    const Matrix d = newton_schulz_sign(Matrix::diagonal(std::vector<double>{2.0, 3.0}), 10);
    CHECK(max_abs_diff(d, Matrix::identity(2)) <= 1e-2);

    const NewtonSchulzResult z = newton_schulz(Matrix(3, 4), 10);
    CHECK(z.zero_input);
    CHECK(z.x == Matrix(3, 4));

    for (int t = 0; t < 10; ++t) {
        const Matrix g = gaussian_matrix(6, 9, rng);
        const Matrix base = newton_schulz_sign(g, 10);
        for (double c : {1e-3, 0.5, 7.0, 1e4}) CHECK(max_abs_diff(newton_schulz_sign(c * g, 10), base) <= 1e-10);
        CHECK(max_abs_diff(newton_schulz_sign(g.transpose(), 10), base.transpose()) <= 1e-12);
    }

    const NewtonSchulzReport r = newton_schulz_suite(50, 16, 100.0, 10, kNsQuintic, 3);
    CHECK(r.max_error <= 1e-2);
    CHECK(parse_ns_coefficients("cubic").a == 1.5);
    CHECK_THROWS(parse_ns_coefficients("septic"));
}

TEST_CASE("role rules") {
    const auto row = GeometrySpec::rownorm(2.0, true);
    const auto col = GeometrySpec::colnorm(2.0, true);

    const RoleRule ln = role_rule({Role::LayerNormWeight, 1, 768}, row);
    CHECK(ln.geometry == GeometrySpec::sign());
    CHECK(ln.scale == 1.0);
    CHECK(role_rule({Role::Bias, 1, 8}, col).geometry == GeometrySpec::sign());

    const RoleRule emb = role_rule({Role::Embedding, 50257, 768}, col);
    CHECK(emb.geometry.family == Family::ColNorm);
    CHECK(emb.scale == doctest::Approx(27.71).epsilon(1e-3));
    CHECK(role_rule({Role::Embedding, 50257, 768}, col, true).geometry == GeometrySpec::sign());
    CHECK(role_rule({Role::Unembedding, 768, 50257}, row).geometry == GeometrySpec::sign());

    const RoleRule hidden = role_rule({Role::HiddenWeight, 512, 512}, row);
    CHECK(hidden.geometry.family == Family::RowNorm);
    CHECK(hidden.scale == doctest::Approx(1.0 / std::sqrt(512.0)).epsilon(1e-15));

    const RoleRule out = role_rule({Role::OutputWeight, 256, 1}, row);
    CHECK(out.geometry.family == Family::RowNorm);
    CHECK(out.scale == 1.0 / 16.0);
    CHECK(role_rule({Role::OutputWeight, 256, 1}, col).scale == moga_scale(col, 256, 1));
}

TEST_CASE("attention logit scale") {
    CHECK(attention_logit_scale(GeometrySpec::rownorm(2.0, true), 64) == 1.0 / 64.0);
    CHECK(attention_logit_scale(GeometrySpec::colnorm(2.0, true), 64) == 1.0 / 64.0);
    CHECK(attention_logit_scale(GeometrySpec::colnorm(4.0, true), 16) == 1.0 / 16.0);
    CHECK(attention_logit_scale(GeometrySpec::colnorm(1.0, true), 16) == doctest::Approx(1.0 / 256.0));
    CHECK(attention_logit_scale(GeometrySpec::sign(true), 1) == 1.0);
    CHECK_THROWS_AS(attention_logit_scale(GeometrySpec::spectral(true), 16), UnsupportedError);
}
