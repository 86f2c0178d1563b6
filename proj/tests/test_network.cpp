#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "opnorm/error.hpp"
#include "opnorm/experiments.hpp"
#include "opnorm/network.hpp"
#include "opnorm/norms.hpp"

using namespace opnorm;

namespace {

ModelParams random_params(std::size_t k, std::size_t w, std::size_t d, Rng& rng, double scale = 0.5) {
    ModelParams p = zero_blocks(k, w, d);
    for (auto& m : p.weights) m = gaussian_matrix(m.rows(), m.cols(), rng, scale / std::sqrt(double(m.cols())));
    for (auto& b : p.biases) b = gaussian_vector(b.size(), rng, 0.3);
    return p;
}

Perturbation random_dir(const ModelParams& like, Rng& rng) {
    Perturbation d = zeros_like(like);
    for (auto& m : d.weights) m = gaussian_matrix(m.rows(), m.cols(), rng);
    for (auto& b : d.biases) b = gaussian_vector(b.size(), rng);
    return d;
}

Batch single(const Vector& x, double target) {
    Batch b{Matrix(1, x.size()), {target}};
    std::copy(x.begin(), x.end(), b.inputs.row(0).begin());
    return b;
}

}  // namespace

TEST_CASE("activation and loss constants") {
    CHECK(activation_d1(0.0) == kActivationLipschitz);
    CHECK(activation_d2(kTanhCurvaturePeak) == doctest::Approx(-kActivationSmoothness).epsilon(1e-14));
    CHECK(loss_d1(50.0) == doctest::Approx(kLossLipschitz));
    CHECK(loss_d2(0.0) == kLossSmoothness);
    CHECK(loss_value(0.0) == 0.0);
    CHECK(loss_value(1000.0) == doctest::Approx(1000.0 - std::log(2.0)).epsilon(1e-15));
    CHECK(loss_value(-1000.0) == loss_value(1000.0));
    for (double z = -5.0; z <= 5.0; z += 0.37) {
        CHECK(std::abs(activation_d1(z)) <= kActivationLipschitz);
        CHECK(std::abs(activation_d2(z)) <= kActivationSmoothness + 1e-15);
        CHECK(loss_value(z) == doctest::Approx(std::log(std::cosh(z))).epsilon(1e-14));
    }
}

TEST_CASE("forward examples") {
    const ModelParams zero = zero_blocks(3, 5, 2);
    CHECK(forward(zero, Vector{0.3, -2.0}).output() == 0.0);

    ModelParams tiny = zero_blocks(2, 1, 1);
    tiny.weights[0](0, 0) = 1.0;
    tiny.weights[1](0, 0) = 1.0;
    const double y = forward(tiny, Vector{0.5}).output();
    CHECK(y == doctest::Approx(0.431808).epsilon(1e-6));
    CHECK(y == doctest::Approx(std::tanh(std::tanh(0.5))).epsilon(1e-15));

    CHECK_THROWS_AS(forward(zero, Vector{1.0, 2.0, 3.0}), ShapeError);

    const ForwardTrace t = forward(tiny, Vector{0.5});
    REQUIRE(t.z.size() == 2);
    CHECK(t.sigma1[0][0] == doctest::Approx(1.0 - std::tanh(0.5) * std::tanh(0.5)));
}

TEST_CASE("loss and gradient") {
    const ModelParams zero = zero_blocks(3, 4, 2);
    Batch b{Matrix(3, 2, 0.7), {0.0, 0.0, 0.0}};
    const LossGrad lg = loss_and_grad(zero, b);
    CHECK(lg.loss == 0.0);
    CHECK(lg.grad == zeros_like(zero));

    Rng rng(1);
    const ModelParams p = random_params(3, 8, 4, rng, 1.5);
    Batch batch{gaussian_matrix(5, 4, rng), {0.1, -0.3, 0.5, 0.0, 0.9}};
    const LossGrad full = loss_and_grad(p, batch);
    BlockSet avg = zeros_like(p);
    double loss = 0.0;
    for (std::size_t n = 0; n < 5; ++n) {
        const Vector x(std::vector<double>(batch.inputs.row(n).begin(), batch.inputs.row(n).end()));
        const LossGrad one = loss_and_grad(p, single(x, batch.targets[n]));
        avg += 0.2 * one.grad;
        loss += 0.2 * one.loss;
        const Perturbation d = random_dir(p, rng);
        const double dd = dir_derivative(p, x, d, batch.targets[n]);
        CHECK(std::abs(inner(one.grad, d) - dd) <= 1e-10 * std::max(1.0, std::abs(dd)));
    }
    CHECK(full.loss == doctest::Approx(loss).epsilon(1e-14));
    for (std::size_t i = 0; i < 3; ++i) CHECK(max_abs_diff(full.grad.weights[i], avg.weights[i]) <= 1e-14);
    CHECK(mean_loss(p, batch) == doctest::Approx(full.loss).epsilon(1e-15));
    CHECK(predict(p, batch.inputs)[2] == forward(p, Vector{batch.inputs(2, 0), batch.inputs(2, 1), batch.inputs(2, 2),
                                                           batch.inputs(2, 3)})
                                             .output());
}

TEST_CASE("single-neuron directional derivative by hand") {
    ModelParams p = zero_blocks(2, 1, 1);
    p.weights[0](0, 0) = 0.8;
    p.weights[1](0, 0) = -1.3;
    p.biases[0][0] = 0.1;
    p.biases[1][0] = 0.2;
    const double x = 0.6;
    const double target = 0.25;
    Perturbation d = zeros_like(p);
    d.weights[0](0, 0) = 1.0;

    const double z1 = 0.8 * x + 0.1;
    const double z2 = -1.3 * std::tanh(z1) + 0.2;
    const double r = std::tanh(z2) - target;
    const double expect = std::tanh(r) * (1.0 - std::tanh(z2) * std::tanh(z2)) * -1.3 *
                          (1.0 - std::tanh(z1) * std::tanh(z1)) * x;
    CHECK(dir_derivative(p, Vector{x}, d, target) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(dir_derivative(p, Vector{x}, zeros_like(p), target) == 0.0);
}

TEST_CASE("directional Hessian properties") {
    Rng rng(2);
    for (int t = 0; t < 10; ++t) {
        const ModelParams p = random_params(2 + t % 3, 4 + 2 * t, 3, rng, 1.2);
        const Vector x = gaussian_vector(3, rng);
        const Perturbation d1 = random_dir(p, rng);
        const Perturbation d2 = random_dir(p, rng);
        const Perturbation d3 = random_dir(p, rng);
        CHECK(dir_hessian(p, x, zeros_like(p), zeros_like(p)) == 0.0);

        const double h12 = dir_hessian(p, x, d1, d2, 0.3);
        const double h21 = dir_hessian(p, x, d2, d1, 0.3);
        CHECK(std::abs(h12 - h21) <= 1e-12 * std::max(1.0, std::abs(h12)));

        const double a = 0.7, b = -1.9;
        const double lhs = dir_hessian(p, x, a * d1 + b * d3, d2, 0.3);
        const double rhs = a * h12 + b * dir_hessian(p, x, d3, d2, 0.3);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));

        const DirectionalDerivs both = dir_derivs(p, x, d1, 0.3);
        CHECK(both.first == doctest::Approx(dir_derivative(p, x, d1, 0.3)).epsilon(1e-13));
        CHECK(both.second == doctest::Approx(dir_hessian(p, x, d1, d1, 0.3)).epsilon(1e-12));
    }
}

TEST_CASE("finite-difference agreement") {
    const DerivativeReport r = derivative_suite(20, 11);
    CHECK(r.nets == 20);
    CHECK(r.max_grad_rel_err <= 1e-6);
    CHECK(r.max_hessian_rel_err <= 1e-4);
    CHECK(r.max_symmetry_err <= 1e-12);
    CHECK(r.max_adjoint_err <= 1e-10);
}

TEST_CASE("project_to_ball") {
    Rng rng(3);
    const double C = 2.0;
    ModelParams inside = init_in_ball(4, 6, 3, C, 2.0, 2.0, rng, 0.5);
    CHECK(block_norm(inside, 2.0, 2.0) <= 0.5 * C + 1e-12);
    CHECK(project_to_ball(inside, C, 2.0, 2.0) == inside);

    ModelParams big = inside;
    big.weights[1] *= 2.0 * C / op_norm_exact(big.weights[1], layer_spec(1, 4, 2.0, 2.0));
    const ModelParams proj = project_to_ball(big, C, 2.0, 2.0);
    CHECK(max_abs_diff(proj.weights[1], 0.5 * big.weights[1]) <= 1e-15);
    CHECK(proj.weights[0] == big.weights[0]);
    CHECK(proj.biases == big.biases);

    for (int t = 0; t < 20; ++t) {
        const ModelParams p = random_params(3, 5, 2, rng, 10.0);
        for (auto [pp, qq] : {std::pair{2.0, 2.0}, {1.0, 2.0}, {2.0, kInf}, {3.0, 1.5}}) {
            if (!is_computable({{pp, true}, {qq, true}})) continue;
            CHECK(block_norm(project_to_ball(p, 0.3, pp, qq), pp, qq) <= 0.3 + 1e-12);
        }
    }
    CHECK_THROWS_AS(project_to_ball(inside, 0.0, 2.0, 2.0), DomainError);
}

TEST_CASE("hidden states stay bounded as width grows") {
    const double C = 2.0;
    for (auto [p, q] : {std::pair{1.0, 2.0}, {2.0, kInf}}) {
        std::vector<double> worst;
        for (std::size_t w : {16u, 64u, 256u, 1024u}) {
            Rng rng(40 + w);
            const ModelParams params = init_in_ball(4, w, 8, C, p, q, rng, 1.0);
            double m = 0.0;
            for (int s = 0; s < 8; ++s) {
                Vector x = gaussian_vector(8, rng);
                const double nx = vec_norm(x, {2.0, false});
                for (double& v : x) v *= C / nx;
                const ForwardTrace t = forward(params, x);
                for (std::size_t i = 0; i + 1 < params.depth(); ++i) {
                    const double yi = vec_norm(t.y[i], {q, true});
                    CHECK(yi <= std::pow(2.0 * kActivationLipschitz * C, double(i + 1)) * C);
                    m = std::max(m, yi);
                }
            }
            worst.push_back(m);
        }
        CHECK(worst.back() / worst.front() <= 1.5);
    }
}

TEST_CASE("parameter serialization round trip") {
    Rng rng(4);
    ModelParams p = random_params(3, 7, 5, rng);
    p.weights[1](2, 3) = -0.0;
    p.biases[0][1] = 1e-310;  // subnormal

    std::stringstream buf;
    write_params(buf, p);
    const ModelParams back = read_params(buf);
    CHECK(back == p);
    CHECK(std::signbit(back.weights[1](2, 3)));

    const auto side = params_sidecar(p);
    CHECK(side["depth"] == 3);
    CHECK(side["width"] == 7);
    CHECK(side["input_dim"] == 5);

    std::stringstream bad("XXXX0000");
    CHECK_THROWS(read_params(bad));
    std::stringstream again;
    write_params(again, p);
    std::stringstream tr(again.str().substr(0, again.str().size() - 9));
    CHECK_THROWS(read_params(tr));

    const auto dir = std::filesystem::temp_directory_path() / "opnorm_params_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "p.bin").string();
    save_params(path, p);
    CHECK(std::filesystem::exists(path + ".json"));
    CHECK(load_params(path) == p);
    std::filesystem::remove_all(dir);
}
