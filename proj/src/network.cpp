#include "opnorm/network.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "opnorm/error.hpp"
#include "opnorm/norms.hpp"

namespace opnorm {

double activation(double z) { return std::tanh(z); }

double activation_d1(double z) {
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

double activation_d2(double z) {
    const double t = std::tanh(z);
    return -2.0 * t * (1.0 - t * t);
}

double loss_value(double r) {
    // log cosh r = |r| + log1p(e^{-2|r|}) - log 2, overflow-free.
    const double a = std::abs(r);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

double loss_d1(double r) { return std::tanh(r); }

double loss_d2(double r) {
    const double t = std::tanh(r);
    return 1.0 - t * t;
}

namespace {

void check_input(const ModelParams& params, std::size_t len) {
    params.validate();
    if (len != params.input_dim()) {
        throw ShapeError("input has length " + std::to_string(len) + ", network expects " +
                         std::to_string(params.input_dim()));
    }
}

void check_direction(const ModelParams& params, const Perturbation& d) {
    if (!params.same_shape(d)) throw ShapeError("perturbation layout differs from the parameters");
}

// out += a · v
void add_matvec(Vector& out, const Matrix& a, std::span<const double> v) {
    for (std::size_t r = 0; r < a.rows(); ++r) out[r] += dot(a.row(r), v);
}

}  // namespace

ForwardTrace forward(const ModelParams& params, const Vector& x) {
    check_input(params, x.size());
    ForwardTrace t;
    t.x = x;
    const Vector* prev = &t.x;
    for (std::size_t i = 0; i < params.depth(); ++i) {
        Vector z = matvec(params.weights[i], prev->span());
        Vector y(z.size()), s1(z.size()), s2(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) {
            z[j] += params.biases[i][j];
            y[j] = activation(z[j]);
            s1[j] = activation_d1(z[j]);
            s2[j] = activation_d2(z[j]);
        }
        t.z.push_back(std::move(z));
        t.y.push_back(std::move(y));
        t.sigma1.push_back(std::move(s1));
        t.sigma2.push_back(std::move(s2));
        prev = &t.y.back();
    }
    return t;
}

namespace {

// Row-batched forward pass: returns activations per layer, each N x width.
std::vector<Matrix> forward_batch(const ModelParams& params, const Matrix& inputs) {
    check_input(params, inputs.cols());
    std::vector<Matrix> ys;
    ys.reserve(params.depth());
    const Matrix* prev = &inputs;
    for (std::size_t i = 0; i < params.depth(); ++i) {
        Matrix z = matmul_nt(*prev, params.weights[i]);
        const auto& b = params.biases[i];
        for (std::size_t n = 0; n < z.rows(); ++n) {
            auto row = z.row(n);
            for (std::size_t j = 0; j < row.size(); ++j) row[j] = activation(row[j] + b[j]);
        }
        ys.push_back(std::move(z));
        prev = &ys.back();
    }
    return ys;
}

}  // namespace

std::vector<double> predict(const ModelParams& params, const Matrix& inputs) {
    const auto ys = forward_batch(params, inputs);
    const auto& out = ys.back();
    std::vector<double> res(out.rows());
    for (std::size_t n = 0; n < out.rows(); ++n) res[n] = out(n, 0);
    return res;
}

double mean_loss(const ModelParams& params, const Batch& batch) {
    if (batch.size() == 0 || batch.inputs.rows() != batch.size()) {
        throw ShapeError("batch: inputs and targets disagree or batch is empty");
    }
    const auto out = predict(params, batch.inputs);
    double s = 0.0;
    for (std::size_t n = 0; n < out.size(); ++n) s += loss_value(out[n] - batch.targets[n]);
    return s / static_cast<double>(out.size());
}

LossGrad loss_and_grad(const ModelParams& params, const Batch& batch) {
    if (batch.size() == 0 || batch.inputs.rows() != batch.size()) {
        throw ShapeError("batch: inputs and targets disagree or batch is empty");
    }
    const std::size_t k = params.depth();
    const std::size_t n = batch.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    const auto ys = forward_batch(params, batch.inputs);

    LossGrad out;
    out.grad = zeros_like(params);
    // delta holds ∂f/∂z for the current layer, N x width.
    Matrix delta(n, 1);
    for (std::size_t s = 0; s < n; ++s) {
        const double r = ys.back()(s, 0) - batch.targets[s];
        out.loss += loss_value(r);
        delta(s, 0) = loss_d1(r) * inv_n;
    }
    out.loss *= inv_n;

    for (std::size_t i = k; i-- > 0;) {
        const Matrix& y = ys[i];
        for (std::size_t s = 0; s < delta.size(); ++s) {
            const double t = y.span()[s];
            delta.span()[s] *= 1.0 - t * t;
        }
        const Matrix& prev = i == 0 ? batch.inputs : ys[i - 1];
        out.grad.weights[i] = matmul_tn(delta, prev);
        auto& gb = out.grad.biases[i];
        for (std::size_t s = 0; s < n; ++s) {
            const auto row = delta.row(s);
            for (std::size_t j = 0; j < row.size(); ++j) gb[j] += row[j];
        }
        if (i > 0) delta = matmul(delta, params.weights[i]);
    }
    return out;
}

double dir_derivative(const ModelParams& params, const Vector& x, const Perturbation& d,
                      double target) {
    check_input(params, x.size());
    check_direction(params, d);
    Vector y = x;
    Vector lambda(x.size());
    for (std::size_t i = 0; i < params.depth(); ++i) {
        Vector z = matvec(params.weights[i], y.span());
        Vector dz = matvec(d.weights[i], y.span());
        add_matvec(dz, params.weights[i], lambda.span());
        Vector next_y(z.size()), next_l(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) {
            z[j] += params.biases[i][j];
            dz[j] += d.biases[i][j];
            next_y[j] = activation(z[j]);
            next_l[j] = activation_d1(z[j]) * dz[j];
        }
        y = std::move(next_y);
        lambda = std::move(next_l);
    }
    return loss_d1(y[0] - target) * lambda[0];
}

double dir_hessian(const ModelParams& params, const Vector& x, const Perturbation& d1,
                   const Perturbation& d2, double target) {
    check_input(params, x.size());
    check_direction(params, d1);
    check_direction(params, d2);
    Vector y = x;
    Vector l1(x.size()), l2(x.size()), xi(x.size());
    for (std::size_t i = 0; i < params.depth(); ++i) {
        const Matrix& w = params.weights[i];
        Vector z = matvec(w, y.span());
        Vector dz1 = matvec(d1.weights[i], y.span());
        add_matvec(dz1, w, l1.span());
        Vector dz2 = matvec(d2.weights[i], y.span());
        add_matvec(dz2, w, l2.span());
        Vector ddz = matvec(d1.weights[i], l2.span());
        add_matvec(ddz, d2.weights[i], l1.span());
        add_matvec(ddz, w, xi.span());
        const std::size_t m = z.size();
        Vector ny(m), nl1(m), nl2(m), nxi(m);
        for (std::size_t j = 0; j < m; ++j) {
            z[j] += params.biases[i][j];
            dz1[j] += d1.biases[i][j];
            dz2[j] += d2.biases[i][j];
            const double s1 = activation_d1(z[j]);
            const double s2 = activation_d2(z[j]);
            ny[j] = activation(z[j]);
            nl1[j] = s1 * dz1[j];
            nl2[j] = s1 * dz2[j];
            nxi[j] = s2 * dz1[j] * dz2[j] + s1 * ddz[j];
        }
        y = std::move(ny);
        l1 = std::move(nl1);
        l2 = std::move(nl2);
        xi = std::move(nxi);
    }
    const double r = y[0] - target;
    return loss_d2(r) * l1[0] * l2[0] + loss_d1(r) * xi[0];
}

DirectionalDerivs dir_derivs(const ModelParams& params, const Vector& x, const Perturbation& d,
                             double target) {
    check_input(params, x.size());
    check_direction(params, d);
    Vector y = x;
    Vector l(x.size()), xi(x.size());
    for (std::size_t i = 0; i < params.depth(); ++i) {
        const Matrix& w = params.weights[i];
        Vector z = matvec(w, y.span());
        Vector dz = matvec(d.weights[i], y.span());
        add_matvec(dz, w, l.span());
        Vector ddz = matvec(d.weights[i], l.span());
        for (double& v : ddz) v *= 2.0;
        add_matvec(ddz, w, xi.span());
        const std::size_t m = z.size();
        Vector ny(m), nl(m), nxi(m);
        for (std::size_t j = 0; j < m; ++j) {
            z[j] += params.biases[i][j];
            dz[j] += d.biases[i][j];
            const double s1 = activation_d1(z[j]);
            ny[j] = activation(z[j]);
            nl[j] = s1 * dz[j];
            nxi[j] = activation_d2(z[j]) * dz[j] * dz[j] + s1 * ddz[j];
        }
        y = std::move(ny);
        l = std::move(nl);
        xi = std::move(nxi);
    }
    const double r = y[0] - target;
    return {loss_d1(r) * l[0], loss_d2(r) * l[0] * l[0] + loss_d1(r) * xi[0]};
}

ModelParams project_to_ball(const ModelParams& params, double C, double p, double q) {
    if (!(C > 0.0) || !std::isfinite(C)) throw DomainError("project_to_ball: C must be positive");
    params.validate();
    ModelParams out = params;
    const std::size_t k = out.depth();
    for (std::size_t i = 0; i < k; ++i) {
        const double term = op_norm_exact(out.weights[i], layer_spec(i, k, p, q));
        if (term > C) out.weights[i] *= C / term;
        const double bt = max_abs(out.biases[i].span());
        if (bt > C) {
            for (double& v : out.biases[i]) v = std::clamp(v * (C / bt), -C, C);
        }
    }
    return out;
}

ModelParams init_in_ball(std::size_t depth, std::size_t width, std::size_t input_dim, double C,
                         double p, double q, Rng& rng, double fill) {
    if (!(fill > 0.0 && fill <= 1.0)) throw DomainError("init_in_ball: fill must be in (0, 1]");
    ModelParams params = zero_blocks(depth, width, input_dim);
    for (auto& w : params.weights) w = gaussian_matrix(w.rows(), w.cols(), rng);
    std::uniform_real_distribution<double> unif(-fill * C, fill * C);
    for (auto& b : params.biases)
        for (double& v : b) v = unif(rng);
    for (std::size_t i = 0; i < depth; ++i) {
        const double term = op_norm_exact(params.weights[i], layer_spec(i, depth, p, q));
        if (term > 0.0) params.weights[i] *= fill * C / term;
    }
    return project_to_ball(params, C, p, q);
}

namespace {

constexpr char kMagic[4] = {'O', 'P', 'N', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little, "binary format assumes little-endian");

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DomainError("read_params: truncated stream");
    return v;
}

void put_doubles(std::ostream& out, std::span<const double> xs) {
    out.write(reinterpret_cast<const char*>(xs.data()),
              static_cast<std::streamsize>(xs.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& in, std::size_t n) {
    std::vector<double> xs(n);
    in.read(reinterpret_cast<char*>(xs.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw DomainError("read_params: truncated stream");
    return xs;
}

}  // namespace

void write_params(std::ostream& out, const ModelParams& params) {
    params.validate();
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kFormatVersion);
    put<std::uint64_t>(out, params.depth());
    put<std::uint64_t>(out, params.width());
    put<std::uint64_t>(out, params.input_dim());
    put<std::uint32_t>(out, kActivationTanh);
    for (std::size_t i = 0; i < params.depth(); ++i) {
        put_doubles(out, params.weights[i].span());
        put_doubles(out, params.biases[i].span());
    }
    if (!out) throw Error("write_params: stream write failed");
}

ModelParams read_params(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DomainError("read_params: bad magic");
    if (const auto v = get<std::uint32_t>(in); v != kFormatVersion) {
        throw DomainError("read_params: unsupported version " + std::to_string(v));
    }
    const auto k = get<std::uint64_t>(in);
    const auto w = get<std::uint64_t>(in);
    const auto d = get<std::uint64_t>(in);
    if (const auto act = get<std::uint32_t>(in); act != kActivationTanh) {
        throw DomainError("read_params: unknown activation id " + std::to_string(act));
    }
    if (k < 2 || w == 0 || d == 0 || k > 1024 || w > (1u << 20) || d > (1u << 20)) {
        throw DomainError("read_params: implausible header");
    }
    ModelParams params = zero_blocks(k, w, d);
    for (std::size_t i = 0; i < k; ++i) {
        auto& wm = params.weights[i];
        wm = Matrix(wm.rows(), wm.cols(), get_doubles(in, wm.size()));
        params.biases[i] = Vector(get_doubles(in, params.biases[i].size()));
    }
    return params;
}

nlohmann::json params_sidecar(const ModelParams& params) {
    params.validate();
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t i = 0; i < params.depth(); ++i) {
        layers.push_back({{"weight", {params.weights[i].rows(), params.weights[i].cols()}},
                          {"bias", params.biases[i].size()}});
    }
    return {{"format_version", kFormatVersion},
            {"activation", "tanh"},
            {"depth", params.depth()},
            {"width", params.width()},
            {"input_dim", params.input_dim()},
            {"layers", layers}};
}

void save_params(const std::string& path, const ModelParams& params) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("save_params: cannot open " + path);
        write_params(out, params);
    }
    std::ofstream side(path + ".json");
    if (!side) throw Error("save_params: cannot open " + path + ".json");
    side << params_sidecar(params).dump(2) << '\n';
}

ModelParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_params: cannot open " + path);
    return read_params(in);
}

}  // namespace opnorm
