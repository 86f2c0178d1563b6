#include "opnorm/norms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "opnorm/error.hpp"

namespace opnorm {

namespace {

std::string exponent_str(double p) {
    if (std::isinf(p)) return "inf";
    std::ostringstream os;
    os << p;
    return os.str();
}

double pow_inv(std::size_t n, double p) {
    return std::isinf(p) ? 1.0 : std::pow(static_cast<double>(n), 1.0 / p);
}

// Unit ℓe vector u maximizing <u, v>; zero for v = 0.
Vector ball_maximizer(std::span<const double> v, double e) {
    Vector u(v.size());
    const double m = max_abs(v);
    if (m == 0.0) return u;
    if (e == 1.0) {
        const auto k = static_cast<std::size_t>(
            std::max_element(v.begin(), v.end(), [](double l, double r) { return std::abs(l) < std::abs(r); }) -
            v.begin());
        u[k] = v[k] > 0.0 ? 1.0 : -1.0;
        return u;
    }
    const double power = std::isinf(e) ? 0.0 : 1.0 / (e - 1.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double mag = v[i] == 0.0 ? 0.0 : std::pow(std::abs(v[i]) / m, power);
        u[i] = v[i] < 0.0 ? -mag : mag;
    }
    const double norm = vec_norm(u, VectorNormSpec{e, false});
    for (double& x : u) x /= norm;
    return u;
}

}  // namespace

void VectorNormSpec::validate() const {
    if (std::isnan(p) || p < 1.0) throw DomainError("norm exponent must be in [1, inf], got " + exponent_str(p));
}

std::string VectorNormSpec::str() const {
    return mean && !std::isinf(p) ? "(" + exponent_str(p) + ",mean)" : exponent_str(p);
}

std::string OperatorNormSpec::str() const { return input.str() + "->" + output.str(); }

double dual_exponent(double p) {
    VectorNormSpec{p, false}.validate();
    if (p == 1.0) return kInf;
    if (std::isinf(p)) return 1.0;
    return p / (p - 1.0);
}

double inv_exponent(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }

double vec_norm(std::span<const double> x, VectorNormSpec spec) {
    spec.validate();
    if (x.empty()) throw ShapeError("vec_norm: empty vector");
    if (!all_finite(x)) throw DomainError("vec_norm: non-finite entry");
    const double m = max_abs(x);
    if (std::isinf(spec.p) || m == 0.0) return m;

    // Scaling by the max keeps |x/m|^p in [0, 1] for any p.
    double s = 0.0;
    if (spec.p == 1.0) {
        for (double v : x) s += std::abs(v);
        s /= m;
    } else if (spec.p == 2.0) {
        for (double v : x) {
            const double t = v / m;
            s += t * t;
        }
    } else {
        for (double v : x) s += std::pow(std::abs(v) / m, spec.p);
    }
    if (spec.mean) s /= static_cast<double>(x.size());
    if (spec.p == 1.0) return m * s;
    if (spec.p == 2.0) return m * std::sqrt(s);
    return m * std::pow(s, 1.0 / spec.p);
}

bool is_computable(const OperatorNormSpec& spec) {
    return spec.input.p == 1.0 || std::isinf(spec.output.p) ||
           (spec.input.p == 2.0 && spec.output.p == 2.0);
}

double mean_factor(const OperatorNormSpec& spec, std::size_t d_in, std::size_t d_out) {
    const double num = spec.input.mean ? pow_inv(d_in, spec.input.p) : 1.0;
    const double den = spec.output.mean ? pow_inv(d_out, spec.output.p) : 1.0;
    return num / den;
}

double op_norm_exact(const Matrix& a, const OperatorNormSpec& spec) {
    spec.input.validate();
    spec.output.validate();
    if (!is_computable(spec)) {
        throw UnsupportedError("op_norm_exact: no closed form for " + spec.str());
    }
    double base = 0.0;
    if (spec.input.p == 1.0) {
        const VectorNormSpec out{spec.output.p, false};
        for (std::size_t c = 0; c < a.cols(); ++c) base = std::max(base, vec_norm(a.col(c), out));
    } else if (std::isinf(spec.output.p)) {
        const VectorNormSpec dual{dual_exponent(spec.input.p), false};
        for (std::size_t r = 0; r < a.rows(); ++r) base = std::max(base, vec_norm(a.row(r), dual));
    } else {
        base = max_abs(a.span()) == 0.0 ? 0.0 : svd(a).s[0];
    }
    return base * mean_factor(spec, a.cols(), a.rows());
}

double op_norm_bruteforce(const Matrix& a, const OperatorNormSpec& spec, int samples,
                          std::uint64_t seed) {
    spec.input.validate();
    spec.output.validate();
    if (samples < 1) throw DomainError("op_norm_bruteforce: samples must be >= 1");
    const std::size_t n = a.cols();

    auto value_of = [&](std::vector<double> x) {
        const double nx = vec_norm(x, spec.input);
        if (nx == 0.0) return 0.0;
        for (double& v : x) v /= nx;
        return vec_norm(matvec(a, x).span(), spec.output);
    };

    double best = 0.0;
    std::vector<double> x(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (double sgn : {1.0, -1.0}) {
            std::fill(x.begin(), x.end(), 0.0);
            x[j] = sgn;
            best = std::max(best, value_of(x));
        }
    }

    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    std::vector<std::pair<double, std::vector<double>>> top;
    for (int s = 0; s < samples; ++s) {
        // Odd samples are sign vectors: near-cube balls (large p) peak there.
        for (double& v : x) v = s % 2 ? (coin(rng) ? 1.0 : -1.0) : gauss(rng);
        const double val = value_of(x);
        best = std::max(best, val);
        top.emplace_back(val, x);
    }

    // Nonlinear power iteration from the best few samples: y maximizes
    // <y, Ax> on the dual output ball, then x maximizes <A^T y, x> on the
    // input ball. Each round can only increase ||Ax||.
    std::sort(top.begin(), top.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
    const double p_plain = spec.input.p;
    const double q_dual = dual_exponent(spec.output.p);
    for (std::size_t c = 0; c < std::min<std::size_t>(top.size(), 8); ++c) {
        std::vector<double> xc = top[c].second;
        double current = top[c].first;
        for (int it = 0; it < 100; ++it) {
            const Vector y = ball_maximizer(matvec(a, xc).span(), q_dual);
            xc = ball_maximizer(matvec_t(a, y.span()).span(), p_plain).values();
            const double val = value_of(xc);
            best = std::max(best, val);
            if (!(val > current * (1.0 + 1e-15))) break;
            current = val;
        }
    }
    return best;
}

double rank_one_op_norm(std::span<const double> u, std::span<const double> v,
                        const OperatorNormSpec& spec) {
    spec.input.validate();
    spec.output.validate();
    // Dual of the (p,mean) norm on ℝⁿ is n^{1/p} times the ℓ_{p*} norm.
    const double dual_in = vec_norm(v, {dual_exponent(spec.input.p), false}) *
                           (spec.input.mean ? pow_inv(v.size(), spec.input.p) : 1.0);
    return vec_norm(u, spec.output) * dual_in;
}

double BlockTerms::max() const { return std::max({first, hidden, last, bias}); }

OperatorNormSpec layer_spec(std::size_t layer, std::size_t depth, double p, double q) {
    if (layer == 0) return {{1.0, false}, {q, true}};
    if (layer + 1 == depth) return {{p, true}, {kInf, false}};
    return {{p, true}, {q, true}};
}

BlockTerms block_terms(const BlockSet& params, double p, double q) {
    if (params.depth() < 2) throw ShapeError("block_norm: depth must be >= 2");
    params.validate();
    const std::size_t k = params.depth();
    BlockTerms t;
    t.first = op_norm_exact(params.weights[0], layer_spec(0, k, p, q));
    for (std::size_t i = 1; i + 1 < k; ++i) {
        t.hidden = std::max(t.hidden, op_norm_exact(params.weights[i], layer_spec(i, k, p, q)));
    }
    t.last = op_norm_exact(params.weights[k - 1], layer_spec(k - 1, k, p, q));
    for (const auto& b : params.biases) t.bias = std::max(t.bias, max_abs(b.span()));
    return t;
}

double block_norm(const BlockSet& params, double p, double q) { return block_terms(params, p, q).max(); }

nlohmann::json LemmaReport::to_json() const {
    return {
        {"trials", trials},
        {"violations", violations},
        {"worst_ratio_per_lemma",
         {{"monotonicity", worst_ratio[0]},
          {"norm_comparison", worst_ratio[1]},
          {"hadamard_bound", worst_ratio[2]},
          {"inner_product_bound", worst_ratio[3]}}},
    };
}

namespace {

// Mix of dense Gaussian, sparse, constant and heavy-tailed vectors; the
// structured ones sit at or near equality in the inequalities.
std::vector<double> lemma_vector(std::size_t n, Rng& rng) {
    std::vector<double> x(n, 0.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> idx(0, n - 1);
    switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
        case 0:
            for (double& v : x) v = gauss(rng);
            break;
        case 1:
            x[idx(rng)] = 1.0 + std::abs(gauss(rng));
            break;
        case 2:
            std::fill(x.begin(), x.end(), 1.0);
            break;
        case 3: {
            const std::size_t k = 1 + idx(rng) / 8;
            for (std::size_t i = 0; i < k; ++i) x[idx(rng)] = gauss(rng);
            if (max_abs(x) == 0.0) x[0] = 1.0;
            break;
        }
        default:
            for (double& v : x) {
                const double mag = std::exp(3.0 * gauss(rng));
                v = gauss(rng) < 0 ? -mag : mag;
            }
            break;
    }
    return x;
}

double lemma_exponent(Rng& rng) {
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.15) return kInf;
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.15) {
        return std::uniform_int_distribution<int>(1, 8)(rng);
    }
    return std::uniform_real_distribution<double>(1.0, 8.0)(rng);
}

}  // namespace

LemmaReport check_lemma_inequalities(int trials, std::uint64_t seed) {
    if (trials < 1) throw DomainError("check_lemma_inequalities: trials must be >= 1");
    constexpr double kRelTol = 1e-12;
    LemmaReport report;
    report.trials = trials;
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> dim(2, 512);

    auto record = [&](int lemma, double lhs, double rhs) {
        const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? kInf : 0.0);
        report.worst_ratio[lemma] = std::max(report.worst_ratio[lemma], ratio);
        if (lhs > rhs * (1.0 + kRelTol)) ++report.violations;
    };

    for (int t = 0; t < trials; ++t) {
        const std::size_t n = dim(rng);
        const double nd = static_cast<double>(n);
        const auto x = lemma_vector(n, rng);
        const auto y = lemma_vector(n, rng);
        const double p = lemma_exponent(rng);
        const double q = lemma_exponent(rng);
        const double ip = inv_exponent(p);
        const double iq = inv_exponent(q);
        auto mnorm = [](std::span<const double> v, double e) { return vec_norm(v, {e, true}); };

        const double lo = std::min(p, q);
        const double hi = std::max(p, q);
        record(0, mnorm(x, lo), mnorm(x, hi));

        record(1, mnorm(x, p), std::pow(nd, std::max(0.0, iq - ip)) * mnorm(x, q));

        std::vector<double> xy(n);
        for (std::size_t i = 0; i < n; ++i) xy[i] = x[i] * y[i];
        record(2, mnorm(xy, p), std::pow(nd, std::max(0.0, 2.0 * iq - ip)) * mnorm(x, q) * mnorm(y, q));

        record(3, std::abs(dot(x, y)), std::pow(nd, std::max(1.0, ip + iq)) * mnorm(x, p) * mnorm(y, q));
    }
    return report;
}

}  // namespace opnorm
