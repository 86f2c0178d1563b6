#include "opnorm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "opnorm/error.hpp"
#include "opnorm/format.hpp"
#include "opnorm/parallel.hpp"

namespace opnorm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

LogLogFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw ShapeError("fit_loglog: length mismatch");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < xs.size(); ++i) pts.emplace_back(xs[i], ys[i]);
    std::sort(pts.begin(), pts.end());
    if (pts.size() >= 4) pts.erase(pts.begin());

    LogLogFit fit;
    fit.points = pts.size();
    if (pts.size() < 2) {
        fit.slope = fit.intercept = fit.residual = kNaN;
        return fit;
    }
    for (const auto& [x, y] : pts) {
        if (!(x > 0.0) || !(y > 0.0)) throw DomainError("fit_loglog: values must be positive");
    }
    const double n = static_cast<double>(pts.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pts) {
        mx += std::log(x);
        my += std::log(y);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pts) {
        sxx += (std::log(x) - mx) * (std::log(x) - mx);
        sxy += (std::log(x) - mx) * (std::log(y) - my);
    }
    fit.slope = sxx > 0.0 ? sxy / sxx : kNaN;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (const auto& [x, y] : pts) {
        const double r = std::log(y) - (fit.intercept + fit.slope * std::log(x));
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

// ---------------------------------------------------------------- width sweeps

void SweepConfig::validate() const {
    if (widths.empty()) throw DomainError("sweep: widths must be nonempty");
    for (std::size_t i = 0; i < widths.size(); ++i) {
        if (widths[i] < 4) throw DomainError("sweep: widths must be >= 4");
        if (i > 0 && widths[i] <= widths[i - 1]) throw DomainError("sweep: widths must be strictly increasing");
    }
    if (depth < 2) throw DomainError("sweep: depth must be >= 2");
    if (input_dim < 1) throw DomainError("sweep: input_dim must be >= 1");
    if (!(C > 0.0)) throw DomainError("sweep: C must be > 0");
    if (n_dirs < 8) throw DomainError("sweep: n_dirs must be >= 8");
    if (n_draws < 0) throw DomainError("sweep: n_draws must be >= 0");
    VectorNormSpec{p, false}.validate();
    VectorNormSpec{q, false}.validate();
    if (depth > 2 && !is_computable({{p, true}, {q, true}})) {
        throw UnsupportedError("sweep: block norm has no closed form for p = " + fmt17(p) + ", q = " + fmt17(q));
    }
}

namespace {

// Steepest-ascent geometry of a block whose norm is `spec`.
GeometrySpec geometry_of(const OperatorNormSpec& spec) {
    if (spec.input.p == 1.0) return GeometrySpec::colnorm(spec.output.p);
    if (std::isinf(spec.output.p)) return GeometrySpec::rownorm(spec.input.p);
    return GeometrySpec::spectral();
}

Perturbation normalized(Perturbation d, double p, double q) {
    const double n = block_norm(d, p, q);
    if (!(n > 0.0)) throw DomainError("sweep: zero direction");
    d *= 1.0 / n;
    return d;
}

Vector sphere_point(std::size_t d, double radius, Rng& rng) {
    Vector x = gaussian_vector(d, rng);
    const double n = std::sqrt(dot(x.span(), x.span()));
    for (double& v : x) v *= radius / n;
    return x;
}

// Width-independent "mean-field" point: every hidden unit carries the same
// pre-activation, placed where |tanh''| peaks, with the readout either
// concentrated on one unit or spread over all of them.
void structured_point(ModelParams& params, Vector& x, const SweepConfig& cfg, bool concentrated) {
    const std::size_t k = params.depth();
    const std::size_t w = params.width();
    Rng srng(cfg.seed);
    std::uniform_real_distribution<double> unif01(0.0, 1.0);
    std::uniform_real_distribution<double> half(-cfg.C / 2.0, cfg.C / 2.0);
    x = sphere_point(cfg.input_dim, cfg.C, srng);
    const double s0 = unif01(srng) < 0.5 ? 1.0 : -1.0;
    for (std::size_t r = 0; r < w; ++r)
        for (std::size_t c = 0; c < cfg.input_dim; ++c) params.weights[0](r, c) = cfg.C * sgn(x[c]) * s0;
    const double b0 = half(srng);
    for (double& v : params.biases[0]) v = b0;
    for (std::size_t i = 1; i + 1 < k; ++i) {
        const double s = unif01(srng) < 0.5 ? 1.0 : -1.0;
        params.weights[i] = Matrix(w, w, s * (cfg.C / 2.0) / static_cast<double>(w));
        const double bi = half(srng);
        for (double& v : params.biases[i]) v = bi;
    }

    ForwardTrace t = forward(params, x);
    auto& blast = params.biases[k - 2];
    for (std::size_t j = 0; j < w; ++j) {
        const double pre = t.z[k - 2][j] - blast[j];
        blast[j] = std::clamp(-kTanhCurvaturePeak - pre, -cfg.C, cfg.C);
    }
    Matrix readout(1, w, concentrated ? 0.0 : 1.0);
    if (concentrated) readout(0, 0) = 1.0;
    readout *= cfg.C / op_norm_exact(readout, layer_spec(k - 1, k, cfg.p, cfg.q));
    params.weights[k - 1] = readout;

    t = forward(params, x);
    auto& bk = params.biases[k - 1];
    bk[0] = std::clamp(-(t.z[k - 1][0] - bk[0]), -cfg.C, cfg.C);
}

struct WidthMaxima {
    double derivative = 0.0;
    double hessian = 0.0;
    double grad_aligned = 0.0;
    int n_dirs = 0;
};

WidthMaxima sweep_width(const SweepConfig& cfg, std::size_t w) {
    const std::size_t k = cfg.depth;
    Rng rng(cfg.seed * 1000003ULL + w);
    WidthMaxima out;
    const int draws = cfg.n_draws + 2;
    for (int draw = 0; draw < draws; ++draw) {
        ModelParams params = init_in_ball(k, w, cfg.input_dim, cfg.C, cfg.p, cfg.q, rng, 0.5);
        Vector x = sphere_point(cfg.input_dim, cfg.C, rng);
        if (draw >= cfg.n_draws) structured_point(params, x, cfg, draw == cfg.n_draws);
        const ForwardTrace trace = forward(params, x);
        // A fixed unit residual keeps the loss slope at tanh(1) for every width.
        const double target = trace.output() - 1.0;

        std::vector<Perturbation> dirs;
        std::vector<bool> first_order_only;
        auto add = [&](Perturbation d, bool grad_only) {
            dirs.push_back(normalized(std::move(d), cfg.p, cfg.q));
            first_order_only.push_back(grad_only);
        };
        for (int j = 0; j < cfg.n_dirs; ++j) {
            Perturbation d = zeros_like(params);
            for (auto& m : d.weights) m = gaussian_matrix(m.rows(), m.cols(), rng);
            for (auto& b : d.biases) b = gaussian_vector(b.size(), rng);
            add(std::move(d), false);
        }

        // Gradient-aligned: per-block steepest ascent with each term at 1.
        {
            Batch one{Matrix(1, cfg.input_dim, std::vector<double>(x.begin(), x.end())), {target}};
            const BlockSet g = loss_and_grad(params, one).grad;
            Perturbation d = zeros_like(params);
            for (std::size_t i = 0; i < k; ++i) {
                const OperatorNormSpec spec = layer_spec(i, k, cfg.p, cfg.q);
                Matrix a = descent_direction(g.weights[i], geometry_of(spec));
                const double term = op_norm_exact(a, spec);
                if (term > 0.0) d.weights[i] = (-1.0 / term) * a;
                for (std::size_t j = 0; j < g.biases[i].size(); ++j) d.biases[i][j] = sgn(g.biases[i][j]);
            }
            if (block_norm(d, cfg.p, cfg.q) > 0.0) add(std::move(d), true);
        }

        for (std::size_t i = 0; i < k; ++i) {
            Perturbation dw = zeros_like(params);
            dw.weights[i] = gaussian_matrix(params.weights[i].rows(), params.weights[i].cols(), rng);
            add(std::move(dw), false);

            Perturbation db = zeros_like(params);
            std::normal_distribution<double> gauss(0.0, 1.0);
            for (double& v : db.biases[i]) v = gauss(rng) < 0.0 ? -1.0 : 1.0;
            add(std::move(db), false);

            // Rank-one e_r y_{i-1}ᵀ, aligned with the live input of layer i.
            const Vector& input = i == 0 ? trace.x : trace.y[i - 1];
            if (max_abs(input.span()) == 0.0) continue;
            std::size_t peak = 0;
            for (std::size_t r = 0; r < trace.sigma2[i].size(); ++r) {
                if (std::abs(trace.sigma2[i][r]) > std::abs(trace.sigma2[i][peak])) peak = r;
            }
            std::vector<std::size_t> rows{0};
            if (peak != 0) rows.push_back(peak);
            for (std::size_t r : rows) {
                Perturbation d = zeros_like(params);
                auto row = d.weights[i].row(r);
                std::copy(input.begin(), input.end(), row.begin());
                add(std::move(d), false);
            }
        }

        for (std::size_t j = 0; j < dirs.size(); ++j) {
            const DirectionalDerivs dd = dir_derivs(params, x, dirs[j], target);
            out.derivative = std::max(out.derivative, std::abs(dd.first));
            if (first_order_only[j]) {
                out.grad_aligned = std::max(out.grad_aligned, std::abs(dd.first));
            } else {
                out.hessian = std::max(out.hessian, std::abs(dd.second));
            }
        }
        out.n_dirs += static_cast<int>(dirs.size());
    }
    return out;
}

SweepResult run_sweep(const SweepConfig& cfg, bool hessian) {
    cfg.validate();
    std::vector<WidthMaxima> maxima(cfg.widths.size());
    parallel_for(cfg.widths.size(), [&](std::size_t i) { maxima[i] = sweep_width(cfg, cfg.widths[i]); });

    const OperatorNormSpec hidden{{cfg.p, true}, {cfg.q, true}};
    SweepResult res;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
        SweepRecord r;
        r.width = cfg.widths[i];
        r.n_dirs = maxima[i].n_dirs;
        r.max_dir_derivative = maxima[i].derivative;
        r.max_dir_hessian = maxima[i].hessian;
        r.probe_value = hessian ? quadratic_probe(r.width, hidden) : maxima[i].grad_aligned;
        res.records.push_back(r);
        xs.push_back(static_cast<double>(r.width));
        ys.push_back(hessian ? r.max_dir_hessian : r.max_dir_derivative);
    }
    res.fit = fit_loglog(xs, ys);
    return res;
}

}  // namespace

SweepResult lipschitz_sweep(const SweepConfig& cfg) { return run_sweep(cfg, false); }
SweepResult smoothness_sweep(const SweepConfig& cfg) { return run_sweep(cfg, true); }

void write_sweep_csv(std::ostream& out, const SweepResult& result, bool hessian) {
    out << "width,n_dirs," << (hessian ? "max_dir_hessian" : "max_dir_derivative") << ",probe_value,slope_so_far\n";
    std::vector<double> xs, ys;
    for (const auto& r : result.records) {
        const double v = hessian ? r.max_dir_hessian : r.max_dir_derivative;
        xs.push_back(static_cast<double>(r.width));
        ys.push_back(v);
        out << r.width << ',' << r.n_dirs << ',' << fmt17(v) << ',' << fmt17(r.probe_value) << ','
            << fmt17(fit_loglog(xs, ys).slope) << '\n';
    }
}

// ---------------------------------------------------------------- probes

double quadratic_probe(std::size_t width, const OperatorNormSpec& spec) {
    if (width < 2) throw DomainError("quadratic_probe: width must be >= 2");
    // Δ = c·e₁1ᵀ, so Δx = c·w·e₁ and (Δx)⊙(Δx) = (c·w)²·e₁.
    std::vector<double> e1(width, 0.0);
    e1[0] = 1.0;
    const std::vector<double> ones(width, 1.0);
    const double c = 1.0 / rank_one_op_norm(e1, ones, spec);
    const double dx = c * static_cast<double>(width);
    e1[0] = dx * dx;
    return vec_norm(e1, {2.0, true});
}

double quadratic_probe(std::size_t width, const GeometrySpec& geometry) {
    OperatorNormSpec spec = geometry.base_norm();
    spec.input.mean = true;
    spec.output.mean = true;
    return quadratic_probe(width, spec);
}

std::pair<double, double> counterexample_check(std::size_t d) {
    if (d < 8) throw DomainError("counterexample_check: d must be >= 8");
    Matrix m(d, d);
    const double v = std::pow(static_cast<double>(d), -1.0 / 3.0);
    for (std::size_t i = 0; i < d; ++i) m(i, 0) = v;
    const double row = op_norm_exact(m, {{3.0, true}, {kInf, false}});
    const OperatorNormSpec spectral_mean{{2.0, true}, {2.0, true}};
    // Jacobi SVD is quadratic per sweep in d; past desk scale use power
    // iteration, which is exact after one step for a rank-one matrix.
    const double spec = d <= 256 ? op_norm_exact(m, spectral_mean)
                                 : spectral_norm_power(m, 4, 1) * mean_factor(spectral_mean, d, d);
    return {row, spec};
}

AttentionResult attention_probe(const std::vector<std::size_t>& d_v_list, const GeometrySpec& geometry,
                                int samples, std::uint64_t seed) {
    geometry.validate();
    if (geometry.family == Family::Spectral) {
        throw UnsupportedError("attention_probe: no logit rule for the spectral geometry");
    }
    if (samples < 1) throw DomainError("attention_probe: samples must be >= 1");
    const bool column = geometry.family == Family::ColNorm;
    const VectorNormSpec unit = column ? VectorNormSpec{geometry.exponent, true} : VectorNormSpec{kInf, false};

    AttentionResult res;
    Rng rng(seed);
    std::vector<double> xs, ys;
    for (std::size_t dv : d_v_list) {
        if (dv < 1) throw DomainError("attention_probe: d_v must be >= 1");
        auto to_unit = [&](std::vector<double> v) {
            const double n = vec_norm(v, unit);
            for (double& e : v) e /= n;
            return v;
        };
        double best = 0.0;
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int s = 0; s < samples; ++s) {
            std::vector<double> q(dv), k(dv);
            for (double& e : q) e = gauss(rng);
            for (double& e : k) e = gauss(rng);
            best = std::max(best, std::abs(dot(to_unit(q), to_unit(k))));
        }
        // Extremal pairs: constant vectors and a single spike.
        best = std::max(best, std::abs(dot(to_unit(std::vector<double>(dv, 1.0)),
                                           to_unit(std::vector<double>(dv, 1.0)))));
        std::vector<double> spike(dv, 0.0);
        spike[0] = 1.0;
        best = std::max(best, std::abs(dot(to_unit(spike), to_unit(spike))));

        AttentionRow row;
        row.d_v = dv;
        row.max_abs_logit = best;
        row.scale = attention_logit_scale(geometry, dv);
        row.scaled_logit = best * row.scale;
        res.rows.push_back(row);
        xs.push_back(static_cast<double>(dv));
        ys.push_back(row.scaled_logit);
    }
    res.fit = fit_loglog(xs, ys);
    return res;
}

// ---------------------------------------------------------------- LR transfer

void TransferConfig::validate() const {
    if (widths.size() < 3) throw DomainError("lr_transfer: need at least 3 widths");
    if (lr_grid.size() < 5) throw DomainError("lr_transfer: lr grid needs at least 5 points");
    for (std::size_t i = 0; i < lr_grid.size(); ++i) {
        if (!(lr_grid[i] > 0.0)) throw DomainError("lr_transfer: grid values must be > 0");
        if (i > 0 && !(lr_grid[i] > lr_grid[i - 1])) throw DomainError("lr_transfer: grid must be increasing");
    }
    if (lr_grid.size() >= 3) {
        const double r0 = std::log(lr_grid[1] / lr_grid[0]);
        for (std::size_t i = 2; i < lr_grid.size(); ++i) {
            if (std::abs(std::log(lr_grid[i] / lr_grid[i - 1]) - r0) > 1e-9 * std::abs(r0)) {
                throw DomainError("lr_transfer: grid must be log-spaced");
            }
        }
    }
    if (steps < 1) throw DomainError("lr_transfer: steps must be >= 1");
    if (depth < 2 || input_dim < 1 || teacher_width < 1 || samples < 1) {
        throw DomainError("lr_transfer: bad network or data size");
    }
    for (std::size_t w : widths) {
        if (w < 1) throw DomainError("lr_transfer: widths must be >= 1");
    }
}

std::vector<double> log2_grid(double lo, int n) {
    std::vector<double> g;
    for (int k = 0; k < n; ++k) g.push_back(std::ldexp(lo, k));
    return g;
}

Batch teacher_data(const TransferConfig& cfg) {
    Rng rng(cfg.seed + 100);
    Batch data{Matrix(cfg.samples, cfg.input_dim), std::vector<double>(cfg.samples)};
    for (std::size_t n = 0; n < cfg.samples; ++n) {
        const Vector x = sphere_point(cfg.input_dim, cfg.C, rng);
        std::copy(x.begin(), x.end(), data.inputs.row(n).begin());
    }
    ModelParams teacher = zero_blocks(cfg.depth, cfg.teacher_width, cfg.input_dim);
    for (auto& w : teacher.weights) {
        w = gaussian_matrix(w.rows(), w.cols(), rng, 2.0 / std::sqrt(static_cast<double>(w.cols())));
    }
    for (auto& b : teacher.biases) b = gaussian_vector(b.size(), rng, 0.1);
    data.targets = predict(teacher, data.inputs);
    return data;
}

ModelParams student_init(const TransferConfig& cfg, std::size_t width) {
    Rng rng(cfg.seed * 7919ULL + width);
    const auto [p, q] = cfg.optimizer.block_norm_exponents();
    ModelParams params = zero_blocks(cfg.depth, width, cfg.input_dim);
    for (std::size_t i = 0; i < params.depth(); ++i) {
        auto& w = params.weights[i];
        w = gaussian_matrix(w.rows(), w.cols(), rng);
        w *= (cfg.C / 2.0) / op_norm_exact(w, layer_spec(i, params.depth(), p, q));
    }
    return params;
}

TransferCell train_cell(const TransferConfig& cfg, const Batch& data, std::size_t width, double lr) {
    TransferCell cell;
    cell.width = width;
    cell.lr = lr;
    ModelParams params = student_init(cfg, width);
    if (lr == 0.0) {
        cell.final_loss = mean_loss(params, data);
        return cell;
    }
    OptimizerConfig oc = cfg.optimizer;
    oc.lr_max = lr;
    oc.total_steps = cfg.steps;
    const auto roles = mlp_roles(params);
    OptimizerState state = init_state(params, oc);
    for (int t = 0; t < cfg.steps; ++t) {
        LossGrad lg = loss_and_grad(params, data);
        if (!std::isfinite(lg.loss) || lg.loss > kDivergenceLoss || !all_finite(lg.grad)) {
            cell.diverged = true;
            cell.final_loss = std::numeric_limits<double>::infinity();
            return cell;
        }
        StepResult s = optimizer_step(params, lg.grad, state, oc, roles);
        params = std::move(s.params);
        state = std::move(s.state);
    }
    cell.final_loss = mean_loss(params, data);
    if (!std::isfinite(cell.final_loss) || cell.final_loss > kDivergenceLoss) {
        cell.diverged = true;
        cell.final_loss = std::numeric_limits<double>::infinity();
    }
    return cell;
}

TransferResult lr_transfer(const TransferConfig& cfg) {
    cfg.validate();
    const Batch data = teacher_data(cfg);
    const std::size_t nw = cfg.widths.size();
    const std::size_t nl = cfg.lr_grid.size();

    TransferResult res;
    res.cells.resize(nw * nl);
    // Widest cells first so the slowest tasks start early.
    std::vector<std::size_t> order(nw * nl);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return cfg.widths[a / nl] > cfg.widths[b / nl];
    });
    parallel_for(order.size(), [&](std::size_t j) {
        const std::size_t idx = order[j];
        res.cells[idx] = train_cell(cfg, data, cfg.widths[idx / nl], cfg.lr_grid[idx % nl]);
    });

    res.initial_loss = train_cell(cfg, data, cfg.widths.front(), 0.0).final_loss;
    for (std::size_t w = 0; w < nw; ++w) {
        int best = 0;
        for (std::size_t l = 1; l < nl; ++l) {
            if (res.cells[w * nl + l].final_loss < res.cells[w * nl + best].final_loss) best = static_cast<int>(l);
        }
        res.argmin.push_back(best);
        const double half = cfg.lr_grid[best] / 2.0;
        for (std::size_t l = 0; l < nl; ++l) {
            if (cfg.lr_grid[l] <= half * (1.0 + 1e-12) && res.cells[w * nl + l].diverged) {
                res.unstable_below_optimum.push_back(cfg.widths[w]);
                break;
            }
        }
    }
    return res;
}

void write_transfer_csv(std::ostream& out, const TransferResult& result) {
    out << "width,lr,final_loss,diverged\n";
    for (const auto& c : result.cells) {
        out << c.width << ',' << fmt17(c.lr) << ',' << fmt17(c.final_loss) << ',' << (c.diverged ? 1 : 0) << '\n';
    }
}

int argmin_spread(const TransferResult& r) {
    if (r.argmin.empty()) return 0;
    const auto [lo, hi] = std::minmax_element(r.argmin.begin(), r.argmin.end());
    return *hi - *lo;
}

int argmin_shift(const TransferResult& r) {
    if (r.argmin.empty()) return 0;
    return r.argmin.front() - r.argmin.back();
}

// ---------------------------------------------------------------- verification suites

nlohmann::json DualityReport::to_json() const {
    return {{"trials", trials},
            {"worst_gap", worst_gap},
            {"best_random_advantage", best_random_advantage},
            {"worst_feasibility_error", worst_feasibility_error}};
}

DualityReport duality_suite(int trials, int random_dirs, std::uint64_t seed) {
    if (trials < 1) throw DomainError("duality_suite: trials must be >= 1");
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> dim(1, 12);
    std::uniform_real_distribution<double> expo(1.0, 8.0);
    DualityReport rep;
    rep.trials = trials;
    for (int t = 0; t < trials; ++t) {
        const std::size_t rows = dim(rng);
        const std::size_t cols = dim(rng);
        const Matrix g = gaussian_matrix(rows, cols, rng);
        const bool mean = t % 2 == 1;
        // Exponents: half continuous in [1, 8], the rest 1, 2 or ∞.
        auto pick = [&] {
            const int c = std::uniform_int_distribution<int>(0, 5)(rng);
            if (c < 3) return expo(rng);
            return c == 3 ? 1.0 : (c == 4 ? 2.0 : kInf);
        };
        GeometrySpec spec;
        switch (t % 8 / 2) {
            case 0: spec = GeometrySpec::sign(mean); break;
            case 1: spec = GeometrySpec::colnorm(pick(), mean); break;
            case 2: spec = GeometrySpec::rownorm(pick(), mean); break;
            default: spec = GeometrySpec::spectral(mean); break;
        }
        const Matrix d = descent_direction(g, spec);
        rep.worst_gap = std::max(rep.worst_gap, std::abs(duality_gap(g, d, spec)));
        const double radius = spec.mean ? moga_scale(spec, cols, rows) : 1.0;
        const double dnorm = op_norm_exact(d, spec.base_norm()) / radius;
        rep.worst_feasibility_error = std::max(rep.worst_feasibility_error, std::abs(dnorm - 1.0));

        const double optimal = inner(g, d);
        for (int j = 0; j < random_dirs; ++j) {
            Matrix r = gaussian_matrix(rows, cols, rng);
            const double n = op_norm_exact(r, spec.base_norm());
            if (n == 0.0) continue;
            r *= radius / n;
            rep.best_random_advantage = std::max(rep.best_random_advantage, optimal - inner(g, r));
        }
    }
    return rep;
}

nlohmann::json DerivativeReport::to_json() const {
    return {{"nets", nets},
            {"max_grad_rel_err", max_grad_rel_err},
            {"max_hessian_rel_err", max_hessian_rel_err},
            {"max_symmetry_err", max_symmetry_err},
            {"max_adjoint_err", max_adjoint_err}};
}

namespace {

// Loss of params + a·d1 + b·d2 at one sample, in long double.
long double shifted_loss(const ModelParams& params, const Perturbation* d1, long double a,
                         const Perturbation* d2, long double b, const Vector& x, double target) {
    std::vector<long double> y(x.begin(), x.end());
    for (std::size_t i = 0; i < params.depth(); ++i) {
        const Matrix& w = params.weights[i];
        std::vector<long double> z(w.rows());
        for (std::size_t r = 0; r < w.rows(); ++r) {
            long double s = params.biases[i][r];
            if (d1) s += a * d1->biases[i][r];
            if (d2) s += b * d2->biases[i][r];
            for (std::size_t c = 0; c < w.cols(); ++c) {
                long double wc = w(r, c);
                if (d1) wc += a * d1->weights[i](r, c);
                if (d2) wc += b * d2->weights[i](r, c);
                s += wc * y[c];
            }
            z[r] = std::tanh(s);
        }
        y = std::move(z);
    }
    const long double r = y[0] - static_cast<long double>(target);
    const long double ar = std::fabs(r);
    return ar + std::log1p(std::exp(-2.0L * ar)) - std::log(2.0L);
}

ModelParams random_net(std::size_t k, std::size_t w, std::size_t d, Rng& rng) {
    ModelParams p = zero_blocks(k, w, d);
    for (auto& m : p.weights) m = gaussian_matrix(m.rows(), m.cols(), rng, 1.5 / std::sqrt(static_cast<double>(m.cols())));
    for (auto& b : p.biases) b = gaussian_vector(b.size(), rng, 0.3);
    return p;
}

Perturbation random_direction(const ModelParams& like, Rng& rng) {
    Perturbation d = zeros_like(like);
    for (auto& m : d.weights) m = gaussian_matrix(m.rows(), m.cols(), rng);
    for (auto& b : d.biases) b = gaussian_vector(b.size(), rng);
    return d;
}

}  // namespace

DerivativeReport derivative_suite(int nets, std::uint64_t seed) {
    if (nets < 1) throw DomainError("derivative_suite: nets must be >= 1");
    constexpr long double h = 1e-5L;
    constexpr long double t = 1e-4L;
    const std::size_t widths[] = {4, 8, 16};
    const std::size_t depths[] = {2, 3, 4};
    Rng rng(seed);
    DerivativeReport rep;
    rep.nets = nets;
    for (int n = 0; n < nets; ++n) {
        const std::size_t w = widths[n % 3];
        const std::size_t k = depths[(n / 3) % 3];
        const std::size_t d = 3 + static_cast<std::size_t>(n % 4);
        const ModelParams params = random_net(k, w, d, rng);
        const Vector x = gaussian_vector(d, rng);
        const double target = std::normal_distribution<double>(0.0, 0.5)(rng);

        Batch one{Matrix(1, d, std::vector<double>(x.begin(), x.end())), {target}};
        const BlockSet grad = loss_and_grad(params, one).grad;

        // Coordinate-wise central differences.
        Perturbation e = zeros_like(params);
        auto check_coord = [&](double analytic, double& slot) {
            const long double fd =
                (shifted_loss(params, &e, h, nullptr, 0, x, target) - shifted_loss(params, &e, -h, nullptr, 0, x, target)) /
                (2.0L * h);
            const double err = static_cast<double>(std::fabs(analytic - fd)) / (std::abs(analytic) + 1e-8);
            rep.max_grad_rel_err = std::max(rep.max_grad_rel_err, err);
            slot = 0.0;
        };
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < params.weights[i].size(); ++j) {
                e.weights[i].span()[j] = 1.0;
                check_coord(grad.weights[i].span()[j], e.weights[i].span()[j]);
            }
            for (std::size_t j = 0; j < params.biases[i].size(); ++j) {
                e.biases[i][j] = 1.0;
                check_coord(grad.biases[i][j], e.biases[i][j]);
            }
        }

        const Perturbation d1 = random_direction(params, rng);
        const Perturbation d2 = random_direction(params, rng);

        const double dd = dir_derivative(params, x, d1, target);
        const double adj = inner(grad, d1);
        rep.max_adjoint_err = std::max(rep.max_adjoint_err, std::abs(dd - adj) / (std::abs(dd) + 1e-8));

        const double h12 = dir_hessian(params, x, d1, d2, target);
        const double h21 = dir_hessian(params, x, d2, d1, target);
        rep.max_symmetry_err = std::max(rep.max_symmetry_err, std::abs(h12 - h21));
        const long double fd2 = (shifted_loss(params, &d1, t, &d2, t, x, target) -
                                 shifted_loss(params, &d1, t, &d2, -t, x, target) -
                                 shifted_loss(params, &d1, -t, &d2, t, x, target) +
                                 shifted_loss(params, &d1, -t, &d2, -t, x, target)) /
                                (4.0L * t * t);
        rep.max_hessian_rel_err =
            std::max(rep.max_hessian_rel_err, static_cast<double>(std::fabs(h12 - fd2)) / (std::abs(h12) + 1e-6));
    }
    return rep;
}

nlohmann::json NewtonSchulzReport::to_json() const {
    return {{"matrices", matrices}, {"max_error", max_error}, {"max_condition", max_condition}};
}

Matrix random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng) {
    if (cols > rows) throw ShapeError("random_orthonormal: need rows >= cols");
    Matrix q = gaussian_matrix(rows, cols, rng);
    // Modified Gram-Schmidt, twice for stability.
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c = 0; c < cols; ++c) {
            for (std::size_t j = 0; j < c; ++j) {
                double proj = 0.0;
                for (std::size_t r = 0; r < rows; ++r) proj += q(r, c) * q(r, j);
                for (std::size_t r = 0; r < rows; ++r) q(r, c) -= proj * q(r, j);
            }
            double n = 0.0;
            for (std::size_t r = 0; r < rows; ++r) n += q(r, c) * q(r, c);
            n = std::sqrt(n);
            for (std::size_t r = 0; r < rows; ++r) q(r, c) /= n;
        }
    }
    return q;
}

NewtonSchulzReport newton_schulz_suite(int matrices, std::size_t n, double cond_max, int iters,
                                       NsCoefficients coeffs, std::uint64_t seed) {
    if (matrices < 1 || n < 1 || !(cond_max >= 1.0)) throw DomainError("newton_schulz_suite: bad arguments");
    Rng rng(seed);
    std::uniform_real_distribution<double> logu(0.0, std::log(cond_max));
    NewtonSchulzReport rep;
    rep.matrices = matrices;
    for (int m = 0; m < matrices; ++m) {
        const Matrix u = random_orthonormal(n, n, rng);
        const Matrix v = random_orthonormal(n, n, rng);
        std::vector<double> s(n);
        for (double& e : s) e = std::exp(logu(rng));
        s[0] = cond_max;
        if (n > 1) s[n - 1] = 1.0;
        const Matrix g = matmul_nt(matmul(u, Matrix::diagonal(s)), v);
        const Matrix ns = newton_schulz_sign(g, iters, coeffs);
        const Matrix exact = matrix_sign_svd(g);
        rep.max_error = std::max(rep.max_error, frobenius_norm(ns - exact) / std::sqrt(static_cast<double>(n)));
        const SvdResult f = svd(g);
        rep.max_condition = std::max(rep.max_condition, f.s[0] / f.s[f.s.size() - 1]);
    }
    return rep;
}

}  // namespace opnorm
