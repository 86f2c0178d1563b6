#include "opnorm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "opnorm/error.hpp"
#include "opnorm/format.hpp"
#include "opnorm/norms.hpp"

namespace opnorm {

std::string method_name(Method m) {
    switch (m) {
        case Method::MogaRow: return "moga-row";
        case Method::MogaCol: return "moga-col";
        case Method::SignSgd: return "signsgd";
        case Method::AdamW: return "adamw";
        case Method::Muon: return "muon";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::MogaRow, Method::MogaCol, Method::SignSgd, Method::AdamW, Method::Muon}) {
        if (method_name(m) == name) return m;
    }
    throw DomainError("unknown optimizer method '" + name +
                      "' (moga-row, moga-col, signsgd, adamw, muon)");
}

OptimizerConfig OptimizerConfig::defaults(Method method) {
    OptimizerConfig c;
    c.method = method;
    if (method == Method::AdamW) c.weight_decay = 0.1;
    return c;
}

void OptimizerConfig::validate() const {
    if (!(lr_max > 0.0) || !std::isfinite(lr_max)) throw DomainError("optimizer: lr_max must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw DomainError("optimizer: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw DomainError("optimizer: beta2 must be in [0, 1)");
    if (!(weight_decay >= 0.0)) throw DomainError("optimizer: weight_decay must be >= 0");
    if (!(warmup_frac >= 0.0 && warmup_frac < 1.0)) {
        throw DomainError("optimizer: warmup_frac must be in [0, 1)");
    }
    if (total_steps < 1) throw DomainError("optimizer: total_steps must be >= 1");
    if (ns_iters < 1) throw DomainError("optimizer: ns_iters must be >= 1");
    if (!(adam_eps >= 0.0)) throw DomainError("optimizer: adam_eps must be >= 0");
    geometry().validate();
}

GeometrySpec OptimizerConfig::geometry() const {
    switch (method) {
        case Method::MogaRow: return GeometrySpec::rownorm(exponent, true);
        case Method::MogaCol: return GeometrySpec::colnorm(exponent, true);
        case Method::Muon: return GeometrySpec::spectral(true);
        case Method::SignSgd:
        case Method::AdamW: return GeometrySpec::sign(true);
    }
    throw UnsupportedError("optimizer: unknown method");
}

std::pair<double, double> OptimizerConfig::block_norm_exponents() const {
    switch (method) {
        case Method::MogaRow: return {exponent, kInf};
        case Method::MogaCol: return {1.0, exponent};
        case Method::Muon: return {2.0, 2.0};
        case Method::SignSgd:
        case Method::AdamW: return {1.0, kInf};
    }
    throw UnsupportedError("optimizer: unknown method");
}

OptimizerState init_state(const BlockSet& params, const OptimizerConfig& config) {
    OptimizerState s;
    s.momentum = zeros_like(params);
    if (config.method == Method::AdamW) s.second_moment = zeros_like(params);
    return s;
}

double lr_at(const OptimizerConfig& config, int t) {
    if (t < 0 || t > config.total_steps) {
        throw DomainError("lr_at: step " + std::to_string(t) + " outside [0, " +
                          std::to_string(config.total_steps) + "]");
    }
    const double total = config.total_steps;
    const double warmup = config.warmup_frac * total;
    const double lr_min = config.lr_max / 10.0;
    if (t < warmup) return config.lr_max * t / warmup;
    const double span = total - warmup;
    const double progress = span > 0.0 ? (t - warmup) / span : 1.0;
    return lr_min + (config.lr_max - lr_min) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

std::vector<ParamRole> mlp_roles(const BlockSet& params) {
    params.validate();
    std::vector<ParamRole> roles;
    for (std::size_t i = 0; i < params.depth(); ++i) {
        const auto& w = params.weights[i];
        roles.push_back({i + 1 == params.depth() ? Role::OutputWeight : Role::HiddenWeight, w.cols(), w.rows()});
    }
    return roles;
}

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Validation, decay, and the two momentum buffers shared by the
// steepest-descent steps. Returns M̃ and fills the next state.
struct Prepared {
    BlockSet params;
    BlockSet lookahead;
    OptimizerState state;
    double lr = 0.0;
};

Prepared prepare(const BlockSet& params, const BlockSet& grad, const OptimizerState& state,
                 const OptimizerConfig& config, const std::vector<ParamRole>& roles) {
    config.validate();
    params.validate();
    if (!params.same_shape(grad)) throw ShapeError("optimizer: gradient layout differs from parameters");
    if (!params.same_shape(state.momentum)) throw ShapeError("optimizer: state layout differs from parameters");
    if (roles.size() != params.depth()) {
        throw ShapeError("optimizer: expected " + std::to_string(params.depth()) + " roles, got " +
                         std::to_string(roles.size()));
    }
    if (!all_finite(grad)) throw DomainError("optimizer: non-finite gradient");
    if (state.t >= config.total_steps) {
        throw DomainError("optimizer: step " + std::to_string(state.t) + " beyond total_steps " +
                          std::to_string(config.total_steps));
    }

    Prepared out;
    out.lr = lr_at(config, state.t + 1);
    out.params = params;
    if (config.weight_decay > 0.0) out.params *= 1.0 - out.lr * config.weight_decay;

    out.lookahead = config.beta2 * state.momentum;
    out.lookahead += (1.0 - config.beta2) * grad;
    out.state = state;
    out.state.momentum = config.beta1 * state.momentum;
    out.state.momentum += (1.0 - config.beta1) * grad;
    out.state.t = state.t + 1;
    return out;
}

void sign_bias_update(Prepared& p) {
    for (std::size_t i = 0; i < p.params.biases.size(); ++i) {
        auto& b = p.params.biases[i];
        const auto& m = p.lookahead.biases[i];
        for (std::size_t j = 0; j < b.size(); ++j) b[j] -= p.lr * sgn(m[j]);
    }
}

StepResult geometry_step(const BlockSet& params, const BlockSet& grad, const OptimizerState& state,
                         const OptimizerConfig& config, const std::vector<ParamRole>& roles,
                         const GeometrySpec& base) {
    Prepared p = prepare(params, grad, state, config, roles);
    for (std::size_t i = 0; i < p.params.depth(); ++i) {
        const RoleRule rule = role_rule(roles[i], base);
        GeometrySpec unit = rule.geometry;
        unit.mean = false;
        const double scale = config.unscaled ? 1.0 : rule.scale;
        // descent_direction already carries the minus sign.
        p.params.weights[i] += (p.lr * scale) * descent_direction(p.lookahead.weights[i], unit);
    }
    sign_bias_update(p);
    return {std::move(p.params), std::move(p.state), p.lr};
}

}  // namespace

StepResult moga_step(const BlockSet& params, const BlockSet& grad, const OptimizerState& state,
                     const OptimizerConfig& config, const std::vector<ParamRole>& roles) {
    if (config.method != Method::MogaRow && config.method != Method::MogaCol) {
        throw UnsupportedError("moga_step: method " + method_name(config.method) + " is not a MOGA variant");
    }
    return geometry_step(params, grad, state, config, roles, config.geometry());
}

StepResult signsgd_step(const BlockSet& params, const BlockSet& grad, const OptimizerState& state,
                        const OptimizerConfig& config, const std::vector<ParamRole>& roles) {
    return geometry_step(params, grad, state, config, roles, GeometrySpec::sign(true));
}

StepResult muon_step(const BlockSet& params, const BlockSet& grad, const OptimizerState& state,
                     const OptimizerConfig& config, const std::vector<ParamRole>& roles) {
    Prepared p = prepare(params, grad, state, config, roles);
    for (std::size_t i = 0; i < p.params.depth(); ++i) {
        const double din = static_cast<double>(roles[i].d_in);
        const double dout = static_cast<double>(roles[i].d_out);
        double scale = config.muon_rule == MuonRule::AspectRatio ? std::sqrt(din / dout)
                                                                 : std::sqrt(std::max(din, dout));
        if (config.unscaled) scale = 1.0;
        const Matrix dir = newton_schulz_sign(p.lookahead.weights[i], config.ns_iters, config.ns_coeffs);
        p.params.weights[i] -= (p.lr * scale) * dir;
    }
    sign_bias_update(p);
    return {std::move(p.params), std::move(p.state), p.lr};
}

StepResult adamw_step(const BlockSet& params, const BlockSet& grad, const OptimizerState& state,
                      const OptimizerConfig& config, const std::vector<ParamRole>& roles) {
    config.validate();
    params.validate();
    if (!params.same_shape(grad)) throw ShapeError("adamw_step: gradient layout differs from parameters");
    if (!params.same_shape(state.momentum) || !params.same_shape(state.second_moment)) {
        throw ShapeError("adamw_step: state layout differs from parameters");
    }
    if (roles.size() != params.depth()) throw ShapeError("adamw_step: role count differs from depth");
    if (!all_finite(grad)) throw DomainError("adamw_step: non-finite gradient");
    if (state.t >= config.total_steps) throw DomainError("adamw_step: step beyond total_steps");

    StepResult out;
    out.lr = lr_at(config, state.t + 1);
    out.params = params;
    if (config.weight_decay > 0.0) out.params *= 1.0 - out.lr * config.weight_decay;
    out.state = state;
    out.state.t = state.t + 1;
    const double c1 = 1.0 - std::pow(config.beta1, out.state.t);
    const double c2 = 1.0 - std::pow(config.beta2, out.state.t);

    auto update = [&](std::span<double> theta, std::span<double> m, std::span<double> v,
                      std::span<const double> g) {
        for (std::size_t j = 0; j < theta.size(); ++j) {
            m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
            v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            const double denom = std::sqrt(vhat) + config.adam_eps;
            if (denom > 0.0) theta[j] -= out.lr * mhat / denom;
        }
    };
    for (std::size_t i = 0; i < params.depth(); ++i) {
        update(out.params.weights[i].span(), out.state.momentum.weights[i].span(),
               out.state.second_moment.weights[i].span(), grad.weights[i].span());
        update(out.params.biases[i].span(), out.state.momentum.biases[i].span(),
               out.state.second_moment.biases[i].span(), grad.biases[i].span());
    }
    return out;
}

StepResult optimizer_step(const BlockSet& params, const BlockSet& grad, const OptimizerState& state,
                          const OptimizerConfig& config, const std::vector<ParamRole>& roles) {
    switch (config.method) {
        case Method::MogaRow:
        case Method::MogaCol: return moga_step(params, grad, state, config, roles);
        case Method::SignSgd: return signsgd_step(params, grad, state, config, roles);
        case Method::AdamW: return adamw_step(params, grad, state, config, roles);
        case Method::Muon: return muon_step(params, grad, state, config, roles);
    }
    throw UnsupportedError("optimizer_step: unknown method");
}

TrajectoryLog::TrajectoryLog(std::ostream& out, std::size_t depth, double p, double q)
    : out_(out), depth_(depth), p_(p), q_(q) {
    out_ << "step,lr,loss";
    for (std::size_t i = 1; i <= depth_; ++i) out_ << ",update_W" << i;
    for (std::size_t i = 1; i <= depth_; ++i) out_ << ",update_b" << i;
    out_ << ",block_norm\n";
}

void TrajectoryLog::record(int step, double lr, double loss, const BlockSet& before, const BlockSet& after) {
    if (before.depth() != depth_ || after.depth() != depth_) throw ShapeError("TrajectoryLog: depth mismatch");
    out_ << step << ',' << fmt17(lr) << ',' << fmt17(loss);
    for (std::size_t i = 0; i < depth_; ++i) out_ << ',' << fmt17(frobenius_norm(after.weights[i] - before.weights[i]));
    for (std::size_t i = 0; i < depth_; ++i) {
        double m = 0.0;
        for (std::size_t j = 0; j < after.biases[i].size(); ++j) {
            m = std::max(m, std::abs(after.biases[i][j] - before.biases[i][j]));
        }
        out_ << ',' << fmt17(m);
    }
    out_ << ',' << fmt17(block_norm(after, p_, q_)) << '\n';
}

}  // namespace opnorm
