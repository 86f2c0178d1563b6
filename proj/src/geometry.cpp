#include "opnorm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "opnorm/error.hpp"

namespace opnorm {

namespace {

double parse_exponent(const std::string& s) {
    if (s == "inf") return kInf;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw DomainError("bad exponent '" + s + "'");
    }
    if (used != s.size()) throw DomainError("bad exponent '" + s + "'");
    return v;
}

std::string exponent_str(double p) {
    if (std::isinf(p)) return "inf";
    std::ostringstream os;
    os << p;
    return os.str();
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// sign(v)|v|^{e-1} / ‖v‖_e^{e-1}, written into out. This is the unit
// e*-norm maximizer of ⟨v, ·⟩. e = 1 gives sign(v); e = ∞ splits unit mass
// evenly over the max-magnitude entries.
template <typename Get, typename Put>
void dual_direction(std::size_t n, double e, Get get, Put put) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(get(i)));
    if (m == 0.0) {
        for (std::size_t i = 0; i < n; ++i) put(i, 0.0);
        return;
    }
    if (e == 1.0) {
        for (std::size_t i = 0; i < n; ++i) put(i, sgn(get(i)));
        return;
    }
    if (std::isinf(e)) {
        std::size_t ties = 0;
        for (std::size_t i = 0; i < n; ++i) ties += std::abs(get(i)) == m;
        const double share = 1.0 / static_cast<double>(ties);
        for (std::size_t i = 0; i < n; ++i) put(i, std::abs(get(i)) == m ? sgn(get(i)) * share : 0.0);
        return;
    }
    std::vector<double> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = get(i);
    const double norm = vec_norm(buf, {e, false});
    if (e > 4.0) {
        const double log_norm = std::log(norm);
        for (std::size_t i = 0; i < n; ++i) {
            const double a = std::abs(buf[i]);
            put(i, a == 0.0 ? 0.0 : sgn(buf[i]) * std::exp((e - 1.0) * (std::log(a) - log_norm)));
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            put(i, sgn(buf[i]) * std::pow(std::abs(buf[i]) / norm, e - 1.0));
        }
    }
}

Matrix base_direction(const Matrix& g, const GeometrySpec& spec) {
    Matrix d(g.rows(), g.cols());
    switch (spec.family) {
        case Family::Sign:
            for (std::size_t i = 0; i < g.size(); ++i) d.span()[i] = sgn(g.span()[i]);
            break;
        case Family::ColNorm: {
            const double e = dual_exponent(spec.exponent);
            for (std::size_t c = 0; c < g.cols(); ++c) {
                dual_direction(
                    g.rows(), e, [&](std::size_t r) { return g(r, c); },
                    [&](std::size_t r, double v) { d(r, c) = v; });
            }
            break;
        }
        case Family::RowNorm: {
            const double e = spec.exponent;
            for (std::size_t r = 0; r < g.rows(); ++r) {
                dual_direction(
                    g.cols(), e, [&](std::size_t c) { return g(r, c); },
                    [&](std::size_t c, double v) { d(r, c) = v; });
            }
            break;
        }
        case Family::Spectral:
            d = matrix_sign_svd(g);
            break;
    }
    return d;
}

double base_dual_norm(const Matrix& g, const GeometrySpec& spec) {
    double s = 0.0;
    switch (spec.family) {
        case Family::Sign:
            for (double v : g.span()) s += std::abs(v);
            break;
        case Family::ColNorm: {
            const VectorNormSpec e{dual_exponent(spec.exponent), false};
            for (std::size_t c = 0; c < g.cols(); ++c) s += vec_norm(g.col(c), e);
            break;
        }
        case Family::RowNorm: {
            const VectorNormSpec e{spec.exponent, false};
            for (std::size_t r = 0; r < g.rows(); ++r) s += vec_norm(g.row(r), e);
            break;
        }
        case Family::Spectral:
            if (max_abs(g.span()) == 0.0) return 0.0;
            for (double v : svd(g).s) s += v;
            break;
    }
    return s;
}

double ball_scale(const GeometrySpec& spec, const Matrix& g) {
    return spec.mean ? moga_scale(spec, g.cols(), g.rows()) : 1.0;
}

}  // namespace

void GeometrySpec::validate() const {
    if ((family == Family::ColNorm || family == Family::RowNorm) &&
        (std::isnan(exponent) || exponent < 1.0)) {
        throw DomainError("geometry exponent must be >= 1, got " + exponent_str(exponent));
    }
}

std::string GeometrySpec::str() const {
    std::string s;
    switch (family) {
        case Family::Sign: s = "sign"; break;
        case Family::ColNorm: s = "colnorm:" + exponent_str(exponent); break;
        case Family::RowNorm: s = "rownorm:" + exponent_str(exponent); break;
        case Family::Spectral: s = "spectral"; break;
    }
    return mean ? s + ",mean" : s;
}

OperatorNormSpec GeometrySpec::base_norm() const {
    validate();
    switch (family) {
        case Family::Sign: return {{1.0, false}, {kInf, false}};
        case Family::ColNorm: return {{1.0, false}, {exponent, false}};
        case Family::RowNorm: return {{exponent, false}, {kInf, false}};
        case Family::Spectral: return {{2.0, false}, {2.0, false}};
    }
    throw UnsupportedError("unknown geometry family");
}

GeometrySpec parse_geometry(const std::string& text) {
    std::string body = text;
    bool mean = false;
    if (const auto comma = body.find(','); comma != std::string::npos) {
        if (body.substr(comma + 1) != "mean") throw DomainError("bad geometry suffix in '" + text + "'");
        mean = true;
        body = body.substr(0, comma);
    }
    const auto colon = body.find(':');
    const std::string name = body.substr(0, colon);
    const bool has_exp = colon != std::string::npos;
    GeometrySpec spec;
    if (name == "sign" && !has_exp) {
        spec = GeometrySpec::sign(mean);
    } else if (name == "spectral" && !has_exp) {
        spec = GeometrySpec::spectral(mean);
    } else if (name == "colnorm" && has_exp) {
        spec = GeometrySpec::colnorm(parse_exponent(body.substr(colon + 1)), mean);
    } else if (name == "rownorm" && has_exp) {
        spec = GeometrySpec::rownorm(parse_exponent(body.substr(colon + 1)), mean);
    } else {
        throw DomainError("unknown geometry '" + text + "'");
    }
    spec.validate();
    return spec;
}

double moga_scale(const GeometrySpec& spec, std::size_t d_in, std::size_t d_out) {
    spec.validate();
    if (d_in == 0 || d_out == 0) throw DomainError("moga_scale: dimensions must be >= 1");
    const double din = static_cast<double>(d_in);
    const double dout = static_cast<double>(d_out);
    switch (spec.family) {
        case Family::Sign:
            return 1.0 / din;
        case Family::ColNorm:
            if (!spec.mean) throw UnsupportedError("moga_scale: " + spec.str() + " needs the mean flag");
            return std::pow(dout, inv_exponent(spec.exponent)) / din;
        case Family::RowNorm:
            if (!spec.mean) throw UnsupportedError("moga_scale: " + spec.str() + " needs the mean flag");
            return std::pow(din, -inv_exponent(spec.exponent));
        case Family::Spectral:
            return std::sqrt(din / dout);
    }
    throw UnsupportedError("moga_scale: unknown family");
}

Matrix descent_direction(const Matrix& g, const GeometrySpec& spec) {
    spec.validate();
    if (!all_finite(g.span())) throw DomainError("descent_direction: non-finite gradient");
    Matrix d = base_direction(g, spec);
    d *= -ball_scale(spec, g);
    return d;
}

double dual_norm(const Matrix& g, const GeometrySpec& spec) {
    spec.validate();
    return ball_scale(spec, g) * base_dual_norm(g, spec);
}

double duality_gap(const Matrix& g, const Matrix& d, const GeometrySpec& spec) {
    spec.validate();
    if (g.rows() != d.rows() || g.cols() != d.cols()) {
        throw ShapeError("duality_gap: " + g.shape_string() + " vs " + d.shape_string());
    }
    const double radius = ball_scale(spec, g);
    const double measured = op_norm_exact(d, spec.base_norm());
    if (measured > radius * (1.0 + 1e-9)) {
        std::ostringstream os;
        os.precision(17);
        os << "duality_gap: direction infeasible, " << spec.base_norm().str() << " norm " << measured
           << " exceeds radius " << radius;
        throw DomainError(os.str());
    }
    return inner(g, d) + dual_norm(g, spec);
}

NsCoefficients parse_ns_coefficients(const std::string& name) {
    if (name == "quintic") return kNsQuintic;
    if (name == "cubic") return kNsCubic;
    if (name == "muon") return kNsMuon;
    throw DomainError("unknown Newton-Schulz preset '" + name + "' (quintic, cubic, muon)");
}

NewtonSchulzResult newton_schulz(const Matrix& g, int iters, NsCoefficients k) {
    if (iters < 1) throw DomainError("newton_schulz: iters must be >= 1");
    const double fro = frobenius_norm(g);
    if (fro == 0.0) return {Matrix(g.rows(), g.cols()), true};

    Matrix x = (1.0 / fro) * g;
    // Work with the smaller Gram matrix.
    const bool wide = x.rows() <= x.cols();
    for (int it = 0; it < iters; ++it) {
        const Matrix a = wide ? matmul_nt(x, x) : matmul_tn(x, x);
        Matrix poly = k.b * a;
        if (k.c != 0.0) poly += k.c * matmul(a, a);
        Matrix next = wide ? matmul(poly, x) : matmul(x, poly);
        next += k.a * x;
        x = std::move(next);
    }
    return {std::move(x), false};
}

Matrix newton_schulz_sign(const Matrix& g, int iters, NsCoefficients coeffs) {
    return newton_schulz(g, iters, coeffs).x;
}

Matrix matrix_sign_svd(const Matrix& g) {
    Matrix out(g.rows(), g.cols());
    const double top = max_abs(g.span());
    if (top == 0.0) return out;
    const SvdResult f = svd(g);
    const double cutoff = f.s[0] * 1e-12 * static_cast<double>(std::max(g.rows(), g.cols()));
    for (std::size_t k = 0; k < f.s.size(); ++k) {
        if (f.s[k] <= cutoff) continue;
        for (std::size_t r = 0; r < g.rows(); ++r) {
            const double u = f.u(r, k);
            auto row = out.row(r);
            for (std::size_t c = 0; c < g.cols(); ++c) row[c] += u * f.v(c, k);
        }
    }
    return out;
}

RoleRule role_rule(const ParamRole& role, const GeometrySpec& base, bool embedding_sign) {
    base.validate();
    auto scaled = [&](const GeometrySpec& g) {
        GeometrySpec m = g;
        m.mean = true;
        return RoleRule{g, moga_scale(m, role.d_in, role.d_out)};
    };
    switch (role.role) {
        case Role::Embedding:
        case Role::Unembedding:
            if (!embedding_sign && base.family == Family::ColNorm) {
                return {GeometrySpec::colnorm(base.exponent, base.mean),
                        std::pow(static_cast<double>(role.d_out), inv_exponent(base.exponent))};
            }
            return {GeometrySpec::sign(), 1.0};
        case Role::Bias:
        case Role::LayerNormWeight:
        case Role::LayerNormBias:
            return {GeometrySpec::sign(), 1.0};
        case Role::HiddenWeight:
        case Role::AttentionQKV:
        case Role::AttentionOut:
            return scaled(base);
        case Role::OutputWeight:
            if (base.family == Family::RowNorm) {
                return {base, std::pow(static_cast<double>(role.d_in), -inv_exponent(base.exponent))};
            }
            return scaled(base);
    }
    throw UnsupportedError("role_rule: unknown role");
}

double attention_logit_scale(const GeometrySpec& geometry, std::size_t d_v) {
    geometry.validate();
    if (d_v == 0) throw DomainError("attention_logit_scale: d_v must be >= 1");
    const double dv = static_cast<double>(d_v);
    switch (geometry.family) {
        case Family::RowNorm:
        case Family::Sign:
            return 1.0 / dv;
        case Family::ColNorm:
            return std::pow(dv, -std::max(1.0, 2.0 * inv_exponent(geometry.exponent)));
        case Family::Spectral:
            throw UnsupportedError("attention_logit_scale: no rule for the spectral geometry");
    }
    throw UnsupportedError("attention_logit_scale: unknown family");
}

}  // namespace opnorm
