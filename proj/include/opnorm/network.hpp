#pragma once

// K-layer scalar-output MLP with tanh activations and log-cosh loss:
//
//   y_0 = x,  y_i = tanh(W_i y_{i-1} + b_i),  f = log cosh(y_K - target).

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "opnorm/linalg.hpp"
#include "opnorm/params.hpp"

namespace opnorm {

// Derivative bounds of tanh and log-cosh.
inline constexpr double kActivationLipschitz = 1.0;            // sup |tanh'|
inline const double kActivationSmoothness = 4.0 / (3.0 * std::sqrt(3.0));  // sup |tanh''|
inline constexpr double kLossLipschitz = 1.0;                  // sup |tanh|
inline constexpr double kLossSmoothness = 1.0;                 // sup sech²
/// Where |tanh''| peaks: atanh(1/√3).
inline const double kTanhCurvaturePeak = std::atanh(1.0 / std::sqrt(3.0));

inline constexpr std::uint32_t kActivationTanh = 1;

double activation(double z);
double activation_d1(double z);
double activation_d2(double z);
double loss_value(double residual);
double loss_d1(double residual);
double loss_d2(double residual);

struct ForwardTrace {
    Vector x;
    std::vector<Vector> z;       // pre-activations, one per layer
    std::vector<Vector> y;       // activations, one per layer
    std::vector<Vector> sigma1;  // tanh'(z)
    std::vector<Vector> sigma2;  // tanh''(z)

    double output() const { return y.back()[0]; }
};

ForwardTrace forward(const ModelParams& params, const Vector& x);

/// Samples stored as rows of `inputs` (N x d).
struct Batch {
    Matrix inputs;
    std::vector<double> targets;

    std::size_t size() const noexcept { return targets.size(); }
};

struct LossGrad {
    double loss = 0.0;
    BlockSet grad;
};

/// Mean log-cosh loss over the batch and its exact gradient.
LossGrad loss_and_grad(const ModelParams& params, const Batch& batch);
/// Network outputs for every row of `inputs`.
std::vector<double> predict(const ModelParams& params, const Matrix& inputs);
double mean_loss(const ModelParams& params, const Batch& batch);

/// ∇f(Θ)[d] by one forward-mode sweep.
double dir_derivative(const ModelParams& params, const Vector& x, const Perturbation& d,
                      double target = 0.0);

/// ∇²f(Θ)[d1, d2], carrying two first-order states and one second-order state.
double dir_hessian(const ModelParams& params, const Vector& x, const Perturbation& d1,
                   const Perturbation& d2, double target = 0.0);

/// Both quantities for d1 = d2 = d in one sweep.
struct DirectionalDerivs {
    double first = 0.0;
    double second = 0.0;
};
DirectionalDerivs dir_derivs(const ModelParams& params, const Vector& x, const Perturbation& d,
                             double target = 0.0);

/// Rescales every block whose block-norm term exceeds C down to C.
ModelParams project_to_ball(const ModelParams& params, double C, double p, double q);

/// Gaussian weights scaled so each weight term equals fill·C, biases uniform
/// in [-fill·C, fill·C], then projected onto the C-ball.
ModelParams init_in_ball(std::size_t depth, std::size_t width, std::size_t input_dim, double C,
                         double p, double q, Rng& rng, double fill = 0.5);

/// Binary layout: magic "OPNM", u32 version, u64 K, u64 w, u64 d,
/// u32 activation id, then W_1, b_1, ..., W_K, b_K as little-endian f64 in
/// row-major order.
void write_params(std::ostream& out, const ModelParams& params);
ModelParams read_params(std::istream& in);
nlohmann::json params_sidecar(const ModelParams& params);
/// Writes `path` and `path + ".json"`.
void save_params(const std::string& path, const ModelParams& params);
ModelParams load_params(const std::string& path);

}  // namespace opnorm
