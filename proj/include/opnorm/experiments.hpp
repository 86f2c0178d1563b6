#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "opnorm/geometry.hpp"
#include "opnorm/network.hpp"
#include "opnorm/norms.hpp"
#include "opnorm/optimizer.hpp"

namespace opnorm {

// ---------------------------------------------------------------- fitting

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS of the log-space residuals
    std::size_t points = 0;
};

/// Least squares of log y on log x. With four or more points the smallest x
/// is dropped first. Returns NaN slope when fewer than two points remain.
LogLogFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys);

// ---------------------------------------------------------------- width sweeps

struct SweepConfig {
    std::vector<std::size_t> widths{16, 32, 64, 128, 256};
    std::size_t depth = 3;
    std::size_t input_dim = 8;
    double C = 2.0;
    double p = 2.0;
    double q = 2.0;
    int n_dirs = 8;
    /// Random parameter points per width; two structured points are added.
    int n_draws = 4;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SweepRecord {
    std::size_t width = 0;
    int n_dirs = 0;  // directions evaluated at this width
    double max_dir_derivative = 0.0;
    double max_dir_hessian = 0.0;
    double probe_value = 0.0;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    LogLogFit fit;  // of the swept quantity against width
};

/// max |∇f[Δ]| over unit-block-norm directions at points inside the C-ball.
/// probe_value is the derivative along the gradient-aligned direction.
SweepResult lipschitz_sweep(const SweepConfig& cfg);
/// max |∇²f[Δ, Δ]| including layerwise rank-one directions. probe_value is
/// quadratic_probe at the hidden-layer geometry.
SweepResult smoothness_sweep(const SweepConfig& cfg);

/// Sweep CSV: width,n_dirs,<quantity>,probe_value,slope_so_far.
void write_sweep_csv(std::ostream& out, const SweepResult& result, bool hessian);

// ---------------------------------------------------------------- probes

/// With x = 1 ∈ ℝ^w and Δ = c·e₁xᵀ scaled to unit norm under `spec`,
/// returns ‖(Δx)⊙(Δx)‖_{(2,mean)}.
double quadratic_probe(std::size_t width, const OperatorNormSpec& spec);
/// Same, with the geometry's mean-normalized operator norm.
double quadratic_probe(std::size_t width, const GeometrySpec& geometry);

/// D ∈ ℝ^{d×d} with first column d^{-1/3}: returns its (3,mean)→∞ and
/// (2,mean)→(2,mean) norms, expected (1, d^{1/6}).
std::pair<double, double> counterexample_check(std::size_t d);

struct AttentionRow {
    std::size_t d_v = 0;
    double max_abs_logit = 0.0;
    double scale = 0.0;
    double scaled_logit = 0.0;
};

struct AttentionResult {
    std::vector<AttentionRow> rows;
    LogLogFit fit;  // scaled_logit against d_v
};

/// Random and extremal q, k with unit geometry norm (ℓ∞ for row and sign,
/// (q,mean) for column geometry); reports max |qᵀk| times the logit scale.
AttentionResult attention_probe(const std::vector<std::size_t>& d_v_list, const GeometrySpec& geometry,
                                int samples = 256, std::uint64_t seed = 1);

// ---------------------------------------------------------------- LR transfer

struct TransferConfig {
    std::vector<std::size_t> widths{64, 256, 1024};
    std::vector<double> lr_grid;  // log-spaced, >= 5 points
    int steps = 50;
    OptimizerConfig optimizer;    // lr_max and total_steps are set per cell
    std::size_t depth = 3;
    std::size_t input_dim = 16;
    std::size_t teacher_width = 32;
    std::size_t samples = 512;
    double C = 2.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// lr_max · 2^k for k = 0 .. n-1, starting at `lo`.
std::vector<double> log2_grid(double lo, int n);

struct TransferCell {
    std::size_t width = 0;
    double lr = 0.0;
    double final_loss = 0.0;
    bool diverged = false;
};

struct TransferResult {
    std::vector<TransferCell> cells;  // width-major, lr-minor
    std::vector<int> argmin;          // per width: grid index of the best final loss
    double initial_loss = 0.0;        // loss of the width-independent teacher data at lr = 0
    /// Widths where some lr at or below half the optimum diverged.
    std::vector<std::size_t> unstable_below_optimum;
};

inline constexpr double kDivergenceLoss = 1e3;

/// Teacher-student regression data: inputs on the radius-C sphere, targets
/// from a frozen random teacher network.
Batch teacher_data(const TransferConfig& cfg);
/// Gaussian student weights rescaled so every layer term of the block norm
/// is C/2 under the optimizer's geometry; zero biases.
ModelParams student_init(const TransferConfig& cfg, std::size_t width);
/// Final full-batch loss of a student trained for cfg.steps at one lr.
TransferCell train_cell(const TransferConfig& cfg, const Batch& data, std::size_t width, double lr);
TransferResult lr_transfer(const TransferConfig& cfg);
/// width,lr,final_loss,diverged
void write_transfer_csv(std::ostream& out, const TransferResult& result);

/// Spread (max - min) of per-width argmin indices.
int argmin_spread(const TransferResult& r);
/// argmin at the first width minus argmin at the last width.
int argmin_shift(const TransferResult& r);

// ---------------------------------------------------------------- verification suites

struct DualityReport {
    int trials = 0;
    double worst_gap = 0.0;                 // max gap of the closed-form direction
    double best_random_advantage = -1e300;  // max of (optimal value - random value); must be <= 1e-9
    double worst_feasibility_error = 0.0;   // | ‖D‖_base - 1 |
    nlohmann::json to_json() const;
};

/// Random gradients for the four families (mean and plain): checks the gap of
/// descent_direction and that random feasible directions never beat it.
DualityReport duality_suite(int trials, int random_dirs, std::uint64_t seed);

struct DerivativeReport {
    int nets = 0;
    double max_grad_rel_err = 0.0;
    double max_hessian_rel_err = 0.0;
    double max_symmetry_err = 0.0;
    double max_adjoint_err = 0.0;  // |⟨grad, Δ⟩ - dir_derivative| / (|·| + 1e-8)
    nlohmann::json to_json() const;
};

/// Random nets with w ∈ {4, 8, 16}, K ∈ {2, 3, 4}: gradient vs central
/// differences (h = 1e-5), Hessian vs the cross stencil (t = s = 1e-4),
/// Hessian symmetry, and adjoint consistency. The finite differences
/// evaluate the loss in extended precision.
DerivativeReport derivative_suite(int nets, std::uint64_t seed);

struct NewtonSchulzReport {
    int matrices = 0;
    double max_error = 0.0;  // ‖NS(G) - UVᵀ‖_F / √min(m, n)
    double max_condition = 0.0;
    nlohmann::json to_json() const;
};

/// n×n matrices U diag(s) Vᵀ with log-uniform s in [1, cond_max].
NewtonSchulzReport newton_schulz_suite(int matrices, std::size_t n, double cond_max, int iters,
                                       NsCoefficients coeffs, std::uint64_t seed);

/// Matrix with orthonormal columns (rows >= cols) from QR of a Gaussian.
Matrix random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace opnorm
