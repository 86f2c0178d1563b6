#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "opnorm/geometry.hpp"
#include "opnorm/params.hpp"

namespace opnorm {

enum class Method { MogaRow, MogaCol, SignSgd, AdamW, Muon };

/// Muon width multiplier: sqrt(d_in/d_out), or sqrt(max(d_out, d_in)).
enum class MuonRule { AspectRatio, SqrtMax };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct OptimizerConfig {
    Method method = Method::MogaRow;
    double exponent = 2.0;  // p for MogaRow, q for MogaCol
    double lr_max = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double weight_decay = 0.0;
    double warmup_frac = 0.1;
    int total_steps = 100;
    int ns_iters = 10;
    NsCoefficients ns_coeffs = kNsQuintic;
    double adam_eps = 1e-8;
    /// Ablation: drop the width factor from every weight update.
    bool unscaled = false;
    MuonRule muon_rule = MuonRule::AspectRatio;

    /// AdamW gets weight_decay = 0.1; everything else keeps decay off.
    static OptimizerConfig defaults(Method method);

    void validate() const;
    /// Geometry of the weight blocks; Sign for SignSgd and AdamW.
    GeometrySpec geometry() const;
    /// (p, q) of the block norm that matches the geometry.
    std::pair<double, double> block_norm_exponents() const;
};

struct OptimizerState {
    BlockSet momentum;
    BlockSet second_moment;  // AdamW only
    int t = 0;
};

OptimizerState init_state(const BlockSet& params, const OptimizerConfig& config);

/// Linear warmup from 0 to lr_max over warmup_frac·total_steps, then cosine
/// decay to lr_max/10 at total_steps.
double lr_at(const OptimizerConfig& config, int t);

/// Roles of the weight blocks of an MLP: HiddenWeight for W_1..W_{K-1},
/// OutputWeight for W_K. Biases always take the Sign rule.
std::vector<ParamRole> mlp_roles(const BlockSet& params);

struct StepResult {
    BlockSet params;
    OptimizerState state;
    double lr = 0.0;
};

/// One step of the momentum steepest-descent rule:
///   M  ← β1 M + (1-β1) G
///   M̃ ← β2 M_prev + (1-β2) G
///   W  ← W - η·scale·dir(M̃),   b ← b - η·sign(M̃)
/// with η = lr_at(t+1) and optional decoupled decay Θ ← (1-ηλ)Θ first.
StepResult moga_step(const BlockSet& params, const BlockSet& grad, const OptimizerState& state,
                     const OptimizerConfig& config, const std::vector<ParamRole>& roles);
StepResult muon_step(const BlockSet& params, const BlockSet& grad, const OptimizerState& state,
                     const OptimizerConfig& config, const std::vector<ParamRole>& roles);
StepResult signsgd_step(const BlockSet& params, const BlockSet& grad, const OptimizerState& state,
                        const OptimizerConfig& config, const std::vector<ParamRole>& roles);
StepResult adamw_step(const BlockSet& params, const BlockSet& grad, const OptimizerState& state,
                      const OptimizerConfig& config, const std::vector<ParamRole>& roles);
/// Dispatches on config.method.
StepResult optimizer_step(const BlockSet& params, const BlockSet& grad, const OptimizerState& state,
                          const OptimizerConfig& config, const std::vector<ParamRole>& roles);

/// CSV trajectory: step, lr, loss, update_W<i>, update_b<i>, block_norm.
/// Weight updates are Frobenius norms, bias updates max-abs.
class TrajectoryLog {
  public:
    TrajectoryLog(std::ostream& out, std::size_t depth, double p, double q);
    void record(int step, double lr, double loss, const BlockSet& before, const BlockSet& after);

  private:
    std::ostream& out_;
    std::size_t depth_;
    double p_;
    double q_;
};

}  // namespace opnorm
