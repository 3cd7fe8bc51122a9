#pragma once

#include <string>
#include <utility>
#include <vector>

#include "smib/dataset.hpp"
#include "smib/mlp.hpp"
#include "smib/swing_dynamics.hpp"

namespace smib {

enum class OutputMode {
    SingleDelta,  ///< one output δ; ω obtained by differentiating the network
    DeltaOmega,   ///< two outputs (δ, ω) tied together by the f_ω residual
};

/// Network plus physics: the surrogate and everything needed to evaluate the
/// swing-equation residual on it. In identification mode m and/or d are
/// trainable alongside the network weights.
struct PinnModel {
    MlpParams mlp;
    SwingParams params;
    bool train_m = false;
    bool train_d = false;
    Normalization norm;
    OutputMode mode = OutputMode::SingleDelta;

    bool inside_domain(double t, double p1) const {
        return t >= 0.0 && t <= norm.t_end && p1 >= norm.p_min && p1 <= norm.p_max;
    }
};

struct LossReport {
    double mse_u = 0.0;
    double mse_f = 0.0;
    double total = 0.0;
};

/// Loss gradient split into the network block (canonical flat order) and the
/// trainable physics block.
struct LossGradient {
    std::vector<double> net;
    double dm = 0.0;
    double dd = 0.0;
    LossReport report;
};

class PinnError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Swing-equation residual m·u_tt + d·u_t + b12·v1·v2·sin(u) − p1 on the
/// network output. Single-output mode only.
double residual(const PinnModel& model, double t, double p1);

/// Two-output residual pair (f_ω, f_δ) with f_ω = δ̇ − ω and
/// f_δ = m·ω̇ + d·ω + b12·v1·v2·sin(δ) − p1.
std::pair<double, double> residual_two_output(const PinnModel& model, double t, double p1);

/// MSE_u + MSE_f. Data term penalizes the δ output only; in two-output mode
/// the residual term averages |f_ω|² + |f_δ|².
LossReport loss(const PinnModel& model, const std::vector<TrainingPoint>& training,
                const std::vector<CollocationPoint>& collocation);

/// Analytic gradient of the loss over network parameters and, always reported,
/// over m and d (consumers ignore the physics block when m, d are fixed).
LossGradient loss_gradient(const PinnModel& model, const std::vector<TrainingPoint>& training,
                           const std::vector<CollocationPoint>& collocation);

double predict_delta(const PinnModel& model, double t, double p1);
double predict_omega(const PinnModel& model, double t, double p1);

/// JSON checkpoint round-trip: layer sizes, weights, biases, normalization,
/// physics parameters, trainable flags, output mode.
void save_checkpoint(const PinnModel& model, const std::string& path);
PinnModel load_checkpoint(const std::string& path);

}  // namespace smib
