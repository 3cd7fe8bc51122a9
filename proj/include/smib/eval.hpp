#pragma once

#include <span>
#include <string>
#include <vector>

#include "smib/pinn.hpp"
#include "smib/swing_dynamics.hpp"

namespace smib {

struct TrajectoryError {
    double p1 = 0.0;
    double l2_delta = 0.0;
    double l2_omega = 0.0;
};

struct EvalReport {
    double pooled_l2_delta = 0.0;
    double pooled_l2_omega = 0.0;
    std::vector<TrajectoryError> per_trajectory;
    double best_p1 = 0.0;   ///< lowest δ error (ties broken by lowest P1)
    double worst_p1 = 0.0;  ///< highest δ error
    bool extrapolated = false;  ///< any query fell outside the training box
};

struct TimingReport {
    double integrator_full_s = 0.0;        ///< mean/median s per full-grid integration
    double surrogate_full_s = 0.0;         ///< s per full-grid surrogate evaluation
    double surrogate_instant_s = 0.0;      ///< s per single-instant surrogate query
    double integrator_instant_s = 0.0;     ///< s to integrate 0 -> single_instant
    double surrogate_instant_early_s = 0.0;  ///< single query at t = 0.1
    double surrogate_instant_late_s = 0.0;   ///< single query at t = t_end
    double speedup_full = 0.0;
    double speedup_instant = 0.0;
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// ‖pred − exact‖₂ / ‖exact‖₂. Throws on length mismatch or zero-norm exact.
double relative_l2(std::span<const double> pred, std::span<const double> exact);

/// Forward differences (δ(t+h) − δ(t))/h for all but the last point, backward
/// difference at the last point. Output length equals input length.
std::vector<double> recover_omega(std::span<const double> delta_series, double h);

/// Per-trajectory and pooled relative L2 for δ (direct prediction) and ω
/// (recovered by differencing the predicted δ, compared to integrator ω).
EvalReport evaluate_model(const PinnModel& model, const std::vector<Trajectory>& test_grid);

/// Integrator-versus-surrogate timing: full-grid solves over the given P1
/// samples and single-instant queries at t = single_instant. All integrator
/// runs use the standard output grid, so single_instant must be a multiple of
/// output_step. Median over `repetitions` measured runs after 3 warm-ups,
/// single-threaded.
TimingReport benchmark(const PinnModel& model, const SwingParams& params,
                       const std::vector<double>& p1_samples, const State& init,
                       double t_end, double output_step, double single_instant,
                       int repetitions = 10);

void save_eval_report(const EvalReport& report, const std::string& json_path);
void save_per_trajectory_csv(const EvalReport& report, const std::string& path);
void save_timing_report(const TimingReport& report, const std::string& json_path);

/// Plot-data CSV `t,delta_pred,delta_true,omega_pred,omega_true` for one trajectory.
void save_trajectory_comparison(const PinnModel& model, const Trajectory& truth,
                                const std::string& path);

}  // namespace smib
