#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smib/pinn.hpp"

namespace smib {

enum class TrainMode { Forward, Identify };

struct TrainConfig {
    int max_iterations = 50000;
    double learning_rate = 1e-3;
    double lr_decay = 0.5;
    int lr_decay_every = 10000;
    std::uint64_t seed = 0;
    double grad_tol = 1e-8;          ///< stop when ‖grad‖_inf falls below
    double plateau_tol = 1e-12;      ///< stop when best loss improves less than this
    int plateau_window = 1000;       ///< ... over this many iterations
    TrainMode mode = TrainMode::Forward;
    bool refine = false;             ///< quasi-Newton refinement from the best iterate
    int refine_iterations = 2000;
    int log_every = 100;

    bool valid() const { return max_iterations >= 1 && learning_rate > 0.0; }
};

struct HistoryRow {
    int iteration = 0;
    LossReport loss;
    double m = 0.0;
    double d = 0.0;
};

struct TrainReport {
    std::vector<HistoryRow> history;
    LossReport initial_loss;
    LossReport final_loss;
    double wall_seconds = 0.0;
    int iterations = 0;
    double identified_m = 0.0;
    double identified_d = 0.0;
    bool aborted = false;
    std::string abort_reason;
};

class TrainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Full-batch adaptive-moment descent on the composite loss with fully known
/// physics; optional quasi-Newton refinement from the best iterate.
std::pair<PinnModel, TrainReport> train_forward(const std::vector<TrainingPoint>& training,
                                                const std::vector<CollocationPoint>& collocation,
                                                const std::vector<int>& layer_sizes,
                                                const SwingParams& params,
                                                const Normalization& norm,
                                                const TrainConfig& config);

/// Joint training of network parameters and (m, d) from δ observations.
/// b12, v1, v2 stay fixed at the supplied values; m is projected to ≥ 1e-4
/// after every step. An optional warm-start network replaces the seeded
/// initialization (it must match layer_sizes).
std::pair<PinnModel, TrainReport> train_identify(const std::vector<TrainingPoint>& training,
                                                 const std::vector<CollocationPoint>& collocation,
                                                 const std::vector<int>& layer_sizes,
                                                 const SwingParams& known,
                                                 double init_m, double init_d,
                                                 const Normalization& norm,
                                                 const TrainConfig& config,
                                                 const MlpParams* warm_start = nullptr);

/// Checkpoint wrappers (JSON format owned by the pinn module).
void checkpoint(const PinnModel& model, const std::string& path);
PinnModel restore(const std::string& path);

/// History CSV `iteration,mse_u,mse_f,total[,m,d]`.
void save_history(const TrainReport& report, bool with_physics, const std::string& path);

}  // namespace smib
