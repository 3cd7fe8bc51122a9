#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smib/swing_dynamics.hpp"

namespace smib {

/// Protocol for one trajectory-grid dataset: power range, time horizon,
/// trajectory count, shared initial state, RNG seed.
struct DatasetSpec {
    double p_min = 0.08;
    double p_max = 0.18;
    double t_end = 20.0;
    double output_step = 0.1;
    int n_trajectories = 100;
    State init{0.1, 0.1};
    std::uint64_t seed = 0;

    bool valid() const {
        return p_min < p_max && t_end > 0.0 && output_step > 0.0 && n_trajectories >= 1;
    }
};

/// Labeled data point (t, P1) -> δ drawn from the ground-truth grid.
struct TrainingPoint {
    double t = 0.0;
    double p1 = 0.0;
    double delta = 0.0;
};

/// Unlabeled residual point (t, P1).
struct CollocationPoint {
    double t = 0.0;
    double p1 = 0.0;
};

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integrates n_trajectories trajectories at P1 values evenly spaced over
/// [p_min, p_max], all from the shared initial state.
std::vector<Trajectory> generate_grid(const DatasetSpec& spec, const SwingParams& params);

/// Draws n_u distinct (t, P1, δ) triples uniformly without replacement from the
/// grid samples. Deterministic given the seed.
std::vector<TrainingPoint> sample_training_points(const std::vector<Trajectory>& grid,
                                                  std::size_t n_u, std::uint64_t seed);

/// Latin-hypercube sample of n_f points over [0, t_end] × [p_min, p_max]:
/// each axis is split into n_f equal strata holding exactly one point.
std::vector<CollocationPoint> sample_collocation_points(std::size_t n_f, double t_end,
                                                        double p_min, double p_max,
                                                        std::uint64_t seed);

/// CSV persistence, header `p1,t,delta,omega`, shortest round-trip float format.
void save_csv(const std::vector<Trajectory>& trajectories, const std::string& path);
std::vector<Trajectory> load_csv(const std::string& path);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

std::size_t total_samples(const std::vector<Trajectory>& grid);

}  // namespace smib
