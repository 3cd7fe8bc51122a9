#pragma once

#include <stdexcept>
#include <vector>

namespace smib {

/// Physical constants of the single-machine infinite-bus swing equation
///   m δ̈ + d δ̇ + b12 v1 v2 sin(δ) − p1 = 0
struct SwingParams {
    double m = 0.4;     ///< inertia constant (p.u. s²/rad)
    double d = 0.15;    ///< damping coefficient (p.u.)
    double b12 = 0.2;   ///< bus susceptance entry (p.u.)
    double v1 = 1.0;    ///< voltage magnitude, bus 1 (p.u.)
    double v2 = 1.0;    ///< voltage magnitude, bus 2 (p.u.)

    bool valid() const {
        return m > 0.0 && d >= 0.0 && b12 > 0.0 && v1 > 0.0 && v2 > 0.0;
    }

    /// Maximum electrical power transfer b12·v1·v2; no equilibrium beyond it.
    double pull_out_power() const { return b12 * v1 * v2; }
};

struct State {
    double delta = 0.0;  ///< rotor angle (rad)
    double omega = 0.0;  ///< angular frequency deviation (rad/s)
};

struct StateDeriv {
    double ddelta = 0.0;
    double domega = 0.0;
};

/// Time grid plus (δ, ω) samples for one mechanical power input.
struct Trajectory {
    double p1 = 0.0;
    std::vector<double> times;
    std::vector<State> states;

    std::size_t size() const { return times.size(); }
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double last_time)
        : std::runtime_error(what), last_time_(last_time) {}
    double last_time() const { return last_time_; }

private:
    double last_time_;
};

class NoEquilibriumError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Right-hand side of the swing equation as a first-order system:
/// (dδ/dt, dω/dt) = (ω, (p1 − d·ω − b12·v1·v2·sin(δ)) / m).
StateDeriv swing_rhs(const State& state, const SwingParams& params, double p1);

/// Stable fixed point (arcsin(p1 / pull_out_power), 0).
/// Throws NoEquilibriumError when |p1| exceeds the pull-out power.
State equilibrium(const SwingParams& params, double p1);

/// Energy functional ½·m·ω² − p1·δ − b12·v1·v2·cos(δ).
/// Constant along undamped trajectories, non-increasing along damped ones.
double energy(const State& state, const SwingParams& params, double p1);

/// Dormand–Prince 4(5) adaptive integration of the swing equation, sampled on
/// the uniform grid {0, output_step, ..., t_end} via cubic Hermite dense output.
/// Throws IntegrationError on step-size underflow, carrying the last valid time.
Trajectory integrate(const SwingParams& params, double p1, const State& init,
                     double t_end, double output_step,
                     double rel_tol = 1e-6, double abs_tol = 1e-8);

}  // namespace smib
