#include "smib/swing_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace smib {

StateDeriv swing_rhs(const State& state, const SwingParams& params, double p1) {
    const double electrical = params.b12 * params.v1 * params.v2 * std::sin(state.delta);
    return {state.omega, (p1 - params.d * state.omega - electrical) / params.m};
}

State equilibrium(const SwingParams& params, double p1) {
    const double pmax = params.pull_out_power();
    if (std::abs(p1) > pmax) {
        throw NoEquilibriumError("no equilibrium: |p1| = " + std::to_string(std::abs(p1)) +
                                 " exceeds pull-out power " + std::to_string(pmax));
    }
    return {std::asin(p1 / pmax), 0.0};
}

double energy(const State& state, const SwingParams& params, double p1) {
    return 0.5 * params.m * state.omega * state.omega - p1 * state.delta -
           params.b12 * params.v1 * params.v2 * std::cos(state.delta);
}

namespace {

// Dormand-Prince 4(5) tableau (the ode45 pair).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 5th-minus-4th order error weights (b_i - b*_i).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Vec2 {
    double x, y;
};

Vec2 to_vec(const State& s) { return {s.delta, s.omega}; }
Vec2 to_vec(const StateDeriv& s) { return {s.ddelta, s.domega}; }

Vec2 axpy(const Vec2& y0, double h, std::initializer_list<std::pair<double, Vec2>> terms) {
    Vec2 out = y0;
    for (const auto& [coef, k] : terms) {
        out.x += h * coef * k.x;
        out.y += h * coef * k.y;
    }
    return out;
}

// Cubic Hermite interpolation on [t0, t0+h] from endpoint values and slopes.
double hermite(double y0, double f0, double y1, double f1, double h, double theta) {
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + theta) * h * f0 +
           (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * f1;
}

}  // namespace

Trajectory integrate(const SwingParams& params, double p1, const State& init,
                     double t_end, double output_step, double rel_tol, double abs_tol) {
    if (!params.valid()) throw std::invalid_argument("invalid swing parameters");
    if (t_end <= 0.0) throw std::invalid_argument("t_end must be positive");
    if (output_step <= 0.0) throw std::invalid_argument("output_step must be positive");
    const double steps_real = t_end / output_step;
    const long n_steps = std::lround(steps_real);
    if (n_steps < 1 || std::abs(steps_real - static_cast<double>(n_steps)) > 1e-9 * steps_real) {
        throw std::invalid_argument("output_step must divide t_end");
    }

    Trajectory traj;
    traj.p1 = p1;
    traj.times.reserve(n_steps + 1);
    traj.states.reserve(n_steps + 1);
    for (long i = 0; i <= n_steps; ++i) {
        traj.times.push_back(std::min(static_cast<double>(i) * output_step, t_end));
    }
    traj.times.back() = t_end;

    auto rhs = [&](const Vec2& y) -> Vec2 {
        return to_vec(swing_rhs({y.x, y.y}, params, p1));
    };

    double t = 0.0;
    Vec2 y = to_vec(init);
    Vec2 k1 = rhs(y);  // FSAL
    // Cap the step at the output interval: the cubic Hermite dense output is
    // only as accurate as h^4, and output-grid accuracy is part of the contract.
    const double h_max = output_step;
    double h = std::min({0.01, h_max, t_end});
    const double h_min = 1e-14 * t_end;

    traj.states.push_back(init);
    std::size_t next_out = 1;

    while (t < t_end && next_out < traj.times.size()) {
        h = std::min(h, t_end - t);

        const Vec2 y2 = axpy(y, h, {{a21, k1}});
        const Vec2 k2 = rhs(y2);
        const Vec2 y3 = axpy(y, h, {{a31, k1}, {a32, k2}});
        const Vec2 k3 = rhs(y3);
        const Vec2 y4 = axpy(y, h, {{a41, k1}, {a42, k2}, {a43, k3}});
        const Vec2 k4 = rhs(y4);
        const Vec2 y5 = axpy(y, h, {{a51, k1}, {a52, k2}, {a53, k3}, {a54, k4}});
        const Vec2 k5 = rhs(y5);
        const Vec2 y6 = axpy(y, h, {{a61, k1}, {a62, k2}, {a63, k3}, {a64, k4}, {a65, k5}});
        const Vec2 k6 = rhs(y6);
        const Vec2 y_new = axpy(y, h, {{b1, k1}, {b3, k3}, {b4, k4}, {b5, k5}, {b6, k6}});
        const Vec2 k7 = rhs(y_new);

        const Vec2 err = {h * (e1 * k1.x + e3 * k3.x + e4 * k4.x + e5 * k5.x + e6 * k6.x + e7 * k7.x),
                          h * (e1 * k1.y + e3 * k3.y + e4 * k4.y + e5 * k5.y + e6 * k6.y + e7 * k7.y)};
        const double sc_x = abs_tol + rel_tol * std::max(std::abs(y.x), std::abs(y_new.x));
        const double sc_y = abs_tol + rel_tol * std::max(std::abs(y.y), std::abs(y_new.y));
        const double err_norm = std::sqrt(0.5 * ((err.x / sc_x) * (err.x / sc_x) +
                                                 (err.y / sc_y) * (err.y / sc_y)));

        if (!std::isfinite(err_norm) || !std::isfinite(y_new.x) || !std::isfinite(y_new.y)) {
            throw IntegrationError("integration blew up (non-finite state)", t);
        }

        if (err_norm <= 1.0) {
            // Accepted step: emit all output points inside (t, t+h].
            while (next_out < traj.times.size() && traj.times[next_out] <= t + h + 1e-14) {
                const double theta = std::clamp((traj.times[next_out] - t) / h, 0.0, 1.0);
                traj.states.push_back({hermite(y.x, k1.x, y_new.x, k7.x, h, theta),
                                       hermite(y.y, k1.y, y_new.y, k7.y, h, theta)});
                ++next_out;
            }
            t += h;
            y = y_new;
            k1 = k7;
        }

        double factor = err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
        h = std::min(h * std::clamp(factor, 0.2, 5.0), h_max);
        if (h < h_min) {
            throw IntegrationError("step-size underflow", t);
        }
    }

    return traj;
}

}  // namespace smib
