#include "smib/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "smib/dataset.hpp"

namespace smib {

namespace {

constexpr double kDivergenceLimit = 1e6;
constexpr double kMinInertia = 1e-4;

struct Objective {
    PinnModel model;  // scratch copy, overwritten on every evaluation
    const std::vector<TrainingPoint>& training;
    const std::vector<CollocationPoint>& collocation;
    bool identify;
    std::size_t n_net;

    std::size_t dim() const { return n_net + (identify ? 2 : 0); }

    void load(std::span<const double> x) {
        unflatten(x.subspan(0, n_net), model.mlp);
        if (identify) {
            model.params.m = x[n_net];
            model.params.d = x[n_net + 1];
        }
    }

    LossReport eval(std::span<const double> x, std::vector<double>& grad) {
        load(x);
        LossGradient g = loss_gradient(model, training, collocation);
        grad.assign(g.net.begin(), g.net.end());
        if (identify) {
            grad.push_back(g.dm);
            grad.push_back(g.dd);
        }
        return g.report;
    }
};

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void project(std::vector<double>& x, const Objective& obj) {
    if (obj.identify) x[obj.n_net] = std::max(x[obj.n_net], kMinInertia);
}

struct BestIterate {
    std::vector<double> x;
    LossReport loss;

    void consider(const std::vector<double>& cand, const LossReport& report) {
        if (std::isfinite(report.total) && report.total < loss.total) {
            x = cand;
            loss = report;
        }
    }
};

// Limited-memory BFGS with a Wolfe backtracking line search. Returns the number
// of iterations consumed; best tracks the lowest-loss iterate seen.
int lbfgs_refine(Objective& obj, BestIterate& best, const TrainConfig& config,
                 std::vector<HistoryRow>& history, int iter_offset) {
    constexpr std::size_t kMemory = 10;
    constexpr double c1 = 1e-4, c2 = 0.9;

    std::vector<double> x = best.x;
    std::vector<double> grad;
    LossReport report = obj.eval(x, grad);

    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho_hist;

    int used = 0;
    for (; used < config.refine_iterations; ++used) {
        if (inf_norm(grad) < config.grad_tol) break;

        // Two-loop recursion.
        std::vector<double> q = grad;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t i = s_hist.size(); i-- > 0;) {
            alpha[i] = rho_hist[i] * dot(s_hist[i], q);
            for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alpha[i] * y_hist[i][j];
        }
        if (!s_hist.empty()) {
            const double gamma = dot(s_hist.back(), y_hist.back()) /
                                 std::max(dot(y_hist.back(), y_hist.back()), 1e-300);
            for (double& v : q) v *= gamma;
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * dot(y_hist[i], q);
            for (std::size_t j = 0; j < q.size(); ++j) q[j] += (alpha[i] - beta) * s_hist[i][j];
        }
        std::vector<double> dir(q.size());
        for (std::size_t j = 0; j < q.size(); ++j) dir[j] = -q[j];

        double g_dot_d = dot(grad, dir);
        if (g_dot_d >= 0.0) {  // not a descent direction; restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t j = 0; j < dir.size(); ++j) dir[j] = -grad[j];
            g_dot_d = dot(grad, dir);
            if (g_dot_d >= 0.0) break;
        }

        // Backtracking-and-extension line search for the strong Wolfe conditions.
        double step = 1.0;
        std::vector<double> x_new(x.size()), grad_new;
        LossReport report_new;
        bool accepted = false;
        double armijo_step = 0.0;
        for (int trial = 0; trial < 30; ++trial) {
            for (std::size_t j = 0; j < x.size(); ++j) x_new[j] = x[j] + step * dir[j];
            project(x_new, obj);
            report_new = obj.eval(x_new, grad_new);
            const bool armijo = std::isfinite(report_new.total) &&
                                report_new.total <= report.total + c1 * step * g_dot_d;
            if (armijo) {
                armijo_step = step;
                if (std::abs(dot(grad_new, dir)) <= c2 * std::abs(g_dot_d)) {
                    accepted = true;
                    break;
                }
                step *= 2.1;
                if (step > 1e3) break;
            } else {
                step *= 0.5;
                if (step < 1e-12) break;
            }
        }
        if (!accepted) {
            if (armijo_step <= 0.0) break;  // no progress possible along this direction
            step = armijo_step;
            for (std::size_t j = 0; j < x.size(); ++j) x_new[j] = x[j] + step * dir[j];
            project(x_new, obj);
            report_new = obj.eval(x_new, grad_new);
        }

        std::vector<double> s(x.size()), y(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) {
            s[j] = x_new[j] - x[j];
            y[j] = grad_new[j] - grad[j];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12) {
            if (s_hist.size() == kMemory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
        }

        const double improvement = report.total - report_new.total;
        x = x_new;
        grad = grad_new;
        report = report_new;
        best.consider(x, report);
        if (config.log_every > 0 && (used + 1) % config.log_every == 0) {
            obj.load(x);
            history.push_back({iter_offset + used + 1, report, obj.model.params.m,
                               obj.model.params.d});
        }
        if (improvement < config.plateau_tol) break;
    }
    return used;
}

std::pair<PinnModel, TrainReport> run_training(Objective obj, std::vector<double> x0,
                                               const TrainConfig& config) {
    const auto t_start = std::chrono::steady_clock::now();

    TrainReport report;
    std::vector<double> x = std::move(x0);
    project(x, obj);
    std::vector<double> grad;
    LossReport current = obj.eval(x, grad);
    report.initial_loss = current;

    BestIterate best{x, current};
    report.history.push_back({0, current, obj.model.params.m, obj.model.params.d});

    // Adam state.
    std::vector<double> m1(x.size(), 0.0), m2(x.size(), 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    double window_best = current.total;
    int iterations = 0;
    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        if (!std::isfinite(current.total) || current.total > kDivergenceLimit) {
            report.aborted = true;
            report.abort_reason = "loss diverged at iteration " + std::to_string(iter - 1);
            break;
        }
        if (inf_norm(grad) < config.grad_tol) break;

        const int decay_steps =
            config.lr_decay_every > 0 ? (iter - 1) / config.lr_decay_every : 0;
        const double lr = config.learning_rate * std::pow(config.lr_decay, decay_steps);
        const double bc1 = 1.0 - std::pow(beta1, iter);
        const double bc2 = 1.0 - std::pow(beta2, iter);
        for (std::size_t j = 0; j < x.size(); ++j) {
            m1[j] = beta1 * m1[j] + (1.0 - beta1) * grad[j];
            m2[j] = beta2 * m2[j] + (1.0 - beta2) * grad[j] * grad[j];
            x[j] -= lr * (m1[j] / bc1) / (std::sqrt(m2[j] / bc2) + eps);
        }
        project(x, obj);

        current = obj.eval(x, grad);
        iterations = iter;
        best.consider(x, current);

        if (config.log_every > 0 && iter % config.log_every == 0) {
            report.history.push_back({iter, current, obj.model.params.m, obj.model.params.d});
        }
        if (config.plateau_window > 0 && iter % config.plateau_window == 0) {
            if (window_best - best.loss.total < config.plateau_tol) break;
            window_best = best.loss.total;
        }
    }

    if (config.refine && !report.aborted) {
        iterations += lbfgs_refine(obj, best, config, report.history, iterations);
    }

    obj.load(best.x);
    report.final_loss = best.loss;
    report.iterations = iterations;
    report.identified_m = obj.model.params.m;
    report.identified_d = obj.model.params.d;
    report.history.push_back({iterations, best.loss, obj.model.params.m, obj.model.params.d});
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {obj.model, report};
}

}  // namespace

std::pair<PinnModel, TrainReport> train_forward(const std::vector<TrainingPoint>& training,
                                                const std::vector<CollocationPoint>& collocation,
                                                const std::vector<int>& layer_sizes,
                                                const SwingParams& params,
                                                const Normalization& norm,
                                                const TrainConfig& config) {
    if (!config.valid()) throw TrainError("invalid training config");
    if (config.mode != TrainMode::Forward) throw TrainError("config mode must be forward");
    if (!params.valid()) throw TrainError("invalid swing parameters");

    PinnModel model;
    model.mlp = init_params(layer_sizes, config.seed);
    model.params = params;
    model.norm = norm;
    model.mode = layer_sizes.back() == 2 ? OutputMode::DeltaOmega : OutputMode::SingleDelta;

    std::vector<double> x0 = flatten(model.mlp);
    Objective obj{std::move(model), training, collocation, false, 0};
    obj.n_net = x0.size();
    return run_training(std::move(obj), std::move(x0), config);
}

std::pair<PinnModel, TrainReport> train_identify(const std::vector<TrainingPoint>& training,
                                                 const std::vector<CollocationPoint>& collocation,
                                                 const std::vector<int>& layer_sizes,
                                                 const SwingParams& known,
                                                 double init_m, double init_d,
                                                 const Normalization& norm,
                                                 const TrainConfig& config,
                                                 const MlpParams* warm_start) {
    if (!config.valid()) throw TrainError("invalid training config");
    if (config.mode != TrainMode::Identify) throw TrainError("config mode must be identify");
    if (warm_start != nullptr && warm_start->layer_sizes != layer_sizes)
        throw TrainError("warm start network does not match layer_sizes");

    PinnModel model;
    model.mlp = warm_start != nullptr ? *warm_start : init_params(layer_sizes, config.seed);
    model.params = known;
    model.params.m = init_m;
    model.params.d = init_d;
    model.train_m = true;
    model.train_d = true;
    model.norm = norm;
    model.mode = OutputMode::SingleDelta;

    std::vector<double> x0 = flatten(model.mlp);
    x0.push_back(init_m);
    x0.push_back(init_d);
    Objective obj{std::move(model), training, collocation, true, 0};
    obj.n_net = x0.size() - 2;
    return run_training(std::move(obj), std::move(x0), config);
}

void checkpoint(const PinnModel& model, const std::string& path) {
    save_checkpoint(model, path);
}

PinnModel restore(const std::string& path) { return load_checkpoint(path); }

void save_history(const TrainReport& report, bool with_physics, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TrainError("cannot open " + path + " for writing");
    out << (with_physics ? "iteration,mse_u,mse_f,total,m,d" : "iteration,mse_u,mse_f,total")
        << '\n';
    for (const auto& row : report.history) {
        out << row.iteration << ',' << format_double(row.loss.mse_u) << ','
            << format_double(row.loss.mse_f) << ',' << format_double(row.loss.total);
        if (with_physics) {
            out << ',' << format_double(row.m) << ',' << format_double(row.d);
        }
        out << '\n';
    }
}

}  // namespace smib
