#include "smib/pinn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <thread>

#include "json.hpp"

namespace smib {

namespace {

double coupling(const SwingParams& p) { return p.b12 * p.v1 * p.v2; }

// Runs fn(chunk) over a fixed chunk decomposition. Chunk boundaries depend only
// on n_items, never on the thread count, so per-chunk accumulators can be
// reduced in chunk order for a thread-count-independent result.
void run_chunks(std::size_t n_chunks, const std::function<void(std::size_t)>& fn) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(hw, n_chunks));
    if (n_threads <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned i = 0; i < n_threads; ++i) {
        pool.emplace_back([&] {
            for (std::size_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) fn(c);
        });
    }
    for (auto& th : pool) th.join();
}

constexpr std::size_t kChunks = 64;

std::pair<std::size_t, std::size_t> chunk_range(std::size_t n_items, std::size_t chunk,
                                                std::size_t n_chunks) {
    const std::size_t lo = n_items * chunk / n_chunks;
    const std::size_t hi = n_items * (chunk + 1) / n_chunks;
    return {lo, hi};
}

}  // namespace

double residual(const PinnModel& model, double t, double p1) {
    if (model.mode != OutputMode::SingleDelta) {
        throw PinnError("residual requires single-output mode");
    }
    const auto v = forward_with_time_derivs(model.mlp, model.norm, t, p1);
    return model.params.m * v.u_tt[0] + model.params.d * v.u_t[0] +
           coupling(model.params) * std::sin(v.u[0]) - p1;
}

std::pair<double, double> residual_two_output(const PinnModel& model, double t, double p1) {
    if (model.mode != OutputMode::DeltaOmega) {
        throw PinnError("residual_two_output requires two-output mode");
    }
    const auto v = forward_with_time_derivs(model.mlp, model.norm, t, p1);
    const double f_omega = v.u_t[0] - v.u[1];
    const double f_delta = model.params.m * v.u_t[1] + model.params.d * v.u[1] +
                           coupling(model.params) * std::sin(v.u[0]) - p1;
    return {f_omega, f_delta};
}

LossReport loss(const PinnModel& model, const std::vector<TrainingPoint>& training,
                const std::vector<CollocationPoint>& collocation) {
    if (training.empty() || collocation.empty()) {
        throw PinnError("loss requires non-empty training and collocation sets");
    }
    const double k = coupling(model.params);
    const bool two = model.mode == OutputMode::DeltaOmega;

    std::vector<double> su(kChunks, 0.0), sf(kChunks, 0.0);
    run_chunks(kChunks, [&](std::size_t c) {
        auto [ulo, uhi] = chunk_range(training.size(), c, kChunks);
        for (std::size_t i = ulo; i < uhi; ++i) {
            const auto u = forward(model.mlp, model.norm, training[i].t, training[i].p1);
            const double e = u[0] - training[i].delta;
            su[c] += e * e;
        }
        auto [flo, fhi] = chunk_range(collocation.size(), c, kChunks);
        for (std::size_t i = flo; i < fhi; ++i) {
            const auto v = forward_with_time_derivs(model.mlp, model.norm, collocation[i].t,
                                                    collocation[i].p1);
            if (two) {
                const double f_omega = v.u_t[0] - v.u[1];
                const double f_delta = model.params.m * v.u_t[1] + model.params.d * v.u[1] +
                                       k * std::sin(v.u[0]) - collocation[i].p1;
                sf[c] += f_omega * f_omega + f_delta * f_delta;
            } else {
                const double f = model.params.m * v.u_tt[0] + model.params.d * v.u_t[0] +
                                 k * std::sin(v.u[0]) - collocation[i].p1;
                sf[c] += f * f;
            }
        }
    });

    LossReport report;
    for (std::size_t c = 0; c < kChunks; ++c) {
        report.mse_u += su[c];
        report.mse_f += sf[c];
    }
    report.mse_u /= static_cast<double>(training.size());
    report.mse_f /= static_cast<double>(collocation.size());
    report.total = report.mse_u + report.mse_f;
    return report;
}

LossGradient loss_gradient(const PinnModel& model, const std::vector<TrainingPoint>& training,
                           const std::vector<CollocationPoint>& collocation) {
    if (training.empty() || collocation.empty()) {
        throw PinnError("loss_gradient requires non-empty training and collocation sets");
    }
    const std::size_t n_params = model.mlp.param_count();
    const int n_out = model.mlp.n_outputs();
    const double k = coupling(model.params);
    const double m = model.params.m;
    const double d = model.params.d;
    const bool two = model.mode == OutputMode::DeltaOmega;
    const double wu = 2.0 / static_cast<double>(training.size());
    const double wf = 2.0 / static_cast<double>(collocation.size());

    struct Partial {
        std::vector<double> grad;
        double su = 0.0, sf = 0.0, dm = 0.0, dd = 0.0;
    };
    std::vector<Partial> partials(kChunks);
    for (auto& p : partials) p.grad.assign(n_params, 0.0);

    run_chunks(kChunks, [&](std::size_t c) {
        auto& part = partials[c];
        std::vector<double> seed_u(n_out), seed_ut(n_out), seed_utt(n_out);

        auto [ulo, uhi] = chunk_range(training.size(), c, kChunks);
        for (std::size_t i = ulo; i < uhi; ++i) {
            const auto tape = forward_tape(model.mlp, model.norm, training[i].t, training[i].p1);
            const double e = tape.a.back()[0] - training[i].delta;
            part.su += e * e;
            std::fill(seed_u.begin(), seed_u.end(), 0.0);
            std::fill(seed_ut.begin(), seed_ut.end(), 0.0);
            std::fill(seed_utt.begin(), seed_utt.end(), 0.0);
            seed_u[0] = wu * e;
            backward(model.mlp, model.norm, tape, seed_u, seed_ut, seed_utt, part.grad);
        }

        auto [flo, fhi] = chunk_range(collocation.size(), c, kChunks);
        for (std::size_t i = flo; i < fhi; ++i) {
            const double t = collocation[i].t;
            const double p1 = collocation[i].p1;
            const auto tape = forward_tape(model.mlp, model.norm, t, p1);
            const auto v = tape_outputs(tape, model.norm);
            std::fill(seed_u.begin(), seed_u.end(), 0.0);
            std::fill(seed_ut.begin(), seed_ut.end(), 0.0);
            std::fill(seed_utt.begin(), seed_utt.end(), 0.0);
            if (two) {
                const double f_omega = v.u_t[0] - v.u[1];
                const double f_delta = m * v.u_t[1] + d * v.u[1] + k * std::sin(v.u[0]) - p1;
                part.sf += f_omega * f_omega + f_delta * f_delta;
                const double w_o = wf * f_omega;
                const double w_d = wf * f_delta;
                seed_u[0] = w_d * k * std::cos(v.u[0]);
                seed_u[1] = -w_o + w_d * d;
                seed_ut[0] = w_o;
                seed_ut[1] = w_d * m;
                part.dm += w_d * v.u_t[1];
                part.dd += w_d * v.u[1];
            } else {
                const double f = m * v.u_tt[0] + d * v.u_t[0] + k * std::sin(v.u[0]) - p1;
                part.sf += f * f;
                const double w = wf * f;
                seed_u[0] = w * k * std::cos(v.u[0]);
                seed_ut[0] = w * d;
                seed_utt[0] = w * m;
                part.dm += w * v.u_tt[0];
                part.dd += w * v.u_t[0];
            }
            backward(model.mlp, model.norm, tape, seed_u, seed_ut, seed_utt, part.grad);
        }
    });

    LossGradient out;
    out.net.assign(n_params, 0.0);
    double su = 0.0, sf = 0.0;
    for (const auto& part : partials) {
        for (std::size_t j = 0; j < n_params; ++j) out.net[j] += part.grad[j];
        su += part.su;
        sf += part.sf;
        out.dm += part.dm;
        out.dd += part.dd;
    }
    out.report.mse_u = su / static_cast<double>(training.size());
    out.report.mse_f = sf / static_cast<double>(collocation.size());
    out.report.total = out.report.mse_u + out.report.mse_f;
    return out;
}

double predict_delta(const PinnModel& model, double t, double p1) {
    return forward_head(model.mlp, model.norm, t, p1);
}

double predict_omega(const PinnModel& model, double t, double p1) {
    const auto v = forward_with_time_derivs(model.mlp, model.norm, t, p1);
    if (model.mode == OutputMode::DeltaOmega) return v.u[1];
    return v.u_t[0];
}

void save_checkpoint(const PinnModel& model, const std::string& path) {
    nlohmann::json j;
    j["layer_sizes"] = model.mlp.layer_sizes;
    j["weights"] = nlohmann::json::array();
    j["biases"] = nlohmann::json::array();
    for (std::size_t l = 0; l < model.mlp.weights.size(); ++l) {
        const int n_in = model.mlp.layer_sizes[l];
        const int n_out = model.mlp.layer_sizes[l + 1];
        nlohmann::json rows = nlohmann::json::array();
        for (int i = 0; i < n_out; ++i) {
            rows.push_back(std::vector<double>(
                model.mlp.weights[l].begin() + static_cast<std::size_t>(i) * n_in,
                model.mlp.weights[l].begin() + static_cast<std::size_t>(i + 1) * n_in));
        }
        j["weights"].push_back(rows);
        j["biases"].push_back(model.mlp.biases[l]);
    }
    j["normalization"] = {{"t_end", model.norm.t_end},
                          {"p_min", model.norm.p_min},
                          {"p_max", model.norm.p_max}};
    j["physics"] = {{"m", model.params.m},
                    {"d", model.params.d},
                    {"b12", model.params.b12},
                    {"v1", model.params.v1},
                    {"v2", model.params.v2}};
    j["trainable"] = {{"m", model.train_m}, {"d", model.train_d}};
    j["mode"] = model.mode == OutputMode::DeltaOmega ? "delta_omega" : "single_delta";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw PinnError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw PinnError("write failure on " + path);
}

PinnModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PinnError("cannot open checkpoint " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw PinnError("malformed checkpoint " + path + ": " + e.what());
    }

    PinnModel model;
    try {
        model.mlp.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
        for (std::size_t l = 0; l + 1 < model.mlp.layer_sizes.size(); ++l) {
            const int n_in = model.mlp.layer_sizes[l];
            const int n_out = model.mlp.layer_sizes[l + 1];
            const auto rows = j.at("weights").at(l);
            if (static_cast<int>(rows.size()) != n_out) {
                throw PinnError("checkpoint " + path + ": weight shape mismatch");
            }
            std::vector<double> w;
            w.reserve(static_cast<std::size_t>(n_in) * n_out);
            for (const auto& row : rows) {
                const auto vals = row.get<std::vector<double>>();
                if (static_cast<int>(vals.size()) != n_in) {
                    throw PinnError("checkpoint " + path + ": weight shape mismatch");
                }
                w.insert(w.end(), vals.begin(), vals.end());
            }
            model.mlp.weights.push_back(std::move(w));
            auto b = j.at("biases").at(l).get<std::vector<double>>();
            if (static_cast<int>(b.size()) != n_out) {
                throw PinnError("checkpoint " + path + ": bias shape mismatch");
            }
            model.mlp.biases.push_back(std::move(b));
        }
        model.norm.t_end = j.at("normalization").at("t_end").get<double>();
        model.norm.p_min = j.at("normalization").at("p_min").get<double>();
        model.norm.p_max = j.at("normalization").at("p_max").get<double>();
        model.params.m = j.at("physics").at("m").get<double>();
        model.params.d = j.at("physics").at("d").get<double>();
        model.params.b12 = j.at("physics").at("b12").get<double>();
        model.params.v1 = j.at("physics").at("v1").get<double>();
        model.params.v2 = j.at("physics").at("v2").get<double>();
        model.train_m = j.at("trainable").at("m").get<bool>();
        model.train_d = j.at("trainable").at("d").get<bool>();
        const auto mode = j.at("mode").get<std::string>();
        if (mode == "single_delta") {
            model.mode = OutputMode::SingleDelta;
        } else if (mode == "delta_omega") {
            model.mode = OutputMode::DeltaOmega;
        } else {
            throw PinnError("checkpoint " + path + ": unknown mode '" + mode + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw PinnError("incompatible checkpoint " + path + ": " + e.what());
    }
    const int expected_out = model.mode == OutputMode::DeltaOmega ? 2 : 1;
    if (model.mlp.layer_sizes.empty() || model.mlp.layer_sizes.back() != expected_out) {
        throw PinnError("checkpoint " + path + ": output width does not match mode");
    }
    return model;
}

}  // namespace smib
