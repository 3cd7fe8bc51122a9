// swingpinn: physics-informed surrogate for the single-machine infinite-bus
// swing equation. Subcommands: generate | train | identify | benchmark |
// predict | evaluate. Config file is JSON; flags override config fields.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "smib/dataset.hpp"
#include "smib/eval.hpp"
#include "smib/pinn.hpp"
#include "smib/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace smib;

namespace {

struct RunConfig {
    DatasetSpec dataset;
    SwingParams physics;
    TrainConfig train;
    std::vector<int> arch = {2, 10, 10, 10, 10, 10, 1};
    std::size_t n_u = 40;
    std::size_t n_f = 8000;
    // identification protocol
    int n_pairs = 10;
    double init_m = 0.25, init_d = 0.10;
    double m_min = 0.1, m_max = 0.4, d_min = 0.05, d_max = 0.15;
    int id_trajectories = 40;
    std::size_t id_n_u = 100;
};

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json j;
    in >> j;

    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        maybe(d, "p_min", cfg.dataset.p_min);
        maybe(d, "p_max", cfg.dataset.p_max);
        maybe(d, "t_end", cfg.dataset.t_end);
        maybe(d, "output_step", cfg.dataset.output_step);
        maybe(d, "n_trajectories", cfg.dataset.n_trajectories);
        maybe(d, "init_delta", cfg.dataset.init.delta);
        maybe(d, "init_omega", cfg.dataset.init.omega);
        maybe(d, "seed", cfg.dataset.seed);
    }
    if (j.contains("physics")) {
        const json& p = j["physics"];
        maybe(p, "m", cfg.physics.m);
        maybe(p, "d", cfg.physics.d);
        maybe(p, "b12", cfg.physics.b12);
        maybe(p, "v1", cfg.physics.v1);
        maybe(p, "v2", cfg.physics.v2);
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        maybe(t, "max_iterations", cfg.train.max_iterations);
        maybe(t, "learning_rate", cfg.train.learning_rate);
        maybe(t, "lr_decay", cfg.train.lr_decay);
        maybe(t, "lr_decay_every", cfg.train.lr_decay_every);
        maybe(t, "seed", cfg.train.seed);
        maybe(t, "grad_tol", cfg.train.grad_tol);
        maybe(t, "plateau_tol", cfg.train.plateau_tol);
        maybe(t, "plateau_window", cfg.train.plateau_window);
        maybe(t, "refine", cfg.train.refine);
        maybe(t, "refine_iterations", cfg.train.refine_iterations);
        maybe(t, "log_every", cfg.train.log_every);
        maybe(t, "n_u", cfg.n_u);
        maybe(t, "n_f", cfg.n_f);
    }
    maybe(j, "arch", cfg.arch);
    if (j.contains("identify")) {
        const json& i = j["identify"];
        maybe(i, "n_pairs", cfg.n_pairs);
        maybe(i, "init_m", cfg.init_m);
        maybe(i, "init_d", cfg.init_d);
        maybe(i, "m_min", cfg.m_min);
        maybe(i, "m_max", cfg.m_max);
        maybe(i, "d_min", cfg.d_min);
        maybe(i, "d_max", cfg.d_max);
        maybe(i, "n_trajectories", cfg.id_trajectories);
        maybe(i, "n_u", cfg.id_n_u);
    }
    return cfg;
}

json config_to_json(const RunConfig& cfg) {
    json j;
    j["dataset"] = {{"p_min", cfg.dataset.p_min},       {"p_max", cfg.dataset.p_max},
                    {"t_end", cfg.dataset.t_end},       {"output_step", cfg.dataset.output_step},
                    {"n_trajectories", cfg.dataset.n_trajectories},
                    {"init_delta", cfg.dataset.init.delta},
                    {"init_omega", cfg.dataset.init.omega},
                    {"seed", cfg.dataset.seed}};
    j["physics"] = {{"m", cfg.physics.m}, {"d", cfg.physics.d},   {"b12", cfg.physics.b12},
                    {"v1", cfg.physics.v1}, {"v2", cfg.physics.v2}};
    j["train"] = {{"max_iterations", cfg.train.max_iterations},
                  {"learning_rate", cfg.train.learning_rate},
                  {"lr_decay", cfg.train.lr_decay},
                  {"lr_decay_every", cfg.train.lr_decay_every},
                  {"seed", cfg.train.seed},
                  {"refine", cfg.train.refine},
                  {"refine_iterations", cfg.train.refine_iterations},
                  {"n_u", cfg.n_u},
                  {"n_f", cfg.n_f}};
    j["arch"] = cfg.arch;
    j["identify"] = {{"n_pairs", cfg.n_pairs}, {"init_m", cfg.init_m}, {"init_d", cfg.init_d},
                     {"m_min", cfg.m_min},     {"m_max", cfg.m_max},   {"d_min", cfg.d_min},
                     {"d_max", cfg.d_max},     {"n_trajectories", cfg.id_trajectories},
                     {"n_u", cfg.id_n_u}};
    return j;
}

void write_manifest(const RunConfig& cfg, const std::string& command, const fs::path& out_dir) {
    json j;
    j["command"] = command;
    j["config"] = config_to_json(cfg);
    std::ofstream out(out_dir / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest in " + out_dir.string());
    out << j.dump(2) << '\n';
}

Normalization norm_from(const DatasetSpec& spec) {
    return {spec.t_end, spec.p_min, spec.p_max};
}

int cmd_generate(const RunConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const auto grid = generate_grid(cfg.dataset, cfg.physics);
    save_csv(grid, (fs::path(out_dir) / "grid.csv").string());
    write_manifest(cfg, "generate", out_dir);
    std::cout << "wrote " << total_samples(grid) << " samples across " << grid.size()
              << " trajectories to " << out_dir << "/grid.csv\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& data_path, const std::string& out_dir) {
    const auto grid = load_csv(data_path);
    const auto training = sample_training_points(grid, cfg.n_u, cfg.dataset.seed + 1);
    const auto collocation = sample_collocation_points(
        cfg.n_f, cfg.dataset.t_end, cfg.dataset.p_min, cfg.dataset.p_max, cfg.dataset.seed + 2);

    TrainConfig tc = cfg.train;
    tc.mode = TrainMode::Forward;
    const auto [model, report] =
        train_forward(training, collocation, cfg.arch, cfg.physics, norm_from(cfg.dataset), tc);
    if (report.aborted) {
        std::cerr << "training aborted: " << report.abort_reason
                  << " (last finite checkpoint saved)\n";
    }

    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    save_checkpoint(model, (out / "checkpoint.json").string());
    save_history(report, false, (out / "history.csv").string());

    const EvalReport eval = evaluate_model(model, grid);
    save_eval_report(eval, (out / "eval_report.json").string());
    save_per_trajectory_csv(eval, (out / "per_trajectory.csv").string());
    for (const auto& traj : grid) {
        if (traj.p1 == eval.best_p1) {
            save_trajectory_comparison(model, traj, (out / "best_trajectory.csv").string());
        }
        if (traj.p1 == eval.worst_p1) {
            save_trajectory_comparison(model, traj, (out / "worst_trajectory.csv").string());
        }
    }
    write_manifest(cfg, "train", out_dir);

    std::cout << "trained " << report.iterations << " iterations in " << report.wall_seconds
              << " s; final loss " << report.final_loss.total << "\npooled relative L2: delta "
              << eval.pooled_l2_delta << ", omega " << eval.pooled_l2_omega << "\n";
    return report.aborted ? 2 : 0;
}

int cmd_identify(const RunConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    // (m, d) pairs by seeded LHS over the identification box.
    const auto unit = sample_collocation_points(cfg.n_pairs, 1.0, 0.0, 1.0, cfg.dataset.seed + 3);

    json rows = json::array();
    std::ofstream csv(fs::path(out_dir) / "identify_report.csv", std::ios::binary);
    csv << "pair,m_true,d_true,m_hat,d_hat,m_rel_err,d_rel_err,l2_delta,seconds\n";
    double sum_em = 0.0, sum_ed = 0.0;

    for (int i = 0; i < cfg.n_pairs; ++i) {
        const double m_true = cfg.m_min + (cfg.m_max - cfg.m_min) * unit[i].t;
        const double d_true = cfg.d_min + (cfg.d_max - cfg.d_min) * unit[i].p1;
        SwingParams truth = cfg.physics;
        truth.m = m_true;
        truth.d = d_true;

        DatasetSpec spec = cfg.dataset;
        spec.n_trajectories = cfg.id_trajectories;
        spec.seed = cfg.dataset.seed + 10 + i;
        const auto grid = generate_grid(spec, truth);
        const auto training = sample_training_points(grid, cfg.id_n_u, spec.seed + 1);
        const auto collocation = sample_collocation_points(cfg.n_f, spec.t_end, spec.p_min,
                                                           spec.p_max, spec.seed + 2);

        TrainConfig tc = cfg.train;
        tc.mode = TrainMode::Identify;
        tc.seed = cfg.train.seed + i;
        const auto [model, rep] = train_identify(training, collocation, cfg.arch, cfg.physics,
                                                 cfg.init_m, cfg.init_d, norm_from(spec), tc);
        const double em = std::abs(rep.identified_m - m_true) / m_true;
        const double ed = std::abs(rep.identified_d - d_true) / d_true;
        sum_em += em;
        sum_ed += ed;
        const double l2 = evaluate_model(model, grid).pooled_l2_delta;

        csv << i << ',' << format_double(m_true) << ',' << format_double(d_true) << ','
            << format_double(rep.identified_m) << ',' << format_double(rep.identified_d) << ','
            << format_double(em) << ',' << format_double(ed) << ',' << format_double(l2) << ','
            << format_double(rep.wall_seconds) << '\n';
        rows.push_back({{"pair", i},
                        {"m_true", m_true},
                        {"d_true", d_true},
                        {"m_hat", rep.identified_m},
                        {"d_hat", rep.identified_d},
                        {"m_rel_err", em},
                        {"d_rel_err", ed},
                        {"l2_delta", l2},
                        {"seconds", rep.wall_seconds}});
        save_history(rep, true, (fs::path(out_dir) / ("history_" + std::to_string(i) + ".csv"))
                                    .string());
        std::cout << "pair " << i << ": m " << m_true << " -> " << rep.identified_m << " ("
                  << em * 100 << "%), d " << d_true << " -> " << rep.identified_d << " ("
                  << ed * 100 << "%)\n";
    }
    const double avg_em = sum_em / cfg.n_pairs;
    const double avg_ed = sum_ed / cfg.n_pairs;
    csv << "average,,,,," << format_double(avg_em) << ',' << format_double(avg_ed) << ",,\n";

    json j;
    j["pairs"] = rows;
    j["average_m_rel_err"] = avg_em;
    j["average_d_rel_err"] = avg_ed;
    std::ofstream out(fs::path(out_dir) / "identify_report.json", std::ios::binary);
    out << j.dump(2) << '\n';
    write_manifest(cfg, "identify", out_dir);

    std::cout << "average relative errors: m " << avg_em * 100 << "%, d " << avg_ed * 100
              << "%\n";
    return 0;
}

int cmd_benchmark(const RunConfig& cfg, const std::string& checkpoint_path,
                  const std::string& out_dir, double single_instant) {
    const PinnModel model = load_checkpoint(checkpoint_path);
    std::vector<double> p1_samples;
    for (int i = 0; i < 100; ++i) {
        p1_samples.push_back(cfg.dataset.p_min +
                             (cfg.dataset.p_max - cfg.dataset.p_min) * i / 99.0);
    }
    const TimingReport report =
        benchmark(model, model.params, p1_samples, cfg.dataset.init, cfg.dataset.t_end,
                  cfg.dataset.output_step, single_instant);
    fs::create_directories(out_dir);
    save_timing_report(report, (fs::path(out_dir) / "timing_report.json").string());
    write_manifest(cfg, "benchmark", out_dir);
    std::cout << "full-grid: integrator " << report.integrator_full_s << " s vs surrogate "
              << report.surrogate_full_s << " s (speedup " << report.speedup_full
              << "x; reference 28x)\nsingle instant t=" << single_instant << ": integrator "
              << report.integrator_instant_s << " s vs surrogate " << report.surrogate_instant_s
              << " s (speedup " << report.speedup_instant << "x; reference 87x)\n";
    return 0;
}

int cmd_predict(const std::string& checkpoint_path, double t, double p1) {
    const PinnModel model = load_checkpoint(checkpoint_path);
    const double delta = predict_delta(model, t, p1);
    const double omega = predict_omega(model, t, p1);
    const bool extrapolated = !model.inside_domain(t, p1);
    if (extrapolated) {
        std::cerr << "warning: (t, p1) outside the training domain [0, " << model.norm.t_end
                  << "] x [" << model.norm.p_min << ", " << model.norm.p_max
                  << "]; prediction is an extrapolation\n";
    }
    json j{{"t", t}, {"p1", p1}, {"delta", delta}, {"omega", omega},
           {"extrapolated", extrapolated}};
    std::cout << "delta = " << delta << " rad, omega = " << omega << " rad/s\n"
              << j.dump() << "\n";
    return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& data_path,
                 const std::string& out_dir) {
    const PinnModel model = load_checkpoint(checkpoint_path);
    const auto grid = load_csv(data_path);
    const EvalReport eval = evaluate_model(model, grid);
    fs::create_directories(out_dir);
    save_eval_report(eval, (fs::path(out_dir) / "eval_report.json").string());
    save_per_trajectory_csv(eval, (fs::path(out_dir) / "per_trajectory.csv").string());
    std::cout << "pooled relative L2: delta " << eval.pooled_l2_delta << ", omega "
              << eval.pooled_l2_omega << " (best p1 " << eval.best_p1 << ", worst p1 "
              << eval.worst_p1 << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physics-informed neural network surrogate for the SMIB swing equation"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", data_path, checkpoint_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_u, n_f;
    std::optional<std::vector<int>> layers;
    std::optional<int> iters;
    double t_query = 10.0, p1_query = 0.13;

    app.add_option("--config", config_path, "JSON config file")->capture_default_str();
    app.add_option("--seed", seed, "override all seeds");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();

    auto* gen = app.add_subcommand("generate", "integrate the trajectory grid to CSV");
    auto* train = app.add_subcommand("train", "train the forward surrogate");
    train->add_option("--data", data_path, "trajectory CSV (default <out>/grid.csv)");
    train->add_option("--nu", n_u, "labeled training points");
    train->add_option("--nf", n_f, "collocation points");
    train->add_option("--layers", layers, "architecture, e.g. 2 10 10 1");
    train->add_option("--iters", iters, "first-order iteration budget");
    auto* ident = app.add_subcommand("identify", "recover inertia and damping from samples");
    ident->add_option("--nu", n_u, "labeled points per pair");
    ident->add_option("--nf", n_f, "collocation points");
    ident->add_option("--layers", layers, "architecture");
    ident->add_option("--iters", iters, "first-order iteration budget");
    auto* bench = app.add_subcommand("benchmark", "time integrator vs surrogate");
    bench->add_option("--checkpoint", checkpoint_path, "trained model")->required();
    bench->add_option("--t", t_query, "single-instant query time")->capture_default_str();
    auto* pred = app.add_subcommand("predict", "query the surrogate at (t, p1)");
    pred->add_option("--checkpoint", checkpoint_path, "trained model")->required();
    pred->add_option("--t", t_query, "time instant (s)")->required();
    pred->add_option("--p1", p1_query, "mechanical power (p.u.)")->required();
    auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on a dataset");
    eval->add_option("--checkpoint", checkpoint_path, "trained model")->required();
    eval->add_option("--data", data_path, "trajectory CSV")->required();

    // --config/--seed/--out live on the parent; accept them after the
    // subcommand name as well.
    for (auto* sub : {gen, train, ident, bench, pred, eval}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        RunConfig cfg = load_config(config_path);
        if (seed) {
            cfg.dataset.seed = *seed;
            cfg.train.seed = *seed;
        }
        if (n_u) cfg.n_u = cfg.id_n_u = *n_u;
        if (n_f) cfg.n_f = *n_f;
        if (layers) cfg.arch = *layers;
        if (iters) cfg.train.max_iterations = *iters;

        if (gen->parsed()) return cmd_generate(cfg, out_dir);
        if (train->parsed()) {
            if (data_path.empty()) data_path = (fs::path(out_dir) / "grid.csv").string();
            return cmd_train(cfg, data_path, out_dir);
        }
        if (ident->parsed()) return cmd_identify(cfg, out_dir);
        if (bench->parsed()) return cmd_benchmark(cfg, checkpoint_path, out_dir, t_query);
        if (pred->parsed()) return cmd_predict(checkpoint_path, t_query, p1_query);
        if (eval->parsed()) return cmd_evaluate(checkpoint_path, data_path, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
