#include "smib/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "smib/dataset.hpp"

using namespace smib;

namespace {

const SwingParams kDefault{0.4, 0.15, 0.2, 1.0, 1.0};

PinnModel trained_stub() {
    // Untrained network; eval-metric tests only need a callable model.
    PinnModel model;
    model.mlp = init_params({2, 8, 8, 1}, 19);
    model.params = kDefault;
    model.norm = {20.0, 0.08, 0.18};
    return model;
}

}  // namespace

TEST_CASE("relative_l2") {
    const std::vector<double> exact = {1.0, 2.0};
    CHECK(relative_l2(exact, exact) == 0.0);
    const std::vector<double> twice = {2.0, 4.0};
    CHECK(relative_l2(twice, exact) == doctest::Approx(1.0).epsilon(1e-14));
    const std::vector<double> pred = {1.0, 1.0};
    CHECK(relative_l2(pred, exact) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-12));

    SUBCASE("scale awareness") {
        for (double c : {0.0, 0.3, 1.7}) {
            std::vector<double> scaled = {c * 1.0, c * 2.0};
            CHECK(relative_l2(scaled, exact) == doctest::Approx(std::abs(c - 1.0)).epsilon(1e-12));
        }
    }
    SUBCASE("error paths") {
        CHECK_THROWS_AS(relative_l2(pred, std::vector<double>{1.0}), EvalError);
        CHECK_THROWS_AS(relative_l2(std::vector<double>{}, std::vector<double>{}), EvalError);
        CHECK_THROWS_AS(relative_l2(pred, std::vector<double>{0.0, 0.0}), EvalError);
    }
}

TEST_CASE("recover_omega") {
    SUBCASE("exact on affine series") {
        std::vector<double> delta;
        for (int k = 0; k <= 10; ++k) delta.push_back(0.1 * k);
        const auto omega = recover_omega(delta, 0.1);
        REQUIRE(omega.size() == delta.size());
        for (double w : omega) CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("zero on constant series") {
        const std::vector<double> delta(8, 0.42);
        for (double w : recover_omega(delta, 0.1)) CHECK(w == 0.0);
    }
    SUBCASE("first-order accurate on sin, halving h halves the error") {
        auto max_err = [](double h) {
            std::vector<double> delta;
            const int n = static_cast<int>(20.0 / h);
            for (int k = 0; k <= n; ++k) delta.push_back(std::sin(k * h));
            const auto omega = recover_omega(delta, h);
            double worst = 0.0;
            for (int k = 0; k <= n; ++k) {
                worst = std::max(worst, std::abs(omega[k] - std::cos(k * h)));
            }
            return worst;
        };
        const double e1 = max_err(0.1);
        const double e2 = max_err(0.05);
        CHECK(e1 <= 0.05);
        CHECK(e2 / e1 >= 0.45);  // halving h halves the error, within 10%
        CHECK(e2 / e1 <= 0.55);
    }
    SUBCASE("short series rejected") {
        CHECK_THROWS_AS(recover_omega(std::vector<double>{1.0}, 0.1), EvalError);
    }
}

TEST_CASE("evaluate_model") {
    DatasetSpec spec;
    spec.n_trajectories = 5;
    spec.t_end = 4.0;
    const auto grid = generate_grid(spec, kDefault);

    SUBCASE("constant-zero model has pooled delta error 1") {
        PinnModel model = trained_stub();
        std::vector<double> zeros(model.mlp.param_count(), 0.0);
        unflatten(zeros, model.mlp);
        const EvalReport report = evaluate_model(model, grid);
        CHECK(report.pooled_l2_delta == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("pooled error equals relative_l2 of the concatenation") {
        const PinnModel model = trained_stub();
        const EvalReport report = evaluate_model(model, grid);
        std::vector<double> pred, exact;
        for (const auto& traj : grid) {
            for (std::size_t k = 0; k < traj.size(); ++k) {
                pred.push_back(predict_delta(model, traj.times[k], traj.p1));
                exact.push_back(traj.states[k].delta);
            }
        }
        CHECK(report.pooled_l2_delta == doctest::Approx(relative_l2(pred, exact)).epsilon(1e-12));
        CHECK(report.per_trajectory.size() == grid.size());
        for (const auto& te : report.per_trajectory) {
            CHECK(te.l2_delta >= 0.0);
            CHECK(te.l2_omega >= 0.0);
        }
    }
    SUBCASE("best and worst are actual argmin/argmax") {
        const PinnModel model = trained_stub();
        const EvalReport report = evaluate_model(model, grid);
        double best = 1e300, worst = -1.0;
        for (const auto& te : report.per_trajectory) {
            best = std::min(best, te.l2_delta);
            worst = std::max(worst, te.l2_delta);
        }
        for (const auto& te : report.per_trajectory) {
            if (te.p1 == report.best_p1) CHECK(te.l2_delta == best);
            if (te.p1 == report.worst_p1) CHECK(te.l2_delta == worst);
        }
    }
    SUBCASE("empty grid rejected") {
        CHECK_THROWS_AS(evaluate_model(trained_stub(), {}), EvalError);
    }
}

TEST_CASE("benchmark structural properties") {
    const PinnModel model = trained_stub();
    std::vector<double> p1_samples;
    for (int i = 0; i < 20; ++i) p1_samples.push_back(0.08 + 0.005 * i);

    const TimingReport report =
        benchmark(model, kDefault, p1_samples, {0.1, 0.1}, 20.0, 0.1, 10.0);
    CHECK(report.integrator_full_s > 0.0);
    CHECK(report.surrogate_full_s > 0.0);
    CHECK(report.surrogate_instant_s > 0.0);
    CHECK(report.integrator_instant_s > 0.0);
    CHECK(report.speedup_full == doctest::Approx(report.integrator_full_s /
                                                 report.surrogate_full_s));

    // Surrogate query cost is flat in the queried instant; 2x covers timing noise.
    const double lo = std::min(report.surrogate_instant_early_s, report.surrogate_instant_late_s);
    const double hi = std::max(report.surrogate_instant_early_s, report.surrogate_instant_late_s);
    CHECK(hi <= 2.0 * lo);

    // Integrator cost grows with the horizon.
    const TimingReport shorter =
        benchmark(model, kDefault, p1_samples, {0.1, 0.1}, 20.0, 0.1, 1.0);
    CHECK(report.integrator_instant_s > shorter.integrator_instant_s);
}

TEST_CASE("report serialization") {
    DatasetSpec spec;
    spec.n_trajectories = 2;
    spec.t_end = 1.0;
    const auto grid = generate_grid(spec, kDefault);
    const PinnModel model = trained_stub();
    const EvalReport report = evaluate_model(model, grid);

    const std::string csv = "/tmp/smib_eval_test.csv";
    save_per_trajectory_csv(report, csv);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "p1,l2_delta,l2_omega");
    std::remove(csv.c_str());

    const std::string plot = "/tmp/smib_plot_test.csv";
    save_trajectory_comparison(model, grid[0], plot);
    std::ifstream in2(plot);
    std::getline(in2, header);
    CHECK(header == "t,delta_pred,delta_true,omega_pred,omega_true");
    std::remove(plot.c_str());
}
