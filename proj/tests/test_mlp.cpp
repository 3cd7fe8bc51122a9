#include "smib/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "smib/rng.hpp"

using namespace smib;

namespace {

const Normalization kIdentity{};  // t_end = 1, p in [0, 1]: no rescaling

MlpParams random_net(const std::vector<int>& sizes, std::uint64_t seed) {
    MlpParams params = init_params(sizes, seed);
    // Nonzero biases so bias gradients are exercised away from the init point.
    Rng rng(seed + 1);
    for (auto& b : params.biases) {
        for (double& x : b) x = rng.uniform(-0.3, 0.3);
    }
    return params;
}

// rel error with absolute floor, as used by the finite-difference checks
double rel_err(double got, double want, double abs_floor) {
    const double scale = std::max(std::abs(want), abs_floor / 1e-4);
    return std::abs(got - want) / scale;
}

}  // namespace

TEST_CASE("init_params bounds and determinism") {
    SUBCASE("[2,1] weights inside the scaled-uniform bound, zero bias") {
        const MlpParams p = init_params({2, 1}, 7);
        REQUIRE(p.weights.size() == 1);
        const double bound = std::sqrt(2.0);  // sqrt(6/3)
        for (double w : p.weights[0]) CHECK(std::abs(w) <= bound);
        CHECK(p.biases[0][0] == 0.0);
    }
    SUBCASE("same seed gives identical parameters") {
        const MlpParams a = init_params({2, 10, 1}, 42);
        const MlpParams b = init_params({2, 10, 1}, 42);
        CHECK(a.weights == b.weights);
        CHECK(a.biases == b.biases);
    }
    SUBCASE("different seeds differ") {
        const MlpParams a = init_params({2, 10, 1}, 1);
        const MlpParams b = init_params({2, 10, 1}, 2);
        CHECK(a.weights != b.weights);
    }
    SUBCASE("parameter count of the 5x10 architecture") {
        const MlpParams p = init_params({2, 10, 10, 10, 10, 10, 1}, 0);
        CHECK(p.param_count() == 481);  // sum of n_in*n_out + n_out per layer
        CHECK(flatten(p).size() == 481);
    }
    SUBCASE("zero layer size rejected") {
        CHECK_THROWS_AS(init_params({2, 0, 1}, 0), std::invalid_argument);
    }
}

TEST_CASE("forward basics") {
    SUBCASE("all-zero parameters give zero output") {
        MlpParams p = init_params({2, 4, 1}, 0);
        std::vector<double> zeros(p.param_count(), 0.0);
        unflatten(zeros, p);
        CHECK(forward(p, kIdentity, 0.3, 0.8)[0] == 0.0);
        CHECK(forward(p, kIdentity, -2.0, 5.0)[0] == 0.0);
    }
    SUBCASE("single affine layer is the affine map") {
        MlpParams p = init_params({2, 1}, 0);
        p.weights[0] = {1.5, -0.5};
        p.biases[0] = {0.25};
        CHECK(forward(p, kIdentity, 0.4, 0.2)[0] ==
              doctest::Approx(1.5 * 0.4 - 0.5 * 0.2 + 0.25).epsilon(1e-15));
    }
    SUBCASE("tiny net matches hand-computed tanh composition") {
        MlpParams p = init_params({2, 1, 1}, 0);
        p.weights[0] = {0.7, -0.2};
        p.biases[0] = {0.1};
        p.weights[1] = {1.3};
        p.biases[1] = {-0.4};
        const double t = 0.5, x = 0.25;
        const double hand = 1.3 * std::tanh(0.7 * t - 0.2 * x + 0.1) - 0.4;
        CHECK(std::abs(forward(p, kIdentity, t, x)[0] - hand) <= 1e-12);
    }
}

TEST_CASE("time derivatives") {
    SUBCASE("all-zero parameters give (0,0,0)") {
        MlpParams p = init_params({2, 3, 1}, 0);
        std::vector<double> zeros(p.param_count(), 0.0);
        unflatten(zeros, p);
        const auto v = forward_with_time_derivs(p, kIdentity, 0.2, 0.9);
        CHECK(v.u[0] == 0.0);
        CHECK(v.u_t[0] == 0.0);
        CHECK(v.u_tt[0] == 0.0);
    }
    SUBCASE("affine layer: u_t is the time weight, u_tt vanishes") {
        MlpParams p = init_params({2, 1}, 0);
        p.weights[0] = {2.0, 3.0};
        p.biases[0] = {1.0};
        const auto v = forward_with_time_derivs(p, kIdentity, 0.1, 0.7);
        CHECK(v.u[0] == doctest::Approx(2.0 * 0.1 + 3.0 * 0.7 + 1.0));
        CHECK(v.u_t[0] == doctest::Approx(2.0));
        CHECK(v.u_tt[0] == 0.0);
    }
    SUBCASE("normalization chain rule") {
        // u = w_t * t/t_end + ... so du/dt = w_t/t_end.
        MlpParams p = init_params({2, 1}, 0);
        p.weights[0] = {2.0, 0.0};
        p.biases[0] = {0.0};
        const Normalization norm{20.0, 0.08, 0.18};
        const auto v = forward_with_time_derivs(p, norm, 4.0, 0.1);
        CHECK(v.u_t[0] == doctest::Approx(0.1).epsilon(1e-14));
        CHECK(v.u_tt[0] == 0.0);
    }
    SUBCASE("u_t and u_tt match central finite differences") {
        const MlpParams p = random_net({2, 8, 8, 1}, 11);
        const Normalization norm{20.0, 0.08, 0.18};
        const double h = 1e-4;
        for (double t : {0.5, 3.7, 14.2}) {
            for (double p1 : {0.09, 0.13, 0.17}) {
                const auto v = forward_with_time_derivs(p, norm, t, p1);
                const double up = forward(p, norm, t + h, p1)[0];
                const double um = forward(p, norm, t - h, p1)[0];
                const double u0 = forward(p, norm, t, p1)[0];
                const double fd1 = (up - um) / (2 * h);
                const double fd2 = (up - 2 * u0 + um) / (h * h);
                CHECK(rel_err(v.u_t[0], fd1, 1e-7) <= 1e-5);
                CHECK(rel_err(v.u_tt[0], fd2, 1e-7) <= 1e-4);
            }
        }
    }
}

TEST_CASE("parameter gradients") {
    SUBCASE("gradient of u with respect to the output bias is 1") {
        const MlpParams p = random_net({2, 6, 1}, 3);
        const auto g = param_gradients(p, kIdentity, 0.4, 0.6);
        CHECK(g.du.back() == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("gradient of u_tt vanishes for an affine net") {
        MlpParams p = init_params({2, 1}, 0);
        p.weights[0] = {0.9, -0.4};
        p.biases[0] = {0.2};
        const auto g = param_gradients(p, kIdentity, 0.3, 0.5);
        for (double v : g.du_tt) CHECK(v == 0.0);
    }
    SUBCASE("gradient length is input-independent") {
        const MlpParams p = random_net({2, 5, 4, 1}, 9);
        const auto a = param_gradients(p, kIdentity, 0.0, 0.0);
        const auto b = param_gradients(p, kIdentity, 0.9, -2.0);
        CHECK(a.du.size() == p.param_count());
        CHECK(b.du.size() == p.param_count());
        CHECK(a.du_t.size() == a.du_tt.size());
    }
    SUBCASE("all three gradients match parameter-wise central differences") {
        MlpParams p = random_net({2, 4, 1}, 21);
        const Normalization norm{2.0, -0.5, 1.5};
        const double t = 0.7, p1 = 0.3, h = 1e-5;
        const auto g = param_gradients(p, norm, t, p1);
        std::vector<double> flat = flatten(p);
        for (std::size_t j = 0; j < flat.size(); ++j) {
            const double saved = flat[j];
            flat[j] = saved + h;
            unflatten(flat, p);
            const auto vp = forward_with_time_derivs(p, norm, t, p1);
            flat[j] = saved - h;
            unflatten(flat, p);
            const auto vm = forward_with_time_derivs(p, norm, t, p1);
            flat[j] = saved;
            unflatten(flat, p);
            CHECK(rel_err(g.du[j], (vp.u[0] - vm.u[0]) / (2 * h), 1e-7) <= 1e-4);
            CHECK(rel_err(g.du_t[j], (vp.u_t[0] - vm.u_t[0]) / (2 * h), 1e-7) <= 1e-4);
            CHECK(rel_err(g.du_tt[j], (vp.u_tt[0] - vm.u_tt[0]) / (2 * h), 1e-7) <= 1e-4);
        }
    }
}

TEST_CASE("determinism of evaluation") {
    const MlpParams p = random_net({2, 7, 7, 1}, 5);
    const Normalization norm{20.0, 0.08, 0.18};
    const auto a = forward_with_time_derivs(p, norm, 1.23, 0.11);
    const auto b = forward_with_time_derivs(p, norm, 1.23, 0.11);
    CHECK(a.u[0] == b.u[0]);
    CHECK(a.u_t[0] == b.u_t[0]);
    CHECK(a.u_tt[0] == b.u_tt[0]);
}

TEST_CASE("flatten/unflatten round-trip") {
    MlpParams p = random_net({2, 5, 3, 2}, 13);
    const std::vector<double> flat = flatten(p);
    MlpParams q = init_params({2, 5, 3, 2}, 99);
    unflatten(flat, q);
    CHECK(q.weights == p.weights);
    CHECK(q.biases == p.biases);
    CHECK_THROWS_AS(unflatten(std::vector<double>(3), p), std::invalid_argument);
}
