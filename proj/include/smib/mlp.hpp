#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace smib {

/// Affine map from physical (t, p) to the network's normalized inputs
/// t̂ = t/t_end, p̂ = (p − p_min)/(p_max − p_min). Time derivatives returned by
/// the network are chain-ruled back to physical units with 1/t_end factors.
struct Normalization {
    double t_end = 1.0;
    double p_min = 0.0;
    double p_max = 1.0;
};

/// Dense tanh network: input 2, tanh hidden layers, affine output (1 or 2).
/// weights[l] is row-major (layer_sizes[l+1] × layer_sizes[l]).
struct MlpParams {
    std::vector<int> layer_sizes;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    std::size_t param_count() const;
    int n_outputs() const { return layer_sizes.back(); }
};

/// Output value(s) with first and second time derivatives in physical units.
struct ValueAndTimeDerivs {
    std::vector<double> u;
    std::vector<double> u_t;
    std::vector<double> u_tt;
};

using ParamGradient = std::vector<double>;

/// Record of one extended forward pass: per-layer activation values and their
/// first/second directional derivatives along normalized time, plus the
/// pre-activation derivatives needed for the reverse sweep.
struct MlpTape {
    std::vector<std::vector<double>> a, a1, a2;    ///< post-activation, all layers
    std::vector<std::vector<double>> zp1, zp2;     ///< pre-activation derivs, hidden layers
};

/// Glorot-style scaled-uniform weights with bound sqrt(6/(fan_in+fan_out)),
/// zero biases. Deterministic given the seed.
MlpParams init_params(const std::vector<int>& layer_sizes, std::uint64_t seed);

/// Plain forward pass on physical inputs.
std::vector<double> forward(const MlpParams& params, const Normalization& norm,
                            double t, double p);

/// First output of forward() without the return-vector allocation; the hot
/// path for surrogate queries.
double forward_head(const MlpParams& params, const Normalization& norm, double t, double p);

/// Forward pass propagating (value, ∂/∂t, ∂²/∂t²) triples through every layer;
/// derivatives exact to floating point.
ValueAndTimeDerivs forward_with_time_derivs(const MlpParams& params, const Normalization& norm,
                                            double t, double p);

/// Extended forward pass retaining the tape for reverse-mode sweeps.
MlpTape forward_tape(const MlpParams& params, const Normalization& norm, double t, double p);

ValueAndTimeDerivs tape_outputs(const MlpTape& tape, const Normalization& norm);

/// Reverse sweep over the extended graph. Seeds are adjoints of the physical
/// outputs (u, u_t, u_tt), one entry per output unit; the parameter gradient is
/// accumulated into grad (canonical flat order: per layer, weights row-major,
/// then biases).
void backward(const MlpParams& params, const Normalization& norm, const MlpTape& tape,
              std::span<const double> seed_u, std::span<const double> seed_ut,
              std::span<const double> seed_utt, std::span<double> grad);

/// Gradients of u, u_t, u_tt (single-output networks) with respect to every
/// parameter, in canonical flat order.
struct OutputGradients {
    ParamGradient du;
    ParamGradient du_t;
    ParamGradient du_tt;
};
OutputGradients param_gradients(const MlpParams& params, const Normalization& norm,
                                double t, double p);

std::vector<double> flatten(const MlpParams& params);
void unflatten(std::span<const double> flat, MlpParams& params);

}  // namespace smib
