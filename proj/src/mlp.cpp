#include "smib/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smib/rng.hpp"

namespace smib {

std::size_t MlpParams::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        n += static_cast<std::size_t>(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
    }
    return n;
}

MlpParams init_params(const std::vector<int>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw std::invalid_argument("need at least input and output layer");
    for (int n : layer_sizes) {
        if (n < 1) throw std::invalid_argument("layer size must be positive");
    }
    MlpParams params;
    params.layer_sizes = layer_sizes;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
        for (double& x : w) x = rng.uniform(-bound, bound);
        params.weights.push_back(std::move(w));
        params.biases.emplace_back(fan_out, 0.0);
    }
    return params;
}

namespace {

void normalize_inputs(const Normalization& norm, double t, double p, double& that, double& phat) {
    that = t / norm.t_end;
    phat = (p - norm.p_min) / (norm.p_max - norm.p_min);
}

// Runs the layer loop in thread-local scratch and returns a pointer to the
// output activations; valid until the next call on the same thread.
const double* forward_scratch(const MlpParams& params, double that, double phat) {
    const std::size_t n_layers = params.weights.size();
    int max_width = 2;
    for (int n : params.layer_sizes) max_width = std::max(max_width, n);
    // Two ping-pong scratch buffers keep the hot path allocation-free.
    thread_local std::vector<double> buf_a, buf_b;
    if (buf_a.size() < static_cast<std::size_t>(max_width)) {
        buf_a.resize(max_width);
        buf_b.resize(max_width);
    }
    double* a = buf_a.data();
    double* z = buf_b.data();
    a[0] = that;
    a[1] = phat;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int n_out = params.layer_sizes[l + 1];
        const int n_in = params.layer_sizes[l];
        const double* w = params.weights[l].data();
        const double* b = params.biases[l].data();
        const bool hidden = l + 1 < n_layers;
        for (int i = 0; i < n_out; ++i) {
            double acc = b[i];
            const double* row = w + static_cast<std::size_t>(i) * n_in;
            for (int j = 0; j < n_in; ++j) acc += row[j] * a[j];
            z[i] = hidden ? std::tanh(acc) : acc;
        }
        std::swap(a, z);
    }
    return a;
}

}  // namespace

std::vector<double> forward(const MlpParams& params, const Normalization& norm,
                            double t, double p) {
    double that, phat;
    normalize_inputs(norm, t, p, that, phat);
    const double* out = forward_scratch(params, that, phat);
    return std::vector<double>(out, out + params.layer_sizes.back());
}

double forward_head(const MlpParams& params, const Normalization& norm, double t, double p) {
    double that, phat;
    normalize_inputs(norm, t, p, that, phat);
    return forward_scratch(params, that, phat)[0];
}

MlpTape forward_tape(const MlpParams& params, const Normalization& norm, double t, double p) {
    double that, phat;
    normalize_inputs(norm, t, p, that, phat);

    const std::size_t n_layers = params.weights.size();
    MlpTape tape;
    tape.a.resize(n_layers + 1);
    tape.a1.resize(n_layers + 1);
    tape.a2.resize(n_layers + 1);
    tape.zp1.resize(n_layers);
    tape.zp2.resize(n_layers);

    tape.a[0] = {that, phat};
    tape.a1[0] = {1.0, 0.0};  // direction: normalized time
    tape.a2[0] = {0.0, 0.0};

    for (std::size_t l = 0; l < n_layers; ++l) {
        const int n_out = params.layer_sizes[l + 1];
        const int n_in = params.layer_sizes[l];
        const double* w = params.weights[l].data();
        const auto& a = tape.a[l];
        const auto& a1 = tape.a1[l];
        const auto& a2 = tape.a2[l];

        std::vector<double> z(params.biases[l]);
        std::vector<double> z1(n_out, 0.0), z2(n_out, 0.0);
        for (int i = 0; i < n_out; ++i) {
            double acc = z[i], acc1 = 0.0, acc2 = 0.0;
            const double* row = w + static_cast<std::size_t>(i) * n_in;
            for (int j = 0; j < n_in; ++j) {
                acc += row[j] * a[j];
                acc1 += row[j] * a1[j];
                acc2 += row[j] * a2[j];
            }
            z[i] = acc;
            z1[i] = acc1;
            z2[i] = acc2;
        }

        if (l + 1 < n_layers) {
            tape.zp1[l] = z1;
            tape.zp2[l] = z2;
            std::vector<double> act(n_out), act1(n_out), act2(n_out);
            for (int i = 0; i < n_out; ++i) {
                const double v = std::tanh(z[i]);
                const double s = 1.0 - v * v;  // tanh'
                act[i] = v;
                act1[i] = s * z1[i];
                // tanh'' chain: a'' = s z'' − 2 a s z'²
                act2[i] = s * z2[i] - 2.0 * v * s * z1[i] * z1[i];
            }
            tape.a[l + 1] = std::move(act);
            tape.a1[l + 1] = std::move(act1);
            tape.a2[l + 1] = std::move(act2);
        } else {
            tape.a[l + 1] = std::move(z);
            tape.a1[l + 1] = std::move(z1);
            tape.a2[l + 1] = std::move(z2);
        }
    }
    return tape;
}

ValueAndTimeDerivs tape_outputs(const MlpTape& tape, const Normalization& norm) {
    ValueAndTimeDerivs out;
    out.u = tape.a.back();
    out.u_t = tape.a1.back();
    out.u_tt = tape.a2.back();
    const double inv_t = 1.0 / norm.t_end;
    for (double& x : out.u_t) x *= inv_t;
    for (double& x : out.u_tt) x *= inv_t * inv_t;
    return out;
}

ValueAndTimeDerivs forward_with_time_derivs(const MlpParams& params, const Normalization& norm,
                                            double t, double p) {
    return tape_outputs(forward_tape(params, norm, t, p), norm);
}

void backward(const MlpParams& params, const Normalization& norm, const MlpTape& tape,
              std::span<const double> seed_u, std::span<const double> seed_ut,
              std::span<const double> seed_utt, std::span<double> grad) {
    const std::size_t n_layers = params.weights.size();
    const int n_out_final = params.layer_sizes.back();
    const double inv_t = 1.0 / norm.t_end;

    // Adjoints of (a, a', a'') at the current layer; normalized-time chain
    // factors fold into the derivative seeds.
    std::vector<double> ab(seed_u.begin(), seed_u.end());
    std::vector<double> ab1(n_out_final), ab2(n_out_final);
    for (int i = 0; i < n_out_final; ++i) {
        ab1[i] = seed_ut[i] * inv_t;
        ab2[i] = seed_utt[i] * inv_t * inv_t;
    }

    // Flat offsets of layer l's weight block.
    std::vector<std::size_t> offsets(n_layers + 1, 0);
    for (std::size_t l = 0; l < n_layers; ++l) {
        offsets[l + 1] = offsets[l] +
                         static_cast<std::size_t>(params.layer_sizes[l]) * params.layer_sizes[l + 1] +
                         params.layer_sizes[l + 1];
    }

    for (std::size_t li = n_layers; li-- > 0;) {
        const int n_out = params.layer_sizes[li + 1];
        const int n_in = params.layer_sizes[li];
        const double* w = params.weights[li].data();

        std::vector<double> zb(n_out), zb1(n_out), zb2(n_out);
        if (li + 1 < n_layers) {
            // Through the tanh node: a = tanh(z), a' = s z', a'' = s z'' − 2 a s z'².
            const auto& a = tape.a[li + 1];
            const auto& z1 = tape.zp1[li];
            const auto& z2 = tape.zp2[li];
            for (int i = 0; i < n_out; ++i) {
                const double v = a[i];
                const double s = 1.0 - v * v;
                zb[i] = ab[i] * s + ab1[i] * (-2.0 * v * s * z1[i]) +
                        ab2[i] * (-2.0 * v * s * z2[i] - 2.0 * s * (s - 2.0 * v * v) * z1[i] * z1[i]);
                zb1[i] = ab1[i] * s + ab2[i] * (-4.0 * v * s * z1[i]);
                zb2[i] = ab2[i] * s;
            }
        } else {
            zb = ab;
            zb1 = ab1;
            zb2 = ab2;
        }

        const auto& a_prev = tape.a[li];
        const auto& a1_prev = tape.a1[li];
        const auto& a2_prev = tape.a2[li];
        double* gw = grad.data() + offsets[li];
        double* gb = gw + static_cast<std::size_t>(n_out) * n_in;
        for (int i = 0; i < n_out; ++i) {
            double* grow = gw + static_cast<std::size_t>(i) * n_in;
            for (int j = 0; j < n_in; ++j) {
                grow[j] += zb[i] * a_prev[j] + zb1[i] * a1_prev[j] + zb2[i] * a2_prev[j];
            }
            gb[i] += zb[i];
        }

        if (li > 0) {
            std::vector<double> nab(n_in, 0.0), nab1(n_in, 0.0), nab2(n_in, 0.0);
            for (int i = 0; i < n_out; ++i) {
                const double* row = w + static_cast<std::size_t>(i) * n_in;
                for (int j = 0; j < n_in; ++j) {
                    nab[j] += row[j] * zb[i];
                    nab1[j] += row[j] * zb1[i];
                    nab2[j] += row[j] * zb2[i];
                }
            }
            ab = std::move(nab);
            ab1 = std::move(nab1);
            ab2 = std::move(nab2);
        }
    }
}

OutputGradients param_gradients(const MlpParams& params, const Normalization& norm,
                                double t, double p) {
    if (params.n_outputs() != 1) {
        throw std::invalid_argument("param_gradients expects a single-output network");
    }
    const MlpTape tape = forward_tape(params, norm, t, p);
    const std::size_t n = params.param_count();
    OutputGradients out{ParamGradient(n, 0.0), ParamGradient(n, 0.0), ParamGradient(n, 0.0)};
    const double one = 1.0, zero = 0.0;
    backward(params, norm, tape, {&one, 1}, {&zero, 1}, {&zero, 1}, out.du);
    backward(params, norm, tape, {&zero, 1}, {&one, 1}, {&zero, 1}, out.du_t);
    backward(params, norm, tape, {&zero, 1}, {&zero, 1}, {&one, 1}, out.du_tt);
    return out;
}

std::vector<double> flatten(const MlpParams& params) {
    std::vector<double> flat;
    flat.reserve(params.param_count());
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        flat.insert(flat.end(), params.weights[l].begin(), params.weights[l].end());
        flat.insert(flat.end(), params.biases[l].begin(), params.biases[l].end());
    }
    return flat;
}

void unflatten(std::span<const double> flat, MlpParams& params) {
    if (flat.size() != params.param_count()) {
        throw std::invalid_argument("flat vector length does not match parameter count");
    }
    std::size_t pos = 0;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        for (double& x : params.weights[l]) x = flat[pos++];
        for (double& x : params.biases[l]) x = flat[pos++];
    }
}

}  // namespace smib
