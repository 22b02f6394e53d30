#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "difsim/matrix.hpp"
#include "difsim/rng.hpp"

namespace difsim {

enum class Activation { relu, sigmoid, tanh };
enum class LossKind { cross_entropy, mean_squared_error };
enum class OptimizerKind { sgd, adam };

struct ModelConfig {
    std::vector<std::size_t> layer_sizes;  // input dim, hidden dims..., output dim
    Activation activation = Activation::relu;
    double dropout_rate = 0.0;
    LossKind loss_kind = LossKind::cross_entropy;
    std::uint64_t seed = 0;
};

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::sgd;
    double learning_rate = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;

    void validate() const {
        if (learning_rate <= 0.0) throw std::invalid_argument("optimizer: learning_rate must be > 0");
        if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0)
            throw std::invalid_argument("optimizer: adam betas must lie in (0,1)");
        if (adam_epsilon <= 0.0) throw std::invalid_argument("optimizer: adam_epsilon must be > 0");
    }
};

// Parameter-shaped container, used both for the parameters themselves
// (inside ModelState) and for gradients.
struct ParamSet {
    std::vector<Matrix> weights;  // weights[l] has shape (layer_sizes[l+1] x layer_sizes[l])
    std::vector<VecD> biases;

    bool operator==(const ParamSet&) const = default;
};

struct ModelState {
    ParamSet params;
    ParamSet adam_m;  // empty unless Adam has stepped
    ParamSet adam_v;
    std::uint64_t step_count = 0;

    bool operator==(const ModelState&) const = default;
};

using Gradients = ParamSet;

namespace detail {

inline double activate(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::tanh: return std::tanh(z);
    }
    return z;
}

// derivative expressed through the activation value where possible
inline double activate_grad(Activation a, double z, double act) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: return act * (1.0 - act);
        case Activation::tanh: return 1.0 - act * act;
    }
    return 1.0;
}

// in place, max-subtraction for stability
inline void softmax_row(std::span<double> row) {
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : row) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : row) v /= sum;
}

}  // namespace detail

// Small fully connected network: the AP's function approximator. Holds its
// parameters, optimizer accumulators, and a private random stream for
// initialization and dropout masks, so trajectories are reproducible from
// the config seed alone.
class Mlp {
public:
    explicit Mlp(ModelConfig config) : config_(std::move(config)), rng_(config_.seed) {
        if (config_.layer_sizes.size() < 2)
            throw std::invalid_argument("model: layer_sizes needs at least input and output");
        for (std::size_t s : config_.layer_sizes)
            if (s < 1) throw std::invalid_argument("model: every layer size must be >= 1");
        if (config_.dropout_rate < 0.0 || config_.dropout_rate >= 1.0)
            throw std::invalid_argument("model: dropout_rate must lie in [0,1)");

        const auto& ls = config_.layer_sizes;
        for (std::size_t l = 0; l + 1 < ls.size(); ++l) {
            const std::size_t fan_in = ls[l];
            const std::size_t fan_out = ls[l + 1];
            const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            Matrix w(fan_out, fan_in);
            for (double& v : w.data) v = rng_.uniform(-a, a);
            state_.params.weights.push_back(std::move(w));
            state_.params.biases.emplace_back(fan_out, 0.0);
        }
    }

    const ModelConfig& config() const { return config_; }
    const ModelState& state() const { return state_; }
    ModelState& state() { return state_; }

    std::size_t input_dim() const { return config_.layer_sizes.front(); }
    std::size_t output_dim() const { return config_.layer_sizes.back(); }

    // Row i of the result is the head output for sample i: class probabilities
    // for the cross-entropy head, raw outputs for mean squared error. With
    // training=true, hidden activations are dropped with probability
    // dropout_rate and survivors scaled by 1/(1-dropout_rate).
    Matrix forward(const Matrix& batch, bool training) {
        check_batch(batch);
        Matrix out(batch.rows, output_dim());
        for (std::size_t r = 0; r < batch.rows; ++r) {
            VecD o = forward_sample(batch.row_vec(r), training, nullptr, nullptr);
            for (std::size_t c = 0; c < o.size(); ++c) out.at(r, c) = o[c];
        }
        return out;
    }

    // Mean per-sample loss of head outputs against integer class labels.
    // Cross entropy expects the probabilities produced by forward(); MSE
    // compares raw outputs against one-hot targets.
    double loss(const Matrix& outputs, const std::vector<int>& labels) const {
        if (outputs.rows != labels.size())
            throw std::invalid_argument("loss: outputs rows must equal labels length");
        double total = 0.0;
        for (std::size_t r = 0; r < outputs.rows; ++r)
            total += sample_loss(outputs.row(r), labels[r]);
        return total / static_cast<double>(outputs.rows);
    }

    // Exact backpropagation gradient of the mean batch loss. When training is
    // true, one dropout mask per sample is drawn and used consistently for
    // the internal forward pass and the backward pass.
    Gradients gradient(const Matrix& batch, const std::vector<int>& labels, bool training = false) {
        check_batch(batch);
        if (batch.rows != labels.size())
            throw std::invalid_argument("gradient: batch rows must equal labels length");
        if (batch.rows == 0) throw std::invalid_argument("gradient: empty batch");

        Gradients grads = zero_like();
        const double inv_b = 1.0 / static_cast<double>(batch.rows);
        const auto& ls = config_.layer_sizes;
        const std::size_t n_layers = ls.size() - 1;

        for (std::size_t r = 0; r < batch.rows; ++r) {
            std::vector<VecD> zs(n_layers), acts(n_layers + 1);
            acts[0] = batch.row_vec(r);
            std::vector<VecD> masks;
            forward_sample(acts[0], training, &zs, &acts, &masks);

            const int label = labels[r];
            check_label(label);

            // delta at the output pre-activation
            VecD delta(output_dim());
            if (config_.loss_kind == LossKind::cross_entropy) {
                VecD probs = acts[n_layers];
                for (std::size_t c = 0; c < delta.size(); ++c)
                    delta[c] = probs[c] - (static_cast<int>(c) == label ? 1.0 : 0.0);
            } else {
                for (std::size_t c = 0; c < delta.size(); ++c)
                    delta[c] = acts[n_layers][c] - (static_cast<int>(c) == label ? 1.0 : 0.0);
            }

            for (std::size_t l = n_layers; l-- > 0;) {
                const Matrix& w = state_.params.weights[l];
                for (std::size_t i = 0; i < w.rows; ++i) {
                    grads.biases[l][i] += inv_b * delta[i];
                    for (std::size_t j = 0; j < w.cols; ++j)
                        grads.weights[l].at(i, j) += inv_b * delta[i] * acts[l][j];
                }
                if (l == 0) break;
                VecD prev(w.cols, 0.0);
                for (std::size_t j = 0; j < w.cols; ++j) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < w.rows; ++i) acc += w.at(i, j) * delta[i];
                    // chain through dropout mask, then through the activation
                    if (training && config_.dropout_rate > 0.0) acc *= masks[l - 1][j];
                    const double z = zs[l - 1][j];
                    acc *= detail::activate_grad(config_.activation, z,
                                                 detail::activate(config_.activation, z));
                    prev[j] = acc;
                }
                delta = std::move(prev);
            }
        }
        return grads;
    }

    // One optimizer update; increments step_count. SGD is the plain rule
    // w <- w - eta*g, Adam the bias-corrected moment update.
    void optimizer_step(const Gradients& grads, const OptimizerConfig& opt) {
        opt.validate();
        check_shapes(grads);
        if (opt.kind == OptimizerKind::sgd) {
            for (std::size_t l = 0; l < grads.weights.size(); ++l) {
                for (std::size_t k = 0; k < grads.weights[l].data.size(); ++k)
                    state_.params.weights[l].data[k] -= opt.learning_rate * grads.weights[l].data[k];
                for (std::size_t k = 0; k < grads.biases[l].size(); ++k)
                    state_.params.biases[l][k] -= opt.learning_rate * grads.biases[l][k];
            }
        } else {
            if (state_.adam_m.weights.empty()) {
                state_.adam_m = zero_like();
                state_.adam_v = zero_like();
            }
            const double t = static_cast<double>(state_.step_count + 1);
            const double c1 = 1.0 - std::pow(opt.adam_beta1, t);
            const double c2 = 1.0 - std::pow(opt.adam_beta2, t);
            auto update = [&](double& w, double& m, double& v, double g) {
                m = opt.adam_beta1 * m + (1.0 - opt.adam_beta1) * g;
                v = opt.adam_beta2 * v + (1.0 - opt.adam_beta2) * g * g;
                const double mhat = m / c1;
                const double vhat = v / c2;
                w -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.adam_epsilon);
            };
            for (std::size_t l = 0; l < grads.weights.size(); ++l) {
                for (std::size_t k = 0; k < grads.weights[l].data.size(); ++k)
                    update(state_.params.weights[l].data[k], state_.adam_m.weights[l].data[k],
                           state_.adam_v.weights[l].data[k], grads.weights[l].data[k]);
                for (std::size_t k = 0; k < grads.biases[l].size(); ++k)
                    update(state_.params.biases[l][k], state_.adam_m.biases[l][k],
                           state_.adam_v.biases[l][k], grads.biases[l][k]);
            }
        }
        ++state_.step_count;
    }

    // Euclidean norm of the flattened per-sample loss gradient. Dropout is
    // never applied here, so the score is a deterministic function of the
    // parameters and the sample.
    double leverage_score(const VecD& sample, int label) {
        Matrix batch = Matrix::from_rows({sample});
        Gradients g = gradient(batch, {label}, /*training=*/false);
        double sq = 0.0;
        for (const Matrix& w : g.weights)
            for (double v : w.data) sq += v * v;
        for (const VecD& b : g.biases)
            for (double v : b) sq += v * v;
        return std::sqrt(sq);
    }

    Gradients zero_like() const {
        Gradients g;
        for (const Matrix& w : state_.params.weights) g.weights.emplace_back(w.rows, w.cols);
        for (const VecD& b : state_.params.biases) g.biases.emplace_back(b.size(), 0.0);
        return g;
    }

private:
    // Forward one sample. When zs/acts are non-null they receive the
    // pre-activations and (post-dropout) activations; masks receives one
    // dropout mask per hidden layer when training.
    VecD forward_sample(const VecD& x, bool training, std::vector<VecD>* zs, std::vector<VecD>* acts,
                        std::vector<VecD>* masks = nullptr) {
        const auto& ls = config_.layer_sizes;
        const std::size_t n_layers = ls.size() - 1;
        VecD a = x;
        std::vector<VecD> local_masks;
        for (std::size_t l = 0; l < n_layers; ++l) {
            const Matrix& w = state_.params.weights[l];
            VecD z(w.rows);
            for (std::size_t i = 0; i < w.rows; ++i) {
                double acc = state_.params.biases[l][i];
                for (std::size_t j = 0; j < w.cols; ++j) acc += w.at(i, j) * a[j];
                z[i] = acc;
            }
            if (zs) (*zs)[l] = z;
            VecD out(w.rows);
            if (l + 1 < n_layers) {
                // hidden layer: activation then (optionally) inverted dropout
                VecD mask;
                const bool drop = training && config_.dropout_rate > 0.0;
                if (drop) mask.assign(w.rows, 1.0);
                for (std::size_t i = 0; i < w.rows; ++i) {
                    double v = detail::activate(config_.activation, z[i]);
                    if (drop) {
                        if (rng_.uniform() < config_.dropout_rate) {
                            mask[i] = 0.0;
                            v = 0.0;
                        } else {
                            mask[i] = 1.0 / (1.0 - config_.dropout_rate);
                            v *= mask[i];
                        }
                    }
                    out[i] = v;
                }
                if (drop) local_masks.push_back(std::move(mask));
            } else {
                // output layer: softmax head for cross entropy, identity for MSE
                out = z;
                if (config_.loss_kind == LossKind::cross_entropy)
                    detail::softmax_row(std::span<double>(out.data(), out.size()));
            }
            if (acts) (*acts)[l + 1] = out;
            a = std::move(out);
        }
        if (masks) *masks = std::move(local_masks);
        return a;
    }

    double sample_loss(std::span<const double> out, int label) const {
        check_label(label);
        if (config_.loss_kind == LossKind::cross_entropy) {
            return -std::log(out[static_cast<std::size_t>(label)]);
        }
        double acc = 0.0;
        for (std::size_t c = 0; c < out.size(); ++c) {
            const double t = static_cast<int>(c) == label ? 1.0 : 0.0;
            const double d = out[c] - t;
            acc += 0.5 * d * d;
        }
        return acc;
    }

    void check_batch(const Matrix& batch) const {
        if (batch.cols != input_dim())
            throw std::invalid_argument("model: batch feature dimension " + std::to_string(batch.cols) +
                                        " does not match input layer " + std::to_string(input_dim()));
    }

    void check_label(int label) const {
        if (label < 0 || static_cast<std::size_t>(label) >= output_dim())
            throw std::out_of_range("model: label " + std::to_string(label) + " outside class range");
    }

    void check_shapes(const Gradients& g) const {
        if (g.weights.size() != state_.params.weights.size())
            throw std::invalid_argument("optimizer_step: gradient layer count mismatch");
        for (std::size_t l = 0; l < g.weights.size(); ++l)
            if (g.weights[l].rows != state_.params.weights[l].rows ||
                g.weights[l].cols != state_.params.weights[l].cols ||
                g.biases[l].size() != state_.params.biases[l].size())
                throw std::invalid_argument("optimizer_step: gradient shape mismatch");
    }

    ModelConfig config_;
    ModelState state_;
    RandomStream rng_;
};

}  // namespace difsim
