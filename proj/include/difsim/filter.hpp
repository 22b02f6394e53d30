#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "difsim/energy.hpp"
#include "difsim/matrix.hpp"
#include "difsim/rng.hpp"

namespace difsim {

// A stored (sample, exact leverage score) pair in a node's bounded buffer.
struct ScoredEntry {
    VecD sample;
    double score = 0.0;
};

struct FilterConfig {
    std::size_t buffer_size = 64;   // P
    std::size_t neighbors = 8;      // L
    double beta_min = 0.0;
    double beta_max = 1.0;
    std::size_t anneal_intervals = 10;  // number of intervals until beta_max
    double target_rate = 0.3;           // R

    void validate() const {
        if (buffer_size < 1) throw std::invalid_argument("filter: buffer_size must be >= 1");
        if (neighbors < 1) throw std::invalid_argument("filter: neighbors must be >= 1");
        if (neighbors >= buffer_size) throw std::invalid_argument("filter: neighbors must be < buffer_size");
        if (beta_min > beta_max) throw std::invalid_argument("filter: beta_min must be <= beta_max");
        if (anneal_intervals < 1) throw std::invalid_argument("filter: anneal_intervals must be >= 1");
        if (target_rate <= 0.0 || target_rate > 1.0)
            throw std::invalid_argument("filter: target_rate must lie in (0,1]");
    }

    // the estimation-error guarantee assumes L >= ln P
    bool neighbor_condition_ok() const {
        return static_cast<double>(neighbors) >= std::log(static_cast<double>(buffer_size));
    }
};

// Node-side state. The buffer always holds exactly P entries once
// initialized; refreshes overwrite the oldest entries in FIFO order.
struct NodeState {
    std::vector<ScoredEntry> buffer;
    std::size_t write_cursor = 0;      // next slot to overwrite (oldest entry)
    std::uint64_t interval_index = 0;  // completed feedback intervals
    RandomStream rng;
    EnergyLedger energy;

    bool buffer_ready() const { return !buffer.empty(); }

    // The initial P scores are all 1; the paired samples are the node's
    // first P observations.
    static NodeState initialize(const std::vector<VecD>& first_samples, std::size_t buffer_size,
                                std::uint64_t seed) {
        if (first_samples.size() != buffer_size)
            throw std::invalid_argument("node: need exactly buffer_size initial samples");
        NodeState node;
        node.buffer.reserve(buffer_size);
        for (const VecD& s : first_samples) node.buffer.push_back({s, 1.0});
        node.rng = RandomStream(seed);
        return node;
    }
};

inline double euclidean_distance(const VecD& a, const VecD& b) {
    if (a.size() != b.size()) throw std::invalid_argument("distance: dimension mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::sqrt(sq);
}

// Mean score of the L buffer entries nearest to x_t. Ties in distance are
// broken by lower buffer index, which makes the estimate a pure function of
// its inputs.
inline double knn_estimate(const VecD& x_t, const std::vector<ScoredEntry>& buffer, std::size_t L) {
    if (buffer.empty()) throw std::invalid_argument("knn_estimate: empty buffer");
    if (L < 1 || L > buffer.size()) throw std::invalid_argument("knn_estimate: L out of range");

    std::vector<std::pair<double, std::size_t>> order(buffer.size());
    for (std::size_t i = 0; i < buffer.size(); ++i)
        order[i] = {euclidean_distance(x_t, buffer[i].sample), i};
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(L), order.end());

    double sum = 0.0;
    for (std::size_t l = 0; l < L; ++l) sum += buffer[order[l].second].score;
    return sum / static_cast<double>(L);
}

// Prioritization temperature for a node that has completed
// `interval_index` feedback intervals: beta_min at the start, beta_max from
// the anneal_intervals-th interval on, linear in between.
inline double beta_schedule(std::uint64_t interval_index, const FilterConfig& config) {
    const double t_cal = static_cast<double>(config.anneal_intervals);
    const double k = static_cast<double>(interval_index);
    const double frac = std::max((t_cal - k) / t_cal, 0.0);
    return config.beta_max - (config.beta_max - config.beta_min) * frac;
}

// Softmax weight of s_hat against the P stored scores,
//   q = exp(beta*s_hat) / sum_i exp(beta*s_i),
// computed with max subtraction. Note q is a relative weight and can exceed
// 1; decide_transmit maps it to a probability.
inline double transmit_probability(double s_hat, const std::vector<ScoredEntry>& buffer, double beta) {
    if (buffer.empty()) throw std::invalid_argument("transmit_probability: empty buffer");
    if (!std::isfinite(s_hat)) throw std::invalid_argument("transmit_probability: non-finite estimate");

    double mx = beta * s_hat;
    for (const ScoredEntry& e : buffer) mx = std::max(mx, beta * e.score);
    double denom = 0.0;
    for (const ScoredEntry& e : buffer) denom += std::exp(beta * e.score - mx);
    return std::exp(beta * s_hat - mx) / denom;
}

// Probability actually used for the Bernoulli draw: min(1, R*P*q). At
// beta=0 the softmax weight is exactly 1/P, so the transmit probability is
// exactly R and the scheme degenerates to the uniform baseline; for beta>0
// the same expected budget shifts toward high-score samples.
inline double calibrated_transmit_probability(double q, std::size_t buffer_size, double rate) {
    return std::min(1.0, rate * static_cast<double>(buffer_size) * q);
}

// The node-side transmit decision for a fresh sample. Labels are not part
// of the signature: the policy can never see them.
inline bool decide_transmit(const VecD& x_t, NodeState& node, const FilterConfig& config) {
    if (!node.buffer_ready()) throw std::logic_error("decide_transmit: buffer not initialized");
    const double s_hat = knn_estimate(x_t, node.buffer, config.neighbors);
    const double beta = beta_schedule(node.interval_index, config);
    const double q = transmit_probability(s_hat, node.buffer, beta);
    const double p_tx = calibrated_transmit_probability(q, node.buffer.size(), config.target_rate);
    return node.rng.bernoulli(p_tx);
}

// Deterministic part of decide_transmit, exposed for tests and for the
// exact-quota transmission mode.
inline double transmit_chance(const VecD& x_t, const NodeState& node, const FilterConfig& config) {
    const double s_hat = knn_estimate(x_t, node.buffer, config.neighbors);
    const double beta = beta_schedule(node.interval_index, config);
    const double q = transmit_probability(s_hat, node.buffer, beta);
    return calibrated_transmit_probability(q, node.buffer.size(), config.target_rate);
}

// Feedback entries overwrite the oldest stored entries; the interval
// counter advances even for empty feedback, and one reception event is
// charged to the ledger.
inline void refresh_buffer(NodeState& node, const std::vector<ScoredEntry>& feedback,
                           const EnergyParams& energy) {
    if (feedback.size() > node.buffer.size())
        throw std::invalid_argument("refresh_buffer: feedback longer than buffer");
    for (const ScoredEntry& e : feedback) {
        node.buffer[node.write_cursor] = e;
        node.write_cursor = (node.write_cursor + 1) % node.buffer.size();
    }
    ++node.interval_index;
    node.energy.charge_rx(energy);
}

}  // namespace difsim
