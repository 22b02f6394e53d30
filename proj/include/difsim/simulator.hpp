#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "difsim/ap.hpp"
#include "difsim/baselines.hpp"
#include "difsim/datasets.hpp"
#include "difsim/energy.hpp"
#include "difsim/filter.hpp"
#include "difsim/model.hpp"
#include "difsim/rng.hpp"

namespace difsim {

enum class Scheme { importance, uniform, genie, transmit_all };

inline std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::importance: return "importance";
        case Scheme::uniform: return "uniform";
        case Scheme::genie: return "genie";
        case Scheme::transmit_all: return "transmit_all";
    }
    throw std::invalid_argument("unknown scheme");
}

inline Scheme scheme_from_string(const std::string& name) {
    if (name == "importance") return Scheme::importance;
    if (name == "uniform") return Scheme::uniform;
    if (name == "genie") return Scheme::genie;
    if (name == "transmit_all") return Scheme::transmit_all;
    throw std::invalid_argument("unknown scheme: " + name);
}

struct SimConfig {
    std::size_t node_count = 4;
    std::size_t rounds = 10;
    double rate = 0.3;
    Scheme scheme = Scheme::importance;
    std::size_t train_epochs = 1;
    std::size_t train_batch_size = 0;  // 0 = one full-batch step per epoch
    bool exact_quota = false;          // systematic thinning instead of independent coin flips
    std::uint64_t run_seed = 1;
    FilterConfig filter;
    ModelConfig model;
    OptimizerConfig optimizer;
    EnergyParams energy;

    void validate() const {
        if (node_count < 1) throw std::invalid_argument("node_count must be >= 1");
        if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
        if (!(rate > 0.0 && rate <= 1.0)) throw std::invalid_argument("rate outside (0, 1]");
        if (train_epochs < 1) throw std::invalid_argument("train_epochs must be >= 1");
        FilterConfig f = filter;
        f.target_rate = rate;
        f.validate();
        optimizer.validate();
        energy.validate();
    }
};

struct RoundMetrics {
    std::size_t round = 0;  // 1-based
    double train_error = 0.0;
    double test_error = 0.0;
    std::uint64_t packets = 0;
    double energy_mean = 0.0;
    double energy_max = 0.0;
    double beta = 0.0;

    bool operator==(const RoundMetrics&) const = default;
};

struct RunResult {
    std::vector<RoundMetrics> rounds;
    std::vector<EnergyLedger> node_ledgers;
    std::vector<std::uint64_t> node_packets;
    std::uint64_t packets_total = 0;
    std::uint64_t decisions_total = 0;
    std::size_t depleted_nodes = 0;
    double realized_rate = 0.0;
};

// Misclassification rate of the model over the listed dataset rows.
inline double evaluate(Mlp& model, const Dataset& ds, const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw std::invalid_argument("evaluate: empty index set");
    std::size_t wrong = 0;
    const std::size_t chunk = 256;
    for (std::size_t start = 0; start < indices.size(); start += chunk) {
        const std::size_t stop = std::min(start + chunk, indices.size());
        std::vector<VecD> rows;
        rows.reserve(stop - start);
        for (std::size_t i = start; i < stop; ++i) rows.push_back(ds.features.row_vec(indices[i]));
        Matrix out = model.forward(Matrix::from_rows(rows), /*training=*/false);
        for (std::size_t i = start; i < stop; ++i) {
            auto row = out.row(i - start);
            std::size_t best = 0;
            for (std::size_t c = 1; c < row.size(); ++c)
                if (row[c] > row[best]) best = c;
            if (static_cast<int>(best) != ds.labels[indices[i]]) ++wrong;
        }
    }
    return static_cast<double>(wrong) / static_cast<double>(indices.size());
}

// Misclassification rate over received records (the AP's training history).
inline double evaluate_records(Mlp& model, const std::vector<ReceivedRecord>& records) {
    if (records.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t wrong = 0;
    const std::size_t chunk = 256;
    for (std::size_t start = 0; start < records.size(); start += chunk) {
        const std::size_t stop = std::min(start + chunk, records.size());
        std::vector<VecD> rows;
        rows.reserve(stop - start);
        for (std::size_t i = start; i < stop; ++i) rows.push_back(records[i].sample);
        Matrix out = model.forward(Matrix::from_rows(rows), /*training=*/false);
        for (std::size_t i = start; i < stop; ++i) {
            auto row = out.row(i - start);
            std::size_t best = 0;
            for (std::size_t c = 1; c < row.size(); ++c)
                if (row[c] > row[best]) best = c;
            if (static_cast<int>(best) != records[i].label) ++wrong;
        }
    }
    return static_cast<double>(wrong) / static_cast<double>(records.size());
}

// Expected device lifetime in intervals, from average per-interval drain.
inline double longevity(const EnergyLedger& ledger, const EnergyParams& params,
                        std::uint64_t intervals_elapsed) {
    if (intervals_elapsed == 0) throw std::invalid_argument("longevity: no elapsed intervals");
    const double per_interval = ledger.consumed / static_cast<double>(intervals_elapsed);
    if (per_interval <= 0.0) return std::numeric_limits<double>::infinity();
    return params.battery_capacity / per_interval;
}

struct ScalingFit {
    double coefficient = 0.0;  // multiplicative constant of the power law
    double exponent = 0.0;
    std::size_t points_used = 0;
};

// Least-squares fit of error ~ coefficient * budget^exponent in log-log
// space. Zero errors are floored to keep logs finite.
inline ScalingFit fit_scaling_law(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::invalid_argument("fit_scaling_law: need at least 2 points");
    std::vector<double> xs, ys;
    for (const auto& [budget, error] : points) {
        if (!(budget > 0.0)) throw std::invalid_argument("fit_scaling_law: budget must be positive");
        xs.push_back(std::log(budget));
        ys.push_back(std::log(std::max(error, 1e-12)));
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(ys.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("fit_scaling_law: budgets are all identical");
    ScalingFit fit;
    fit.exponent = sxy / sxx;
    fit.coefficient = std::exp(my - fit.exponent * mx);
    fit.points_used = points.size();
    return fit;
}

namespace detail {

// Per-node cursor over its assigned stream, with optional wraparound.
struct StreamCursor {
    const std::vector<std::size_t>* order = nullptr;
    std::size_t pos = 0;
    bool cycle = false;

    std::size_t next() {
        if (pos >= order->size()) {
            if (!cycle) throw std::runtime_error("stream exhausted; enable cycling or provide more samples");
            pos = 0;
        }
        return (*order)[pos++];
    }
};

}  // namespace detail

// Full discrete-time run: per round, every live node wakes once per stream
// sample, decides, and possibly transmits; the AP trains on the round's
// receipts, scores them, and feeds scored samples back (importance scheme
// only). One round = one feedback interval.
inline RunResult run(const SimConfig& config, const Dataset& ds, const StreamSet& streams) {
    config.validate();
    ds.validate();
    if (streams.node_streams.size() != config.node_count)
        throw std::invalid_argument("run: stream count does not match node count");
    if (config.model.layer_sizes.front() != ds.feature_dim() ||
        config.model.layer_sizes.back() != static_cast<std::size_t>(ds.class_count))
        throw std::invalid_argument("run: model shape does not match dataset");

    FilterConfig filter = config.filter;
    filter.target_rate = config.rate;

    const std::size_t K = config.node_count;
    const std::size_t P = filter.buffer_size;
    const bool importance = config.scheme == Scheme::importance;
    const std::size_t warm = importance ? P : 0;

    std::vector<detail::StreamCursor> cursors(K);
    for (std::size_t k = 0; k < K; ++k) {
        cursors[k] = {&streams.node_streams[k], 0, streams.cycle};
        if (!streams.cycle) {
            const std::size_t per_round = streams.samples_per_interval;
            if (streams.node_streams[k].size() < warm + config.rounds * per_round)
                throw std::invalid_argument("run: node stream too short for configured rounds");
        }
    }
    const std::size_t m = streams.samples_per_interval;

    // Node state: importance nodes warm their buffers from the first P
    // stream samples (no observations are spent, so no energy is drawn).
    std::vector<NodeState> nodes;
    nodes.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        const std::uint64_t node_seed = mix_seed(config.run_seed, 0x1000 + k);
        if (importance) {
            std::vector<VecD> first;
            first.reserve(P);
            for (std::size_t i = 0; i < P; ++i) first.push_back(ds.features.row_vec(cursors[k].next()));
            nodes.push_back(NodeState::initialize(first, P, node_seed));
        } else {
            NodeState n;
            n.rng = RandomStream(node_seed);
            nodes.push_back(std::move(n));
        }
    }

    ModelConfig mc = config.model;
    mc.seed = mix_seed(config.run_seed, mc.seed);
    AccessPoint ap(Mlp(mc), K);

    ClassDistribution genie_dist;
    if (config.scheme == Scheme::genie) {
        std::vector<int> train_labels;
        for (const auto& stream : streams.node_streams)
            for (std::size_t idx : stream) train_labels.push_back(ds.labels[idx]);
        genie_dist = ClassDistribution::from_labels(train_labels, ds.class_count);
    }

    RunResult result;
    result.node_packets.assign(K, 0);

    for (std::size_t round = 1; round <= config.rounds; ++round) {
        const double beta_now = beta_schedule(round - 1, filter);
        std::uint64_t round_packets = 0;

        for (std::size_t k = 0; k < K; ++k) {
            NodeState& node = nodes[k];
            double quota_acc = 0.0;
            double quota_phase = 0.0;
            if (config.exact_quota) quota_phase = node.rng.uniform();

            for (std::size_t i = 0; i < m; ++i) {
                if (node.energy.depleted(config.energy)) break;  // battery out: node is silent
                const std::size_t idx = cursors[k].next();
                node.energy.charge_wake(config.energy);
                ++result.decisions_total;

                const VecD x = ds.features.row_vec(idx);
                double p_tx = 0.0;
                switch (config.scheme) {
                    case Scheme::importance: p_tx = transmit_chance(x, node, filter); break;
                    case Scheme::uniform: p_tx = config.rate; break;
                    case Scheme::genie:
                        p_tx = genie_transmit_probability(ds.labels[idx], genie_dist, config.rate);
                        break;
                    case Scheme::transmit_all: p_tx = 1.0; break;
                }

                bool tx;
                if (config.exact_quota) {
                    const double before = std::floor(quota_acc + quota_phase);
                    quota_acc += p_tx;
                    tx = std::floor(quota_acc + quota_phase) > before;
                } else {
                    tx = node.rng.bernoulli(p_tx);
                }

                if (tx) {
                    node.energy.charge_tx(config.energy);
                    ++round_packets;
                    ++result.node_packets[k];
                    ap.receive(static_cast<int>(k), idx, x, label_oracle(ds, idx));
                }
            }
        }

        ap.train_round(config.optimizer, config.train_epochs, config.train_batch_size);
        ap.finish_interval();

        if (importance) {
            for (std::size_t k = 0; k < K; ++k) {
                if (nodes[k].energy.depleted(config.energy)) continue;
                std::vector<ScoredEntry> fb = ap.select_feedback(static_cast<int>(k), P);
                if (!fb.empty()) {
                    refresh_buffer(nodes[k], fb, config.energy);
                } else {
                    ++nodes[k].interval_index;  // schedule still advances on an empty interval
                }
            }
        }

        RoundMetrics metrics;
        metrics.round = round;
        metrics.beta = beta_now;
        metrics.packets = round_packets;
        metrics.train_error = evaluate_records(ap.model(), ap.cumulative());
        metrics.test_error = evaluate(ap.model(), ds, streams.test_indices);
        double total = 0.0, peak = 0.0;
        for (const NodeState& n : nodes) {
            total += n.energy.consumed;
            peak = std::max(peak, n.energy.consumed);
        }
        metrics.energy_mean = total / static_cast<double>(K);
        metrics.energy_max = peak;
        result.rounds.push_back(metrics);
        result.packets_total += round_packets;
    }

    for (const NodeState& n : nodes) {
        result.node_ledgers.push_back(n.energy);
        if (n.energy.depleted(config.energy)) ++result.depleted_nodes;
    }
    result.realized_rate = result.decisions_total == 0
                               ? 0.0
                               : static_cast<double>(result.packets_total) /
                                     static_cast<double>(result.decisions_total);
    return result;
}

}  // namespace difsim
