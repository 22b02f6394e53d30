#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "difsim/bounds.hpp"
#include "difsim/datasets.hpp"
#include "difsim/simulator.hpp"

namespace difsim {

// Error taxonomy, mapped to process exit codes by the CLI:
//   ConfigError -> 1, AssertionError -> 2, IoError -> 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AssertionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// experiment description

struct DatasetSpec {
    StreamSource source = StreamSource::synthetic_gaussians;
    bool apply_normalize = true;

    // csv
    std::string csv_path;
    std::string label_column;  // by name when non-empty and not numeric
    long long label_index = -1;
    bool has_header = true;

    // idx
    std::string idx_images;
    std::string idx_labels;

    // synthetic_gaussians
    std::vector<VecD> class_means = {{-1.0, -1.0}, {1.0, 1.0}};
    std::vector<double> class_scales = {1.0, 1.0};
    std::vector<double> class_weights = {0.5, 0.5};
    std::size_t count = 4000;
    std::uint64_t seed = 7;

    // synthetic_flow
    std::size_t flow_channels = 8;
    std::size_t flow_length = 4000;
    std::size_t flow_anomalies = 40;
};

struct SweepSpec {
    std::vector<double> rates;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> schemes;
};

struct ExperimentSpec {
    DatasetSpec dataset;
    StreamConfig stream;
    SimConfig sim;                              // model.layer_sizes filled at instantiation
    std::vector<std::size_t> hidden = {8};      // hidden layer widths
    SweepSpec sweep;
    std::string out_dir = "out";

    ExperimentSpec() { sim.optimizer.kind = OptimizerKind::adam; }
};

// ---------------------------------------------------------------------------
// parsing

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& section,
                       std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("config: unknown key '" + section + "." + item.key() + "'");
    }
}

template <typename T>
T get_typed(const json& j, const std::string& section, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: '" + section + "." + key + "' has the wrong type");
    }
}

inline std::size_t get_count(const json& j, const std::string& section, const char* key,
                             std::size_t fallback) {
    const auto v = get_typed<long long>(j, section, key, static_cast<long long>(fallback));
    if (v < 0) throw ConfigError("config: '" + section + "." + std::string(key) + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

inline void require_file(const std::string& path, const std::string& what) {
    if (!std::filesystem::exists(path))
        throw ConfigError("config: " + what + " does not exist: " + path);
}

inline DatasetSpec parse_dataset(const json& j) {
    check_keys(j, "dataset",
               {"source", "normalize", "path", "label_column", "has_header", "images", "labels",
                "class_means", "class_scales", "class_weights", "count", "seed", "channels",
                "length", "anomalies"});
    DatasetSpec d;
    const std::string source = get_typed<std::string>(j, "dataset", "source", "synthetic_gaussians");
    if (source == "csv")
        d.source = StreamSource::csv;
    else if (source == "idx")
        d.source = StreamSource::idx;
    else if (source == "synthetic_gaussians")
        d.source = StreamSource::synthetic_gaussians;
    else if (source == "synthetic_flow")
        d.source = StreamSource::synthetic_flow;
    else
        throw ConfigError("config: unknown dataset.source '" + source + "'");

    d.apply_normalize = get_typed<bool>(j, "dataset", "normalize", true);

    if (d.source == StreamSource::csv) {
        d.csv_path = get_typed<std::string>(j, "dataset", "path", "");
        if (d.csv_path.empty()) throw ConfigError("config: dataset.path is required for csv");
        require_file(d.csv_path, "dataset.path");
        d.has_header = get_typed<bool>(j, "dataset", "has_header", true);
        if (!j.contains("label_column"))
            throw ConfigError("config: dataset.label_column is required for csv");
        if (j.at("label_column").is_string())
            d.label_column = j.at("label_column").get<std::string>();
        else if (j.at("label_column").is_number_integer())
            d.label_index = j.at("label_column").get<long long>();
        else
            throw ConfigError("config: dataset.label_column must be a name or a column index");
        if (d.label_column.empty() && d.label_index < 0)
            throw ConfigError("config: dataset.label_column index must be non-negative");
    } else if (d.source == StreamSource::idx) {
        d.idx_images = get_typed<std::string>(j, "dataset", "images", "");
        d.idx_labels = get_typed<std::string>(j, "dataset", "labels", "");
        if (d.idx_images.empty() || d.idx_labels.empty())
            throw ConfigError("config: dataset.images and dataset.labels are required for idx");
        require_file(d.idx_images, "dataset.images");
        require_file(d.idx_labels, "dataset.labels");
    } else if (d.source == StreamSource::synthetic_gaussians) {
        if (j.contains("class_means")) {
            try {
                d.class_means = j.at("class_means").get<std::vector<VecD>>();
            } catch (const json::exception&) {
                throw ConfigError("config: dataset.class_means must be a list of numeric vectors");
            }
        }
        d.class_scales = get_typed<std::vector<double>>(j, "dataset", "class_scales", d.class_scales);
        d.class_weights = get_typed<std::vector<double>>(j, "dataset", "class_weights", d.class_weights);
        d.count = get_count(j, "dataset", "count", d.count);
        d.seed = get_typed<std::uint64_t>(j, "dataset", "seed", d.seed);
        if (d.class_scales.size() == 1 && d.class_means.size() > 1)
            d.class_scales.assign(d.class_means.size(), d.class_scales.front());
        if (d.class_weights.empty() && !d.class_means.empty())
            d.class_weights.assign(d.class_means.size(), 1.0 / static_cast<double>(d.class_means.size()));
    } else {
        d.flow_channels = get_count(j, "dataset", "channels", d.flow_channels);
        d.flow_length = get_count(j, "dataset", "length", d.flow_length);
        d.flow_anomalies = get_count(j, "dataset", "anomalies", d.flow_anomalies);
        d.seed = get_typed<std::uint64_t>(j, "dataset", "seed", d.seed);
    }
    return d;
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    throw ConfigError("config: unknown model.activation '" + s + "'");
}

inline LossKind loss_from_string(const std::string& s) {
    if (s == "cross_entropy") return LossKind::cross_entropy;
    if (s == "mean_squared_error" || s == "mse") return LossKind::mean_squared_error;
    throw ConfigError("config: unknown model.loss '" + s + "'");
}

inline OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw ConfigError("config: unknown optimizer.kind '" + s + "'");
}

}  // namespace detail

inline ExperimentSpec parse_experiment(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::get_count;
    using detail::get_typed;

    check_keys(j, "(top level)",
               {"dataset", "stream", "sim", "filter", "model", "optimizer", "energy", "sweep",
                "output"});
    ExperimentSpec spec;

    if (j.contains("dataset")) spec.dataset = detail::parse_dataset(j.at("dataset"));

    if (j.contains("stream")) {
        const auto& s = j.at("stream");
        check_keys(s, "stream", {"samples_per_interval", "train_fraction", "shuffle_seed", "cycle"});
        spec.stream.samples_per_interval = get_count(s, "stream", "samples_per_interval", 100);
        spec.stream.train_fraction = get_typed<double>(s, "stream", "train_fraction", 0.8);
        spec.stream.shuffle_seed = get_typed<std::uint64_t>(s, "stream", "shuffle_seed", 0);
        spec.stream.cycle = get_typed<bool>(s, "stream", "cycle", false);
    }

    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        check_keys(s, "sim",
                   {"nodes", "rounds", "rate", "scheme", "train_epochs", "train_batch_size",
                    "exact_quota", "seed"});
        spec.sim.node_count = get_count(s, "sim", "nodes", 4);
        spec.sim.rounds = get_count(s, "sim", "rounds", 10);
        spec.sim.rate = get_typed<double>(s, "sim", "rate", 0.3);
        if (s.contains("scheme")) {
            try {
                spec.sim.scheme = scheme_from_string(s.at("scheme").get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("config: ") + e.what());
            }
        }
        spec.sim.train_epochs = get_count(s, "sim", "train_epochs", 1);
        spec.sim.train_batch_size = get_count(s, "sim", "train_batch_size", 0);
        spec.sim.exact_quota = get_typed<bool>(s, "sim", "exact_quota", false);
        spec.sim.run_seed = get_typed<std::uint64_t>(s, "sim", "seed", 1);
    }

    if (j.contains("filter")) {
        const auto& f = j.at("filter");
        check_keys(f, "filter",
                   {"buffer_size", "neighbors", "beta_min", "beta_max", "anneal_intervals"});
        spec.sim.filter.buffer_size = get_count(f, "filter", "buffer_size", 64);
        spec.sim.filter.neighbors = get_count(f, "filter", "neighbors", 8);
        spec.sim.filter.beta_min = get_typed<double>(f, "filter", "beta_min", 0.0);
        spec.sim.filter.beta_max = get_typed<double>(f, "filter", "beta_max", 1.0);
        spec.sim.filter.anneal_intervals = get_count(f, "filter", "anneal_intervals", 10);
    }

    if (j.contains("model")) {
        const auto& m = j.at("model");
        check_keys(m, "model", {"hidden", "activation", "dropout", "loss", "seed"});
        if (m.contains("hidden")) {
            try {
                spec.hidden = m.at("hidden").get<std::vector<std::size_t>>();
            } catch (const nlohmann::json::exception&) {
                throw ConfigError("config: model.hidden must be a list of layer widths");
            }
            for (std::size_t h : spec.hidden)
                if (h < 1) throw ConfigError("config: model.hidden widths must be >= 1");
        }
        spec.sim.model.activation =
            detail::activation_from_string(get_typed<std::string>(m, "model", "activation", "relu"));
        spec.sim.model.dropout_rate = get_typed<double>(m, "model", "dropout", 0.0);
        spec.sim.model.loss_kind =
            detail::loss_from_string(get_typed<std::string>(m, "model", "loss", "cross_entropy"));
        spec.sim.model.seed = get_typed<std::uint64_t>(m, "model", "seed", 1);
    }

    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        check_keys(o, "optimizer", {"kind", "learning_rate", "beta1", "beta2", "epsilon"});
        spec.sim.optimizer.kind =
            detail::optimizer_from_string(get_typed<std::string>(o, "optimizer", "kind", "adam"));
        spec.sim.optimizer.learning_rate = get_typed<double>(o, "optimizer", "learning_rate", 0.01);
        spec.sim.optimizer.adam_beta1 = get_typed<double>(o, "optimizer", "beta1", 0.9);
        spec.sim.optimizer.adam_beta2 = get_typed<double>(o, "optimizer", "beta2", 0.999);
        spec.sim.optimizer.adam_epsilon = get_typed<double>(o, "optimizer", "epsilon", 1e-8);
    }

    if (j.contains("energy")) {
        const auto& e = j.at("energy");
        check_keys(e, "energy", {"e_wake", "e_tx", "e_rx", "battery_capacity"});
        spec.sim.energy.e_wake = get_typed<double>(e, "energy", "e_wake", 1.0);
        spec.sim.energy.e_tx = get_typed<double>(e, "energy", "e_tx", 50.0);
        spec.sim.energy.e_rx = get_typed<double>(e, "energy", "e_rx", 20.0);
        if (e.contains("battery_capacity"))
            spec.sim.energy.battery_capacity = get_typed<double>(e, "energy", "battery_capacity", 0.0);
    }

    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        check_keys(s, "sweep", {"rates", "seeds", "seed_count", "schemes"});
        spec.sweep.rates = get_typed<std::vector<double>>(s, "sweep", "rates", {});
        if (s.contains("seeds") && s.contains("seed_count"))
            throw ConfigError("config: sweep.seeds and sweep.seed_count are mutually exclusive");
        spec.sweep.seeds = get_typed<std::vector<std::uint64_t>>(s, "sweep", "seeds", {});
        const std::size_t n = get_count(s, "sweep", "seed_count", 0);
        for (std::size_t i = 1; i <= n; ++i) spec.sweep.seeds.push_back(i);
        spec.sweep.schemes = get_typed<std::vector<std::string>>(s, "sweep", "schemes", {});
        for (const std::string& name : spec.sweep.schemes) scheme_from_string(name);  // validate early
    }

    if (j.contains("output")) {
        const auto& o = j.at("output");
        check_keys(o, "output", {"dir"});
        spec.out_dir = get_typed<std::string>(o, "output", "dir", "out");
    }
    return spec;
}

inline ExperimentSpec load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    return parse_experiment(j);
}

// ---------------------------------------------------------------------------
// instantiation

inline Dataset build_dataset(const DatasetSpec& d) {
    Dataset ds;
    switch (d.source) {
        case StreamSource::csv:
            ds = d.label_column.empty()
                     ? load_csv(d.csv_path, static_cast<std::size_t>(d.label_index), d.has_header)
                     : load_csv(d.csv_path, d.label_column, d.has_header);
            break;
        case StreamSource::idx: ds = load_idx(d.idx_images, d.idx_labels); break;
        case StreamSource::synthetic_gaussians:
            ds = synth_gaussians(d.class_means, d.class_scales, d.class_weights, d.count, d.seed);
            break;
        case StreamSource::synthetic_flow:
            ds = synth_flow_anomalies(d.flow_channels, d.flow_length, d.flow_anomalies, d.seed);
            break;
    }
    if (d.apply_normalize) normalize(ds);
    return ds;
}

inline StreamSet build_streams(const ExperimentSpec& spec, const Dataset& ds) {
    StreamConfig sc = spec.stream;
    sc.source = spec.dataset.source;
    sc.node_count = spec.sim.node_count;
    return partition_streams(ds, sc);
}

// A concrete per-run configuration for one (scheme, rate, seed) cell.
inline SimConfig instantiate(const ExperimentSpec& spec, const Dataset& ds, Scheme scheme,
                             double rate, std::uint64_t seed) {
    SimConfig cfg = spec.sim;
    cfg.scheme = scheme;
    cfg.rate = rate;
    cfg.run_seed = seed;
    cfg.filter.target_rate = rate;
    cfg.model.layer_sizes.clear();
    cfg.model.layer_sizes.push_back(ds.feature_dim());
    for (std::size_t h : spec.hidden) cfg.model.layer_sizes.push_back(h);
    cfg.model.layer_sizes.push_back(static_cast<std::size_t>(ds.class_count));
    return cfg;
}

// ---------------------------------------------------------------------------
// run matrix

struct RunKey {
    Scheme scheme = Scheme::importance;
    double rate = 0.3;
    std::uint64_t seed = 1;
};

struct MatrixResult {
    std::vector<RunKey> keys;
    std::vector<RunResult> runs;  // aligned with keys
};

inline MatrixResult run_matrix(const ExperimentSpec& spec, const Dataset& ds,
                               const StreamSet& streams, const std::vector<Scheme>& schemes,
                               const std::vector<double>& rates,
                               const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1) {
    if (schemes.empty() || rates.empty() || seeds.empty())
        throw ConfigError("run matrix: schemes, rates, and seeds must all be non-empty");
    MatrixResult out;
    for (Scheme s : schemes)
        for (double r : rates)
            for (std::uint64_t seed : seeds) out.keys.push_back({s, r, seed});
    out.runs.resize(out.keys.size());

    auto run_one = [&](std::size_t i) {
        const RunKey& key = out.keys[i];
        out.runs[i] = run(instantiate(spec, ds, key.scheme, key.rate, key.seed), ds, streams);
    };

    if (jobs <= 1 || out.keys.size() <= 1) {
        for (std::size_t i = 0; i < out.keys.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next.fetch_add(1); i < out.keys.size(); i = next.fetch_add(1))
                run_one(i);
        };
        std::vector<std::thread> pool;
        const std::size_t width = std::min(jobs, out.keys.size());
        pool.reserve(width);
        for (std::size_t t = 0; t < width; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    return out;
}

// Post-run sanity checks. Tolerances carry a finite-sample allowance on top
// of the relative budget so honest runs at small sample counts do not trip.
inline void check_rate_compliance(const ExperimentSpec& spec, const MatrixResult& matrix) {
    for (std::size_t i = 0; i < matrix.keys.size(); ++i) {
        const RunKey& key = matrix.keys[i];
        const RunResult& rr = matrix.runs[i];
        if (key.scheme == Scheme::transmit_all) continue;
        if (key.scheme == Scheme::importance && spec.sim.filter.beta_max > 0.0)
            continue;  // annealed weighting intentionally reshapes per-sample rates
        if (std::isfinite(spec.sim.energy.battery_capacity)) continue;
        const double expected = key.rate * static_cast<double>(rr.decisions_total);
        const double allowance = 0.02 * expected + 4.0 * std::sqrt(expected);
        const double realized = static_cast<double>(rr.packets_total);
        if (std::abs(realized - expected) > allowance)
            throw AssertionError("rate check failed: scheme=" + to_string(key.scheme) +
                                 " rate=" + std::to_string(key.rate) +
                                 " seed=" + std::to_string(key.seed) + " expected=" +
                                 std::to_string(expected) + " realized=" + std::to_string(realized));
    }
}

inline void check_fairness(const ExperimentSpec& spec, const MatrixResult& matrix) {
    for (std::size_t i = 0; i < matrix.keys.size(); ++i) {
        const RunKey& key = matrix.keys[i];
        if (key.scheme != Scheme::uniform) continue;  // only the scheme with provably equal rates
        if (std::isfinite(spec.sim.energy.battery_capacity)) continue;
        const RunResult& rr = matrix.runs[i];
        double mean = 0.0;
        for (std::uint64_t c : rr.node_packets) mean += static_cast<double>(c);
        mean /= static_cast<double>(rr.node_packets.size());
        for (std::size_t k = 0; k < rr.node_packets.size(); ++k) {
            const double allowance = 0.05 * mean + 4.0 * std::sqrt(mean + 1.0);
            if (std::abs(static_cast<double>(rr.node_packets[k]) - mean) > allowance)
                throw AssertionError("fairness check failed: node " + std::to_string(k) +
                                     " packets=" + std::to_string(rr.node_packets[k]) +
                                     " mean=" + std::to_string(mean));
        }
    }
}

// ---------------------------------------------------------------------------
// result files

namespace detail {

inline std::string fmt_g(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace detail

inline void write_metrics_csv(const std::string& path, const MatrixResult& matrix) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create output directory: " + p.parent_path().string());
    }
    std::ofstream out(path, std::ios::binary);  // fixed newlines on every platform
    if (!out) throw IoError("cannot open metrics file for writing: " + path);
    out << "round,scheme,rate,seed,train_error,test_error,packets,energy_mean,energy_max,beta\n";
    for (std::size_t i = 0; i < matrix.keys.size(); ++i) {
        const RunKey& key = matrix.keys[i];
        for (const RoundMetrics& m : matrix.runs[i].rounds)
            out << m.round << ',' << to_string(key.scheme) << ',' << detail::fmt_g(key.rate) << ','
                << key.seed << ',' << detail::fmt_g(m.train_error) << ','
                << detail::fmt_g(m.test_error) << ',' << m.packets << ','
                << detail::fmt_g(m.energy_mean) << ',' << detail::fmt_g(m.energy_max) << ','
                << detail::fmt_g(m.beta) << '\n';
    }
    if (!out) throw IoError("failed writing metrics file: " + path);
}

struct SummaryRow {
    std::string scheme;
    double rate = 0.0;
    std::size_t round = 0;
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;
};

// Aggregate across seeds for each (scheme, rate, round, metric) cell, in the
// deterministic order the matrix was laid out.
inline std::vector<SummaryRow> summarize(const MatrixResult& matrix) {
    std::vector<SummaryRow> rows;
    std::vector<std::pair<Scheme, double>> cells;
    for (const RunKey& key : matrix.keys) {
        const std::pair<Scheme, double> cell{key.scheme, key.rate};
        if (std::find(cells.begin(), cells.end(), cell) == cells.end()) cells.push_back(cell);
    }
    static const char* metric_names[] = {"train_error", "test_error", "packets", "energy_mean",
                                         "energy_max"};
    for (const auto& [scheme, rate] : cells) {
        std::size_t max_round = 0;
        for (std::size_t i = 0; i < matrix.keys.size(); ++i)
            if (matrix.keys[i].scheme == scheme && matrix.keys[i].rate == rate)
                max_round = std::max(max_round, matrix.runs[i].rounds.size());
        for (std::size_t round = 1; round <= max_round; ++round) {
            for (const char* metric : metric_names) {
                std::vector<double> values;
                for (std::size_t i = 0; i < matrix.keys.size(); ++i) {
                    if (matrix.keys[i].scheme != scheme || matrix.keys[i].rate != rate) continue;
                    if (round > matrix.runs[i].rounds.size()) continue;
                    const RoundMetrics& m = matrix.runs[i].rounds[round - 1];
                    double v = 0.0;
                    const std::string name = metric;
                    if (name == "train_error") v = m.train_error;
                    else if (name == "test_error") v = m.test_error;
                    else if (name == "packets") v = static_cast<double>(m.packets);
                    else if (name == "energy_mean") v = m.energy_mean;
                    else v = m.energy_max;
                    values.push_back(v);
                }
                if (values.empty()) continue;
                double mean = 0.0;
                for (double v : values) mean += v;
                mean /= static_cast<double>(values.size());
                double var = 0.0;
                for (double v : values) var += (v - mean) * (v - mean);
                const double stddev =
                    values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
                rows.push_back({to_string(scheme), rate, round, metric, mean, stddev, values.size()});
            }
        }
    }
    return rows;
}

inline void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create output directory: " + p.parent_path().string());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open summary file for writing: " + path);
    out << "scheme,rate,round,metric,metric_mean,metric_std,n\n";
    for (const SummaryRow& r : rows)
        out << r.scheme << ',' << detail::fmt_g(r.rate) << ',' << r.round << ',' << r.metric << ','
            << detail::fmt_g(r.mean) << ',' << detail::fmt_g(r.stddev) << ',' << r.n << '\n';
    if (!out) throw IoError("failed writing summary file: " + path);
}

inline void write_bound_report(const std::string& path, const BoundReport& report) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create output directory: " + p.parent_path().string());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open bound report for writing: " + path);
    out << "eta_b " << detail::fmt_g(report.eta_b) << '\n'
        << "eta_v " << detail::fmt_g(report.eta_v) << '\n'
        << "coverage_fraction " << detail::fmt_g(report.coverage_fraction) << '\n'
        << "samples_checked " << report.samples_checked << '\n'
        << "radius_violations " << report.radius_violations << '\n'
        << "delta_target " << detail::fmt_g(report.delta_target) << '\n'
        << "neighbor_condition_ok " << (report.neighbor_condition_ok ? 1 : 0) << '\n'
        << "coverage_ok " << (report.coverage_ok ? 1 : 0) << '\n';
    if (!out) throw IoError("failed writing bound report: " + path);
}

}  // namespace difsim
