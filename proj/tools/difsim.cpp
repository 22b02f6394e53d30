// Command-line front end: `run` for a single simulation, `sweep` for a
// scheme x rate x seed matrix, `diagnose` for the estimate-band report.
// Exit codes: 0 ok, 1 configuration error, 2 failed assertion/check,
// 3 i/o error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "difsim/difsim.hpp"

namespace {

using namespace difsim;

// Desk-scale defaults used when no config file is given: small enough that
// the bundled synthetic stream covers the run.
ExperimentSpec load_or_default(const std::string& config_path) {
    if (!config_path.empty()) return load_experiment(config_path);
    ExperimentSpec spec;
    spec.dataset.class_means = {{-2.0, -2.0}, {2.0, 2.0}};
    spec.dataset.class_scales = {1.0, 1.0};
    spec.dataset.class_weights = {0.5, 0.5};
    spec.dataset.count = 4000;
    spec.stream.samples_per_interval = 50;
    spec.sim.train_epochs = 6;
    spec.sim.optimizer.learning_rate = 0.02;
    spec.sim.filter.buffer_size = 16;
    spec.sim.filter.neighbors = 4;
    return spec;
}

std::string g(double v) { return detail::fmt_g(v); }

void check_stream_cover(const ExperimentSpec& spec, const StreamSet& streams) {
    if (streams.cycle) return;
    const std::size_t warm = spec.sim.scheme == Scheme::importance ? spec.sim.filter.buffer_size : 0;
    const std::size_t need = warm + spec.sim.rounds * streams.samples_per_interval;
    for (const auto& stream : streams.node_streams)
        if (stream.size() < need)
            throw ConfigError("node stream holds " + std::to_string(stream.size()) +
                              " samples but the run needs " + std::to_string(need) +
                              "; lower rounds/samples_per_interval or set stream.cycle");
}

std::vector<Scheme> to_schemes(const std::vector<std::string>& names) {
    std::vector<Scheme> out;
    for (const std::string& n : names) out.push_back(scheme_from_string(n));
    return out;
}

int do_run(const ExperimentSpec& spec, const std::string& out_dir, bool dry_run) {
    Dataset ds = build_dataset(spec.dataset);
    StreamSet streams = build_streams(spec, ds);
    SimConfig cfg =
        instantiate(spec, ds, spec.sim.scheme, spec.sim.rate, spec.sim.run_seed);
    cfg.validate();
    check_stream_cover(spec, streams);

    if (dry_run) {
        std::printf("config ok: %zu samples, %zu features, %d classes\n", ds.size(),
                    ds.feature_dim(), ds.class_count);
        std::printf("plan: scheme=%s rate=%s rounds=%zu nodes=%zu m=%zu seed=%llu\n",
                    to_string(cfg.scheme).c_str(), g(cfg.rate).c_str(), cfg.rounds,
                    cfg.node_count, streams.samples_per_interval,
                    static_cast<unsigned long long>(cfg.run_seed));
        return 0;
    }

    MatrixResult matrix = run_matrix(spec, ds, streams, {cfg.scheme}, {cfg.rate},
                                     {cfg.run_seed}, 1);
    check_rate_compliance(spec, matrix);
    check_fairness(spec, matrix);

    const std::filesystem::path out(out_dir);
    std::filesystem::create_directories(out);
    write_metrics_csv((out / "metrics.csv").string(), matrix);
    write_summary_csv((out / "summary.csv").string(), summarize(matrix));

    const RunResult& rr = matrix.runs.front();
    const RoundMetrics& last = rr.rounds.back();
    std::printf("wrote %s and %s (%zu rounds)\n", (out / "metrics.csv").c_str(),
                (out / "summary.csv").c_str(), rr.rounds.size());
    std::printf("final: test_error=%s train_error=%s packets=%llu realized_rate=%s\n",
                g(last.test_error).c_str(), g(last.train_error).c_str(),
                static_cast<unsigned long long>(rr.packets_total), g(rr.realized_rate).c_str());
    if (rr.depleted_nodes > 0)
        std::printf("note: %zu node(s) drained their battery mid-run\n", rr.depleted_nodes);
    return 0;
}

int do_sweep(const ExperimentSpec& spec, const std::string& out_dir, std::size_t jobs) {
    Dataset ds = build_dataset(spec.dataset);
    StreamSet streams = build_streams(spec, ds);

    std::vector<double> rates = spec.sweep.rates;
    if (rates.empty()) rates.push_back(spec.sim.rate);
    std::vector<std::uint64_t> seeds = spec.sweep.seeds;
    if (seeds.empty()) seeds.push_back(spec.sim.run_seed);
    std::vector<Scheme> schemes = spec.sweep.schemes.empty()
                                      ? std::vector<Scheme>{spec.sim.scheme}
                                      : to_schemes(spec.sweep.schemes);

    check_stream_cover(spec, streams);
    std::printf("sweep: %zu scheme(s) x %zu rate(s) x %zu seed(s), %zu job(s)\n",
                schemes.size(), rates.size(), seeds.size(), jobs);

    MatrixResult matrix = run_matrix(spec, ds, streams, schemes, rates, seeds, jobs);
    check_rate_compliance(spec, matrix);
    check_fairness(spec, matrix);

    const std::filesystem::path out(out_dir);
    std::filesystem::create_directories(out);
    write_metrics_csv((out / "metrics.csv").string(), matrix);
    write_summary_csv((out / "summary.csv").string(), summarize(matrix));
    std::printf("wrote %s and %s\n", (out / "metrics.csv").c_str(),
                (out / "summary.csv").c_str());

    // final-round mean test error per cell, and the budget scaling per scheme
    for (Scheme scheme : schemes) {
        std::vector<std::pair<double, double>> points;
        for (double rate : rates) {
            double acc = 0.0;
            std::size_t n = 0;
            for (std::size_t i = 0; i < matrix.keys.size(); ++i) {
                if (matrix.keys[i].scheme != scheme || matrix.keys[i].rate != rate) continue;
                acc += matrix.runs[i].rounds.back().test_error;
                ++n;
            }
            const double mean = acc / static_cast<double>(n);
            points.emplace_back(rate, mean);
            std::printf("  %s R=%s: final test_error %s (n=%zu)\n", to_string(scheme).c_str(),
                        g(rate).c_str(), g(mean).c_str(), n);
        }
        if (points.size() >= 2) {
            const ScalingFit fit = fit_scaling_law(points);
            std::printf("  %s scaling: error ~ %s * R^%s\n", to_string(scheme).c_str(),
                        g(fit.coefficient).c_str(), g(fit.exponent).c_str());
        }
    }
    return 0;
}

int do_diagnose(const ExperimentSpec& spec, const std::string& out_dir, std::size_t queries,
                double delta, std::size_t steps) {
    Dataset ds = build_dataset(spec.dataset);
    StreamSet streams = build_streams(spec, ds);
    const std::size_t P = spec.sim.filter.buffer_size;
    const std::size_t L = spec.sim.filter.neighbors;
    if (streams.train_indices.size() < P + 1)
        throw ConfigError("diagnose: training split smaller than the buffer");

    // train a model the way the AP would see it: labeled rows, full batches
    SimConfig cfg = instantiate(spec, ds, spec.sim.scheme, spec.sim.rate, spec.sim.run_seed);
    ModelConfig mc = cfg.model;
    mc.seed = mix_seed(cfg.run_seed, mc.seed);
    Mlp model(mc);
    const std::size_t train_n = std::min<std::size_t>(2048, streams.train_indices.size());
    std::vector<VecD> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < train_n; ++i) {
        rows.push_back(ds.features.row_vec(streams.train_indices[i]));
        labels.push_back(ds.labels[streams.train_indices[i]]);
    }
    Matrix batch = Matrix::from_rows(rows);
    for (std::size_t s = 0; s < steps; ++s)
        model.optimizer_step(model.gradient(batch, labels), spec.sim.optimizer);

    // exact-scored buffer from the head of the training split
    std::vector<ScoredEntry> buffer;
    for (std::size_t i = 0; i < P; ++i) {
        const std::size_t idx = streams.train_indices[i];
        const VecD x = ds.features.row_vec(idx);
        buffer.push_back({x, model.leverage_score(x, ds.labels[idx])});
    }
    std::vector<VecD> query_rows;
    std::vector<int> query_labels;
    const std::size_t q_n = std::min(queries, streams.test_indices.size());
    for (std::size_t i = 0; i < q_n; ++i) {
        query_rows.push_back(ds.features.row_vec(streams.test_indices[i]));
        query_labels.push_back(ds.labels[streams.test_indices[i]]);
    }
    if (query_rows.empty()) throw ConfigError("diagnose: no held-out samples to query");

    BoundReport report = check_bounds(query_rows, query_labels, model, buffer, L, delta);
    const std::filesystem::path out(out_dir);
    std::filesystem::create_directories(out);
    write_bound_report((out / "bound_report.txt").string(), report);

    std::printf("buffer P=%zu neighbors L=%zu (L >= ln P: %s)\n", P, L,
                report.neighbor_condition_ok ? "yes" : "no");
    std::printf("eta_b=%s eta_v=%s\n", g(report.eta_b).c_str(), g(report.eta_v).c_str());
    std::printf("coverage %s over %zu queries (target %s), %zu radius violations\n",
                g(report.coverage_fraction).c_str(), report.samples_checked,
                g(1.0 - delta).c_str(), report.radius_violations);
    std::printf("wrote %s\n", (out / "bound_report.txt").c_str());
    if (!report.coverage_ok)
        throw AssertionError("estimate-band coverage " + g(report.coverage_fraction) +
                             " fell below " + g(1.0 - delta));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"on-device importance filtering simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::string scheme_name;
    double rate = 0.0;
    std::size_t rounds = 0, nodes = 0, jobs = 1, queries = 512, steps = 200;
    std::uint64_t seed = 0;
    double delta = 0.05;
    bool dry_run = false, exact_quota = false;
    std::vector<double> rates;
    std::vector<std::uint64_t> seeds;
    std::size_t seed_count = 0;
    std::vector<std::string> scheme_names;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "experiment config (json)");
        cmd->add_option("-o,--out", out_dir, "output directory (default: out)");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "single simulation run");
    add_common(run_cmd);
    run_cmd->add_option("--scheme", scheme_name, "importance|uniform|genie|transmit_all");
    run_cmd->add_option("--rate", rate, "target transmission rate R in (0,1]");
    run_cmd->add_option("--rounds", rounds, "feedback intervals to simulate");
    run_cmd->add_option("--nodes", nodes, "sensor node count");
    run_cmd->add_option("--seed", seed, "run seed");
    run_cmd->add_flag("--exact-quota", exact_quota, "systematic thinning instead of coin flips");
    run_cmd->add_flag("--dry-run", dry_run, "validate config and plan, run nothing");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "scheme x rate x seed matrix");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--rates", rates, "rates to sweep");
    sweep_cmd->add_option("--seeds", seeds, "explicit seed list");
    sweep_cmd->add_option("--seed-count", seed_count, "use seeds 1..N");
    sweep_cmd->add_option("--schemes", scheme_names, "schemes to sweep");
    sweep_cmd->add_option("-j,--jobs", jobs, "parallel runs");

    CLI::App* diag_cmd = app.add_subcommand("diagnose", "estimate-band diagnostics");
    add_common(diag_cmd);
    diag_cmd->add_option("--queries", queries, "held-out queries to score");
    diag_cmd->add_option("--delta", delta, "allowed miss fraction (default 0.05)");
    diag_cmd->add_option("--steps", steps, "training steps before scoring");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentSpec spec = load_or_default(config_path);
        // --out wins; otherwise fall back to the config's output.dir
        bool out_given = false;
        for (CLI::App* cmd : {run_cmd, sweep_cmd, diag_cmd})
            if (cmd->parsed() && cmd->count("--out")) out_given = true;
        if (!out_given) out_dir = spec.out_dir;
        if (run_cmd->parsed()) {
            if (run_cmd->count("--scheme")) spec.sim.scheme = difsim::scheme_from_string(scheme_name);
            if (run_cmd->count("--rate")) spec.sim.rate = rate;
            if (run_cmd->count("--rounds")) spec.sim.rounds = rounds;
            if (run_cmd->count("--nodes")) spec.sim.node_count = nodes;
            if (run_cmd->count("--seed")) spec.sim.run_seed = seed;
            if (run_cmd->count("--exact-quota")) spec.sim.exact_quota = exact_quota;
            return do_run(spec, out_dir, dry_run);
        }
        if (sweep_cmd->parsed()) {
            if (sweep_cmd->count("--rates")) spec.sweep.rates = rates;
            if (sweep_cmd->count("--seeds") && sweep_cmd->count("--seed-count"))
                throw difsim::ConfigError("--seeds and --seed-count are mutually exclusive");
            if (sweep_cmd->count("--seeds")) spec.sweep.seeds = seeds;
            if (sweep_cmd->count("--seed-count")) {
                spec.sweep.seeds.clear();
                for (std::uint64_t s = 1; s <= seed_count; ++s) spec.sweep.seeds.push_back(s);
            }
            if (sweep_cmd->count("--schemes")) spec.sweep.schemes = scheme_names;
            return do_sweep(spec, out_dir, std::max<std::size_t>(1, jobs));
        }
        return do_diagnose(spec, out_dir, queries, delta, steps);
    } catch (const difsim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const difsim::AssertionError& e) {
        std::fprintf(stderr, "check failed: %s\n", e.what());
        return 2;
    } catch (const difsim::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
