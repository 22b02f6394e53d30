// Acceptance gate: ten numbered end-to-end checks, one pass/fail line each.
// Run with no arguments for the full gate, or with a single number to run
// one criterion. Exit code 0 only if everything checked passed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "difsim/difsim.hpp"
#include "helpers.hpp"

using namespace difsim;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t worker_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return std::min<std::size_t>(16, std::max(1u, hw));
}

// ---------------------------------------------------------------------------
// 1. backprop vs central finite differences on 50 random small networks

Outcome criterion_gradcheck() {
    const auto t0 = std::chrono::steady_clock::now();
    RandomStream rs(20251);
    double worst = 0.0;
    int checked = 0;
    for (int attempt = 0; attempt < 2000 && checked < 50; ++attempt) {
        std::vector<std::size_t> sizes;
        sizes.push_back(1 + rs.index(4));
        const std::size_t hidden = rs.index(3);
        for (std::size_t h = 0; h < hidden; ++h) sizes.push_back(1 + rs.index(5));
        sizes.push_back(2 + rs.index(2));

        ModelConfig mc;
        mc.layer_sizes = sizes;
        mc.activation = static_cast<Activation>(checked % 3);
        mc.loss_kind = (checked % 2) ? LossKind::mean_squared_error : LossKind::cross_entropy;
        mc.seed = 9000 + static_cast<std::uint64_t>(attempt);
        Mlp net(mc);

        const std::size_t bsz = 1 + rs.index(4);
        Matrix batch(bsz, sizes.front());
        for (double& v : batch.data) v = rs.uniform(-1.5, 1.5);
        std::vector<int> labels;
        for (std::size_t r = 0; r < bsz; ++r)
            labels.push_back(static_cast<int>(rs.index(sizes.back())));

        // probes perturb pre-activations by ~1e-4; stay clear of the relu kink
        if (mc.activation == Activation::relu &&
            testutil::min_preactivation_margin(net, batch) < 1e-3)
            continue;

        Gradients bp = net.gradient(batch, labels, false);
        Gradients fd = testutil::fd_gradients(net, batch, labels, 1e-5);
        worst = std::max(worst, testutil::max_grad_rel_error(bp, fd));
        ++checked;
    }
    const double elapsed = seconds_since(t0);
    const bool pass = checked == 50 && worst < 1e-4 && elapsed < 60.0;
    return {pass, std::to_string(checked) + " networks, worst relative error " + fmt(worst) +
                      ", " + fmt(elapsed) + "s"};
}

// ---------------------------------------------------------------------------
// 2. knn estimator vs exhaustive sort on 10^4 random instances

Outcome criterion_knn() {
    RandomStream rs(777);
    int mismatches = 0;
    for (int inst = 0; inst < 10000; ++inst) {
        const std::size_t dim = 1 + rs.index(4);
        const std::size_t P = 2 + rs.index(63);
        std::vector<ScoredEntry> buf;
        for (std::size_t i = 0; i < P; ++i) {
            VecD x(dim);
            for (double& v : x) v = rs.uniform(-1.0, 1.0);
            if (i > 0 && rs.uniform() < 0.3) x = buf[rs.index(i)].sample;  // force ties
            buf.push_back({std::move(x), rs.uniform(0.0, 5.0)});
        }
        const std::size_t L = 1 + rs.index(P);
        VecD query(dim);
        for (double& v : query) v = rs.uniform(-1.0, 1.0);
        if (rs.uniform() < 0.25) query = buf[rs.index(P)].sample;
        if (knn_estimate(query, buf, L) != testutil::knn_oracle(query, buf, L)) ++mismatches;
    }
    return {mismatches == 0,
            "10000 instances, " + std::to_string(mismatches) + " mismatches (exact comparison)"};
}

// ---------------------------------------------------------------------------
// 3. zero-temperature calibration: realized rate within 1% absolute

Outcome criterion_calibration() {
    FilterConfig fc;
    fc.buffer_size = 16;
    fc.neighbors = 4;
    fc.beta_min = fc.beta_max = 0.0;
    fc.anneal_intervals = 10;

    RandomStream gen(315);
    std::vector<VecD> first;
    for (std::size_t i = 0; i < fc.buffer_size; ++i)
        first.push_back({gen.uniform(0.0, 1.0), gen.uniform(0.0, 1.0)});

    bool pass = true;
    std::string detail;
    for (double rate : {0.1, 0.3, 0.5}) {
        fc.target_rate = rate;
        NodeState node = NodeState::initialize(first, fc.buffer_size, 42);
        const int n = 100000;
        int sent = 0;
        for (int i = 0; i < n; ++i) {
            VecD x = {gen.uniform(0.0, 1.0), gen.uniform(0.0, 1.0)};
            sent += decide_transmit(x, node, fc) ? 1 : 0;
        }
        const double realized = static_cast<double>(sent) / n;
        pass = pass && std::abs(realized - rate) <= 0.01;
        if (!detail.empty()) detail += ", ";
        detail += fmt(realized) + "/" + fmt(rate);
    }
    return {pass, "realized/target over 1e5 decisions: " + detail};
}

// ---------------------------------------------------------------------------
// 4. the filtered pipeline learns: error falls and keeps falling late

Outcome criterion_learning() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentSpec spec;
    spec.dataset.class_means = {{-1.0, -1.0}, {1.0, 1.0}};
    spec.dataset.class_scales = {1.0, 1.0};
    spec.dataset.class_weights = {0.5, 0.5};
    spec.dataset.count = 16000;
    spec.dataset.seed = 42;
    spec.stream.samples_per_interval = 200;
    spec.stream.shuffle_seed = 7;
    spec.sim.node_count = 4;
    spec.sim.rounds = 10;
    spec.sim.train_epochs = 10;
    spec.sim.filter.buffer_size = 16;
    spec.sim.filter.neighbors = 4;
    spec.sim.filter.beta_min = 0.0;
    spec.sim.filter.beta_max = 4.0;
    spec.sim.filter.anneal_intervals = 10;
    spec.sim.optimizer.learning_rate = 0.004;
    spec.hidden = {8};

    Dataset ds = build_dataset(spec.dataset);
    StreamSet streams = build_streams(spec, ds);

    int good_seeds = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SimConfig cfg = instantiate(spec, ds, Scheme::importance, 0.3, seed);
        RunResult rr = run(cfg, ds, streams);
        const std::vector<RoundMetrics>& rounds = rr.rounds;
        std::size_t argmin = 0;
        for (std::size_t i = 1; i < rounds.size(); ++i)
            if (rounds[i].test_error < rounds[argmin].test_error) argmin = i;
        const bool descends = rounds.back().test_error < rounds.front().test_error;
        const bool late_min = argmin >= rounds.size() - 3;
        good_seeds += (descends && late_min) ? 1 : 0;
        if (!detail.empty()) detail += " ";
        detail += fmt(rounds.front().test_error) + ">" + fmt(rounds.back().test_error);
    }
    const double elapsed = seconds_since(t0);
    return {good_seeds >= 4, std::to_string(good_seeds) +
                                 "/5 seeds descend with a late minimum (first>last: " + detail +
                                 "), " + fmt(elapsed) + "s"};
}

// ---------------------------------------------------------------------------
// 5 and 10 share one sweep over the imbalanced stream

struct SweepOutcome {
    std::vector<double> rates{0.05, 0.1, 0.2};
    std::vector<double> importance_err, uniform_err, genie_err;  // mean final, per rate
    double elapsed = 0.0;
};

const SweepOutcome& imbalance_sweep() {
    static const SweepOutcome cached = [] {
        const auto t0 = std::chrono::steady_clock::now();
        ExperimentSpec spec;
        spec.dataset.class_means = {{-2.0, -2.0}, {2.0, 2.0}};
        spec.dataset.class_scales = {1.0, 1.0};
        spec.dataset.class_weights = {0.9, 0.1};
        spec.dataset.count = 26000;
        spec.dataset.seed = 42;
        spec.stream.samples_per_interval = 200;
        spec.stream.shuffle_seed = 7;
        spec.sim.node_count = 4;
        spec.sim.rounds = 20;
        spec.sim.train_epochs = 10;
        spec.sim.filter.buffer_size = 16;
        spec.sim.filter.neighbors = 4;
        spec.sim.filter.beta_min = 0.0;
        spec.sim.filter.beta_max = 1.0;
        spec.sim.filter.anneal_intervals = 10;
        spec.sim.optimizer.learning_rate = 0.006;
        spec.hidden = {8};

        Dataset ds = build_dataset(spec.dataset);
        StreamSet streams = build_streams(spec, ds);

        SweepOutcome out;
        std::vector<std::uint64_t> seeds;
        for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
        const std::vector<Scheme> schemes = {Scheme::importance, Scheme::uniform, Scheme::genie};
        MatrixResult matrix =
            run_matrix(spec, ds, streams, schemes, out.rates, seeds, worker_count());

        for (Scheme scheme : schemes) {
            for (double rate : out.rates) {
                double acc = 0.0;
                std::size_t n = 0;
                for (std::size_t i = 0; i < matrix.keys.size(); ++i) {
                    if (matrix.keys[i].scheme != scheme || matrix.keys[i].rate != rate) continue;
                    acc += matrix.runs[i].rounds.back().test_error;
                    ++n;
                }
                const double mean = acc / static_cast<double>(n);
                if (scheme == Scheme::importance) out.importance_err.push_back(mean);
                else if (scheme == Scheme::uniform) out.uniform_err.push_back(mean);
                else out.genie_err.push_back(mean);
            }
        }
        out.elapsed = seconds_since(t0);
        return out;
    }();
    return cached;
}

Outcome criterion_imbalance() {
    const SweepOutcome& sweep = imbalance_sweep();
    bool pass = sweep.elapsed < 600.0;
    std::string detail;
    for (std::size_t i = 0; i < sweep.rates.size(); ++i) {
        const double imp = sweep.importance_err[i];
        const double uni = sweep.uniform_err[i];
        const double gen = sweep.genie_err[i];
        pass = pass && imp < uni && std::abs(imp - gen) <= 0.05;
        if (!detail.empty()) detail += "; ";
        detail += "R=" + fmt(sweep.rates[i]) + " imp=" + fmt(imp) + " uni=" + fmt(uni) +
                  " genie=" + fmt(gen);
    }
    return {pass, "mean final error over 20 seeds: " + detail + ", " + fmt(sweep.elapsed) + "s"};
}

// ---------------------------------------------------------------------------
// 6. estimate-band coverage on a smooth score field over the unit square

Outcome criterion_coverage() {
    RandomStream rs(606);
    auto field = [](const VecD& x) {
        return 1.5 + 0.5 * std::sin(3.0 * x[0]) * std::cos(2.0 * x[1]);
    };
    std::vector<ScoredEntry> buffer, queries;
    for (int i = 0; i < 256; ++i) {
        VecD x = {rs.uniform(0.0, 1.0), rs.uniform(0.0, 1.0)};
        const double s = field(x);
        buffer.push_back({std::move(x), s});
    }
    for (int i = 0; i < 512; ++i) {
        VecD x = {rs.uniform(0.0, 1.0), rs.uniform(0.0, 1.0)};
        const double s = field(x);
        queries.push_back({std::move(x), s});
    }
    BoundReport report = check_bounds(queries, buffer, 8, 0.05);
    return {report.coverage_ok && report.neighbor_condition_ok,
            "coverage " + fmt(report.coverage_fraction) + " over " +
                std::to_string(report.samples_checked) + " queries (target 0.95), eta_v " +
                fmt(report.eta_v)};
}

// ---------------------------------------------------------------------------
// 7. neighborhood radius vs its bias bound on a uniform buffer

Outcome criterion_radius() {
    RandomStream rs(707);
    std::vector<ScoredEntry> buffer;
    for (int i = 0; i < 256; ++i)
        buffer.push_back({{rs.uniform(0.0, 1.0), rs.uniform(0.0, 1.0)}, 1.0});
    int within = 0;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
        VecD x = {rs.uniform(0.0, 1.0), rs.uniform(0.0, 1.0)};
        within += radius_check(x, buffer, 8, 2).within ? 1 : 0;
    }
    const double frac = static_cast<double>(within) / n;
    return {frac >= 0.9, "radius within (L/P)^(1/n) for " + fmt(frac) + " of " +
                             std::to_string(n) + " queries (target 0.90)"};
}

// ---------------------------------------------------------------------------
// 8. energy ledgers: filtered drain, always-on drain, and their ratio

Outcome criterion_energy() {
    Dataset ds = synth_gaussians({{-2.0, -2.0}, {2.0, 2.0}}, {1.0, 1.0}, {0.5, 0.5}, 8000, 42);
    normalize(ds);
    StreamConfig stream_cfg;
    stream_cfg.node_count = 4;
    stream_cfg.samples_per_interval = 100;
    stream_cfg.shuffle_seed = 7;
    stream_cfg.cycle = true;
    StreamSet streams = partition_streams(ds, stream_cfg);

    SimConfig base;
    base.node_count = 4;
    base.rounds = 200;
    base.rate = 0.1;
    base.train_epochs = 1;
    base.run_seed = 1;
    base.filter.buffer_size = 16;
    base.filter.neighbors = 4;
    base.filter.beta_min = base.filter.beta_max = 0.0;  // hold the rate at R exactly
    base.model.layer_sizes = {2, 8, 2};
    base.optimizer.kind = OptimizerKind::adam;
    base.optimizer.learning_rate = 0.004;

    SimConfig imp = base;
    imp.scheme = Scheme::importance;
    RunResult r_imp = run(imp, ds, streams);

    SimConfig all = base;
    all.scheme = Scheme::transmit_all;
    all.rate = 1.0;
    RunResult r_all = run(all, ds, streams);

    double imp_total = 0.0, all_total = 0.0;
    for (const EnergyLedger& led : r_imp.node_ledgers) imp_total += led.consumed;
    for (const EnergyLedger& led : r_all.node_ledgers) all_total += led.consumed;
    const double imp_drain = imp_total / (4.0 * 200.0);  // per node-interval
    const double all_drain = all_total / (4.0 * 200.0);

    // filtered node: 100 wakes + ~10 transmissions + 1 reception = 620
    const bool imp_ok = std::abs(imp_drain - 620.0) <= 0.02 * 620.0;
    // always-on node: 100 wakes + 100 transmissions, no feedback: exact
    bool all_ok = all_drain == 5100.0;
    for (const EnergyLedger& led : r_all.node_ledgers) {
        all_ok = all_ok && led.consumed == 200.0 * 5100.0;
        all_ok = all_ok && led.rx_events == 0;
    }

    // lifetime ratio through the longevity model
    EnergyParams pricing = base.energy;
    pricing.battery_capacity = 1e9;
    EnergyLedger imp_mean, all_mean;
    imp_mean.consumed = imp_total / 4.0;
    all_mean.consumed = all_total / 4.0;
    const double ratio = longevity(imp_mean, pricing, 200) / longevity(all_mean, pricing, 200);
    const bool ratio_ok = ratio >= 5100.0 / (620.0 * 1.02) && ratio <= 5100.0 / (620.0 * 0.98);

    return {imp_ok && all_ok && ratio_ok,
            "drain/interval filtered " + fmt(imp_drain) + " (620 +/- 2%), always-on " +
                fmt(all_drain) + " (5100 exact), lifetime ratio " + fmt(ratio)};
}

// ---------------------------------------------------------------------------
// 9. repeated runs produce byte-identical metrics files

Outcome criterion_repro() {
    ExperimentSpec spec;
    spec.dataset.class_means = {{-2.0, -2.0}, {2.0, 2.0}};
    spec.dataset.class_scales = {1.0, 1.0};
    spec.dataset.class_weights = {0.5, 0.5};
    spec.dataset.count = 3000;
    spec.dataset.seed = 9;
    spec.stream.samples_per_interval = 50;
    spec.stream.shuffle_seed = 5;
    spec.sim.node_count = 2;
    spec.sim.rounds = 5;
    spec.sim.train_epochs = 3;
    spec.sim.filter.buffer_size = 16;
    spec.sim.filter.neighbors = 4;
    spec.hidden = {8};

    Dataset ds = build_dataset(spec.dataset);
    StreamSet streams = build_streams(spec, ds);
    const std::vector<Scheme> schemes = {Scheme::importance, Scheme::uniform};
    const std::vector<double> rates = {0.3};
    const std::vector<std::uint64_t> seeds = {1, 2};

    MatrixResult first = run_matrix(spec, ds, streams, schemes, rates, seeds, 2);
    MatrixResult second = run_matrix(spec, ds, streams, schemes, rates, seeds, 2);

    auto dir = std::filesystem::temp_directory_path() / "difsim_acceptance";
    std::filesystem::create_directories(dir);
    const auto path_a = dir / "metrics_a.csv";
    const auto path_b = dir / "metrics_b.csv";
    write_metrics_csv(path_a.string(), first);
    write_metrics_csv(path_b.string(), second);

    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string body_a = slurp(path_a);
    const std::string body_b = slurp(path_b);
    const bool pass = !body_a.empty() && body_a == body_b;
    return {pass, std::to_string(body_a.size()) + " bytes, re-run " +
                      (body_a == body_b ? "identical" : "DIFFERS")};
}

// ---------------------------------------------------------------------------
// 10. error vs transmission budget follows a falling power law

Outcome criterion_scaling() {
    const SweepOutcome& sweep = imbalance_sweep();
    auto fit_for = [&](const std::vector<double>& errs) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < sweep.rates.size(); ++i) pts.emplace_back(sweep.rates[i], errs[i]);
        return fit_scaling_law(pts);
    };
    const ScalingFit imp = fit_for(sweep.importance_err);
    const ScalingFit uni = fit_for(sweep.uniform_err);
    const ScalingFit gen = fit_for(sweep.genie_err);
    const bool pass = imp.exponent < 0.0 && uni.exponent < 0.0 && gen.exponent < 0.0;
    return {pass, "fitted exponents: importance " + fmt(imp.exponent) + ", uniform " +
                      fmt(uni.exponent) + ", genie " + fmt(gen.exponent)};
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) {
        only = std::atoi(argv[1]);
        if (only < 1 || only > 10) {
            std::fprintf(stderr, "usage: %s [criterion 1-10]\n", argv[0]);
            return 2;
        }
    }

    using Check = Outcome (*)();
    const Check checks[10] = {criterion_gradcheck, criterion_knn,    criterion_calibration,
                              criterion_learning,  criterion_imbalance, criterion_coverage,
                              criterion_radius,    criterion_energy, criterion_repro,
                              criterion_scaling};

    bool all_pass = true;
    for (int i = 1; i <= 10; ++i) {
        if (only != 0 && only != i) continue;
        const Outcome outcome = checks[i - 1]();
        std::printf("criterion %2d: %s - %s\n", i, outcome.pass ? "PASS" : "FAIL",
                    outcome.detail.c_str());
        std::fflush(stdout);
        all_pass = all_pass && outcome.pass;
    }
    return all_pass ? 0 : 1;
}
