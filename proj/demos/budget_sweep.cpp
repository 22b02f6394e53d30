// Sweeps the transmission budget and fits the error-vs-rate power law for
// each selection scheme.

#include <cstdio>
#include <vector>

#include "difsim/difsim.hpp"

int main() {
    using namespace difsim;

    ExperimentSpec spec;
    spec.dataset.class_means = {{-2.0, -2.0}, {2.0, 2.0}};
    spec.dataset.class_scales = {1.0, 1.0};
    spec.dataset.class_weights = {0.9, 0.1};
    spec.dataset.count = 26000;
    spec.dataset.seed = 42;
    spec.stream.samples_per_interval = 200;
    spec.stream.shuffle_seed = 7;
    spec.sim.node_count = 4;
    spec.sim.rounds = 16;
    spec.sim.train_epochs = 10;
    spec.sim.filter.buffer_size = 16;
    spec.sim.filter.neighbors = 4;
    spec.sim.filter.beta_max = 1.0;
    spec.sim.filter.anneal_intervals = 10;
    spec.sim.optimizer.learning_rate = 0.006;

    Dataset ds = build_dataset(spec.dataset);
    StreamSet streams = build_streams(spec, ds);

    const std::vector<double> rates = {0.05, 0.1, 0.2, 0.4};
    const std::vector<std::uint64_t> seeds = {1, 2, 3};

    for (Scheme scheme : {Scheme::importance, Scheme::uniform}) {
        MatrixResult matrix = run_matrix(spec, ds, streams, {scheme}, rates, seeds, 4);
        std::vector<std::pair<double, double>> points;
        std::printf("%s:\n", to_string(scheme).c_str());
        for (double rate : rates) {
            double acc = 0.0;
            std::size_t n = 0;
            for (std::size_t i = 0; i < matrix.keys.size(); ++i) {
                if (matrix.keys[i].rate != rate) continue;
                acc += matrix.runs[i].rounds.back().test_error;
                ++n;
            }
            const double mean = acc / static_cast<double>(n);
            points.emplace_back(rate, mean);
            std::printf("  R=%.2f  test_error %.4f  (%zu seeds)\n", rate, mean, n);
        }
        const ScalingFit fit = fit_scaling_law(points);
        std::printf("  fit: error ~ %.3f * R^%.3f over %zu budgets\n\n", fit.coefficient,
                    fit.exponent, fit.points_used);
    }
    return 0;
}
