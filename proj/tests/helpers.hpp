#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "difsim/filter.hpp"
#include "difsim/model.hpp"

namespace testutil {

// Central finite differences over every parameter coordinate, using only
// forward() and loss(); independent of the backprop path under test.
inline difsim::Gradients fd_gradients(difsim::Mlp& net, const difsim::Matrix& batch,
                                      const std::vector<int>& labels, double h) {
    difsim::Gradients fd = net.zero_like();
    difsim::ParamSet& params = net.state().params;
    auto probe = [&](double& coord, double& out) {
        const double orig = coord;
        coord = orig + h;
        const double up = net.loss(net.forward(batch, false), labels);
        coord = orig - h;
        const double dn = net.loss(net.forward(batch, false), labels);
        coord = orig;
        out = (up - dn) / (2.0 * h);
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        for (std::size_t i = 0; i < params.weights[l].data.size(); ++i)
            probe(params.weights[l].data[i], fd.weights[l].data[i]);
        for (std::size_t i = 0; i < params.biases[l].size(); ++i)
            probe(params.biases[l][i], fd.biases[l][i]);
    }
    return fd;
}

// Worst relative disagreement between two gradient sets; the denominator is
// floored so near-zero coordinates are compared absolutely.
inline double max_grad_rel_error(const difsim::Gradients& a, const difsim::Gradients& b,
                                 double floor = 1e-2) {
    double worst = 0.0;
    auto cmp = [&](double x, double y) {
        const double denom = std::max({std::abs(x), std::abs(y), floor});
        worst = std::max(worst, std::abs(x - y) / denom);
    };
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        for (std::size_t i = 0; i < a.weights[l].data.size(); ++i)
            cmp(a.weights[l].data[i], b.weights[l].data[i]);
        for (std::size_t i = 0; i < a.biases[l].size(); ++i) cmp(a.biases[l][i], b.biases[l][i]);
    }
    return worst;
}

// Smallest |pre-activation| anywhere in the network for the given batch,
// recomputed with plain loops. Used to keep finite-difference probes away
// from the relu kink.
inline double min_preactivation_margin(const difsim::Mlp& net, const difsim::Matrix& batch) {
    using namespace difsim;
    double margin = 1e300;
    const ParamSet& p = net.state().params;
    for (std::size_t r = 0; r < batch.rows; ++r) {
        VecD act = batch.row_vec(r);
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            const Matrix& w = p.weights[l];
            VecD z(w.rows, 0.0);
            for (std::size_t j = 0; j < w.rows; ++j) {
                double s = p.biases[l][j];
                for (std::size_t i = 0; i < w.cols; ++i) s += w.at(j, i) * act[i];
                z[j] = s;
                margin = std::min(margin, std::abs(s));
            }
            act.assign(z.size(), 0.0);
            for (std::size_t j = 0; j < z.size(); ++j)
                act[j] = detail::activate(net.config().activation, z[j]);
        }
    }
    return margin;
}

// Full-sort kNN oracle: identical comparator and summation order to the
// production estimator, but via std::sort over all entries.
inline double knn_oracle(const difsim::VecD& x, const std::vector<difsim::ScoredEntry>& buffer,
                         std::size_t L) {
    std::vector<std::pair<double, std::size_t>> order(buffer.size());
    for (std::size_t i = 0; i < buffer.size(); ++i)
        order[i] = {difsim::euclidean_distance(x, buffer[i].sample), i};
    std::sort(order.begin(), order.end());
    double sum = 0.0;
    for (std::size_t l = 0; l < L; ++l) sum += buffer[order[l].second].score;
    return sum / static_cast<double>(L);
}

inline std::filesystem::path tmp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("difsim_test_" + tag);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testutil
