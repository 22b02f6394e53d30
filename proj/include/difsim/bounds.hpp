#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "difsim/filter.hpp"
#include "difsim/model.hpp"

namespace difsim {

// Deterministic bias radius for an L-of-P neighborhood in n dimensions.
inline double eta_bias(std::size_t L, std::size_t P, std::size_t n) {
    if (L < 1 || L >= P) throw std::invalid_argument("eta_bias: need 1 <= L < P");
    if (n < 1) throw std::invalid_argument("eta_bias: need n >= 1");
    return std::pow(static_cast<double>(L) / static_cast<double>(P), 1.0 / static_cast<double>(n));
}

// Stochastic half-width of the estimate band.
inline double eta_variance(std::size_t L, std::size_t P) {
    if (P < 2) throw std::invalid_argument("eta_variance: need P >= 2");
    if (L < 1) throw std::invalid_argument("eta_variance: need L >= 1");
    return std::sqrt(std::log(static_cast<double>(P)) / static_cast<double>(L));
}

// The neighbor count should dominate ln P for the variance width to be
// meaningful; callers treat a false here as a configuration warning.
inline bool neighbor_count_sufficient(std::size_t L, std::size_t P) {
    return static_cast<double>(L) >= std::log(static_cast<double>(P));
}

struct Moduli {
    double upper = 0.0;  // largest score increase over the ball
    double lower = 0.0;  // largest score decrease over the ball
};

// One-sided empirical moduli of continuity of the score field around x_t,
// taken over reference points within distance r. Both values are clamped at
// zero so the band can only widen.
inline Moduli empirical_moduli(const std::vector<ScoredEntry>& reference, const VecD& x_t,
                               double score_t, double r) {
    if (r < 0.0) throw std::invalid_argument("empirical_moduli: negative radius");
    Moduli m;
    for (const ScoredEntry& e : reference) {
        if (euclidean_distance(e.sample, x_t) > r) continue;
        m.upper = std::max(m.upper, e.score - score_t);
        m.lower = std::max(m.lower, score_t - e.score);
    }
    return m;
}

struct RadiusCheck {
    double radius = 0.0;  // distance to the L-th nearest buffer sample
    double bound = 0.0;   // (L/P)^(1/n)
    bool within = false;
};

inline RadiusCheck radius_check(const VecD& x, const std::vector<ScoredEntry>& buffer,
                                std::size_t L, std::size_t n) {
    if (L < 1 || L > buffer.size()) throw std::invalid_argument("radius_check: need 1 <= L <= P");
    std::vector<double> dists;
    dists.reserve(buffer.size());
    for (const ScoredEntry& e : buffer) dists.push_back(euclidean_distance(e.sample, x));
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(L - 1), dists.end());
    RadiusCheck rc;
    rc.radius = dists[L - 1];
    rc.bound = eta_bias(L, buffer.size(), n);
    rc.within = rc.radius <= rc.bound;
    return rc;
}

struct BoundReport {
    double eta_b = 0.0;
    double eta_v = 0.0;
    double coverage_fraction = 0.0;
    std::size_t samples_checked = 0;
    std::size_t radius_violations = 0;
    double delta_target = 0.05;
    bool neighbor_condition_ok = true;
    bool coverage_ok = false;
};

// Validate the estimate band on a scored query set: for each query, the
// kNN estimate from the buffer should land within
//   [ s - lower_modulus - eta_v , s + upper_modulus + eta_v ]
// where s is the query's exact score and the moduli are measured over the
// query set itself inside the eta_b ball. Coverage is compared to 1 - delta.
inline BoundReport check_bounds(const std::vector<ScoredEntry>& queries,
                                const std::vector<ScoredEntry>& buffer, std::size_t L,
                                double delta) {
    if (queries.empty()) throw std::invalid_argument("check_bounds: empty query set");
    if (buffer.empty()) throw std::invalid_argument("check_bounds: empty buffer");
    if (L >= buffer.size()) throw std::invalid_argument("check_bounds: need L < P");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("check_bounds: delta outside (0,1)");

    const std::size_t P = buffer.size();
    const std::size_t n = buffer.front().sample.size();
    BoundReport report;
    report.eta_b = eta_bias(L, P, n);
    report.eta_v = eta_variance(L, P);
    report.delta_target = delta;
    report.neighbor_condition_ok = neighbor_count_sufficient(L, P);
    report.samples_checked = queries.size();

    std::size_t covered = 0;
    for (const ScoredEntry& q : queries) {
        const double estimate = knn_estimate(q.sample, buffer, L);
        const Moduli m = empirical_moduli(queries, q.sample, q.score, report.eta_b);
        const double lo = q.score - m.lower - report.eta_v;
        const double hi = q.score + m.upper + report.eta_v;
        if (estimate >= lo && estimate <= hi) ++covered;
        if (!radius_check(q.sample, buffer, L, n).within) ++report.radius_violations;
    }
    report.coverage_fraction = static_cast<double>(covered) / static_cast<double>(queries.size());
    report.coverage_ok = report.coverage_fraction >= 1.0 - delta;
    return report;
}

// Convenience wrapper: exact scores come from the model.
inline BoundReport check_bounds(const std::vector<VecD>& samples, const std::vector<int>& labels,
                                Mlp& model, const std::vector<ScoredEntry>& buffer, std::size_t L,
                                double delta) {
    if (samples.size() != labels.size())
        throw std::invalid_argument("check_bounds: samples/labels size mismatch");
    std::vector<ScoredEntry> queries;
    queries.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        queries.push_back({samples[i], model.leverage_score(samples[i], labels[i])});
    return check_bounds(queries, buffer, L, delta);
}

}  // namespace difsim
