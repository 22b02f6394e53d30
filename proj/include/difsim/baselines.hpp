#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "difsim/rng.hpp"

namespace difsim {

// Class prior p(y), known only to the genie.
struct ClassDistribution {
    std::vector<double> probabilities;

    void validate() const {
        if (probabilities.empty()) throw std::invalid_argument("class distribution: empty");
        double sum = 0.0;
        for (double p : probabilities) {
            if (p < 0.0) throw std::invalid_argument("class distribution: negative entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("class distribution: probabilities must sum to 1");
    }

    static ClassDistribution from_labels(const std::vector<int>& labels, int class_count) {
        ClassDistribution d;
        d.probabilities.assign(static_cast<std::size_t>(class_count), 0.0);
        for (int y : labels) d.probabilities[static_cast<std::size_t>(y)] += 1.0;
        for (double& p : d.probabilities) p /= static_cast<double>(labels.size());
        return d;
    }
};

// The uniform baseline: Bernoulli(R), the unique choice that transmits the
// same expected packet count as the rate-matched filters.
inline bool uniform_decide(RandomStream& rng, double rate) {
    if (rate <= 0.0 || rate > 1.0) throw std::invalid_argument("uniform_decide: rate must lie in (0,1]");
    return rng.bernoulli(rate);
}

// Inverse-frequency class weight, normalized over classes:
//   q_y = (1/p(y)) / sum_y' (1/p(y')).
inline double genie_probability(int label, const ClassDistribution& dist) {
    dist.validate();
    if (label < 0 || static_cast<std::size_t>(label) >= dist.probabilities.size())
        throw std::out_of_range("genie_probability: label outside distribution");
    const double p = dist.probabilities[static_cast<std::size_t>(label)];
    if (p <= 0.0) throw std::invalid_argument("genie_probability: zero-probability class");
    double z = 0.0;
    for (double py : dist.probabilities) {
        if (py <= 0.0) throw std::invalid_argument("genie_probability: zero-probability class");
        z += 1.0 / py;
    }
    return (1.0 / p) / z;
}

// Rate-matched genie transmit probability. The weight q is scaled by its
// stream mean E_y[q] = C/Z (Z = sum 1/p(y)), giving
//   p_tx = min(1, R*q/E[q]) = min(1, R/(C*p(y))),
// so the expected transmit rate equals R whenever the clamp is inactive and
// each class contributes R/C of the packet budget. For balanced classes
// this reduces to min(1, R*C*q).
inline double genie_transmit_probability(int label, const ClassDistribution& dist, double rate) {
    if (rate <= 0.0 || rate > 1.0) throw std::invalid_argument("genie: rate must lie in (0,1]");
    const double q = genie_probability(label, dist);
    double z = 0.0;
    for (double py : dist.probabilities) z += 1.0 / py;
    const double c = static_cast<double>(dist.probabilities.size());
    return std::min(1.0, rate * q * z / c);
}

inline bool genie_decide(RandomStream& rng, int label, const ClassDistribution& dist, double rate) {
    return rng.bernoulli(genie_transmit_probability(label, dist, rate));
}

}  // namespace difsim
