#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include "difsim/datasets.hpp"
#include "difsim/filter.hpp"
#include "difsim/model.hpp"

namespace difsim {

// One sample as received at the AP. The label is assigned exactly once, by
// the oracle, at receipt; the score is filled after that interval's
// training.
struct ReceivedRecord {
    int node_id = 0;
    std::size_t sample_index = 0;  // identity in the source dataset
    VecD sample;
    int label = 0;
    double score = 0.0;
    bool scored = false;
    std::uint64_t interval = 0;
};

// Ground-truth lookup. The dataset generator carries the true label of
// every sample, so receipt-time labeling is deterministic and error free.
inline int label_oracle(const Dataset& ds, std::size_t sample_index) {
    if (sample_index >= ds.size()) throw std::out_of_range("label_oracle: sample not traceable to ground truth");
    return ds.labels[sample_index];
}

// Coordinate-wise mean of one node's transmitted samples in an interval.
inline VecD super_sample(const std::vector<const ReceivedRecord*>& records) {
    if (records.empty()) throw std::invalid_argument("super_sample: empty input");
    VecD mean(records.front()->sample.size(), 0.0);
    for (const ReceivedRecord* r : records)
        for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += r->sample[d];
    for (double& v : mean) v /= static_cast<double>(records.size());
    return mean;
}

// One node-interval worth of scored receipts together with its
// super-sample; the unit of feedback selection.
struct SuperSampleUnit {
    int node_id = 0;
    std::uint64_t interval = 0;
    VecD center;
    std::vector<ScoredEntry> entries;  // arrival order
};

// AP-side state: the model, receipt history, and the rolling store of
// super-sample units used for feedback selection.
class AccessPoint {
public:
    explicit AccessPoint(Mlp model, std::size_t node_count)
        : model_(std::move(model)), node_count_(node_count) {}

    Mlp& model() { return model_; }
    const Mlp& model() const { return model_; }
    std::uint64_t round_index() const { return round_index_; }
    const std::vector<ReceivedRecord>& cumulative() const { return cumulative_; }
    const std::vector<ReceivedRecord>& interval_receipts() const { return interval_; }
    const std::deque<SuperSampleUnit>& units() const { return units_; }

    void receive(int node_id, std::size_t sample_index, VecD sample, int label) {
        interval_.push_back(ReceivedRecord{node_id, sample_index, std::move(sample), label,
                                           0.0, false, round_index_});
    }

    // `epochs` passes of mini-batch steps over this interval's receipts.
    // batch_size 0 means one full-batch step per epoch. An empty interval is
    // a skipped round: the model is untouched and the round index still
    // advances at finish_interval().
    bool train_round(const OptimizerConfig& optimizer, std::size_t epochs, std::size_t batch_size = 0) {
        if (interval_.empty()) return false;
        if (epochs < 1) throw std::invalid_argument("train_round: epochs must be >= 1");
        const std::size_t chunk = batch_size == 0 ? interval_.size() : batch_size;
        for (std::size_t e = 0; e < epochs; ++e) {
            for (std::size_t start = 0; start < interval_.size(); start += chunk) {
                const std::size_t stop = std::min(start + chunk, interval_.size());
                std::vector<VecD> rows;
                std::vector<int> labels;
                rows.reserve(stop - start);
                for (std::size_t i = start; i < stop; ++i) {
                    rows.push_back(interval_[i].sample);
                    labels.push_back(interval_[i].label);
                }
                Gradients g = model_.gradient(Matrix::from_rows(rows), labels, /*training=*/true);
                model_.optimizer_step(g, optimizer);
            }
        }
        return true;
    }

    // Exact leverage scores for this interval's receipts under the
    // post-training model.
    std::vector<ScoredEntry> score_batch() {
        std::vector<ScoredEntry> scored;
        scored.reserve(interval_.size());
        for (ReceivedRecord& r : interval_) {
            r.score = model_.leverage_score(r.sample, r.label);
            r.scored = true;
            scored.push_back({r.sample, r.score});
        }
        return scored;
    }

    // Close the interval: score receipts, build one super-sample unit per
    // transmitting node, roll the unit store, archive receipts.
    void finish_interval() {
        score_batch();
        for (std::size_t k = 0; k < node_count_; ++k) {
            std::vector<const ReceivedRecord*> mine;
            for (const ReceivedRecord& r : interval_)
                if (r.node_id == static_cast<int>(k)) mine.push_back(&r);
            if (mine.empty()) continue;
            SuperSampleUnit unit;
            unit.node_id = static_cast<int>(k);
            unit.interval = round_index_;
            unit.center = super_sample(mine);
            for (const ReceivedRecord* r : mine) unit.entries.push_back({r->sample, r->score});
            units_.push_back(std::move(unit));
        }
        while (units_.size() > unit_capacity_) units_.pop_front();
        for (ReceivedRecord& r : interval_) cumulative_.push_back(std::move(r));
        interval_.clear();
        ++round_index_;
    }

    // Scores fed back to one node: the entries of the ceil(P/b) super-sample
    // units nearest to the node's own unit from the just-finished interval,
    // truncated to the P most recent entries. A node with no receipts falls
    // back to the most recent units globally.
    std::vector<ScoredEntry> select_feedback(int node_id, std::size_t buffer_size) const {
        if (units_.empty()) return {};
        const std::uint64_t last = round_index_ - 1;  // the just-finished interval

        std::vector<const SuperSampleUnit*> fresh;
        const SuperSampleUnit* own = nullptr;
        for (const SuperSampleUnit& u : units_) {
            if (u.interval == last) {
                fresh.push_back(&u);
                if (u.node_id == node_id) own = &u;
            }
        }

        std::vector<const SuperSampleUnit*> chosen;
        if (own != nullptr) {
            const std::size_t quota = quota_for(buffer_size, own->entries.size());
            // nearest super-samples to the node's own, own included
            std::vector<std::pair<double, const SuperSampleUnit*>> order;
            order.reserve(fresh.size());
            for (const SuperSampleUnit* u : fresh)
                order.emplace_back(euclidean_distance(own->center, u->center), u);
            std::sort(order.begin(), order.end(),
                      [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first < b.first;
                          return a.second->node_id < b.second->node_id;
                      });
            for (std::size_t i = 0; i < order.size() && i < quota; ++i) chosen.push_back(order[i].second);
        } else {
            // fallback: most recent units, with the expected batch size taken
            // as the mean receipt count of the interval's transmitting nodes
            std::size_t mean_b = 1;
            if (!fresh.empty()) {
                std::size_t total = 0;
                for (const SuperSampleUnit* u : fresh) total += u->entries.size();
                mean_b = std::max<std::size_t>(1, total / fresh.size());
            }
            const std::size_t quota = quota_for(buffer_size, mean_b);
            for (auto it = units_.rbegin(); it != units_.rend() && chosen.size() < quota; ++it)
                chosen.push_back(&*it);
            std::reverse(chosen.begin(), chosen.end());  // oldest-first for FIFO recency below
        }

        std::vector<ScoredEntry> feedback;
        for (const SuperSampleUnit* u : chosen)
            for (const ScoredEntry& e : u->entries) feedback.push_back(e);
        if (feedback.size() > buffer_size)
            feedback.erase(feedback.begin(),
                           feedback.begin() + static_cast<std::ptrdiff_t>(feedback.size() - buffer_size));
        return feedback;
    }

private:
    static std::size_t quota_for(std::size_t buffer_size, std::size_t batch) {
        return (buffer_size + batch - 1) / std::max<std::size_t>(batch, 1);
    }

    Mlp model_;
    std::size_t node_count_;
    std::vector<ReceivedRecord> interval_;
    std::vector<ReceivedRecord> cumulative_;
    std::deque<SuperSampleUnit> units_;
    std::size_t unit_capacity_ = 256;
    std::uint64_t round_index_ = 0;
};

}  // namespace difsim
