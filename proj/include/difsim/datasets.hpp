#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "difsim/matrix.hpp"
#include "difsim/rng.hpp"

namespace difsim {

// Immutable after load; features are row-per-sample. `normalization`
// records the per-feature (min,max) of the raw data once normalize() has
// run, and is empty before that.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    int class_count = 0;
    std::vector<std::pair<double, double>> normalization;

    std::size_t size() const { return features.rows; }
    std::size_t feature_dim() const { return features.cols; }
    bool normalized() const { return !normalization.empty(); }

    void validate() const {
        if (features.rows != labels.size())
            throw std::invalid_argument("dataset: feature rows must equal labels length");
        for (int y : labels)
            if (y < 0 || y >= class_count) throw std::invalid_argument("dataset: label outside class range");
    }
};

enum class StreamSource { csv, idx, synthetic_gaussians, synthetic_flow };

struct StreamConfig {
    StreamSource source = StreamSource::synthetic_gaussians;
    std::size_t samples_per_interval = 100;  // m
    std::size_t node_count = 1;              // K
    std::uint64_t shuffle_seed = 0;
    std::vector<double> class_imbalance;  // synthetic only; empty = balanced
    double train_fraction = 0.8;
    bool cycle = false;

    void validate() const {
        if (samples_per_interval < 1) throw std::invalid_argument("stream: samples_per_interval must be >= 1");
        if (node_count < 1) throw std::invalid_argument("stream: node_count must be >= 1");
        if (train_fraction <= 0.0 || train_fraction >= 1.0)
            throw std::invalid_argument("stream: train_fraction must lie in (0,1)");
    }
};

// Per-node sample streams as indices into the dataset, plus the held-out
// test set. Index identity makes leakage checks exact.
struct StreamSet {
    std::vector<std::vector<std::size_t>> node_streams;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    std::size_t samples_per_interval = 100;
    bool cycle = false;
};

// ---------------------------------------------------------------------------
// normalization

// Per-feature min-max scaling to [0,1]; constant features map to 0.
// Idempotent: a second call leaves values bit-identical.
inline void normalize(Dataset& ds) {
    if (ds.features.rows == 0) throw std::invalid_argument("normalize: empty dataset");
    ds.normalization.clear();
    ds.normalization.reserve(ds.features.cols);
    for (std::size_t c = 0; c < ds.features.cols; ++c) {
        double lo = ds.features.at(0, c), hi = ds.features.at(0, c);
        for (std::size_t r = 1; r < ds.features.rows; ++r) {
            lo = std::min(lo, ds.features.at(r, c));
            hi = std::max(hi, ds.features.at(r, c));
        }
        ds.normalization.emplace_back(lo, hi);
        const double span = hi - lo;
        for (std::size_t r = 0; r < ds.features.rows; ++r) {
            double& v = ds.features.at(r, c);
            v = span > 0.0 ? (v - lo) / span : 0.0;
        }
    }
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline double parse_number(const std::string& s, std::size_t row, std::size_t col) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("csv: row " + std::to_string(row) + ", column " + std::to_string(col) +
                                 ": non-numeric field '" + s + "'");
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size())
        throw std::runtime_error("csv: row " + std::to_string(row) + ", column " + std::to_string(col) +
                                 ": non-numeric field '" + s + "'");
    return v;
}

inline Dataset load_csv_core(const std::string& path, std::optional<std::size_t> label_index,
                             const std::string& label_name, bool has_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");

    std::string line;
    std::size_t row_no = 0;
    std::size_t n_cols = 0;
    std::size_t label_col = 0;

    if (has_header) {
        if (!std::getline(in, line)) throw std::runtime_error("csv: '" + path + "' is empty");
        ++row_no;
        auto header = split_csv_line(line);
        n_cols = header.size();
        if (!label_name.empty()) {
            auto it = std::find(header.begin(), header.end(), label_name);
            if (it == header.end())
                throw std::runtime_error("csv: unknown label column '" + label_name + "'");
            label_col = static_cast<std::size_t>(it - header.begin());
        } else {
            label_col = *label_index;
        }
    } else {
        if (!label_name.empty())
            throw std::invalid_argument("csv: label column by name requires a header row");
        label_col = *label_index;
    }

    std::vector<VecD> rows;
    std::vector<int> labels;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (n_cols == 0) n_cols = fields.size();
        if (fields.size() != n_cols)
            throw std::runtime_error("csv: row " + std::to_string(row_no) + ": expected " +
                                     std::to_string(n_cols) + " fields, got " + std::to_string(fields.size()));
        if (label_col >= n_cols)
            throw std::runtime_error("csv: label column " + std::to_string(label_col) + " out of range");

        VecD feats;
        feats.reserve(n_cols - 1);
        int label = 0;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const double v = parse_number(fields[c], row_no, c);
            if (c == label_col) {
                const double rounded = std::nearbyint(v);
                if (std::abs(v - rounded) > 1e-9 || rounded < 0.0)
                    throw std::runtime_error("csv: row " + std::to_string(row_no) +
                                             ": label must be a non-negative integer");
                label = static_cast<int>(rounded);
            } else {
                feats.push_back(v);
            }
        }
        rows.push_back(std::move(feats));
        labels.push_back(label);
    }
    if (rows.empty()) throw std::runtime_error("csv: '" + path + "' holds no data rows");

    Dataset ds;
    ds.features = Matrix::from_rows(rows);
    ds.labels = std::move(labels);
    ds.class_count = 1 + *std::max_element(ds.labels.begin(), ds.labels.end());
    ds.validate();
    return ds;
}

}  // namespace detail

inline Dataset load_csv(const std::string& path, std::size_t label_column, bool has_header) {
    return detail::load_csv_core(path, label_column, "", has_header);
}

inline Dataset load_csv(const std::string& path, const std::string& label_column, bool has_header = true) {
    return detail::load_csv_core(path, std::nullopt, label_column, has_header);
}

// ---------------------------------------------------------------------------
// IDX (the de facto MNIST container: big-endian, magic 2051/2049, u8 data)

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("idx: truncated file while reading " + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

inline void write_be32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("idx: cannot open '" + images_path + "'");
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("idx: cannot open '" + labels_path + "'");

    const std::uint32_t img_magic = detail::read_be32(img, "image magic");
    if (img_magic != 0x00000803u)
        throw std::runtime_error("idx: bad image magic " + std::to_string(img_magic));
    const std::uint32_t n_images = detail::read_be32(img, "image count");
    const std::uint32_t n_rows = detail::read_be32(img, "row count");
    const std::uint32_t n_cols = detail::read_be32(img, "column count");

    const std::uint32_t lab_magic = detail::read_be32(lab, "label magic");
    if (lab_magic != 0x00000801u)
        throw std::runtime_error("idx: bad label magic " + std::to_string(lab_magic));
    const std::uint32_t n_labels = detail::read_be32(lab, "label count");
    if (n_images != n_labels)
        throw std::runtime_error("idx: image count " + std::to_string(n_images) +
                                 " does not match label count " + std::to_string(n_labels));

    const std::size_t dim = std::size_t(n_rows) * n_cols;
    std::vector<std::uint8_t> pixels(std::size_t(n_images) * dim);
    img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (img.gcount() != static_cast<std::streamsize>(pixels.size()))
        throw std::runtime_error("idx: truncated image data");

    std::vector<std::uint8_t> raw_labels(n_labels);
    lab.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(raw_labels.size()));
    if (lab.gcount() != static_cast<std::streamsize>(raw_labels.size()))
        throw std::runtime_error("idx: truncated label data");

    Dataset ds;
    ds.features = Matrix(n_images, dim);
    for (std::size_t i = 0; i < pixels.size(); ++i)
        ds.features.data[i] = static_cast<double>(pixels[i]) / 255.0;
    ds.labels.reserve(n_labels);
    int max_label = 0;
    for (std::uint8_t y : raw_labels) {
        ds.labels.push_back(static_cast<int>(y));
        max_label = std::max(max_label, static_cast<int>(y));
    }
    ds.class_count = max_label + 1;
    ds.validate();
    return ds;
}

inline void write_idx(const std::vector<std::uint8_t>& pixels, std::uint32_t count, std::uint32_t rows,
                      std::uint32_t cols, const std::vector<std::uint8_t>& labels,
                      const std::string& images_path, const std::string& labels_path) {
    if (pixels.size() != std::size_t(count) * rows * cols)
        throw std::invalid_argument("idx: pixel buffer size does not match dimensions");
    if (labels.size() != count) throw std::invalid_argument("idx: label count mismatch");

    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("idx: cannot write '" + images_path + "'");
    detail::write_be32(img, 0x00000803u);
    detail::write_be32(img, count);
    detail::write_be32(img, rows);
    detail::write_be32(img, cols);
    img.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("idx: cannot write '" + labels_path + "'");
    detail::write_be32(lab, 0x00000801u);
    detail::write_be32(lab, count);
    lab.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

// ---------------------------------------------------------------------------
// synthetic generators

// Labeled isotropic Gaussian mixture; the workhorse for oracle-friendly
// tests and for the imbalance experiments.
inline Dataset synth_gaussians(const std::vector<VecD>& class_means,
                               const std::vector<double>& class_scales,
                               const std::vector<double>& weights, std::size_t count,
                               std::uint64_t seed) {
    if (class_means.empty()) throw std::invalid_argument("synth: need at least one class mean");
    if (class_scales.size() != class_means.size() || weights.size() != class_means.size())
        throw std::invalid_argument("synth: means, scales, and weights must align");
    const std::size_t dim = class_means.front().size();
    for (const VecD& m : class_means)
        if (m.size() != dim) throw std::invalid_argument("synth: means must share dimension");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("synth: negative weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw std::invalid_argument("synth: weights must sum to 1");

    RandomStream rng(seed);
    Dataset ds;
    ds.features = Matrix(count, dim);
    ds.labels.reserve(count);
    ds.class_count = static_cast<int>(class_means.size());
    for (std::size_t i = 0; i < count; ++i) {
        const double u = rng.uniform();
        std::size_t cls = 0;
        double acc = 0.0;
        for (std::size_t c = 0; c < weights.size(); ++c) {
            acc += weights[c];
            if (u < acc) {
                cls = c;
                break;
            }
            cls = c;  // fp slack: the last positive-weight class absorbs the tail
        }
        for (std::size_t d = 0; d < dim; ++d)
            ds.features.at(i, d) = class_means[cls][d] + class_scales[cls] * rng.normal();
        ds.labels.push_back(static_cast<int>(cls));
    }
    return ds;
}

// K-channel flow-like time series with injected step anomalies in one
// channel per event; label 1 inside anomaly windows. Stands in for leak
// traces when no real data is available.
inline Dataset synth_flow_anomalies(std::size_t channels, std::size_t length,
                                    std::size_t anomaly_count, std::uint64_t seed) {
    if (channels < 1 || length < 8) throw std::invalid_argument("synth flow: degenerate dimensions");
    RandomStream rng(seed);
    Dataset ds;
    ds.features = Matrix(length, channels);
    ds.labels.assign(length, 0);
    ds.class_count = 2;

    std::vector<double> base(channels), amp(channels), phase(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        base[c] = rng.uniform(5.0, 15.0);
        amp[c] = rng.uniform(1.0, 3.0);
        phase[c] = rng.uniform(0.0, 6.283185307179586);
    }
    for (std::size_t t = 0; t < length; ++t)
        for (std::size_t c = 0; c < channels; ++c)
            ds.features.at(t, c) = base[c] + amp[c] * std::sin(6.283185307179586 * (t % 24) / 24.0 + phase[c]) +
                                   0.2 * rng.normal();

    const std::size_t window = std::max<std::size_t>(4, length / (4 * std::max<std::size_t>(anomaly_count, 1)));
    for (std::size_t a = 0; a < anomaly_count; ++a) {
        const std::size_t start = rng.index(length - window);
        const std::size_t chan = rng.index(channels);
        const double shift = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(2.0, 4.0);
        for (std::size_t t = start; t < start + window; ++t) {
            ds.features.at(t, chan) += shift;
            ds.labels[t] = 1;
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// stream partitioning

// Shuffles, splits train/test, then deals the training stream round-robin
// to the K nodes. Test indices never appear in any node stream.
inline StreamSet partition_streams(const Dataset& ds, const StreamConfig& config) {
    config.validate();
    if (ds.size() < 2) throw std::invalid_argument("partition: dataset too small");

    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    RandomStream rng(config.shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng.engine());

    const auto train_count = static_cast<std::size_t>(
        std::floor(config.train_fraction * static_cast<double>(ds.size())));
    if (train_count < config.node_count)
        throw std::invalid_argument("partition: training split smaller than node count");

    StreamSet streams;
    streams.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
    streams.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
    streams.node_streams.resize(config.node_count);
    for (std::size_t i = 0; i < streams.train_indices.size(); ++i)
        streams.node_streams[i % config.node_count].push_back(streams.train_indices[i]);
    streams.samples_per_interval = config.samples_per_interval;
    streams.cycle = config.cycle;
    return streams;
}

}  // namespace difsim
