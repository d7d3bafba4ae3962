#include "fedmimo/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fedmimo/seeding.hpp"

namespace fedmimo {

void Dataset::validate() const {
    if (sample_count() < 1) throw std::invalid_argument("dataset has no samples");
    if (feature_count() < 1) throw std::invalid_argument("dataset has no features");
    if (num_classes < 2) throw std::invalid_argument("dataset needs at least two classes");
    if (labels.size() != static_cast<std::size_t>(sample_count()))
        throw std::invalid_argument("label count does not match sample count");
    for (int y : labels)
        if (y < 0 || y >= num_classes) throw std::invalid_argument("label out of range");
}

Dataset make_synthetic(int samples, int features, int classes, std::uint64_t seed) {
    if (samples < 1 || features < 1 || classes < 2)
        throw std::invalid_argument("synthetic dataset needs samples >= 1, features >= 1, classes >= 2");

    Rng rng(seed);
    Eigen::MatrixXd means(classes, features);
    for (int c = 0; c < classes; ++c)
        for (int j = 0; j < features; ++j) means(c, j) = rng.gaussian();

    Dataset ds;
    ds.num_classes = classes;
    ds.features.resize(samples, features);
    ds.labels.resize(samples);
    for (int i = 0; i < samples; ++i) {
        const int y = static_cast<int>(rng.uniform_index(classes));
        ds.labels[i] = y;
        for (int j = 0; j < features; ++j) ds.features(i, j) = means(y, j) + rng.gaussian();
    }
    return ds;
}

Dataset load_delimited(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    int max_label = -1;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        if (vals.empty()) continue;  // blank line
        if (!rows.empty() && vals.size() != rows.front().size() + 1)
            throw std::runtime_error("dataset line " + std::to_string(lineno) +
                                     " has inconsistent field count");
        if (vals.size() < 2)
            throw std::runtime_error("dataset line " + std::to_string(lineno) +
                                     " needs at least one feature and a label");
        const double raw = vals.back();
        vals.pop_back();
        if (raw < 0.0 || raw != std::floor(raw))
            throw std::runtime_error("dataset line " + std::to_string(lineno) +
                                     " has a non-integer or negative label");
        labels.push_back(static_cast<int>(raw));
        max_label = std::max(max_label, labels.back());
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw std::runtime_error("dataset file is empty: " + path);

    Dataset ds;
    ds.num_classes = max_label + 1;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(rows.front().size()));
    ds.labels = std::move(labels);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    ds.validate();
    return ds;
}

std::vector<DataShard> partition_noniid(const Dataset& dataset, int device_count,
                                        std::uint64_t seed) {
    dataset.validate();
    const int n = dataset.sample_count();
    if (device_count < 1) throw std::invalid_argument("device count must be positive");
    if (n < device_count) throw std::invalid_argument("fewer samples than devices");

    // Class-sorted order (stable on the original index) gives the label skew.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return dataset.labels[a] < dataset.labels[b]; });

    // Heterogeneous sizes: proportional shares in [0.5, 1.5), rounded at the
    // cumulative boundaries so they exhaust the dataset exactly.
    Rng rng(seed);
    std::vector<double> share(device_count);
    double total = 0.0;
    for (double& s : share) {
        s = 0.5 + rng.uniform();
        total += s;
    }
    std::vector<int> sizes(device_count);
    double cum = 0.0;
    int prev = 0;
    for (int k = 0; k < device_count; ++k) {
        cum += share[k];
        const int edge = (k + 1 == device_count)
                             ? n
                             : static_cast<int>(std::llround(cum / total * n));
        sizes[k] = edge - prev;
        prev = edge;
    }
    // Rounding can produce an empty shard only in tiny configurations; steal
    // one sample at a time from the largest shard.
    for (int k = 0; k < device_count; ++k) {
        while (sizes[k] < 1) {
            const int big =
                static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
            --sizes[big];
            ++sizes[k];
        }
    }

    std::vector<DataShard> shards(device_count);
    int pos = 0;
    for (int k = 0; k < device_count; ++k) {
        shards[k].owner = k;
        shards[k].indices.assign(order.begin() + pos, order.begin() + pos + sizes[k]);
        shards[k].weight = static_cast<double>(sizes[k]) / n;
        pos += sizes[k];
    }
    return shards;
}

}  // namespace fedmimo
