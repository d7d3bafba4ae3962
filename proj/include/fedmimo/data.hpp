#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace fedmimo {

/// Classification dataset; one feature row per sample, labels in 0..C-1.
struct Dataset {
    Eigen::MatrixXd features;
    std::vector<int> labels;
    int num_classes = 0;

    int sample_count() const { return static_cast<int>(features.rows()); }
    int feature_count() const { return static_cast<int>(features.cols()); }
    void validate() const;
};

/// Gaussian-mixture classification task: class means drawn standard normal,
/// unit isotropic noise around them, uniform random labels.
Dataset make_synthetic(int samples, int features, int classes, std::uint64_t seed);

/// Loads delimited text with one sample per line: feature values then an
/// integer class label, separated by commas or whitespace.
Dataset load_delimited(const std::string& path);

/// A device's slice of the dataset. Indices reference dataset rows; weight
/// is the device's data share n_k / n.
struct DataShard {
    int owner = -1;
    std::vector<int> indices;
    double weight = 0.0;

    int size() const { return static_cast<int>(indices.size()); }
};

/// Label-skewed partition: samples sorted by class, split into contiguous
/// shards with seeded heterogeneous sizes that exhaust the dataset.
std::vector<DataShard> partition_noniid(const Dataset& dataset, int device_count,
                                        std::uint64_t seed);

}  // namespace fedmimo
