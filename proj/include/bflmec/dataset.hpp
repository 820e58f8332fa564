#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bflmec/rng.hpp"

namespace bflmec::fl {

struct Dataset {
    std::vector<std::vector<double>> features;
    std::vector<uint32_t> labels;
    uint32_t class_count = 0;

    size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
    void append(const Dataset& other);
    void append_sample(const std::vector<double>& x, uint32_t y);
    Dataset subset(const std::vector<size_t>& idx) const;
};

enum class PartitionMode { iid, label_skew };

// Seeded Gaussian-blob classification task: `classes` means drawn on a sphere
// of radius `mean_radius`, unit isotropic noise. Emitted class-balanced
// (sample i has label i % classes).
Dataset synthetic_blobs(uint64_t seed, size_t samples, uint32_t features, uint32_t classes,
                        double mean_radius = 3.0, double noise_sigma = 1.0);

// Split into n disjoint client datasets covering the input.
// iid: seeded shuffle, near-even contiguous cuts.
// label_skew: sort by label, cut into n*shards_per_client shards, deal
// shards_per_client shards to each client (classic shard scheme).
std::vector<Dataset> partition(const Dataset& data, uint32_t n, PartitionMode mode,
                               uint32_t shards_per_client, Rng& rng);

// IDX file ingestion (big-endian magic + dims). Pixel features scaled to
// [0,1]; labels taken as class indices.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

}  // namespace bflmec::fl
