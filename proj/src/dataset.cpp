#include "bflmec/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace bflmec::fl {

void Dataset::append(const Dataset& other) {
    features.insert(features.end(), other.features.begin(), other.features.end());
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
    class_count = std::max(class_count, other.class_count);
}

void Dataset::append_sample(const std::vector<double>& x, uint32_t y) {
    features.push_back(x);
    labels.push_back(y);
}

Dataset Dataset::subset(const std::vector<size_t>& idx) const {
    Dataset out;
    out.class_count = class_count;
    out.features.reserve(idx.size());
    out.labels.reserve(idx.size());
    for (size_t i : idx) {
        out.features.push_back(features[i]);
        out.labels.push_back(labels[i]);
    }
    return out;
}

Dataset synthetic_blobs(uint64_t seed, size_t samples, uint32_t features, uint32_t classes,
                        double mean_radius, double noise_sigma) {
    Rng rng = Rng::stream(seed, "dataset");
    std::vector<std::vector<double>> means(classes, std::vector<double>(features));
    for (auto& m : means) {
        double norm2 = 0;
        for (auto& v : m) {
            v = rng.gauss();
            norm2 += v * v;
        }
        const double scale = mean_radius / std::max(1e-12, std::sqrt(norm2));
        for (auto& v : m) v *= scale;
    }
    Dataset d;
    d.class_count = classes;
    d.features.reserve(samples);
    d.labels.reserve(samples);
    for (size_t i = 0; i < samples; ++i) {
        const uint32_t y = static_cast<uint32_t>(i % classes);
        std::vector<double> x(features);
        for (uint32_t f = 0; f < features; ++f) x[f] = means[y][f] + noise_sigma * rng.gauss();
        d.features.push_back(std::move(x));
        d.labels.push_back(y);
    }
    return d;
}

std::vector<Dataset> partition(const Dataset& data, uint32_t n, PartitionMode mode,
                               uint32_t shards_per_client, Rng& rng) {
    if (n == 0) throw std::invalid_argument("partition: n must be positive");
    if (n > data.size()) throw std::invalid_argument("partition: more clients than samples");

    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    auto cut = [&](const std::vector<size_t>& seq, uint32_t pieces) {
        // contiguous cuts, sizes differing by at most one
        std::vector<std::vector<size_t>> out(pieces);
        const size_t base = seq.size() / pieces, extra = seq.size() % pieces;
        size_t pos = 0;
        for (uint32_t p = 0; p < pieces; ++p) {
            const size_t len = base + (p < extra ? 1 : 0);
            out[p].assign(seq.begin() + pos, seq.begin() + pos + len);
            pos += len;
        }
        return out;
    };

    std::vector<Dataset> parts;
    parts.reserve(n);
    if (mode == PartitionMode::iid) {
        std::vector<size_t> shuffled = order;
        rng.shuffle(shuffled);
        for (auto& piece : cut(shuffled, n)) parts.push_back(data.subset(piece));
        return parts;
    }

    // label-skew: stable sort by label, shard, deal shards at random
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return data.labels[a] < data.labels[b]; });
    const uint32_t shard_count = n * shards_per_client;
    if (shard_count > data.size())
        throw std::invalid_argument("partition: more shards than samples");
    auto shards = cut(order, shard_count);
    auto deal = rng.permutation(shard_count);
    for (uint32_t c = 0; c < n; ++c) {
        std::vector<size_t> idx;
        for (uint32_t s = 0; s < shards_per_client; ++s) {
            const auto& shard = shards[deal[c * shards_per_client + s]];
            idx.insert(idx.end(), shard.begin(), shard.end());
        }
        parts.push_back(data.subset(idx));
    }
    return parts;
}

namespace {

uint32_t read_be32(std::istream& in) {
    uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("idx: truncated header");
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | b[3];
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("idx: cannot open " + images_path);
    if (read_be32(img) != 0x00000803) throw std::runtime_error("idx: bad image magic");
    const uint32_t count = read_be32(img);
    const uint32_t rows = read_be32(img);
    const uint32_t cols = read_be32(img);

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("idx: cannot open " + labels_path);
    if (read_be32(lab) != 0x00000801) throw std::runtime_error("idx: bad label magic");
    if (read_be32(lab) != count) throw std::runtime_error("idx: image/label count mismatch");

    Dataset d;
    const size_t dim = size_t(rows) * cols;
    std::vector<uint8_t> pix(dim);
    d.features.reserve(count);
    d.labels.reserve(count);
    uint32_t max_label = 0;
    for (uint32_t i = 0; i < count; ++i) {
        img.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(dim));
        if (!img) throw std::runtime_error("idx: truncated image data");
        std::vector<double> x(dim);
        for (size_t j = 0; j < dim; ++j) x[j] = pix[j] / 255.0;
        uint8_t y;
        lab.read(reinterpret_cast<char*>(&y), 1);
        if (!lab) throw std::runtime_error("idx: truncated label data");
        d.features.push_back(std::move(x));
        d.labels.push_back(y);
        max_label = std::max<uint32_t>(max_label, y);
    }
    d.class_count = max_label + 1;
    return d;
}

}  // namespace bflmec::fl
