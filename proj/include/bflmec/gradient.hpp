#pragma once

#include <cstdint>
#include <vector>

#include "bflmec/bytes.hpp"
#include "bflmec/sha256.hpp"

namespace bflmec::fl {

// Flat parameter vector exchanged by the protocol: the unit that is signed,
// pooled, clustered and aggregated. round_tag counts the global records the
// owner had seen when it produced the vector.
struct GradientVector {
    std::vector<double> values;
    uint32_t owner_id = 0;
    uint64_t round_tag = 0;

    bool operator==(const GradientVector&) const = default;
};

inline Bytes serialize_gradient(const GradientVector& g) {
    ByteWriter w;
    w.u32(g.owner_id);
    w.u64(g.round_tag);
    w.u32(static_cast<uint32_t>(g.values.size()));
    for (double v : g.values) w.f64(v);
    return w.take();
}

inline GradientVector parse_gradient(ByteReader& r) {
    GradientVector g;
    g.owner_id = r.u32();
    g.round_tag = r.u64();
    g.values.resize(r.u32());
    for (auto& v : g.values) v = r.f64();
    return g;
}

inline GradientVector parse_gradient(const Bytes& b) {
    ByteReader r(b);
    return parse_gradient(r);
}

inline Digest gradient_digest(const GradientVector& g) {
    return sha256_tagged(HashDomain::gradient, serialize_gradient(g));
}

}  // namespace bflmec::fl
