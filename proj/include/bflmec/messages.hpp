#pragma once

#include <cstdint>
#include <vector>

#include "bflmec/bytes.hpp"
#include "bflmec/gradient.hpp"
#include "bflmec/ledger.hpp"

namespace bflmec::nodes {

// Client -> edge gradient upload (Algorithm-2 output). production_ticks is
// simulator-side metadata for the delay metrics and is not part of the wire
// encoding.
struct UploadMessage {
    uint32_t sender_id = 0;
    uint32_t edge_id = 0;
    fl::GradientVector gradient;
    Bytes signature;
    Bytes public_key;
    std::vector<uint64_t> production_ticks;
};

// One entry of an edge-to-edge pool delta: enough for the receiver to
// re-verify the gradient against the sender's registered key.
struct PoolDeltaEntry {
    uint32_t sender_id = 0;
    fl::GradientVector gradient;
    Bytes signature;
    std::vector<uint64_t> production_ticks;
};

Bytes serialize_upload(const UploadMessage& m);
UploadMessage parse_upload(const Bytes& b);

Bytes serialize_pool_delta(const std::vector<PoolDeltaEntry>& delta);
std::vector<PoolDeltaEntry> parse_pool_delta(const Bytes& b);

Bytes serialize_block_message(const chain::Block& b);
chain::Block parse_block_message(const Bytes& b);

}  // namespace bflmec::nodes
