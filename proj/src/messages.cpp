#include "bflmec/messages.hpp"

namespace bflmec::nodes {

Bytes serialize_upload(const UploadMessage& m) {
    ByteWriter w;
    w.u32(m.sender_id);
    w.u32(m.edge_id);
    w.raw(fl::serialize_gradient(m.gradient));
    w.u32(static_cast<uint32_t>(m.signature.size()));
    w.raw(m.signature);
    w.u32(static_cast<uint32_t>(m.public_key.size()));
    w.raw(m.public_key);
    return w.take();
}

UploadMessage parse_upload(const Bytes& b) {
    ByteReader r(b);
    UploadMessage m;
    m.sender_id = r.u32();
    m.edge_id = r.u32();
    m.gradient = fl::parse_gradient(r);
    m.signature = r.raw(r.u32());
    m.public_key = r.raw(r.u32());
    return m;
}

Bytes serialize_pool_delta(const std::vector<PoolDeltaEntry>& delta) {
    ByteWriter w;
    w.u32(static_cast<uint32_t>(delta.size()));
    for (const auto& e : delta) {
        w.u32(e.sender_id);
        w.raw(fl::serialize_gradient(e.gradient));
        w.u32(static_cast<uint32_t>(e.signature.size()));
        w.raw(e.signature);
    }
    return w.take();
}

std::vector<PoolDeltaEntry> parse_pool_delta(const Bytes& b) {
    ByteReader r(b);
    std::vector<PoolDeltaEntry> delta(r.u32());
    for (auto& e : delta) {
        e.sender_id = r.u32();
        e.gradient = fl::parse_gradient(r);
        e.signature = r.raw(r.u32());
    }
    return delta;
}

Bytes serialize_block_message(const chain::Block& b) {
    ByteWriter w;
    w.raw(chain::serialize_block_for_hash(b));
    w.raw(b.hash);
    return w.take();
}

chain::Block parse_block_message(const Bytes& bytes) {
    ByteReader r(bytes);
    chain::Block b;
    b.index = r.u64();
    b.prev_hash = r.raw_array<32>();
    b.timestamp = r.u64();
    b.nonce = r.u64();
    if (r.u8()) b.tx_first = chain::parse_global_record(r);
    const uint32_t n = r.u32();
    b.txs.reserve(n);
    for (uint32_t i = 0; i < n; ++i) b.txs.push_back(chain::parse_transaction(r));
    b.hash = r.raw_array<32>();
    return b;
}

}  // namespace bflmec::nodes
