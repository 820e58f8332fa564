#include "bflmec/ledger.hpp"

#include <cstring>
#include <stdexcept>

namespace bflmec::chain {

MiningParams MiningParams::from_difficulty(uint64_t difficulty) {
    if (difficulty == 0) throw std::invalid_argument("mining: difficulty must be positive");
    MiningParams p;
    p.difficulty = difficulty;
    if (difficulty == 1) {
        p.unbounded = true;
        return p;
    }
    // Long division of target1 = 2^256 (33 bytes: 0x01 then 32 zeros) by the
    // difficulty; the quotient's top byte is zero for difficulty >= 2.
    std::array<uint8_t, 33> quotient{};
    unsigned __int128 rem = 0;
    std::array<uint8_t, 33> num{};
    num[0] = 1;
    for (size_t i = 0; i < 33; ++i) {
        rem = (rem << 8) | num[i];
        quotient[i] = static_cast<uint8_t>(rem / difficulty);
        rem %= difficulty;
    }
    std::memcpy(p.target.data(), quotient.data() + 1, 32);
    return p;
}

bool hash_meets_target(const Digest& h, const MiningParams& params) {
    if (params.unbounded) return true;
    return std::memcmp(h.data(), params.target.data(), 32) < 0;
}

Bytes serialize_global_record(const GlobalRecord& r) {
    ByteWriter w;
    w.raw(fl::serialize_gradient(r.global_gradient));
    w.u32(static_cast<uint32_t>(r.reward_list.size()));
    for (const auto& [id, reward] : r.reward_list) {
        w.u32(id);
        w.f64(reward);
    }
    return w.take();
}

GlobalRecord parse_global_record(ByteReader& r) {
    GlobalRecord rec;
    rec.global_gradient = fl::parse_gradient(r);
    const uint32_t count = r.u32();
    rec.reward_list.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t id = r.u32();
        const double reward = r.f64();
        rec.reward_list.emplace_back(id, reward);
    }
    return rec;
}

Bytes serialize_transaction(const Transaction& t) {
    ByteWriter w;
    w.u32(t.sender_id);
    w.u32(t.receiver_id);
    w.u32(static_cast<uint32_t>(t.gradient_signature.size()));
    w.raw(t.gradient_signature);
    w.raw(t.gradient_digest);
    return w.take();
}

Transaction parse_transaction(ByteReader& r) {
    Transaction t;
    t.sender_id = r.u32();
    t.receiver_id = r.u32();
    t.gradient_signature = r.raw(r.u32());
    t.gradient_digest = r.raw_array<32>();
    return t;
}

Bytes serialize_block_for_hash(const Block& b) {
    ByteWriter w;
    w.u64(b.index);
    w.raw(b.prev_hash);
    w.u64(b.timestamp);
    w.u64(b.nonce);  // kNonceOffset
    w.u8(b.tx_first.has_value() ? 1 : 0);
    if (b.tx_first) w.raw(serialize_global_record(*b.tx_first));
    w.u32(static_cast<uint32_t>(b.txs.size()));
    for (const auto& t : b.txs) w.raw(serialize_transaction(t));
    return w.take();
}

Digest block_hash(const Block& b) {
    return sha256_tagged(HashDomain::block, serialize_block_for_hash(b));
}

std::optional<Block> mine_step(const Block& candidate, uint64_t nonce,
                               const MiningParams& params) {
    Block b = candidate;
    b.nonce = nonce;
    const Digest h = block_hash(b);
    if (!hash_meets_target(h, params)) return std::nullopt;
    b.hash = h;
    return b;
}

TemplateMiner::TemplateMiner(Block candidate, uint64_t start_nonce)
    : candidate_(std::move(candidate)), next_nonce_(start_nonce) {
    candidate_.nonce = 0;
    bytes_ = serialize_block_for_hash(candidate_);
}

std::optional<Block> TemplateMiner::run(uint64_t attempts, const MiningParams& params,
                                        uint64_t* used) {
    Bytes buf(bytes_.size() + 1);
    buf[0] = static_cast<uint8_t>(HashDomain::block);
    std::memcpy(buf.data() + 1, bytes_.data(), bytes_.size());
    for (uint64_t i = 0; i < attempts; ++i) {
        const uint64_t nonce = next_nonce_++;
        for (int b = 0; b < 8; ++b)
            buf[1 + kNonceOffset + b] = static_cast<uint8_t>(nonce >> (8 * b));
        const Digest h = sha256(buf);
        if (hash_meets_target(h, params)) {
            if (used) *used = i + 1;
            Block out = candidate_;
            out.nonce = nonce;
            out.hash = h;
            return out;
        }
    }
    if (used) *used = attempts;
    return std::nullopt;
}

const char* to_string(BlockFault f) {
    switch (f) {
        case BlockFault::none: return "none";
        case BlockFault::hash_mismatch: return "hash-mismatch";
        case BlockFault::target_miss: return "target-miss";
        case BlockFault::bad_prev: return "bad-prev";
        case BlockFault::bad_index: return "bad-index";
    }
    return "?";
}

BlockFault validate_block(const Block& block, const Block& prev, const MiningParams& params) {
    if (block.index != prev.index + 1) return BlockFault::bad_index;
    if (block.prev_hash != prev.hash) return BlockFault::bad_prev;
    if (block_hash(block) != block.hash) return BlockFault::hash_mismatch;
    if (!hash_meets_target(block.hash, params)) return BlockFault::target_miss;
    return BlockFault::none;
}

Block genesis_block() {
    Block g;
    g.index = 0;
    g.timestamp = 0;
    g.nonce = 0;
    g.hash = block_hash(g);
    return g;
}

BlockFault adopt_block(std::vector<Block>& chain, const Block& block, const MiningParams& params) {
    if (chain.empty()) throw std::invalid_argument("adopt_block: chain missing genesis");
    const BlockFault f = validate_block(block, chain.back(), params);
    if (f == BlockFault::none) chain.push_back(block);
    return f;
}

bool validate_chain(const std::vector<Block>& chain, const MiningParams& params,
                    BlockFault* fault, size_t* at_index) {
    auto fail = [&](BlockFault f, size_t i) {
        if (fault) *fault = f;
        if (at_index) *at_index = i;
        return false;
    };
    if (chain.empty() || chain.front() != genesis_block())
        return fail(BlockFault::hash_mismatch, 0);
    for (size_t i = 1; i < chain.size(); ++i) {
        const BlockFault f = validate_block(chain[i], chain[i - 1], params);
        if (f != BlockFault::none) return fail(f, i);
    }
    if (fault) *fault = BlockFault::none;
    return true;
}

std::optional<std::pair<uint64_t, GlobalRecord>> scan_for_global(const std::vector<Block>& chain,
                                                                 uint64_t anchor) {
    const uint64_t height = chain.empty() ? 0 : chain.back().index;
    if (anchor > height) throw std::out_of_range("scan_for_global: anchor beyond chain height");
    std::optional<std::pair<uint64_t, GlobalRecord>> found;
    for (uint64_t i = anchor + 1; i <= height; ++i)
        if (chain[i].tx_first) found = {i, *chain[i].tx_first};
    return found;
}

}  // namespace bflmec::chain
