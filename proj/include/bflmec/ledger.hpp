#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "bflmec/bytes.hpp"
#include "bflmec/gradient.hpp"
#include "bflmec/sha256.hpp"

namespace bflmec::chain {

// Ledger record for one verified local-gradient upload. Carries only the
// sender/receiver ids, the signature and the gradient digest; the gradient
// bytes themselves never appear in a transaction.
struct Transaction {
    uint32_t sender_id = 0;
    uint32_t receiver_id = 0;
    Bytes gradient_signature;
    Digest gradient_digest{};

    bool operator==(const Transaction&) const = default;
};

// Distinguished first transaction of a block when an aggregation occurred:
// the published global gradient plus the reward list.
struct GlobalRecord {
    fl::GradientVector global_gradient;
    std::vector<std::pair<uint32_t, double>> reward_list;

    bool operator==(const GlobalRecord&) const = default;
};

struct Block {
    uint64_t index = 0;
    Digest prev_hash{};
    uint64_t timestamp = 0;  // simulation tick
    uint64_t nonce = 0;
    std::optional<GlobalRecord> tx_first;
    std::vector<Transaction> txs;
    Digest hash{};  // SHA-256 of the serialized header+body

    bool operator==(const Block&) const = default;
};

// Proof-of-work target per target = target1 / difficulty, with
// target1 = 2^256. difficulty == 1 makes every hash pass.
struct MiningParams {
    bool unbounded = false;        // target1 / 1 does not fit in 256 bits
    std::array<uint8_t, 32> target{};  // big-endian
    uint64_t difficulty = 1;

    static MiningParams from_difficulty(uint64_t difficulty);
};

// Hash interpreted as a 256-bit big-endian integer compared against target.
bool hash_meets_target(const Digest& h, const MiningParams& params);

// Serialized block layout (docs/formats.md); the hash field is excluded.
// The nonce sits at a fixed offset so miners can patch it in place.
Bytes serialize_block_for_hash(const Block& b);
constexpr size_t kNonceOffset = 8 + 32 + 8;

Digest block_hash(const Block& b);

Bytes serialize_global_record(const GlobalRecord& r);
GlobalRecord parse_global_record(ByteReader& r);
Bytes serialize_transaction(const Transaction& t);
Transaction parse_transaction(ByteReader& r);

// Single proof-of-work attempt (Eq-5 style): fills in the nonce, returns the
// finished block when its hash meets the target. Callers iterate nonces with
// a bounded budget per simulation tick.
std::optional<Block> mine_step(const Block& candidate, uint64_t nonce, const MiningParams& params);

// Incremental miner over a fixed template: serializes once, patches the
// nonce per attempt. Equivalent to looping mine_step.
class TemplateMiner {
public:
    TemplateMiner(Block candidate, uint64_t start_nonce = 0);
    std::optional<Block> run(uint64_t attempts, const MiningParams& params,
                             uint64_t* used = nullptr);
    uint64_t next_nonce() const { return next_nonce_; }

private:
    Block candidate_;
    Bytes bytes_;
    uint64_t next_nonce_;
};

enum class BlockFault { none, hash_mismatch, target_miss, bad_prev, bad_index };
const char* to_string(BlockFault f);

// Recomputes the hash, checks the target, the parent linkage and the index
// continuity. Faults come back as data, not errors.
BlockFault validate_block(const Block& block, const Block& prev, const MiningParams& params);

// Deterministic genesis: all-zero prev hash, timestamp 0, no transactions.
Block genesis_block();

// Appends after validation; returns the fault on rejection (chain unchanged).
BlockFault adopt_block(std::vector<Block>& chain, const Block& block, const MiningParams& params);

// Full re-validation from genesis.
bool validate_chain(const std::vector<Block>& chain, const MiningParams& params,
                    BlockFault* fault = nullptr, size_t* at_index = nullptr);

// Scans blocks strictly after `anchor`, returns the newest global record and
// its block index; nullopt when the scan range holds none.
std::optional<std::pair<uint64_t, GlobalRecord>> scan_for_global(const std::vector<Block>& chain,
                                                                 uint64_t anchor);

}  // namespace bflmec::chain
