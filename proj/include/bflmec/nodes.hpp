#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "bflmec/dataset.hpp"
#include "bflmec/incentive.hpp"
#include "bflmec/lattice.hpp"
#include "bflmec/ledger.hpp"
#include "bflmec/messages.hpp"
#include "bflmec/model.hpp"

namespace bflmec::nodes {

// Per-upload gradient perturbation used by compromised clients: a seeded
// coordinate subset gets scaled by +-scale.
struct AttackBehavior {
    double scale = 10.0;
    double coordinate_fraction = 0.25;
};

// Client-side state machine: collect data until the threshold is crossed,
// jump the anchor, train, buffer unuploaded work while disconnected, and
// sign-and-upload when a connection exists.
struct ClientState {
    uint32_t id = 0;
    pqc::LatticeKeypair keypair;
    fl::Model model;
    fl::Dataset buffer;
    uint64_t anchor = 0;           // last block index known to carry a global record
    uint64_t records_seen = 0;     // feeds GradientVector::round_tag
    std::vector<fl::GradientVector> pending;  // trained but not uploaded
    std::vector<uint64_t> pending_ticks;      // production tick per pending entry
    bool connected = true;
    uint32_t associated_edge = 0;
    bool malicious = false;
    AttackBehavior attack;
};

struct PoolEntry {
    uint32_t sender_id = 0;
    fl::GradientVector gradient;
    Bytes signature;
    Digest digest{};
    bool verified = false;  // taint flag: aggregation asserts it
    std::vector<uint64_t> production_ticks;
};

struct EdgeCounters {
    uint64_t accepted = 0;
    uint64_t rejected_signature = 0;
    uint64_t rejected_unknown = 0;
    uint64_t duplicates = 0;
};

// Edge-side state machine: verify uploads, exchange pool deltas with peers,
// mine continuously, aggregate once the unaggregated count passes phi.
struct EdgeState {
    uint32_t id = 0;
    std::vector<chain::Block> chain;
    std::vector<PoolEntry> pool;       // append order; deduplicated by (sender, digest)
    uint64_t unaggregated_count = 0;   // verified uploads since the last aggregation
    uint64_t aggregations_done = 0;
    std::map<uint32_t, Bytes> registry;  // client id -> serialized public key
    std::vector<chain::Transaction> tx_queue;
    std::optional<chain::GlobalRecord> pending_global;
    // mining template; rebuilt whenever tip/queue/pending change
    std::optional<chain::TemplateMiner> miner;
    uint64_t template_tip_index = 0;
    size_t template_tx_count = 0;
    std::optional<Digest> template_record_digest;
    EdgeCounters counters;
    size_t broadcast_cursor = 0;  // pool prefix already broadcast to peers
};

struct ClientTickResult {
    bool trained = false;
    std::optional<UploadMessage> upload;
};

// One Algorithm-2 step. `chain_view` is the associated edge's chain, or null
// while disconnected (the anchor jump needs a reachable ledger). Training
// fires on |buffer| > threshold_n, strictly.
ClientTickResult client_tick(ClientState& st, const fl::Dataset& arrivals,
                             const std::vector<chain::Block>* chain_view, uint64_t threshold_n,
                             const fl::TrainConfig& train_cfg, const pqc::LatticeParams& params,
                             Rng& rng, uint64_t now_tick);

// Verifies the upload against the registered key and pools it (deduplicated
// by sender+digest); rejected uploads are dropped and counted.
bool edge_receive_upload(EdgeState& st, const UploadMessage& msg, const pqc::LatticeParams& params);

// Pool entries not yet broadcast to peers.
std::vector<PoolDeltaEntry> edge_collect_delta(EdgeState& st);

// Merges a peer delta after re-verifying every entry; idempotent under
// repeated delivery.
void edge_receive_delta(EdgeState& st, const std::vector<PoolDeltaEntry>& delta,
                        const pqc::LatticeParams& params);

struct AggregationOutcome {
    chain::GlobalRecord record;
    incentive::ContributionReport report;
    fl::GradientVector simple_global;
    std::vector<PoolEntry> consumed;  // pool entries that fed this aggregation
    uint64_t tick = 0;
};

// Algorithm-3 trigger: when unaggregated_count > phi (strictly), average the
// pool, run contribution identification, queue the resulting record for the
// next mined block's first transaction, and clear the pool.
std::optional<AggregationOutcome> edge_aggregate_if_due(EdgeState& st, uint64_t phi,
                                                        const incentive::IncentiveConfig& cfg,
                                                        uint64_t now_tick);

// Rebuilds the mining template if the tip, queue or pending record changed.
void edge_refresh_template(EdgeState& st, uint64_t now_tick, size_t max_txs_per_block);

// Adopts a block (own or foreign): invalidates the mining template, removes
// included transactions from the queue, and drops a pending global record
// once some block carries one.
bool edge_adopt_block(EdgeState& st, const chain::Block& block, const chain::MiningParams& params);

}  // namespace bflmec::nodes
