#include "bflmec/nodes.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "bflmec/aggregate.hpp"

namespace bflmec::nodes {

namespace {

void apply_perturbation(fl::GradientVector& g, const AttackBehavior& attack, Rng& rng) {
    const size_t dim = g.values.size();
    if (dim == 0) return;
    size_t count = static_cast<size_t>(std::llround(attack.coordinate_fraction * double(dim)));
    count = std::clamp<size_t>(count, 1, dim);
    auto perm = rng.permutation(static_cast<uint32_t>(dim));
    for (size_t i = 0; i < count; ++i) {
        const double sign = rng.chance(0.5) ? 1.0 : -1.0;
        g.values[perm[i]] *= sign * attack.scale;
    }
}

bool pool_contains(const std::vector<PoolEntry>& pool, uint32_t sender, const Digest& digest) {
    for (const auto& e : pool)
        if (e.sender_id == sender && e.digest == digest) return true;
    return false;
}

bool verify_against_registry(const EdgeState& st, uint32_t sender,
                             const fl::GradientVector& gradient, const Bytes& signature,
                             const pqc::LatticeParams& params, bool& unknown) {
    const auto it = st.registry.find(sender);
    if (it == st.registry.end()) {
        unknown = true;
        return false;
    }
    unknown = false;
    const pqc::PublicKey pk = pqc::parse_public_key(it->second);
    const pqc::LatticeSignature sig = pqc::parse_signature(signature);
    return pqc::verify(pk, fl::serialize_gradient(gradient), sig, params);
}

void pool_insert(EdgeState& st, PoolEntry entry) {
    st.pool.push_back(std::move(entry));
    ++st.unaggregated_count;
}

}  // namespace

ClientTickResult client_tick(ClientState& st, const fl::Dataset& arrivals,
                             const std::vector<chain::Block>* chain_view, uint64_t threshold_n,
                             const fl::TrainConfig& train_cfg, const pqc::LatticeParams& params,
                             Rng& rng, uint64_t now_tick) {
    ClientTickResult result;
    st.buffer.append(arrivals);

    if (st.buffer.size() > threshold_n) {
        if (chain_view && !chain_view->empty()) {
            const uint64_t height = chain_view->back().index;
            if (st.anchor <= height) {
                if (auto found = chain::scan_for_global(*chain_view, st.anchor)) {
                    st.anchor = found->first;
                    st.model.load(found->second.global_gradient.values);
                    ++st.records_seen;
                }
            }
        }
        const std::vector<double> updated = fl::local_update(st.model, st.buffer, train_cfg, rng);
        st.model.load(updated);
        fl::GradientVector g;
        g.values = updated;
        g.owner_id = st.id;
        g.round_tag = st.records_seen;
        st.pending.push_back(std::move(g));
        st.pending_ticks.push_back(now_tick);
        st.buffer = fl::Dataset{};  // consumed; the threshold gates fresh data
        st.buffer.class_count = st.model.classes;
        result.trained = true;
    }

    if (st.connected && !st.pending.empty()) {
        fl::GradientVector w = fl::simple_average(st.pending);
        w.owner_id = st.id;
        w.round_tag = st.records_seen;
        if (st.malicious) apply_perturbation(w, st.attack, rng);

        const Bytes message = fl::serialize_gradient(w);
        const pqc::LatticeSignature sig = pqc::sign(st.keypair.sk, message, params, rng);

        UploadMessage msg;
        msg.sender_id = st.id;
        msg.edge_id = st.associated_edge;
        msg.gradient = std::move(w);
        msg.signature = pqc::serialize_signature(sig, params);
        msg.public_key = pqc::serialize_public_key(st.keypair.pk, params);
        msg.production_ticks = st.pending_ticks;
        result.upload = std::move(msg);
        st.pending.clear();
        st.pending_ticks.clear();
    }
    return result;
}

bool edge_receive_upload(EdgeState& st, const UploadMessage& msg,
                         const pqc::LatticeParams& params) {
    bool unknown = false;
    if (!verify_against_registry(st, msg.sender_id, msg.gradient, msg.signature, params, unknown)) {
        if (unknown)
            ++st.counters.rejected_unknown;
        else
            ++st.counters.rejected_signature;
        return false;
    }
    const Digest digest = fl::gradient_digest(msg.gradient);
    if (pool_contains(st.pool, msg.sender_id, digest)) {
        ++st.counters.duplicates;
        return false;
    }
    PoolEntry e;
    e.sender_id = msg.sender_id;
    e.gradient = msg.gradient;
    e.signature = msg.signature;
    e.digest = digest;
    e.verified = true;
    e.production_ticks = msg.production_ticks;
    pool_insert(st, std::move(e));
    ++st.counters.accepted;
    st.tx_queue.push_back(chain::Transaction{msg.sender_id, st.id, msg.signature, digest});
    return true;
}

std::vector<PoolDeltaEntry> edge_collect_delta(EdgeState& st) {
    std::vector<PoolDeltaEntry> delta;
    for (size_t i = st.broadcast_cursor; i < st.pool.size(); ++i) {
        const auto& e = st.pool[i];
        delta.push_back(PoolDeltaEntry{e.sender_id, e.gradient, e.signature, e.production_ticks});
    }
    st.broadcast_cursor = st.pool.size();
    return delta;
}

void edge_receive_delta(EdgeState& st, const std::vector<PoolDeltaEntry>& delta,
                        const pqc::LatticeParams& params) {
    for (const auto& d : delta) {
        const Digest digest = fl::gradient_digest(d.gradient);
        if (pool_contains(st.pool, d.sender_id, digest)) continue;
        bool unknown = false;
        if (!verify_against_registry(st, d.sender_id, d.gradient, d.signature, params, unknown)) {
            if (unknown)
                ++st.counters.rejected_unknown;
            else
                ++st.counters.rejected_signature;
            continue;
        }
        PoolEntry e;
        e.sender_id = d.sender_id;
        e.gradient = d.gradient;
        e.signature = d.signature;
        e.digest = digest;
        e.verified = true;
        e.production_ticks = d.production_ticks;
        pool_insert(st, std::move(e));
        st.tx_queue.push_back(chain::Transaction{d.sender_id, st.id, d.signature, digest});
    }
}

std::optional<AggregationOutcome> edge_aggregate_if_due(EdgeState& st, uint64_t phi,
                                                        const incentive::IncentiveConfig& cfg,
                                                        uint64_t now_tick) {
    if (st.unaggregated_count <= phi || st.pool.empty()) return std::nullopt;

    // Fixed order regardless of arrival interleaving, so every edge computes
    // byte-identical records from the same gradient set.
    std::vector<PoolEntry> entries = std::move(st.pool);
    st.pool.clear();
    st.broadcast_cursor = 0;
    st.unaggregated_count = 0;
    std::sort(entries.begin(), entries.end(), [](const PoolEntry& a, const PoolEntry& b) {
        if (a.sender_id != b.sender_id) return a.sender_id < b.sender_id;
        return a.digest < b.digest;
    });

    std::vector<fl::GradientVector> gradients;
    gradients.reserve(entries.size());
    for (const auto& e : entries) {
        if (!e.verified) throw std::logic_error("unverified gradient reached aggregation");
        gradients.push_back(e.gradient);
    }

    fl::GradientVector simple = fl::simple_average(gradients);
    simple.owner_id = 0;  // reserved id for the global model
    simple.round_tag = st.aggregations_done;

    AggregationOutcome out;
    out.report = incentive::identify_contributions(gradients, simple, cfg);
    out.simple_global = std::move(simple);
    out.record.global_gradient = out.report.recomputed_global;
    out.record.global_gradient.owner_id = 0;
    out.record.global_gradient.round_tag = st.aggregations_done;
    out.record.reward_list = out.report.reward_list;
    out.consumed = std::move(entries);
    out.tick = now_tick;

    st.pending_global = out.record;
    ++st.aggregations_done;
    return out;
}

void edge_refresh_template(EdgeState& st, uint64_t now_tick, size_t max_txs_per_block) {
    const chain::Block& tip = st.chain.back();
    const size_t tx_count = std::min(st.tx_queue.size(), max_txs_per_block);
    std::optional<Digest> record_digest;
    if (st.pending_global)
        record_digest = sha256(chain::serialize_global_record(*st.pending_global));

    if (st.miner && st.template_tip_index == tip.index && st.template_tx_count == tx_count &&
        st.template_record_digest == record_digest)
        return;  // keep mining the same header, nonce cursor advances

    chain::Block cand;
    cand.index = tip.index + 1;
    cand.prev_hash = tip.hash;
    cand.timestamp = now_tick;
    cand.tx_first = st.pending_global;
    cand.txs.assign(st.tx_queue.begin(), st.tx_queue.begin() + static_cast<long>(tx_count));
    st.miner.emplace(std::move(cand));
    st.template_tip_index = tip.index;
    st.template_tx_count = tx_count;
    st.template_record_digest = record_digest;
}

bool edge_adopt_block(EdgeState& st, const chain::Block& block, const chain::MiningParams& params) {
    if (chain::adopt_block(st.chain, block, params) != chain::BlockFault::none) return false;
    st.miner.reset();

    // Committed transactions leave the local queue.
    std::erase_if(st.tx_queue, [&](const chain::Transaction& t) {
        for (const auto& bt : block.txs)
            if (bt.sender_id == t.sender_id && bt.gradient_digest == t.gradient_digest) return true;
        return false;
    });

    // A committed record supersedes an identical pending one; a different
    // pending record stays queued for the next block.
    if (block.tx_first && st.pending_global &&
        chain::serialize_global_record(*block.tx_first) ==
            chain::serialize_global_record(*st.pending_global))
        st.pending_global.reset();
    return true;
}

}  // namespace bflmec::nodes
