#include "bflmec/simnet.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bflmec/aggregate.hpp"
#include "bflmec/dataset.hpp"

namespace bflmec::sim {

namespace {

struct DigestKey {
    uint32_t sender;
    Digest digest;
    bool operator<(const DigestKey& o) const {
        if (sender != o.sender) return sender < o.sender;
        return digest < o.digest;
    }
};

struct Engine {
    const ScenarioConfig& cfg;
    pqc::LatticeParams params;
    chain::MiningParams mining;

    std::vector<nodes::ClientState> clients;
    std::vector<fl::Dataset> stream;      // per client, arrival order
    std::vector<size_t> stream_pos;
    std::vector<double> arrival_credit;
    fl::Dataset verify_pool;              // shared holdout for acc_i
    std::vector<double> acc_cache;        // refreshed when a client's model changes
    std::vector<Rng> client_rng;          // training, signing, perturbation
    std::vector<Rng> link_rng;            // connectivity + edge association
    Rng attack_rng;

    std::vector<nodes::EdgeState> edges;

    MetricsLog log;
    std::vector<Bytes> upload_payloads;
    std::map<DigestKey, bool> upload_malice;
    std::map<std::pair<uint32_t, uint64_t>, size_t> production_index;  // (client, tick) -> record
    std::map<Digest, nodes::AggregationOutcome> pending_outcomes;
    std::vector<double> event_accuracy;
    std::set<uint32_t> pending_rotation;  // malicious ids detected last tick
    uint64_t processed_height = 0;        // edge-0 chain prefix already logged
    uint32_t committed_events = 0;
    double tick_accuracy = 0;

    explicit Engine(const ScenarioConfig& c)
        : cfg(c),
          params(c.sig_params == "mini" ? pqc::mini_params() : pqc::toy_params()),
          mining(chain::MiningParams::from_difficulty(c.difficulty)),
          attack_rng(Rng::stream(c.seed, "attack")) {}

    void setup();
    void tick_phase(uint64_t t, bool active);
    bool quiescent() const;
    RunResult finish(uint64_t total_ticks);

    void apply_rotation(uint64_t t);
    void log_ground_truth(uint64_t t);
    void process_outcome(const nodes::AggregationOutcome& outcome);
    void process_commits(uint64_t t);
    double measure_accuracy();
};

void Engine::setup() {
    cfg.validate();

    fl::Dataset data = cfg.dataset == DatasetKind::synthetic
                           ? fl::synthetic_blobs(cfg.seed, cfg.dataset_size, cfg.features,
                                                 cfg.classes, cfg.blob_radius, cfg.blob_noise)
                           : fl::load_idx(cfg.idx_images, cfg.idx_labels);

    // Global verification holdout drawn from a seeded permutation (a strided
    // slice would alias with the generator's cyclic label order). Client
    // training data is partitioned (possibly label-skewed) from the rest;
    // every client verifies against the shared holdout, so acc_i tracks how
    // much global knowledge the client's model holds.
    const size_t stride =
        std::max<size_t>(2, static_cast<size_t>(std::llround(1.0 / cfg.verify_fraction)));
    Rng split_rng = Rng::stream(cfg.seed, "verify-split");
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    split_rng.shuffle(order);
    std::vector<size_t> train_idx, verify_idx;
    for (size_t s = 0; s < order.size(); ++s)
        (s % stride == 0 ? verify_idx : train_idx).push_back(order[s]);
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(verify_idx.begin(), verify_idx.end());
    const fl::Dataset train_pool = data.subset(train_idx);
    verify_pool = data.subset(verify_idx);

    Rng part_rng = Rng::stream(cfg.seed, "partition");
    auto parts = fl::partition(train_pool, cfg.n, cfg.partition, cfg.shards_per_client, part_rng);

    const uint32_t feature_dim = static_cast<uint32_t>(data.features.front().size());
    clients.resize(cfg.n);
    stream.resize(cfg.n);
    stream_pos.assign(cfg.n, 0);
    arrival_credit.assign(cfg.n, 0.0);

    // Shared bootstrap model: all clients start from zero parameters until
    // the first global record appears on the chain.
    const fl::Model zero = fl::Model::zeros(data.class_count, feature_dim);

    for (uint32_t i = 0; i < cfg.n; ++i) {
        const uint32_t id = i + 1;
        auto& cl = clients[i];
        cl.id = id;
        Rng key_rng = Rng::stream(cfg.seed, "client:" + std::to_string(id) + ":keys");
        cl.keypair = pqc::keypair_gen(params, key_rng);
        cl.model = zero;
        cl.buffer.class_count = data.class_count;
        cl.attack.scale = cfg.attack.scale;
        cl.attack.coordinate_fraction = cfg.attack.coordinate_fraction;
        client_rng.push_back(Rng::stream(cfg.seed, "client:" + std::to_string(id)));
        link_rng.push_back(Rng::stream(cfg.seed, "client:" + std::to_string(id) + ":link"));

        // The client's partition feeds its arrival stream in shuffled order.
        std::vector<size_t> stream_order(parts[i].size());
        std::iota(stream_order.begin(), stream_order.end(), 0);
        Rng stream_rng = Rng::stream(cfg.seed, "client:" + std::to_string(id) + ":stream");
        stream_rng.shuffle(stream_order);
        stream[i] = parts[i].subset(stream_order);

        cl.associated_edge = static_cast<uint32_t>(link_rng[i].below(cfg.m));
    }

    // Initial malicious population.
    if (cfg.attack.mode == AttackMode::fixed) {
        for (uint32_t id : cfg.attack.fixed_ids) clients[id - 1].malicious = true;
    } else if (cfg.attack.mode == AttackMode::rotating) {
        auto perm = attack_rng.permutation(cfg.n);
        for (uint32_t i = 0; i < cfg.attack.count; ++i) clients[perm[i]].malicious = true;
    }

    edges.resize(cfg.m);
    for (uint32_t e = 0; e < cfg.m; ++e) {
        edges[e].id = e;
        edges[e].chain.push_back(chain::genesis_block());
        for (const auto& cl : clients)
            edges[e].registry[cl.id] = pqc::serialize_public_key(cl.keypair.pk, params);
    }

    acc_cache.assign(cfg.n, fl::evaluate(zero, verify_pool));
}

void Engine::apply_rotation(uint64_t) {
    if (cfg.attack.mode != AttackMode::rotating || pending_rotation.empty()) {
        pending_rotation.clear();
        return;
    }
    for (uint32_t detected : pending_rotation) {
        auto& old_client = clients[detected - 1];
        if (!old_client.malicious) continue;  // already rotated out
        std::vector<uint32_t> candidates;
        for (const auto& cl : clients)
            if (!cl.malicious && cl.id != detected) candidates.push_back(cl.id);
        if (candidates.empty()) break;
        old_client.malicious = false;
        const uint32_t next = candidates[attack_rng.below(candidates.size())];
        clients[next - 1].malicious = true;
    }
    pending_rotation.clear();
}

void Engine::log_ground_truth(uint64_t t) {
    if (cfg.attack.mode == AttackMode::none) return;
    std::vector<uint32_t> ids;
    for (const auto& cl : clients)
        if (cl.malicious) ids.push_back(cl.id);
    log.ground_truth.emplace_back(t, std::move(ids));
}

void Engine::process_outcome(const nodes::AggregationOutcome& outcome) {
    const Digest digest = sha256(chain::serialize_global_record(outcome.record));
    if (pending_outcomes.count(digest)) return;  // peers computed the identical record

    for (size_t i = 0; i < outcome.consumed.size(); ++i) {
        const auto& entry = outcome.consumed[i];
        const bool applied = outcome.report.entry_applied[i] != 0;
        for (uint64_t produced : entry.production_ticks) {
            auto it = production_index.find({entry.sender_id, produced});
            if (it == production_index.end()) continue;
            auto& rec = log.gradients[it->second];
            if (rec.fate != GradientFate::trailing) continue;
            rec.fate = applied ? GradientFate::applied : GradientFate::discarded;
            rec.resolved_tick = outcome.tick;
        }
        // Rotating attackers go honest on the first tick after a detection
        // (labeled low by a round that actually separated contributions).
        if (cfg.attack.mode == AttackMode::rotating && !outcome.report.degenerate) {
            auto mal = upload_malice.find({entry.sender_id, entry.digest});
            if (mal != upload_malice.end() && mal->second && !outcome.report.entry_high[i])
                pending_rotation.insert(entry.sender_id);
        }
    }
    pending_outcomes.emplace(digest, outcome);
}

void Engine::process_commits(uint64_t t) {
    const auto& chain0 = edges[0].chain;
    for (uint64_t idx = processed_height + 1; idx < chain0.size(); ++idx) {
        const chain::Block& b = chain0[idx];
        if (!b.tx_first) continue;
        const Digest digest = sha256(chain::serialize_global_record(*b.tx_first));
        const auto it = pending_outcomes.find(digest);

        AggEventRow ev;
        ev.event = committed_events++;
        ev.tick_committed = t;
        ev.block_index = b.index;
        ev.avg_accuracy = tick_accuracy;
        for (const auto& [id, reward] : b.tx_first->reward_list) ev.reward_sum += reward;

        if (it != pending_outcomes.end()) {
            const auto& out = it->second;
            ev.tick_created = out.tick;
            ev.pool_size = static_cast<uint32_t>(out.consumed.size());
            ev.degenerate = out.report.degenerate;
            ev.resolved_eps = out.report.resolved_eps;
            for (const auto& [id, label] : out.report.labels)
                (label == incentive::Label::high ? ev.high_clients : ev.low_clients)++;
            for (size_t i = 0; i < out.consumed.size(); ++i) {
                if (!out.report.entry_applied[i]) ++ev.entries_discarded;
                auto mal = upload_malice.find({out.consumed[i].sender_id, out.consumed[i].digest});
                const bool is_mal = mal != upload_malice.end() && mal->second;
                if (is_mal) {
                    ++ev.malicious_in_pool;
                    // degenerate rounds separate nothing, so they detect nothing
                    if (!out.report.entry_high[i] && !out.report.degenerate) ++ev.malicious_low;
                }
            }
        }

        for (const auto& [id, reward] : b.tx_first->reward_list) {
            auto& cum = log.cumulative_rewards[id];
            cum += reward;
            log.rewards.push_back(RewardRow{ev.event, id, reward, cum});
        }

        event_accuracy.push_back(ev.avg_accuracy);
        if (log.converged_event < 0) {
            const int conv = convergence_check(event_accuracy);
            if (conv >= 0) {
                log.converged_event = conv;
                log.converged_tick = t;
            }
        }
        ev.converged = log.converged_event >= 0;
        log.events.push_back(ev);
    }
    processed_height = chain0.size() - 1;
}

double Engine::measure_accuracy() { return fl::average_accuracy(acc_cache); }

void Engine::tick_phase(uint64_t t, bool active) {
    TickRow row;
    row.tick = t;

    if (active) {
        // 1. connectivity (per-client stream, independent of everything else)
        for (uint32_t i = 0; i < cfg.n; ++i) {
            auto& cl = clients[i];
            if (cl.connected) {
                if (link_rng[i].chance(cfg.p_drop)) cl.connected = false;
            } else if (link_rng[i].chance(cfg.p_reconnect)) {
                cl.connected = true;
                cl.associated_edge = static_cast<uint32_t>(link_rng[i].below(cfg.m));
            }
        }
        // 2. attack bookkeeping
        apply_rotation(t);
        log_ground_truth(t);

        // 3+4. arrivals and client update strategy
        std::vector<nodes::UploadMessage> uploads;
        for (uint32_t i = 0; i < cfg.n; ++i) {
            auto& cl = clients[i];
            arrival_credit[i] += cfg.arrival_rate;
            fl::Dataset arrivals;
            arrivals.class_count = stream[i].class_count;
            while (arrival_credit[i] >= 1.0) {
                arrival_credit[i] -= 1.0;
                const size_t s = stream_pos[i]++ % stream[i].size();
                arrivals.append_sample(stream[i].features[s], stream[i].labels[s]);
            }
            const std::vector<chain::Block>* view =
                cl.connected ? &edges[cl.associated_edge].chain : nullptr;
            auto res = nodes::client_tick(cl, arrivals, view, cfg.threshold_n, cfg.train, params,
                                          client_rng[i], t);
            if (res.trained) {
                ++row.tau_c;
                production_index[{cl.id, t}] = log.gradients.size();
                log.gradients.push_back(GradientRecord{cl.id, t, GradientFate::trailing, 0});
                acc_cache[i] = fl::evaluate(cl.model, verify_pool);
            }
            if (res.upload) uploads.push_back(std::move(*res.upload));
            if (cl.connected) ++row.connected;
        }

        // 5. upload delivery
        for (const auto& up : uploads) {
            const Digest digest = fl::gradient_digest(up.gradient);
            upload_malice[{up.sender_id, digest}] = clients[up.sender_id - 1].malicious;
            if (cfg.audit_uploads) upload_payloads.push_back(fl::serialize_gradient(up.gradient));
            if (nodes::edge_receive_upload(edges[up.edge_id], up, params))
                ++row.uploads;
            else
                ++row.uploads_rejected;
        }
    }

    tick_accuracy = measure_accuracy();

    // 6. edge pool exchange (all-to-all within the tick)
    std::vector<std::vector<nodes::PoolDeltaEntry>> deltas(cfg.m);
    for (uint32_t e = 0; e < cfg.m; ++e) deltas[e] = nodes::edge_collect_delta(edges[e]);
    for (uint32_t from = 0; from < cfg.m; ++from)
        for (uint32_t to = 0; to < cfg.m; ++to)
            if (from != to) nodes::edge_receive_delta(edges[to], deltas[from], params);

    // 7. aggregation checks
    for (auto& edge : edges)
        if (auto outcome = nodes::edge_aggregate_if_due(edge, cfg.phi, cfg.incentive_cfg, t))
            process_outcome(*outcome);

    // 8. bounded mining
    struct Candidate {
        uint64_t attempts;
        uint32_t miner;
        chain::Block block;
    };
    std::vector<Candidate> candidates;
    for (auto& edge : edges) {
        nodes::edge_refresh_template(edge, t, cfg.max_txs_per_block);
        uint64_t used = 0;
        if (auto mined = edge.miner->run(cfg.hash_budget, mining, &used))
            candidates.push_back(Candidate{used, edge.id, std::move(*mined)});
    }

    // 9. block delivery: earliest found wins; every edge (the miner included)
    // adopts through the same ordered pipeline, so ties resolve identically
    // everywhere and no forks persist.
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.attempts != b.attempts) return a.attempts < b.attempts;
        return a.miner < b.miner;
    });
    for (const auto& cand : candidates) {
        bool adopted = false;
        for (auto& edge : edges) adopted = nodes::edge_adopt_block(edge, cand.block, mining) || adopted;
        if (adopted) ++row.blocks;
    }

    // 10. committed-record bookkeeping
    process_commits(t);

    // 11. metrics row
    row.avg_accuracy = tick_accuracy;
    row.chain_height = edges[0].chain.back().index;
    row.pool_size = static_cast<uint32_t>(edges[0].pool.size());
    row.agg_events = committed_events;
    log.ticks.push_back(row);
    log.last_tick = t;
}

bool Engine::quiescent() const {
    // Pools may retain gradients below the phi threshold (they become the
    // trailing delay term); queues and pending records must drain.
    for (const auto& e : edges)
        if (!e.tx_queue.empty() || e.pending_global) return false;
    for (uint32_t e = 1; e < cfg.m; ++e)
        if (edges[e].chain.size() != edges[0].chain.size() ||
            edges[e].chain.back().hash != edges[0].chain.back().hash)
            return false;
    return true;
}

RunResult Engine::finish(uint64_t total_ticks) {
    for (auto& g : log.gradients)
        if (g.fate == GradientFate::trailing) g.resolved_tick = log.last_tick;

    RunResult res;
    res.total_ticks = total_ticks;
    res.final_accuracy = log.ticks.empty() ? 0.0 : log.ticks.back().avg_accuracy;
    res.settled = quiescent();
    for (auto& e : edges) res.chains.push_back(std::move(e.chain));
    res.log = std::move(log);
    res.upload_payloads = std::move(upload_payloads);
    return res;
}

}  // namespace

RunResult run(const ScenarioConfig& cfg) {
    Engine eng(cfg);
    eng.setup();

    uint64_t t = 0;
    for (; t < cfg.max_ticks; ++t) {
        eng.tick_phase(t, /*active=*/true);
        if (cfg.max_agg_events > 0 && eng.committed_events >= cfg.max_agg_events) {
            ++t;
            break;
        }
        if (cfg.stop_on_converged && eng.log.converged_event >= 0) {
            ++t;
            break;
        }
    }
    // Settling: no arrivals or uploads; pools, queues and pending records
    // drain into the chain until every edge holds the same ledger.
    const uint64_t settle_end = t + cfg.settle_ticks;
    for (; t < settle_end && !eng.quiescent(); ++t) eng.tick_phase(t, /*active=*/false);

    return eng.finish(t);
}

std::string run_manifest(const ScenarioConfig& cfg,
                         const std::vector<std::pair<std::string, std::string>>& outputs) {
    std::ostringstream os;
    os << "artifact_version = " << kArtifactVersion << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "# interpretation flags\n";
    os << "phi_rule = unaggregated-transaction-count\n";
    os << "weight_mode = "
       << (cfg.incentive_cfg.weight_mode == incentive::WeightMode::similarity
               ? "similarity"
               : "literal-distance")
       << "\n";
    for (const auto& [key, path] : outputs) os << "output_" << key << " = " << path << "\n";
    os << "# config echo\n";
    os << cfg.echo();
    return os.str();
}

}  // namespace bflmec::sim
