#pragma once

#include <string>
#include <vector>

#include "bflmec/ledger.hpp"
#include "bflmec/metrics.hpp"
#include "bflmec/nodes.hpp"
#include "bflmec/scenario.hpp"

namespace bflmec::sim {

struct RunResult {
    MetricsLog log;
    std::vector<std::vector<chain::Block>> chains;  // per edge node
    bool settled = false;  // queues drained and chains identical after the run
    uint64_t total_ticks = 0;
    double final_accuracy = 0;
    std::vector<Bytes> upload_payloads;  // only with ScenarioConfig::audit_uploads
};

// Executes the full scenario: per tick, connectivity toggles, data arrivals,
// client updates, upload delivery, edge pool exchange, aggregation checks,
// bounded mining and block delivery. Ends with a settling phase (no new
// transactions) so the ledgers quiesce. Deterministic per (config, seed).
RunResult run(const ScenarioConfig& cfg);

// Manifest text: version, seed, config echo, interpretation notes and output
// paths. Written before tick 0 by the CLI.
std::string run_manifest(const ScenarioConfig& cfg,
                         const std::vector<std::pair<std::string, std::string>>& outputs);

constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace bflmec::sim
