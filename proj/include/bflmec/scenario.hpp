#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bflmec/incentive.hpp"
#include "bflmec/model.hpp"

namespace bflmec::sim {

enum class AttackMode { none, rotating, fixed };

struct AttackProfile {
    AttackMode mode = AttackMode::none;
    uint32_t count = 0;                // rotating: live malicious population
    std::vector<uint32_t> fixed_ids;   // fixed: compromised client ids
    double scale = 10.0;
    double coordinate_fraction = 0.25;
};

enum class DatasetKind { synthetic, idx };

// Full experiment input. Parsed from a flat key=value scenario file
// (keys documented in docs/formats.md) and echoed into the run manifest.
struct ScenarioConfig {
    uint32_t n = 20;  // clients
    uint32_t m = 2;   // edge nodes
    uint64_t seed = 1;

    fl::TrainConfig train;          // eta, epochs, batch
    uint64_t threshold_n = 75;      // client data threshold N
    uint64_t phi = 5;               // edge aggregation threshold
    double arrival_rate = 8;        // samples/tick/client

    double p_drop = 0.05;           // on-off connectivity Markov chain
    double p_reconnect = 0.5;

    AttackProfile attack;

    uint64_t difficulty = 4096;     // expected hashes per block
    uint64_t hash_budget = 4096;    // per edge per tick
    size_t max_txs_per_block = 64;

    uint64_t max_ticks = 1500;
    uint64_t max_agg_events = 0;    // 0 = unbounded
    bool stop_on_converged = false;
    uint64_t settle_ticks = 400;    // quiescence phase bound after the run

    DatasetKind dataset = DatasetKind::synthetic;
    size_t dataset_size = 2000;
    uint32_t features = 64;
    uint32_t classes = 10;
    double blob_radius = 3.0;  // class-mean separation of the synthetic task
    double blob_noise = 1.0;
    std::string idx_images;
    std::string idx_labels;
    fl::PartitionMode partition = fl::PartitionMode::label_skew;
    uint32_t shards_per_client = 2;
    double verify_fraction = 0.25;  // per-client holdout for acc_i

    incentive::IncentiveConfig incentive_cfg;

    std::string sig_params = "toy";

    // Test instrumentation (not a scenario-file key): retain every uploaded
    // gradient's serialized bytes in the run result for audits.
    bool audit_uploads = false;

    void validate() const;
    // Flat key=value echo in fixed key order (manifest + reproducibility).
    std::string echo() const;
};

ScenarioConfig parse_scenario_text(const std::string& text);
ScenarioConfig load_scenario_file(const std::string& path);
void apply_override(ScenarioConfig& cfg, const std::string& key, const std::string& value);

// Built-in presets, one per experiment family:
//   desk-default, paper-defaults, threshold-sweep, discard-vs-keep,
//   attack-iid, attack-noniid, attack-reward
std::vector<std::string> preset_names();
ScenarioConfig preset(const std::string& name);

}  // namespace bflmec::sim
