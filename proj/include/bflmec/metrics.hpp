#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bflmec::sim {

struct TickRow {
    uint64_t tick = 0;
    double avg_accuracy = 0;
    uint32_t tau_c = 0;  // clients that performed a local update this tick
    uint32_t connected = 0;
    uint32_t uploads = 0;
    uint32_t uploads_rejected = 0;
    uint32_t blocks = 0;
    uint64_t chain_height = 0;
    uint32_t pool_size = 0;
    uint32_t agg_events = 0;  // cumulative committed aggregation events
};

struct AggEventRow {
    uint32_t event = 0;  // 0-based committed-record ordinal
    uint64_t tick_created = 0;
    uint64_t tick_committed = 0;
    uint64_t block_index = 0;
    uint32_t pool_size = 0;
    uint32_t high_clients = 0;
    uint32_t low_clients = 0;
    uint32_t entries_discarded = 0;
    uint32_t malicious_in_pool = 0;
    uint32_t malicious_low = 0;
    bool degenerate = false;
    double avg_accuracy = 0;
    double reward_sum = 0;
    double resolved_eps = 0;
    bool converged = false;  // convergence criterion satisfied as of this event
};

struct RewardRow {
    uint32_t event = 0;
    uint32_t client = 0;
    double reward = 0;
    double cumulative = 0;
};

enum class GradientFate { trailing, applied, discarded };

// One local update by one client and what became of it. "applied" means it
// fed a global aggregation; "discarded" means an aggregation saw it but the
// discard strategy dropped it; "trailing" means the run ended first.
struct GradientRecord {
    uint32_t client = 0;
    uint64_t produced_tick = 0;
    GradientFate fate = GradientFate::trailing;
    uint64_t resolved_tick = 0;
};

struct MetricsLog {
    std::vector<TickRow> ticks;
    std::vector<AggEventRow> events;
    std::vector<RewardRow> rewards;
    std::vector<GradientRecord> gradients;
    // per-tick malicious id set (attack runs only)
    std::vector<std::pair<uint64_t, std::vector<uint32_t>>> ground_truth;
    std::map<uint32_t, double> cumulative_rewards;
    int converged_event = -1;  // -1: never converged
    uint64_t converged_tick = 0;
    uint64_t last_tick = 0;
};

// Convergence rule: earliest event index whose trailing five accuracy deltas
// are each within 0.005 absolute; -1 when the series never settles.
int convergence_check(const std::vector<double>& accuracy_series);

struct ConcurrencyMetrics {
    uint32_t tau_max = 0;
    double tau_avg = 0;  // average concurrency over ticks 0..T
    std::map<uint32_t, double> per_client_delay;
    double mean_delay = 0;  // mean of per-client average delays
};

// Definition-style concurrency and delay metrics. A gradient's delay is the
// tick distance from production to the aggregation that applied it; gradients
// still unapplied at the end contribute their pending age. Discarded
// gradients count toward T_i but add no delay.
ConcurrencyMetrics concurrency_metrics(const MetricsLog& log);

// Fraction of malicious pool entries labeled low over the last `windows`
// aggregation events; absent when those windows saw no malicious entries.
std::optional<double> detection_rate(const MetricsLog& log, size_t windows);

// CSV emitters (headers documented in docs/formats.md). Doubles are printed
// with shortest round-trip formatting so equal runs give equal bytes.
std::string format_double(double v);
std::string metrics_csv(const MetricsLog& log);
std::string events_csv(const MetricsLog& log);
std::string rewards_csv(const MetricsLog& log);
std::string ground_truth_csv(const MetricsLog& log);
std::string detection_csv(const MetricsLog& log);

}  // namespace bflmec::sim
