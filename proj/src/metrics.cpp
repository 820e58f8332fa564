#include "bflmec/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace bflmec::sim {

int convergence_check(const std::vector<double>& accuracy_series) {
    for (size_t i = 5; i < accuracy_series.size(); ++i) {
        bool stable = true;
        for (size_t j = i - 4; j <= i; ++j)
            if (std::fabs(accuracy_series[j] - accuracy_series[j - 1]) > 0.005) {
                stable = false;
                break;
            }
        if (stable) return static_cast<int>(i);
    }
    return -1;
}

ConcurrencyMetrics concurrency_metrics(const MetricsLog& log) {
    ConcurrencyMetrics m;
    uint64_t total = 0;
    for (const auto& row : log.ticks) {
        m.tau_max = std::max(m.tau_max, row.tau_c);
        total += row.tau_c;
    }
    if (!log.ticks.empty()) m.tau_avg = double(total) / double(log.ticks.size());

    std::map<uint32_t, std::pair<double, uint64_t>> acc;  // client -> (delay sum, updates)
    for (const auto& g : log.gradients) {
        auto& [sum, count] = acc[g.client];
        ++count;
        if (g.fate == GradientFate::applied)
            sum += double(g.resolved_tick - g.produced_tick);
        else if (g.fate == GradientFate::trailing)
            sum += double(log.last_tick - g.produced_tick);
    }
    double total_delay = 0;
    for (const auto& [client, sc] : acc) {
        const double avg = sc.second ? sc.first / double(sc.second) : 0.0;
        m.per_client_delay[client] = avg;
        total_delay += avg;
    }
    if (!acc.empty()) m.mean_delay = total_delay / double(acc.size());
    return m;
}

std::optional<double> detection_rate(const MetricsLog& log, size_t windows) {
    if (log.events.empty() || windows == 0) return std::nullopt;
    const size_t first = log.events.size() > windows ? log.events.size() - windows : 0;
    uint64_t malicious = 0, detected = 0;
    for (size_t i = first; i < log.events.size(); ++i) {
        malicious += log.events[i].malicious_in_pool;
        detected += log.events[i].malicious_low;
    }
    if (malicious == 0) return std::nullopt;
    return double(detected) / double(malicious);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string metrics_csv(const MetricsLog& log) {
    std::ostringstream os;
    os << "tick,avg_accuracy,tau_c,connected,uploads,uploads_rejected,blocks,chain_height,"
          "pool_size,agg_events\n";
    for (const auto& r : log.ticks)
        os << r.tick << ',' << format_double(r.avg_accuracy) << ',' << r.tau_c << ','
           << r.connected << ',' << r.uploads << ',' << r.uploads_rejected << ',' << r.blocks
           << ',' << r.chain_height << ',' << r.pool_size << ',' << r.agg_events << '\n';
    return os.str();
}

std::string events_csv(const MetricsLog& log) {
    std::ostringstream os;
    os << "event,tick_created,tick_committed,block_index,pool_size,high_clients,low_clients,"
          "entries_discarded,malicious_in_pool,malicious_low,degenerate,avg_accuracy,reward_sum,"
          "resolved_eps,converged\n";
    for (const auto& e : log.events)
        os << e.event << ',' << e.tick_created << ',' << e.tick_committed << ',' << e.block_index
           << ',' << e.pool_size << ',' << e.high_clients << ',' << e.low_clients << ','
           << e.entries_discarded << ',' << e.malicious_in_pool << ',' << e.malicious_low << ','
           << (e.degenerate ? 1 : 0) << ',' << format_double(e.avg_accuracy) << ','
           << format_double(e.reward_sum) << ',' << format_double(e.resolved_eps) << ','
           << (e.converged ? 1 : 0) << '\n';
    return os.str();
}

std::string rewards_csv(const MetricsLog& log) {
    std::ostringstream os;
    os << "event,client,reward,cumulative\n";
    for (const auto& r : log.rewards)
        os << r.event << ',' << r.client << ',' << format_double(r.reward) << ','
           << format_double(r.cumulative) << '\n';
    return os.str();
}

std::string ground_truth_csv(const MetricsLog& log) {
    std::ostringstream os;
    os << "tick,malicious_ids\n";
    for (const auto& [tick, ids] : log.ground_truth) {
        os << tick << ',';
        for (size_t i = 0; i < ids.size(); ++i) os << (i ? ";" : "") << ids[i];
        os << '\n';
    }
    return os.str();
}

std::string detection_csv(const MetricsLog& log) {
    std::ostringstream os;
    os << "event,tick_committed,malicious_in_pool,malicious_low,rate\n";
    for (const auto& e : log.events) {
        os << e.event << ',' << e.tick_committed << ',' << e.malicious_in_pool << ','
           << e.malicious_low << ',';
        if (e.malicious_in_pool > 0)
            os << format_double(double(e.malicious_low) / double(e.malicious_in_pool));
        else
            os << "absent";
        os << '\n';
    }
    return os.str();
}

}  // namespace bflmec::sim
