#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "bflmec/aggregate.hpp"
#include "bflmec/gradient.hpp"

namespace bflmec::incentive {

enum class Strategy { keep_all, discard_low };
enum class WeightMode { similarity, literal_distance };

struct IncentiveConfig {
    // eps unset -> recomputed per call as median pairwise distance * eps_factor
    std::optional<double> eps;
    double eps_factor = 0.5;
    uint32_t min_pts = 3;
    Strategy strategy = Strategy::keep_all;
    WeightMode weight_mode = WeightMode::similarity;
    double base = 100.0;

    void validate() const;
};

// DBSCAN result: labels[i] is the cluster index of the i-th point, or -1 for
// noise. The partition is invariant under permutation of the input (labels
// may be renumbered): clusters are the connected components of the core-point
// graph, and a border point joins the cluster of its nearest core neighbor
// (ties broken by lexicographically smallest core coordinates).
struct ClusterResult {
    std::vector<int> labels;
    int cluster_count = 0;
};

ClusterResult cluster(const std::vector<fl::GradientVector>& points, double eps, uint32_t min_pts);

// Cosine contribution weight between a local gradient and the global update.
// similarity: max(0, cos) (default); literal_distance: 1 - cos.
double cosine_theta(const fl::GradientVector& a, const fl::GradientVector& b, WeightMode mode);

enum class Label { high, low };

struct ContributionReport {
    std::map<uint32_t, Label> labels;            // per client
    std::map<uint32_t, double> thetas;           // per client
    std::vector<std::pair<uint32_t, double>> reward_list;  // high contributors, ascending id
    std::vector<fl::GradientVector> filtered_pool;
    fl::GradientVector recomputed_global;
    // Per pool entry, in the caller's pool order: whether the entry shares
    // the global's cluster, and whether it fed the published global (always
    // true under keep-all and in the degenerate fallback).
    std::vector<char> entry_high;
    std::vector<char> entry_applied;
    double resolved_eps = 0.0;
    // Set when the global gradient landed in noise (or no usable weights):
    // labels are all low, the reward list is empty and the global falls back
    // to the plain simple average over the full pool.
    bool degenerate = false;
};

// Algorithm: append w_g to the pool, cluster, label clients sharing w_g's
// cluster as high contribution, weight them by cosine theta, split `base`
// proportionally, then recompute the global per the configured strategy.
ContributionReport identify_contributions(const std::vector<fl::GradientVector>& pool,
                                          const fl::GradientVector& w_g,
                                          const IncentiveConfig& cfg);

}  // namespace bflmec::incentive
