#include "bflmec/incentive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bflmec::incentive {

namespace {

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

void IncentiveConfig::validate() const {
    if (eps && !(*eps > 0)) throw std::invalid_argument("incentive: eps must be positive");
    if (!(eps_factor > 0)) throw std::invalid_argument("incentive: eps_factor must be positive");
    if (min_pts < 1) throw std::invalid_argument("incentive: min_pts must be >= 1");
    if (!(base > 0)) throw std::invalid_argument("incentive: base must be positive");
}

ClusterResult cluster(const std::vector<fl::GradientVector>& points, double eps, uint32_t min_pts) {
    const size_t n = points.size();
    if (n == 0) throw std::invalid_argument("cluster: need at least one point");
    const double eps2 = eps * eps;

    std::vector<std::vector<double>> d2(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) d2[i][j] = d2[j][i] = dist2(points[i].values, points[j].values);

    std::vector<bool> core(n, false);
    for (size_t i = 0; i < n; ++i) {
        size_t neighbors = 0;  // epsilon-neighborhood includes the point itself
        for (size_t j = 0; j < n; ++j)
            if (d2[i][j] <= eps2) ++neighbors;
        core[i] = neighbors >= min_pts;
    }

    // Clusters are components of the core graph; independent of input order.
    UnionFind uf(n);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (core[i] && core[j] && d2[i][j] <= eps2) uf.unite(int(i), int(j));

    ClusterResult res;
    res.labels.assign(n, -1);
    std::vector<int> root_label(n, -1);
    for (size_t i = 0; i < n; ++i) {
        if (!core[i]) continue;
        int r = uf.find(int(i));
        if (root_label[r] < 0) root_label[r] = res.cluster_count++;
        res.labels[i] = root_label[r];
    }

    // Border points attach to the nearest core within eps. Distance ties are
    // broken by the lexicographically smallest core coordinates so that the
    // partition stays permutation-invariant.
    for (size_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        int best = -1;
        for (size_t j = 0; j < n; ++j) {
            if (!core[j] || d2[i][j] > eps2) continue;
            if (best < 0 || d2[i][j] < d2[i][best] ||
                (d2[i][j] == d2[i][best] && points[j].values < points[best].values))
                best = int(j);
        }
        if (best >= 0) res.labels[i] = res.labels[best];
    }
    return res;
}

double cosine_theta(const fl::GradientVector& a, const fl::GradientVector& b, WeightMode mode) {
    const double na = norm(a.values), nb = norm(b.values);
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_theta: zero vector");
    double dot = 0;
    for (size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    const double cos = dot / (na * nb);
    return mode == WeightMode::similarity ? std::max(0.0, cos) : 1.0 - cos;
}

ContributionReport identify_contributions(const std::vector<fl::GradientVector>& pool,
                                          const fl::GradientVector& w_g,
                                          const IncentiveConfig& cfg) {
    cfg.validate();
    if (pool.empty()) throw std::invalid_argument("identify_contributions: empty pool");

    // Fixed processing order regardless of how the caller ordered the pool.
    std::vector<size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (pool[a].owner_id != pool[b].owner_id) return pool[a].owner_id < pool[b].owner_id;
        if (pool[a].round_tag != pool[b].round_tag) return pool[a].round_tag < pool[b].round_tag;
        return pool[a].values < pool[b].values;
    });

    std::vector<fl::GradientVector> pts;
    pts.reserve(pool.size() + 1);
    for (size_t i : order) pts.push_back(pool[i]);
    pts.push_back(w_g);  // global gradient joins the clustered set, last slot

    ContributionReport rep;
    double eps = 0.0;
    if (cfg.eps) {
        eps = *cfg.eps;
    } else {
        // Adaptive radius: pool spread shrinks as training converges, so eps
        // tracks the (lower) median pairwise distance. The median is taken
        // over the pool itself, not the appended global: a scaled-up minority
        // drags the average away from every cluster, and only the raw pool
        // distances keep the radius wide enough to absorb that drift.
        std::vector<double> d2s;
        d2s.reserve(pool.size() * (pool.size() - 1) / 2);
        for (size_t i = 0; i < pool.size(); ++i)
            for (size_t j = i + 1; j < pool.size(); ++j)
                d2s.push_back(dist2(pts[i].values, pts[j].values));
        std::sort(d2s.begin(), d2s.end());
        eps = d2s.empty() ? 1.0 : std::sqrt(d2s[(d2s.size() - 1) / 2]) * cfg.eps_factor;
        if (eps <= 0.0) eps = 1e-12;
    }
    rep.resolved_eps = eps;

    const ClusterResult clusters = cluster(pts, eps, cfg.min_pts);
    const int global_cluster = clusters.labels.back();
    const double wg_norm = norm(w_g.values);

    std::vector<bool> entry_high(pool.size(), false);
    std::vector<double> entry_theta(pool.size(), 0.0);
    bool any_high = false;
    for (size_t i = 0; i < pool.size(); ++i) {
        const auto& g = pts[i];
        entry_high[i] = global_cluster >= 0 && clusters.labels[i] == global_cluster;
        any_high = any_high || entry_high[i];
        if (wg_norm > 0.0 && norm(g.values) > 0.0)
            entry_theta[i] = cosine_theta(g, w_g, cfg.weight_mode);
        rep.labels[g.owner_id] = Label::low;  // upgraded below
        rep.thetas[g.owner_id] += entry_theta[i];
    }
    for (size_t i = 0; i < pool.size(); ++i)
        if (entry_high[i]) rep.labels[pts[i].owner_id] = Label::high;

    rep.entry_high.assign(pool.size(), 0);
    rep.entry_applied.assign(pool.size(), 1);
    for (size_t i = 0; i < pool.size(); ++i) rep.entry_high[order[i]] = entry_high[i] ? 1 : 0;

    // Reward weights count only in-cluster entries of high clients.
    std::map<uint32_t, double> reward_theta;
    double theta_sum = 0;
    for (size_t i = 0; i < pool.size(); ++i) {
        if (!entry_high[i]) continue;
        reward_theta[pts[i].owner_id] += entry_theta[i];
        theta_sum += entry_theta[i];
    }

    const bool usable = any_high && theta_sum > 0.0;
    if (!usable) {
        // Global landed in noise (or no usable weights): nobody is rewarded
        // and the round falls back to the plain simple average.
        for (auto& [id, label] : rep.labels) label = Label::low;
        std::fill(rep.entry_high.begin(), rep.entry_high.end(), 0);
        rep.degenerate = true;
        if (cfg.strategy == Strategy::keep_all)
            for (size_t i = 0; i < pool.size(); ++i) rep.filtered_pool.push_back(pts[i]);
        std::vector<fl::GradientVector> all(pts.begin(), pts.end() - 1);
        rep.recomputed_global = fl::simple_average(all);
        rep.recomputed_global.owner_id = w_g.owner_id;
        rep.recomputed_global.round_tag = w_g.round_tag;
        return rep;
    }

    for (const auto& [id, th] : reward_theta)
        rep.reward_list.emplace_back(id, th / theta_sum * cfg.base);

    std::vector<fl::GradientVector> kept;
    std::vector<double> weights;
    for (size_t i = 0; i < pool.size(); ++i) {
        if (cfg.strategy == Strategy::discard_low && !entry_high[i]) {
            rep.entry_applied[order[i]] = 0;
            continue;
        }
        kept.push_back(pts[i]);
        weights.push_back(entry_theta[i]);
    }
    // wsum >= theta_sum > 0: the kept set always contains the high entries.
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (auto& w : weights) w /= wsum;
    rep.recomputed_global = fl::weighted_average(kept, weights);
    rep.recomputed_global.owner_id = w_g.owner_id;
    rep.recomputed_global.round_tag = w_g.round_tag;
    rep.filtered_pool = std::move(kept);
    return rep;
}

}  // namespace bflmec::incentive
