#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "bflmec/incentive.hpp"
#include "bflmec/rng.hpp"

using namespace bflmec;
using namespace bflmec::incentive;

namespace {

fl::GradientVector point(std::vector<double> v, uint32_t owner = 0) {
    fl::GradientVector g;
    g.values = std::move(v);
    g.owner_id = owner;
    return g;
}

// O(n^2) density-reachability closure oracle: cores are points with >= min_pts
// neighbors within eps; clusters grow by transitive core-to-core reachability;
// border points join the nearest core (same tie rule as the implementation).
std::vector<int> dbscan_oracle(const std::vector<fl::GradientVector>& pts, double eps,
                               uint32_t min_pts) {
    const size_t n = pts.size();
    auto dist = [&](size_t a, size_t b) {
        double s = 0;
        for (size_t i = 0; i < pts[a].values.size(); ++i) {
            const double d = pts[a].values[i] - pts[b].values[i];
            s += d * d;
        }
        return std::sqrt(s);
    };
    std::vector<bool> core(n, false);
    for (size_t i = 0; i < n; ++i) {
        size_t cnt = 0;
        for (size_t j = 0; j < n; ++j)
            if (dist(i, j) <= eps) ++cnt;
        core[i] = cnt >= min_pts;
    }
    std::vector<int> label(n, -1);
    int next = 0;
    for (size_t s = 0; s < n; ++s) {
        if (!core[s] || label[s] >= 0) continue;
        // closure by repeated sweeps
        label[s] = next;
        bool changed = true;
        while (changed) {
            changed = false;
            for (size_t i = 0; i < n; ++i) {
                if (!core[i] || label[i] != next) continue;
                for (size_t j = 0; j < n; ++j)
                    if (core[j] && label[j] < 0 && dist(i, j) <= eps) {
                        label[j] = next;
                        changed = true;
                    }
            }
        }
        ++next;
    }
    for (size_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        int best = -1;
        for (size_t j = 0; j < n; ++j) {
            if (!core[j] || dist(i, j) > eps) continue;
            if (best < 0 || dist(i, j) < dist(i, size_t(best)) ||
                (dist(i, j) == dist(i, size_t(best)) && pts[j].values < pts[size_t(best)].values))
                best = int(j);
        }
        if (best >= 0) label[i] = label[best];
    }
    return label;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    REQUIRE(a.size() == b.size());
    std::map<int, int> fwd, bwd;
    for (size_t i = 0; i < a.size(); ++i) {
        if ((a[i] < 0) != (b[i] < 0)) return false;
        if (a[i] < 0) continue;
        if (fwd.count(a[i]) && fwd[a[i]] != b[i]) return false;
        if (bwd.count(b[i]) && bwd[b[i]] != a[i]) return false;
        fwd[a[i]] = b[i];
        bwd[b[i]] = a[i];
    }
    return true;
}

}  // namespace

TEST_CASE("dbscan: identical points form one cluster") {
    std::vector<fl::GradientVector> pts(5, point({1.0, 2.0}));
    const auto res = cluster(pts, 1e-9, 5);
    CHECK(res.cluster_count == 1);
    for (int l : res.labels) CHECK(l == 0);
}

TEST_CASE("dbscan: isolated point is noise") {
    std::vector<fl::GradientVector> pts{point({0, 0}), point({100, 100})};
    const auto res = cluster(pts, 1.0, 2);
    CHECK(res.labels[1] == -1);
}

TEST_CASE("dbscan: two separated blobs match the reachability oracle") {
    Rng rng(31);
    const double eps = 0.5;
    std::vector<fl::GradientVector> pts;
    for (int blob = 0; blob < 2; ++blob)
        for (int i = 0; i < 8; ++i) {
            const double cx = blob * 10 * eps;
            pts.push_back(point({cx + 0.1 * rng.gauss(), 0.1 * rng.gauss()}));
        }
    const auto res = cluster(pts, eps, 3);
    CHECK(res.cluster_count == 2);
    CHECK(same_partition(res.labels, dbscan_oracle(pts, eps, 3)));
}

TEST_CASE("dbscan matches the oracle on random instances") {
    Rng rng(37);
    for (int inst = 0; inst < 40; ++inst) {
        std::vector<fl::GradientVector> pts;
        const int n = 20;
        for (int i = 0; i < n; ++i)
            pts.push_back(point({rng.gauss(), rng.gauss(), rng.gauss()}));
        const double eps = 0.5 + rng.real01();
        const uint32_t min_pts = 2 + uint32_t(rng.below(4));
        CHECK(same_partition(cluster(pts, eps, min_pts).labels, dbscan_oracle(pts, eps, min_pts)));
    }
}

TEST_CASE("cosine theta in both modes") {
    const auto a = point({1, 0});
    const auto b = point({1, 1});
    const auto c = point({0, 1});
    CHECK(cosine_theta(a, a, WeightMode::similarity) == doctest::Approx(1.0));
    CHECK(cosine_theta(a, c, WeightMode::literal_distance) == doctest::Approx(1.0));
    CHECK(cosine_theta(a, b, WeightMode::similarity) == doctest::Approx(0.7071).epsilon(1e-4));
    // opposite directions clamp to zero under similarity
    const auto neg = point({-1, 0});
    CHECK(cosine_theta(a, neg, WeightMode::similarity) == 0.0);
    CHECK_THROWS_AS(cosine_theta(a, point({0, 0}), WeightMode::similarity),
                    std::invalid_argument);
}

TEST_CASE("contribution identification: duplicates high, outlier low, 50/50 rewards") {
    IncentiveConfig cfg;
    cfg.eps = 1.0;
    cfg.min_pts = 3;
    cfg.base = 100.0;
    const auto w_g = point({1, 1}, 0);
    std::vector<fl::GradientVector> pool{point({1, 1}, 1), point({1, 1}, 2), point({101, 101}, 3)};
    const auto rep = identify_contributions(pool, w_g, cfg);
    CHECK(rep.labels.at(1) == Label::high);
    CHECK(rep.labels.at(2) == Label::high);
    CHECK(rep.labels.at(3) == Label::low);
    REQUIRE(rep.reward_list.size() == 2);
    CHECK(rep.reward_list[0] == std::pair<uint32_t, double>{1, 50.0});
    CHECK(rep.reward_list[1] == std::pair<uint32_t, double>{2, 50.0});
    CHECK_FALSE(rep.degenerate);
}

TEST_CASE("single client equal to the global takes the whole base") {
    IncentiveConfig cfg;
    cfg.eps = 1.0;
    cfg.min_pts = 2;
    cfg.base = 100.0;
    const auto w_g = point({2, 3}, 0);
    const auto rep = identify_contributions({point({2, 3}, 7)}, w_g, cfg);
    REQUIRE(rep.reward_list.size() == 1);
    CHECK(rep.reward_list[0].first == 7);
    CHECK(rep.reward_list[0].second == doctest::Approx(100.0));
}

TEST_CASE("global in noise degenerates to keep-all simple average") {
    IncentiveConfig cfg;
    cfg.eps = 0.1;
    cfg.min_pts = 2;
    cfg.strategy = Strategy::discard_low;
    std::vector<fl::GradientVector> pool{point({0, 0}, 1), point({10, 10}, 2)};
    const auto w_g = point({100, -100}, 0);
    const auto rep = identify_contributions(pool, w_g, cfg);
    CHECK(rep.degenerate);
    CHECK(rep.reward_list.empty());
    CHECK(rep.filtered_pool.empty());  // discard path keeps nothing
    for (const auto& [id, label] : rep.labels) CHECK(label == Label::low);
    CHECK(rep.recomputed_global.values == fl::simple_average(pool).values);
}

TEST_CASE("reward conservation and label/reward consistency on random pools") {
    Rng rng(41);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<fl::GradientVector> pool;
        const int n = 6 + int(rng.below(10));
        for (int i = 0; i < n; ++i) {
            auto g = point({rng.gauss(), rng.gauss(), rng.gauss()}, uint32_t(i + 1));
            for (auto& v : g.values) v += 3.0;  // keep thetas positive
            pool.push_back(std::move(g));
        }
        IncentiveConfig cfg;
        cfg.base = 100.0;
        cfg.min_pts = 3;
        cfg.strategy = trial % 2 ? Strategy::discard_low : Strategy::keep_all;
        const auto w_g = fl::simple_average(pool);
        const auto rep = identify_contributions(pool, w_g, cfg);

        std::set<uint32_t> high, rewarded;
        for (const auto& [id, label] : rep.labels)
            if (label == Label::high) high.insert(id);
        double sum = 0;
        for (const auto& [id, reward] : rep.reward_list) {
            rewarded.insert(id);
            sum += reward;
            CHECK(reward >= 0);
        }
        CHECK(high == rewarded);
        if (!rep.degenerate) {
            REQUIRE(!rep.reward_list.empty());
            CHECK(std::fabs(sum - 100.0) <= 1e-9);
        }
    }
}

TEST_CASE("permutation invariance of labels, thetas, rewards and the recomputed global") {
    Rng rng(43);
    std::vector<fl::GradientVector> pool;
    for (int i = 0; i < 9; ++i)
        pool.push_back(point({rng.gauss() + 2, rng.gauss() + 2}, uint32_t(i + 1)));
    IncentiveConfig cfg;
    cfg.strategy = Strategy::discard_low;
    const auto w_g = fl::simple_average(pool);
    const auto rep1 = identify_contributions(pool, w_g, cfg);

    std::vector<fl::GradientVector> shuffled = pool;
    rng.shuffle(shuffled);
    const auto rep2 = identify_contributions(shuffled, w_g, cfg);

    CHECK(rep1.labels == rep2.labels);
    CHECK(rep1.thetas == rep2.thetas);
    CHECK(rep1.reward_list == rep2.reward_list);
    CHECK(rep1.recomputed_global.values == rep2.recomputed_global.values);
    CHECK(rep1.resolved_eps == rep2.resolved_eps);
}

TEST_CASE("discard keeps a subset and the recomputed global stays in its hull") {
    Rng rng(47);
    std::vector<fl::GradientVector> pool;
    for (int i = 0; i < 8; ++i)
        pool.push_back(point({rng.real01() + 1.0, rng.real01() + 1.0}, uint32_t(i + 1)));
    pool.push_back(point({50, 60}, 9));
    IncentiveConfig cfg;
    cfg.strategy = Strategy::discard_low;
    const auto w_g = fl::simple_average(pool);
    const auto rep = identify_contributions(pool, w_g, cfg);

    CHECK(rep.filtered_pool.size() <= pool.size());
    for (const auto& kept : rep.filtered_pool) {
        bool found = false;
        for (const auto& orig : pool) found = found || orig == kept;
        CHECK(found);
    }
    if (!rep.degenerate) {
        for (size_t dim = 0; dim < 2; ++dim) {
            double lo = 1e300, hi = -1e300;
            for (const auto& kept : rep.filtered_pool) {
                lo = std::min(lo, kept.values[dim]);
                hi = std::max(hi, kept.values[dim]);
            }
            CHECK(rep.recomputed_global.values[dim] >= lo - 1e-12);
            CHECK(rep.recomputed_global.values[dim] <= hi + 1e-12);
        }
    }
}

TEST_CASE("a x10-scaled gradient leaves the global's cluster, eps calibrated on honest spread") {
    Rng rng(53);
    std::vector<fl::GradientVector> pool;
    for (int i = 0; i < 19; ++i) {
        std::vector<double> v(8);
        for (auto& x : v) x = 1.0 + 0.05 * rng.gauss();  // honest spread ~0.2
        pool.push_back(point(std::move(v), uint32_t(i + 1)));
    }
    auto malicious = pool[0];
    malicious.owner_id = 20;
    malicious.values[0] *= 10.0;  // scaled on a coordinate subset
    malicious.values[3] *= 10.0;
    pool.push_back(malicious);

    IncentiveConfig cfg;
    cfg.eps = 1.0;  // a few honest-spread radii, far below the x10 excursion
    cfg.strategy = Strategy::discard_low;
    const auto w_g = fl::simple_average(pool);
    const auto rep = identify_contributions(pool, w_g, cfg);
    REQUIRE_FALSE(rep.degenerate);
    CHECK(rep.labels.at(20) == Label::low);
    for (uint32_t id = 1; id <= 19; ++id) CHECK(rep.labels.at(id) == Label::high);
}

TEST_CASE("adaptive eps keeps the poisoned average inside the honest cluster") {
    // 7 honest + 3 malicious of 10: big pairwise distances dominate the pool
    // median, so the radius absorbs the drift of the simple average while the
    // scaled uploads stay outside.
    Rng rng(61);
    std::vector<fl::GradientVector> pool;
    for (int i = 0; i < 7; ++i) {
        std::vector<double> v(16);
        for (auto& x : v) x = 1.0 + 0.05 * rng.gauss();
        pool.push_back(point(std::move(v), uint32_t(i + 1)));
    }
    for (int i = 7; i < 10; ++i) {
        std::vector<double> v(16);
        for (auto& x : v) x = 1.0 + 0.05 * rng.gauss();
        const auto coords = rng.permutation(16);  // distinct scaled coordinates
        for (int c = 0; c < 4; ++c) v[coords[c]] *= rng.chance(0.5) ? 10.0 : -10.0;
        pool.push_back(point(std::move(v), uint32_t(i + 1)));
    }
    IncentiveConfig cfg;  // adaptive eps = pool median * 0.5
    cfg.strategy = Strategy::discard_low;
    const auto w_g = fl::simple_average(pool);
    const auto rep = identify_contributions(pool, w_g, cfg);
    REQUIRE_FALSE(rep.degenerate);
    for (uint32_t id = 1; id <= 7; ++id) CHECK(rep.labels.at(id) == Label::high);
    for (uint32_t id = 8; id <= 10; ++id) CHECK(rep.labels.at(id) == Label::low);
}

TEST_CASE("keep-all strategy keeps the full pool") {
    Rng rng(59);
    std::vector<fl::GradientVector> pool;
    for (int i = 0; i < 6; ++i)
        pool.push_back(point({rng.gauss() + 5, rng.gauss() + 5}, uint32_t(i + 1)));
    IncentiveConfig cfg;
    cfg.strategy = Strategy::keep_all;
    const auto rep = identify_contributions(pool, fl::simple_average(pool), cfg);
    CHECK(rep.filtered_pool.size() == pool.size());
    CHECK(rep.entry_applied == std::vector<char>(pool.size(), 1));
}
