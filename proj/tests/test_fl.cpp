#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "bflmec/aggregate.hpp"
#include "bflmec/dataset.hpp"
#include "bflmec/model.hpp"

using namespace bflmec;
using namespace bflmec::fl;

namespace {

Dataset one_datum(uint32_t classes, uint32_t features, Rng& rng) {
    Dataset d;
    d.class_count = classes;
    std::vector<double> x(features);
    for (auto& v : x) v = rng.gauss();
    d.append_sample(x, uint32_t(rng.below(classes)));
    return d;
}

Model random_model(uint32_t classes, uint32_t features, Rng& rng) {
    Model m = Model::zeros(classes, features);
    for (auto& p : m.params) p = 0.5 * rng.gauss();
    return m;
}

// Central finite differences of the loss at `m` on `data`.
std::vector<double> fd_gradient(const Model& m, const Dataset& data, double h = 1e-6) {
    std::vector<double> g(m.params.size());
    Model probe = m;
    for (size_t j = 0; j < m.params.size(); ++j) {
        const double keep = probe.params[j];
        probe.params[j] = keep + h;
        const double up = cross_entropy_loss(probe, data);
        probe.params[j] = keep - h;
        const double down = cross_entropy_loss(probe, data);
        probe.params[j] = keep;
        g[j] = (up - down) / (2 * h);
    }
    return g;
}

GradientVector gv(std::vector<double> v) {
    GradientVector g;
    g.values = std::move(v);
    return g;
}

}  // namespace

TEST_CASE("local_update with zero learning rate is the identity") {
    Rng rng(1);
    const Model m = random_model(3, 5, rng);
    Dataset d = one_datum(3, 5, rng);
    d.append_sample(d.features[0], (d.labels[0] + 1) % 3);
    TrainConfig cfg{0.0, 4, 2};
    CHECK(local_update(m, d, cfg, rng) == m.params);
}

TEST_CASE("analytic SGD step matches central finite differences") {
    Rng rng(2);
    const double eta = 0.05;
    for (int trial = 0; trial < 20; ++trial) {
        const Model m = random_model(4, 6, rng);
        const Dataset d = one_datum(4, 6, rng);
        TrainConfig cfg{eta, 1, 1};
        Rng train_rng{uint64_t(trial)};
        const std::vector<double> out = local_update(m, d, cfg, train_rng);

        const std::vector<double> fd = fd_gradient(m, d);
        for (size_t j = 0; j < out.size(); ++j) {
            const double analytic = (m.params[j] - out[j]) / eta;
            const double scale = std::max({1.0, std::fabs(analytic), std::fabs(fd[j])});
            REQUIRE(std::fabs(analytic - fd[j]) / scale <= 1e-5);
        }
    }
}

TEST_CASE("epoch/batch loop arithmetic: 5 epochs x 10 batches = 50 steps") {
    Rng rng(3);
    Dataset d;
    d.class_count = 2;
    for (int i = 0; i < 100; ++i) d.append(one_datum(2, 3, rng));
    const Model m = Model::zeros(2, 3);
    TrainConfig cfg{0.01, 5, 10};
    uint64_t steps = 0;
    local_update(m, d, cfg, rng, &steps);
    CHECK(steps == 50);
}

TEST_CASE("full-batch training strictly decreases loss each epoch") {
    Rng rng(4);
    Dataset d;
    d.class_count = 3;
    for (int i = 0; i < 30; ++i) d.append(one_datum(3, 4, rng));
    Model m = random_model(3, 4, rng);
    TrainConfig cfg{0.01, 1, uint32_t(d.size())};
    double last = cross_entropy_loss(m, d);
    for (int epoch = 0; epoch < 5; ++epoch) {
        m.load(local_update(m, d, cfg, rng));
        const double now = cross_entropy_loss(m, d);
        CHECK(now < last);
        last = now;
    }
}

TEST_CASE("divergent training raises an error") {
    Rng rng(5);
    Dataset d;
    d.class_count = 2;
    d.append(one_datum(2, 3, rng));
    d.append(one_datum(2, 3, rng));
    const Model m = random_model(2, 3, rng);
    TrainConfig cfg{1e308, 2, 1};
    CHECK_THROWS_AS(local_update(m, d, cfg, rng), DivergenceError);
    CHECK_THROWS_AS(local_update(m, Dataset{}, TrainConfig{}, rng), std::invalid_argument);
}

TEST_CASE("evaluate: perfect model, zero model oracle, range") {
    const Dataset d = synthetic_blobs(7, 500, 8, 10);

    // Zero weights make every logit equal; argmax tie-breaks to class 0, so
    // accuracy equals the class-0 fraction. Brute-force oracle on this set:
    size_t zeros = 0;
    for (uint32_t y : d.labels) zeros += (y == 0);
    const double expected = double(zeros) / double(d.size());
    const Model zero = Model::zeros(10, 8);
    CHECK(evaluate(zero, d) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.1));  // balanced emission

    // A model trained on the full set should end well above chance and in range.
    Rng rng(8);
    Model m = zero;
    TrainConfig cfg{0.05, 20, 32};
    m.load(local_update(m, d, cfg, rng));
    const double acc = evaluate(m, d);
    CHECK(acc > 0.5);
    CHECK(acc <= 1.0);
    CHECK_THROWS_AS(evaluate(m, Dataset{}), std::invalid_argument);
}

TEST_CASE("average_accuracy arithmetic") {
    CHECK(average_accuracy({1.0}) == 1.0);
    CHECK(average_accuracy({0.0, 1.0}) == 0.5);
    CHECK(average_accuracy({0.2, 0.4, 0.9}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(average_accuracy({}), std::invalid_argument);
}

TEST_CASE("partition: trivial, even iid split, errors") {
    const Dataset d = synthetic_blobs(9, 100, 4, 10);
    Rng rng(10);

    auto whole = partition(d, 1, PartitionMode::iid, 2, rng);
    REQUIRE(whole.size() == 1);
    CHECK(whole[0].size() == d.size());

    auto quarters = partition(d, 4, PartitionMode::iid, 2, rng);
    for (const auto& q : quarters) CHECK(q.size() == 25);

    Dataset small = synthetic_blobs(9, 3, 4, 3);
    CHECK_THROWS_AS(partition(small, 5, PartitionMode::iid, 2, rng), std::invalid_argument);
}

TEST_CASE("label-skew partition bounds distinct labels per client") {
    const Dataset d = synthetic_blobs(11, 1000, 4, 10);  // balanced, 100 per class
    Rng rng(12);
    auto parts = partition(d, 5, PartitionMode::label_skew, 2, rng);
    REQUIRE(parts.size() == 5);
    for (const auto& p : parts) {
        std::set<uint32_t> labels(p.labels.begin(), p.labels.end());
        CHECK(labels.size() <= 2);
    }
}

TEST_CASE("partitions are disjoint and cover the input") {
    const Dataset d = synthetic_blobs(13, 203, 5, 7);
    Rng rng(14);
    for (auto mode : {PartitionMode::iid, PartitionMode::label_skew}) {
        auto parts = partition(d, 7, mode, 2, rng);
        std::multiset<std::pair<double, uint32_t>> original, collected;
        for (size_t i = 0; i < d.size(); ++i) original.insert({d.features[i][0], d.labels[i]});
        size_t total = 0;
        for (const auto& p : parts) {
            total += p.size();
            for (size_t i = 0; i < p.size(); ++i) collected.insert({p.features[i][0], p.labels[i]});
        }
        CHECK(total == d.size());
        CHECK(original == collected);
    }
}

TEST_CASE("simple_average identities") {
    const GradientVector a = gv({1, 2});
    const GradientVector b = gv({3, 4});
    CHECK(simple_average(std::vector{a}).values == a.values);

    const GradientVector v = gv({2.5, -1.5});
    GradientVector neg = v;
    for (auto& x : neg.values) x = -x;
    CHECK(simple_average(std::vector{v, neg}).values == std::vector<double>{0, 0});

    CHECK(simple_average(std::vector{a, b}).values == std::vector<double>{2, 3});
}

TEST_CASE("weighted_average: spec values, uniform equivalence, errors") {
    const GradientVector a = gv({0, 0});
    const GradientVector b = gv({4, 8});
    const std::vector<GradientVector> w{a, b};

    CHECK(weighted_average(w, std::vector<double>{1, 0}).values == a.values);
    CHECK(weighted_average(w, std::vector<double>{0.25, 0.75}).values ==
          std::vector<double>{3, 6});

    Rng rng(15);
    std::vector<GradientVector> pool;
    for (int i = 0; i < 5; ++i) {
        GradientVector g;
        for (int j = 0; j < 7; ++j) g.values.push_back(rng.gauss());
        pool.push_back(std::move(g));
    }
    const std::vector<double> uniform(pool.size(), 1.0 / double(pool.size()));
    CHECK(weighted_average(pool, uniform).values == simple_average(pool).values);

    CHECK_THROWS_AS(weighted_average(w, std::vector<double>{-0.1, 1.1}), std::invalid_argument);
    CHECK_THROWS_AS(weighted_average(w, std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(weighted_average(std::vector{a, gv({1, 2, 3})}, std::vector<double>{0.5, 0.5}),
                    std::invalid_argument);
}

TEST_CASE("aggregation is linear in the weights") {
    Rng rng(16);
    std::vector<GradientVector> pool;
    for (int i = 0; i < 4; ++i) {
        GradientVector g;
        for (int j = 0; j < 6; ++j) g.values.push_back(rng.gauss());
        pool.push_back(std::move(g));
    }
    std::vector<double> p{0.1, 0.2, 0.3, 0.4}, q{0.4, 0.3, 0.2, 0.1}, pq(4);
    for (int i = 0; i < 4; ++i) pq[i] = p[i] + q[i];
    const auto left = weighted_average(pool, p);
    const auto right = weighted_average(pool, q);
    const auto joint = weighted_average(pool, pq);
    for (int j = 0; j < 6; ++j)
        CHECK(std::fabs(left.values[j] + right.values[j] - joint.values[j]) <= 1e-12);
}

TEST_CASE("IDX ingestion is bit-exact") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "bflmec_idx_test";
    fs::create_directories(dir);
    const fs::path img_path = dir / "images-idx3-ubyte";
    const fs::path lab_path = dir / "labels-idx1-ubyte";

    // two 2x2 images
    const uint8_t img[] = {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2,
                           0, 51, 102, 255, 10, 20, 30, 40};
    const uint8_t lab[] = {0, 0, 8, 1, 0, 0, 0, 2, 7, 3};
    std::ofstream(img_path, std::ios::binary).write(reinterpret_cast<const char*>(img), sizeof(img));
    std::ofstream(lab_path, std::ios::binary).write(reinterpret_cast<const char*>(lab), sizeof(lab));

    const Dataset d = load_idx(img_path.string(), lab_path.string());
    REQUIRE(d.size() == 2);
    CHECK(d.labels == std::vector<uint32_t>{7, 3});
    CHECK(d.class_count == 8);
    CHECK(d.features[0] == std::vector<double>{0.0, 51 / 255.0, 102 / 255.0, 1.0});
    CHECK(d.features[1] == std::vector<double>{10 / 255.0, 20 / 255.0, 30 / 255.0, 40 / 255.0});

    std::ofstream(lab_path, std::ios::binary).write("bad", 3);
    CHECK_THROWS(load_idx(img_path.string(), lab_path.string()));
    fs::remove_all(dir);
}

TEST_CASE("synthetic task is seed-deterministic and balanced") {
    const Dataset a = synthetic_blobs(99, 200, 16, 10);
    const Dataset b = synthetic_blobs(99, 200, 16, 10);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    std::map<uint32_t, int> counts;
    for (uint32_t y : a.labels) counts[y]++;
    for (const auto& [label, count] : counts) CHECK(count == 20);
    const Dataset c = synthetic_blobs(100, 200, 16, 10);
    CHECK(a.features != c.features);
}
