#include <doctest.h>

#include <set>

#include "bflmec/dump.hpp"
#include "bflmec/simnet.hpp"

using namespace bflmec;
using namespace bflmec::sim;

namespace {

// Small fast scenario shared across engine tests.
ScenarioConfig small_cfg() {
    ScenarioConfig cfg;
    cfg.n = 4;
    cfg.m = 2;
    cfg.seed = 5;
    cfg.dataset_size = 400;
    cfg.features = 8;
    cfg.classes = 4;
    cfg.threshold_n = 20;
    cfg.phi = 2;
    cfg.arrival_rate = 6;
    cfg.difficulty = 64;
    cfg.hash_budget = 256;
    cfg.max_ticks = 60;
    cfg.incentive_cfg.min_pts = 2;
    cfg.settle_ticks = 200;
    return cfg;
}

}  // namespace

TEST_CASE("convergence rule: constant, growing and the worked series") {
    CHECK(convergence_check({0.5, 0.5, 0.5, 0.5, 0.5, 0.5}) == 5);
    std::vector<double> growing;
    for (int i = 0; i < 30; ++i) growing.push_back(0.01 * i);
    CHECK(convergence_check(growing) == -1);
    CHECK(convergence_check({.5, .6, .7, .704, .706, .708, .709, .710}) == 7);
    CHECK(convergence_check({0.5, 0.5, 0.5}) == -1);  // too short
}

TEST_CASE("concurrency and delay metrics on scripted traces") {
    MetricsLog log;

    SUBCASE("single client trains once per tick") {
        for (uint64_t t = 0; t < 10; ++t) {
            TickRow row;
            row.tick = t;
            row.tau_c = 1;
            log.ticks.push_back(row);
        }
        const auto m = concurrency_metrics(log);
        CHECK(m.tau_max == 1);
        CHECK(m.tau_avg == doctest::Approx(1.0));
    }

    SUBCASE("two clients training every tick give average concurrency 2") {
        for (uint64_t t = 0; t < 8; ++t) {
            TickRow row;
            row.tick = t;
            row.tau_c = 2;
            log.ticks.push_back(row);
        }
        const auto m = concurrency_metrics(log);
        CHECK(m.tau_max == 2);
        CHECK(m.tau_avg == doctest::Approx(2.0));
    }

    SUBCASE("hand trace with delays 2,4,6 averages to 4") {
        log.last_tick = 20;
        log.gradients.push_back({1, 0, GradientFate::applied, 2});
        log.gradients.push_back({1, 5, GradientFate::applied, 9});
        log.gradients.push_back({1, 10, GradientFate::applied, 16});
        const auto m = concurrency_metrics(log);
        CHECK(m.per_client_delay.at(1) == doctest::Approx(4.0));
    }

    SUBCASE("trailing gradients age until the last tick") {
        log.last_tick = 12;
        log.gradients.push_back({2, 4, GradientFate::trailing, 0});
        const auto m = concurrency_metrics(log);
        CHECK(m.per_client_delay.at(2) == doctest::Approx(8.0));
    }

    SUBCASE("discarded gradients count as updates but add no delay") {
        log.last_tick = 10;
        log.gradients.push_back({3, 0, GradientFate::applied, 6});
        log.gradients.push_back({3, 2, GradientFate::discarded, 4});
        const auto m = concurrency_metrics(log);
        CHECK(m.per_client_delay.at(3) == doctest::Approx(3.0));
    }
}

TEST_CASE("average delay matches the concurrency relation on an exact trace") {
    // 2 clients train at every tick 0..4, every gradient applied 2 ticks
    // later, run observed through tick 6. Then tau_avg == 2 and
    // (T+1)/(T+|C_T|-1) * tau_bar = 7/(6+0-1) * (10/7) = 2 as well.
    MetricsLog log;
    for (uint64_t t = 0; t <= 6; ++t) {
        TickRow row;
        row.tick = t;
        row.tau_c = (t <= 4) ? 2 : 0;
        log.ticks.push_back(row);
    }
    log.last_tick = 6;
    for (uint64_t t = 0; t <= 4; ++t)
        for (uint32_t c = 1; c <= 2; ++c)
            log.gradients.push_back({c, t, GradientFate::applied, t + 2});

    const auto m = concurrency_metrics(log);
    const double T = 6, c_T = 0;
    const double relation = (T + 1) / (T + c_T - 1) * m.tau_avg;
    CHECK(m.mean_delay == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(relation == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(m.mean_delay == doctest::Approx(relation).epsilon(1e-12));
}

TEST_CASE("detection rate over trailing windows") {
    MetricsLog log;
    auto add_event = [&](uint32_t mal, uint32_t low) {
        AggEventRow e;
        e.event = uint32_t(log.events.size());
        e.malicious_in_pool = mal;
        e.malicious_low = low;
        log.events.push_back(e);
    };
    add_event(3, 0);
    add_event(3, 3);
    add_event(2, 2);
    add_event(1, 1);
    CHECK(*detection_rate(log, 3) == doctest::Approx(1.0));
    CHECK(*detection_rate(log, 4) == doctest::Approx(6.0 / 9.0));
    add_event(0, 0);
    CHECK_FALSE(detection_rate(log, 1).has_value());  // no malicious uploads
    CHECK(detection_rate(MetricsLog{}, 3) == std::nullopt);
}

TEST_CASE("single-client smoke run aggregates and learns") {
    ScenarioConfig cfg;
    cfg.n = 1;
    cfg.m = 1;
    cfg.seed = 3;
    cfg.dataset_size = 200;
    cfg.features = 8;
    cfg.classes = 4;
    cfg.threshold_n = 10;
    cfg.phi = 1;
    cfg.arrival_rate = 4;
    cfg.p_drop = 0.0;
    cfg.difficulty = 16;
    cfg.hash_budget = 64;
    cfg.max_ticks = 200;
    cfg.partition = fl::PartitionMode::iid;
    cfg.incentive_cfg.min_pts = 2;

    const RunResult res = run(cfg);
    CHECK(res.log.events.size() >= 1);
    CHECK(res.settled);
    // accuracy ends at least where it started and above chance
    CHECK(res.final_accuracy >= res.log.ticks.front().avg_accuracy);
    CHECK(res.final_accuracy > 0.3);
    // tau_C can never exceed the single client
    for (const auto& row : res.log.ticks) CHECK(row.tau_c <= 1);
}

TEST_CASE("identical seeds give byte-identical outputs, different seeds differ") {
    const ScenarioConfig cfg = small_cfg();
    const RunResult a = run(cfg);
    const RunResult b = run(cfg);
    CHECK(metrics_csv(a.log) == metrics_csv(b.log));
    CHECK(events_csv(a.log) == events_csv(b.log));
    CHECK(rewards_csv(a.log) == rewards_csv(b.log));
    CHECK(chain::chain_dump_jsonl(a.chains[0]) == chain::chain_dump_jsonl(b.chains[0]));

    ScenarioConfig other = cfg;
    other.seed = cfg.seed + 1;
    const RunResult c = run(other);
    CHECK(metrics_csv(a.log) != metrics_csv(c.log));
}

TEST_CASE("total disconnection produces no uploads and no records") {
    ScenarioConfig cfg = small_cfg();
    cfg.p_drop = 1.0;
    cfg.p_reconnect = 0.0;
    cfg.max_ticks = 40;
    const RunResult res = run(cfg);
    CHECK(res.log.events.empty());
    for (const auto& row : res.log.ticks) CHECK(row.uploads == 0);
    // clients keep training locally while offline
    uint64_t trained = 0;
    for (const auto& row : res.log.ticks) trained += row.tau_c;
    CHECK(trained > 0);
    // everything they produced is trailing work
    for (const auto& g : res.log.gradients) CHECK(g.fate == GradientFate::trailing);
}

TEST_CASE("end of run: chains validate, agree, and anchors were monotone") {
    ScenarioConfig cfg = small_cfg();
    const RunResult res = run(cfg);
    REQUIRE(res.settled);
    const auto mining = chain::MiningParams::from_difficulty(cfg.difficulty);
    for (const auto& c : res.chains) {
        CHECK(chain::validate_chain(c, mining));
        CHECK(c.size() == res.chains[0].size());
        CHECK(c.back().hash == res.chains[0].back().hash);
    }
    CHECK(res.log.events.size() >= 2);
}

TEST_CASE("conservation: every local update is applied, discarded or trailing") {
    ScenarioConfig cfg = small_cfg();
    cfg.incentive_cfg.strategy = incentive::Strategy::discard_low;
    const RunResult res = run(cfg);

    uint64_t produced = 0;
    for (const auto& row : res.log.ticks) produced += row.tau_c;
    CHECK(produced == res.log.gradients.size());

    size_t applied = 0, discarded = 0, trailing = 0;
    for (const auto& g : res.log.gradients) {
        switch (g.fate) {
            case GradientFate::applied: ++applied; break;
            case GradientFate::discarded: ++discarded; break;
            case GradientFate::trailing: ++trailing; break;
        }
        CHECK(g.resolved_tick >= g.produced_tick);
    }
    CHECK(applied + discarded + trailing == produced);
    CHECK(applied > 0);
}

TEST_CASE("serialized blocks carry no gradient bytes outside the first transaction") {
    ScenarioConfig cfg = small_cfg();
    cfg.audit_uploads = true;
    const RunResult res = run(cfg);
    REQUIRE(!res.upload_payloads.empty());

    auto contains = [](const Bytes& haystack, const Bytes& needle) {
        if (needle.size() > haystack.size()) return false;
        return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
               haystack.end();
    };

    for (const auto& block : res.chains[0]) {
        chain::Block stripped = block;
        stripped.tx_first.reset();
        const Bytes bytes = chain::serialize_block_for_hash(stripped);
        for (const auto& payload : res.upload_payloads) {
            // value segment of the serialized gradient (skip the 16-byte header)
            Bytes needle(payload.begin() + 16,
                         payload.begin() + 16 + std::min<size_t>(32, payload.size() - 16));
            CHECK_FALSE(contains(bytes, needle));
        }
    }
}

TEST_CASE("rotating attacks keep the malicious population constant") {
    ScenarioConfig cfg = small_cfg();
    cfg.n = 6;
    cfg.attack.mode = AttackMode::rotating;
    cfg.attack.count = 2;
    cfg.incentive_cfg.strategy = incentive::Strategy::discard_low;
    cfg.max_ticks = 50;
    const RunResult res = run(cfg);
    REQUIRE(!res.log.ground_truth.empty());
    for (const auto& [tick, ids] : res.log.ground_truth) CHECK(ids.size() == 2);
}

TEST_CASE("fixed attack set never changes") {
    ScenarioConfig cfg = small_cfg();
    cfg.n = 6;
    cfg.attack.mode = AttackMode::fixed;
    cfg.attack.fixed_ids = {2, 5};
    cfg.max_ticks = 30;
    const RunResult res = run(cfg);
    for (const auto& [tick, ids] : res.log.ground_truth)
        CHECK(ids == std::vector<uint32_t>{2, 5});
}

TEST_CASE("scenario file parsing, echo stability and bad keys") {
    const std::string text =
        "# comment\n"
        "n = 12\n"
        "phi = 7\n"
        "cap_n = 30\n"
        "strategy = discard-low\n"
        "eps = auto\n"
        "attack_mode = fixed\n"
        "attack_ids = 1,2,3\n";
    ScenarioConfig cfg = parse_scenario_text(text);
    CHECK(cfg.n == 12);
    CHECK(cfg.phi == 7);
    CHECK(cfg.threshold_n == 30);
    CHECK(cfg.incentive_cfg.strategy == incentive::Strategy::discard_low);
    CHECK(cfg.attack.fixed_ids == std::vector<uint32_t>{1, 2, 3});

    // echo parses back to an identical echo
    const ScenarioConfig reparsed = parse_scenario_text(cfg.echo());
    CHECK(reparsed.echo() == cfg.echo());

    CHECK_THROWS_AS(parse_scenario_text("bogus_key = 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_scenario_text("n\n"), std::invalid_argument);

    ScenarioConfig bad = parse_scenario_text("n = 0\n");
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("presets exist for each experiment family") {
    for (const auto& name : preset_names()) {
        const ScenarioConfig cfg = preset(name);
        CHECK_NOTHROW(cfg.validate());
    }
    CHECK(preset("paper-defaults").n == 100);
    CHECK(preset("paper-defaults").m == 2);
    CHECK(preset("paper-defaults").train.eta == 0.01);
    CHECK(preset("paper-defaults").train.epochs == 5);
    CHECK(preset("paper-defaults").train.batch == 10);
    CHECK(preset("paper-defaults").incentive_cfg.base == 100.0);
    CHECK(preset("attack-reward").attack.fixed_ids == std::vector<uint32_t>{6, 8, 9});
    CHECK(preset("attack-iid").partition == fl::PartitionMode::iid);
    CHECK(preset("attack-noniid").partition == fl::PartitionMode::label_skew);
    CHECK_THROWS_AS(preset("nope"), std::invalid_argument);
}

TEST_CASE("manifest carries version, seed, flags and the config echo") {
    const ScenarioConfig cfg = small_cfg();
    const std::string m = run_manifest(cfg, {{"metrics", "out/metrics.csv"}});
    CHECK(m.find("artifact_version = ") != std::string::npos);
    CHECK(m.find("seed = 5") != std::string::npos);
    CHECK(m.find("phi_rule = unaggregated-transaction-count") != std::string::npos);
    CHECK(m.find("weight_mode = similarity") != std::string::npos);
    CHECK(m.find("output_metrics = out/metrics.csv") != std::string::npos);
    CHECK(m.find("cap_n = 20") != std::string::npos);
}
