#include "bflmec/scenario.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bflmec::sim {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const uint64_t out = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (...) {
        throw std::invalid_argument("scenario: bad integer for " + key + ": " + v);
    }
}

double parse_f64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (...) {
        throw std::invalid_argument("scenario: bad number for " + key + ": " + v);
    }
}

std::vector<uint32_t> parse_id_list(const std::string& key, const std::string& v) {
    std::vector<uint32_t> ids;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) ids.push_back(static_cast<uint32_t>(parse_u64(key, item)));
    }
    return ids;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void ScenarioConfig::validate() const {
    if (n < 1 || m < 1) throw std::invalid_argument("scenario: n and m must be >= 1");
    train.validate();
    if (!(train.eta > 0)) throw std::invalid_argument("scenario: eta must be positive");
    if (p_drop < 0 || p_drop > 1 || p_reconnect < 0 || p_reconnect > 1)
        throw std::invalid_argument("scenario: probabilities must lie in [0,1]");
    if (arrival_rate < 0) throw std::invalid_argument("scenario: arrival_rate must be >= 0");
    if (difficulty < 1) throw std::invalid_argument("scenario: difficulty must be >= 1");
    if (hash_budget < 1) throw std::invalid_argument("scenario: hash_budget must be >= 1");
    if (max_txs_per_block < 1) throw std::invalid_argument("scenario: max_txs_per_block >= 1");
    if (dataset == DatasetKind::synthetic) {
        if (dataset_size < n) throw std::invalid_argument("scenario: dataset smaller than n");
        if (features < 1 || classes < 2) throw std::invalid_argument("scenario: bad task shape");
        if (!(blob_radius > 0) || !(blob_noise > 0))
            throw std::invalid_argument("scenario: blob parameters must be positive");
    } else if (idx_images.empty() || idx_labels.empty()) {
        throw std::invalid_argument("scenario: idx dataset needs idx_images and idx_labels");
    }
    if (verify_fraction <= 0 || verify_fraction >= 1)
        throw std::invalid_argument("scenario: verify_fraction must lie in (0,1)");
    incentive_cfg.validate();
    if (attack.mode == AttackMode::rotating && (attack.count == 0 || attack.count > n))
        throw std::invalid_argument("scenario: rotating attack count must be in [1,n]");
    if (attack.mode == AttackMode::fixed) {
        if (attack.fixed_ids.empty()) throw std::invalid_argument("scenario: fixed attack needs ids");
        for (uint32_t id : attack.fixed_ids)
            if (id < 1 || id > n) throw std::invalid_argument("scenario: attack id out of range");
    }
    if (sig_params != "toy" && sig_params != "mini")
        throw std::invalid_argument("scenario: sig_params must be toy or mini");
}

std::string ScenarioConfig::echo() const {
    std::ostringstream os;
    os << "n = " << n << "\n";
    os << "m = " << m << "\n";
    os << "seed = " << seed << "\n";
    os << "eta = " << fmt(train.eta) << "\n";
    os << "epochs = " << train.epochs << "\n";
    os << "batch = " << train.batch << "\n";
    os << "cap_n = " << threshold_n << "\n";
    os << "phi = " << phi << "\n";
    os << "base = " << fmt(incentive_cfg.base) << "\n";
    os << "arrival_rate = " << fmt(arrival_rate) << "\n";
    os << "p_drop = " << fmt(p_drop) << "\n";
    os << "p_reconnect = " << fmt(p_reconnect) << "\n";
    os << "attack_mode = "
       << (attack.mode == AttackMode::none ? "none"
                                           : attack.mode == AttackMode::rotating ? "rotating" : "fixed")
       << "\n";
    if (attack.mode == AttackMode::rotating) os << "attack_count = " << attack.count << "\n";
    if (attack.mode == AttackMode::fixed) {
        os << "attack_ids = ";
        for (size_t i = 0; i < attack.fixed_ids.size(); ++i)
            os << (i ? "," : "") << attack.fixed_ids[i];
        os << "\n";
    }
    if (attack.mode != AttackMode::none) {
        os << "attack_scale = " << fmt(attack.scale) << "\n";
        os << "attack_fraction = " << fmt(attack.coordinate_fraction) << "\n";
    }
    os << "difficulty = " << difficulty << "\n";
    os << "hash_budget = " << hash_budget << "\n";
    os << "max_txs_per_block = " << max_txs_per_block << "\n";
    os << "max_ticks = " << max_ticks << "\n";
    os << "max_agg_events = " << max_agg_events << "\n";
    os << "stop_on_converged = " << (stop_on_converged ? "true" : "false") << "\n";
    os << "settle_ticks = " << settle_ticks << "\n";
    os << "dataset = " << (dataset == DatasetKind::synthetic ? "synthetic" : "idx") << "\n";
    if (dataset == DatasetKind::synthetic) {
        os << "dataset_size = " << dataset_size << "\n";
        os << "features = " << features << "\n";
        os << "classes = " << classes << "\n";
        os << "blob_radius = " << fmt(blob_radius) << "\n";
        os << "blob_noise = " << fmt(blob_noise) << "\n";
    } else {
        os << "idx_images = " << idx_images << "\n";
        os << "idx_labels = " << idx_labels << "\n";
    }
    os << "partition = " << (partition == fl::PartitionMode::iid ? "iid" : "label-skew") << "\n";
    os << "shards_per_client = " << shards_per_client << "\n";
    os << "verify_fraction = " << fmt(verify_fraction) << "\n";
    os << "strategy = "
       << (incentive_cfg.strategy == incentive::Strategy::keep_all ? "keep-all" : "discard-low")
       << "\n";
    os << "weight_mode = "
       << (incentive_cfg.weight_mode == incentive::WeightMode::similarity ? "similarity"
                                                                          : "literal-distance")
       << "\n";
    os << "eps = " << (incentive_cfg.eps ? fmt(*incentive_cfg.eps) : std::string("auto")) << "\n";
    os << "eps_factor = " << fmt(incentive_cfg.eps_factor) << "\n";
    os << "min_pts = " << incentive_cfg.min_pts << "\n";
    os << "sig_params = " << sig_params << "\n";
    return os.str();
}

void apply_override(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "n") cfg.n = static_cast<uint32_t>(parse_u64(key, value));
    else if (key == "m") cfg.m = static_cast<uint32_t>(parse_u64(key, value));
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "eta") cfg.train.eta = parse_f64(key, value);
    else if (key == "epochs") cfg.train.epochs = static_cast<uint32_t>(parse_u64(key, value));
    else if (key == "batch") cfg.train.batch = static_cast<uint32_t>(parse_u64(key, value));
    else if (key == "cap_n") cfg.threshold_n = parse_u64(key, value);
    else if (key == "phi") cfg.phi = parse_u64(key, value);
    else if (key == "base") cfg.incentive_cfg.base = parse_f64(key, value);
    else if (key == "arrival_rate") cfg.arrival_rate = parse_f64(key, value);
    else if (key == "p_drop") cfg.p_drop = parse_f64(key, value);
    else if (key == "p_reconnect") cfg.p_reconnect = parse_f64(key, value);
    else if (key == "attack_mode") {
        if (value == "none") cfg.attack.mode = AttackMode::none;
        else if (value == "rotating") cfg.attack.mode = AttackMode::rotating;
        else if (value == "fixed") cfg.attack.mode = AttackMode::fixed;
        else throw std::invalid_argument("scenario: unknown attack_mode " + value);
    } else if (key == "attack_count") cfg.attack.count = static_cast<uint32_t>(parse_u64(key, value));
    else if (key == "attack_ids") cfg.attack.fixed_ids = parse_id_list(key, value);
    else if (key == "attack_scale") cfg.attack.scale = parse_f64(key, value);
    else if (key == "attack_fraction") cfg.attack.coordinate_fraction = parse_f64(key, value);
    else if (key == "difficulty") cfg.difficulty = parse_u64(key, value);
    else if (key == "hash_budget") cfg.hash_budget = parse_u64(key, value);
    else if (key == "max_txs_per_block") cfg.max_txs_per_block = parse_u64(key, value);
    else if (key == "max_ticks") cfg.max_ticks = parse_u64(key, value);
    else if (key == "max_agg_events") cfg.max_agg_events = parse_u64(key, value);
    else if (key == "stop_on_converged") cfg.stop_on_converged = (value == "true" || value == "1");
    else if (key == "settle_ticks") cfg.settle_ticks = parse_u64(key, value);
    else if (key == "dataset") {
        if (value == "synthetic") cfg.dataset = DatasetKind::synthetic;
        else if (value == "idx") cfg.dataset = DatasetKind::idx;
        else throw std::invalid_argument("scenario: unknown dataset kind " + value);
    } else if (key == "dataset_size") cfg.dataset_size = parse_u64(key, value);
    else if (key == "features") cfg.features = static_cast<uint32_t>(parse_u64(key, value));
    else if (key == "classes") cfg.classes = static_cast<uint32_t>(parse_u64(key, value));
    else if (key == "blob_radius") cfg.blob_radius = parse_f64(key, value);
    else if (key == "blob_noise") cfg.blob_noise = parse_f64(key, value);
    else if (key == "idx_images") cfg.idx_images = value;
    else if (key == "idx_labels") cfg.idx_labels = value;
    else if (key == "partition") {
        if (value == "iid") cfg.partition = fl::PartitionMode::iid;
        else if (value == "label-skew") cfg.partition = fl::PartitionMode::label_skew;
        else throw std::invalid_argument("scenario: unknown partition mode " + value);
    } else if (key == "shards_per_client")
        cfg.shards_per_client = static_cast<uint32_t>(parse_u64(key, value));
    else if (key == "verify_fraction") cfg.verify_fraction = parse_f64(key, value);
    else if (key == "strategy") {
        if (value == "keep-all") cfg.incentive_cfg.strategy = incentive::Strategy::keep_all;
        else if (value == "discard-low") cfg.incentive_cfg.strategy = incentive::Strategy::discard_low;
        else throw std::invalid_argument("scenario: unknown strategy " + value);
    } else if (key == "weight_mode") {
        if (value == "similarity") cfg.incentive_cfg.weight_mode = incentive::WeightMode::similarity;
        else if (value == "literal-distance")
            cfg.incentive_cfg.weight_mode = incentive::WeightMode::literal_distance;
        else throw std::invalid_argument("scenario: unknown weight_mode " + value);
    } else if (key == "eps") {
        if (value == "auto") cfg.incentive_cfg.eps.reset();
        else cfg.incentive_cfg.eps = parse_f64(key, value);
    } else if (key == "eps_factor") cfg.incentive_cfg.eps_factor = parse_f64(key, value);
    else if (key == "min_pts") cfg.incentive_cfg.min_pts = static_cast<uint32_t>(parse_u64(key, value));
    else if (key == "sig_params") cfg.sig_params = value;
    else throw std::invalid_argument("scenario: unknown key " + key);
}

ScenarioConfig parse_scenario_text(const std::string& text) {
    ScenarioConfig cfg;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("scenario: line " + std::to_string(lineno) +
                                        " is not key = value");
        apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("scenario: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
}

std::vector<std::string> preset_names() {
    return {"desk-default",    "paper-defaults", "threshold-sweep", "discard-vs-keep",
            "attack-iid",      "attack-noniid",  "attack-reward"};
}

ScenarioConfig preset(const std::string& name) {
    ScenarioConfig cfg;  // desk-default baseline
    if (name == "desk-default") {
        return cfg;
    }
    if (name == "paper-defaults") {
        cfg.n = 100;
        cfg.dataset_size = 10000;
        cfg.max_ticks = 2500;
        cfg.max_agg_events = 100;
        cfg.difficulty = 1 << 20;
        cfg.hash_budget = 4096;
        return cfg;
    }
    if (name == "threshold-sweep") {
        // harder task so the per-update sample size (N) has visible bite
        cfg.blob_radius = 2.5;
        cfg.dataset_size = 3000;
        cfg.max_ticks = 600;
        cfg.max_agg_events = 0;
        return cfg;
    }
    if (name == "discard-vs-keep") {
        // radius wide enough that the global's cluster spans the honest
        // majority; discarding then prunes stragglers instead of starving
        // the aggregate
        cfg.incentive_cfg.eps_factor = 1.5;
        cfg.max_ticks = 1200;
        cfg.max_agg_events = 60;
        return cfg;
    }
    if (name == "attack-iid" || name == "attack-noniid" || name == "attack-reward") {
        cfg.n = 10;
        cfg.dataset_size = 1000;
        cfg.threshold_n = 40;
        cfg.arrival_rate = 8;
        // pools span two client update cycles so every aggregation sees the
        // full malicious population even across rotation gaps
        cfg.phi = 12;
        // fixed clustering radius: wide enough for honest spread and the
        // poisoned average's drift, far below the x10 excursions
        cfg.incentive_cfg.eps = 1.5;
        cfg.max_ticks = 1200;
        cfg.max_agg_events = 10;
        cfg.incentive_cfg.strategy = incentive::Strategy::discard_low;
        cfg.partition = (name == "attack-iid") ? fl::PartitionMode::iid : fl::PartitionMode::label_skew;
        if (name == "attack-reward") {
            cfg.attack.mode = AttackMode::fixed;
            cfg.attack.fixed_ids = {6, 8, 9};
        } else {
            cfg.attack.mode = AttackMode::rotating;
            cfg.attack.count = 3;
        }
        return cfg;
    }
    throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace bflmec::sim
