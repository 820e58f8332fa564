#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "bflmec/dump.hpp"
#include "bflmec/lattice.hpp"
#include "bflmec/metrics.hpp"
#include "bflmec/simnet.hpp"

namespace fs = std::filesystem;
using namespace bflmec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ScenarioArgs {
    std::string scenario_path;
    std::string preset_name;
    std::vector<std::string> overrides;  // key=value
    // common overrides with dedicated flags
    std::optional<uint64_t> seed, phi, cap_n, max_ticks, max_events;
    std::optional<std::string> strategy, partition_mode, attack_mode;

    void attach(CLI::App* cmd) {
        cmd->add_option("scenario", scenario_path, "scenario file (key = value lines)");
        cmd->add_option("--preset", preset_name, "built-in preset name");
        cmd->add_option("--set", overrides, "extra override key=value (repeatable)");
        cmd->add_option("--seed", seed, "override seed");
        cmd->add_option("--phi", phi, "override aggregation threshold phi");
        cmd->add_option("--cap-n", cap_n, "override client data threshold N");
        cmd->add_option("--max-ticks", max_ticks, "override max ticks");
        cmd->add_option("--max-events", max_events, "override max aggregation events");
        cmd->add_option("--strategy", strategy, "keep-all | discard-low");
        cmd->add_option("--partition", partition_mode, "iid | label-skew");
        cmd->add_option("--attack-mode", attack_mode, "none | rotating | fixed");
    }

    sim::ScenarioConfig resolve() const {
        sim::ScenarioConfig cfg;
        if (!scenario_path.empty())
            cfg = sim::load_scenario_file(scenario_path);
        else if (!preset_name.empty())
            cfg = sim::preset(preset_name);
        else
            cfg = sim::preset("desk-default");
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects key=value, got: " + kv);
            sim::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (seed) cfg.seed = *seed;
        if (phi) cfg.phi = *phi;
        if (cap_n) cfg.threshold_n = *cap_n;
        if (max_ticks) cfg.max_ticks = *max_ticks;
        if (max_events) cfg.max_agg_events = *max_events;
        if (strategy) sim::apply_override(cfg, "strategy", *strategy);
        if (partition_mode) sim::apply_override(cfg, "partition", *partition_mode);
        if (attack_mode) sim::apply_override(cfg, "attack_mode", *attack_mode);
        cfg.validate();
        return cfg;
    }
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

// Fixed output layout: manifest, metrics.csv, events.csv, rewards.csv,
// chain.dump (+ ground_truth.csv and detection.csv for attack scenarios).
sim::RunResult execute_run(const sim::ScenarioConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    std::vector<std::pair<std::string, std::string>> outputs = {
        {"metrics", (dir / "metrics.csv").string()},
        {"events", (dir / "events.csv").string()},
        {"rewards", (dir / "rewards.csv").string()},
        {"chain", (dir / "chain.dump").string()},
    };
    if (cfg.attack.mode != sim::AttackMode::none) {
        outputs.emplace_back("ground_truth", (dir / "ground_truth.csv").string());
        outputs.emplace_back("detection", (dir / "detection.csv").string());
    }
    write_file(dir / "manifest", sim::run_manifest(cfg, outputs));

    sim::RunResult res = sim::run(cfg);

    write_file(dir / "metrics.csv", sim::metrics_csv(res.log));
    write_file(dir / "events.csv", sim::events_csv(res.log));
    write_file(dir / "rewards.csv", sim::rewards_csv(res.log));
    write_file(dir / "chain.dump", chain::chain_dump_jsonl(res.chains.at(0)));
    if (cfg.attack.mode != sim::AttackMode::none) {
        write_file(dir / "ground_truth.csv", sim::ground_truth_csv(res.log));
        write_file(dir / "detection.csv", sim::detection_csv(res.log));
    }
    return res;
}

void print_summary(const sim::RunResult& res) {
    std::cout << "ticks=" << res.total_ticks << " events=" << res.log.events.size()
              << " final_accuracy=" << sim::format_double(res.final_accuracy)
              << " converged_event=" << res.log.converged_event
              << " converged_tick=" << (res.log.converged_event >= 0 ? res.log.converged_tick : 0)
              << " settled=" << (res.settled ? 1 : 0) << "\n";
}

std::vector<uint64_t> parse_u64_list(const std::string& csv) {
    std::vector<uint64_t> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoull(item));
    return out;
}

int cmd_run(const ScenarioArgs& args, const std::string& outdir) {
    const auto cfg = args.resolve();
    const auto res = execute_run(cfg, outdir);
    print_summary(res);
    return kExitOk;
}

int cmd_sweep(const ScenarioArgs& args, const std::string& outdir, const std::string& n_list,
              const std::string& phi_list) {
    auto base = args.resolve();
    const auto ns = parse_u64_list(n_list);
    const auto phis = parse_u64_list(phi_list);
    if (ns.empty() || phis.empty()) throw std::invalid_argument("sweep: empty grid");

    fs::create_directories(outdir);
    std::ostringstream table;
    table << "phi,cap_n,seed,final_accuracy,converged_event,converged_tick,ticks,events\n";
    size_t cell = 0;
    for (uint64_t phi : phis) {
        for (uint64_t n : ns) {
            sim::ScenarioConfig cfg = base;
            cfg.phi = phi;
            cfg.threshold_n = n;
            cfg.seed = base.seed + cell;  // shared base seed + cell offset
            std::ostringstream cellname;
            cellname << "phi" << phi << "_n" << n;
            try {
                const auto res = execute_run(cfg, fs::path(outdir) / cellname.str());
                table << phi << ',' << n << ',' << cfg.seed << ','
                      << sim::format_double(res.final_accuracy) << ',' << res.log.converged_event
                      << ',' << (res.log.converged_event >= 0 ? res.log.converged_tick : 0) << ','
                      << res.total_ticks << ',' << res.log.events.size() << '\n';
            } catch (const std::exception& e) {
                std::cerr << "cell " << cellname.str() << " failed: " << e.what() << "\n";
                table << phi << ',' << n << ',' << cfg.seed << ",failed,-1,0,0,0\n";
            }
            ++cell;
        }
    }
    write_file(fs::path(outdir) / "sweep.csv", table.str());
    std::cout << table.str();
    return kExitOk;
}

int cmd_bench_sig(const std::string& params_name, uint64_t trials) {
    if (trials == 0) throw std::invalid_argument("bench-sig: trials must be positive");
    const pqc::LatticeParams params =
        params_name == "mini" ? pqc::mini_params() : pqc::toy_params();
    if (params_name != "mini" && params_name != "toy")
        throw std::invalid_argument("bench-sig: unknown parameter set " + params_name);

    using clock = std::chrono::steady_clock;
    std::vector<double> keygen_ms, sign_ms, verify_ms;
    Rng rng = Rng::stream(42, "bench");
    for (uint64_t i = 0; i < trials; ++i) {
        const auto t0 = clock::now();
        const auto kp = pqc::keypair_gen(params, rng);
        const auto t1 = clock::now();
        Bytes msg(64);
        for (auto& b : msg) b = static_cast<uint8_t>(rng.u64());
        const auto sig = pqc::sign(kp.sk, msg, params, rng);
        const auto t2 = clock::now();
        const bool ok = pqc::verify(kp.pk, msg, sig, params);
        const auto t3 = clock::now();
        if (!ok) throw std::logic_error("bench-sig: verification failed");
        auto ms = [](auto a, auto b) {
            return std::chrono::duration<double, std::milli>(b - a).count();
        };
        keygen_ms.push_back(ms(t0, t1));
        sign_ms.push_back(ms(t1, t2));
        verify_ms.push_back(ms(t2, t3));
    }
    auto median = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        return v[(v.size() - 1) / 2];
    };
    std::cout << "Scheme,Keygen (ms),Sign (ms),Verify (ms)\n";
    std::cout << "lattice-" << params_name << "," << sim::format_double(median(keygen_ms)) << ","
              << sim::format_double(median(sign_ms)) << ","
              << sim::format_double(median(verify_ms)) << "\n";
    return kExitOk;
}

int cmd_attack_eval(const ScenarioArgs& args, const std::string& outdir) {
    const auto cfg = args.resolve();
    if (cfg.attack.mode == sim::AttackMode::none)
        throw std::invalid_argument("attack-eval: scenario has no attack profile");
    const auto res = execute_run(cfg, outdir);
    print_summary(res);

    std::cout << "client,cumulative_reward\n";
    for (uint32_t id = 1; id <= cfg.n; ++id) {
        const auto it = res.log.cumulative_rewards.find(id);
        std::cout << id << ','
                  << sim::format_double(it == res.log.cumulative_rewards.end() ? 0.0 : it->second)
                  << "\n";
    }
    if (auto rate = sim::detection_rate(res.log, 3))
        std::cout << "detection_rate_last3=" << sim::format_double(*rate) << "\n";
    else
        std::cout << "detection_rate_last3=absent\n";
    return kExitOk;
}

int cmd_dump_chain(const ScenarioArgs& args, const std::string& out_file,
                   const std::string& check_file, uint64_t check_difficulty) {
    if (!check_file.empty()) {
        std::ifstream in(check_file);
        if (!in) throw std::invalid_argument("dump-chain: cannot open " + check_file);
        std::string err;
        if (!chain::check_chain_dump(in, check_difficulty, &err)) {
            std::cerr << "chain dump invalid: " << err << "\n";
            return kExitRuntime;
        }
        std::cout << "chain dump valid\n";
        return kExitOk;
    }
    const auto cfg = args.resolve();
    const auto res = sim::run(cfg);
    const std::string dump = chain::chain_dump_jsonl(res.chains.at(0));
    if (out_file.empty())
        std::cout << dump;
    else
        write_file(out_file, dump);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"asynchronous blockchain federated learning simulator"};
    app.require_subcommand(1);

    ScenarioArgs run_args, sweep_args, attack_args, dump_args;
    std::string run_out = "out";
    std::string sweep_out = "sweep-out";
    std::string attack_out = "attack-out";
    std::string n_list = "50,75,100";
    std::string phi_list = "5,10,15,20";
    std::string bench_params = "toy";
    uint64_t bench_trials = 100;
    std::string dump_out, dump_check;
    uint64_t dump_difficulty = 4096;

    auto* run_cmd = app.add_subcommand("run", "execute a scenario");
    run_args.attach(run_cmd);
    run_cmd->add_option("--out", run_out, "output directory");

    auto* sweep_cmd = app.add_subcommand("sweep", "grid over (phi, N)");
    sweep_args.attach(sweep_cmd);
    sweep_cmd->add_option("--out", sweep_out, "output directory");
    sweep_cmd->add_option("--n-list", n_list, "comma list of N values");
    sweep_cmd->add_option("--phi-list", phi_list, "comma list of phi values");

    auto* bench_cmd = app.add_subcommand("bench-sig", "signature latency benchmark");
    bench_cmd->add_option("--params", bench_params, "toy | mini");
    bench_cmd->add_option("--trials", bench_trials, "number of trials");

    auto* attack_cmd = app.add_subcommand("attack-eval", "detection rate and rewards");
    attack_args.attach(attack_cmd);
    attack_cmd->add_option("--out", attack_out, "output directory");

    auto* dump_cmd = app.add_subcommand("dump-chain", "run a scenario and dump the ledger");
    dump_args.attach(dump_cmd);
    dump_cmd->add_option("--out", dump_out, "dump file (default stdout)");
    dump_cmd->add_option("--check", dump_check, "validate an existing dump instead");
    dump_cmd->add_option("--difficulty", dump_difficulty, "difficulty used for --check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(run_args, run_out);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_args, sweep_out, n_list, phi_list);
        if (bench_cmd->parsed()) return cmd_bench_sig(bench_params, bench_trials);
        if (attack_cmd->parsed()) return cmd_attack_eval(attack_args, attack_out);
        if (dump_cmd->parsed())
            return cmd_dump_chain(dump_args, dump_out, dump_check, dump_difficulty);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
