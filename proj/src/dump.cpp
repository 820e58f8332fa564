#include "bflmec/dump.hpp"

#include <json.hpp>

#include <sstream>

namespace bflmec::chain {

using json = nlohmann::json;

std::string chain_dump_jsonl(const std::vector<Block>& chain) {
    std::ostringstream os;
    for (const auto& b : chain) {
        json j;
        j["index"] = b.index;
        j["prev_hash"] = to_hex(b.prev_hash);
        j["timestamp"] = b.timestamp;
        j["nonce"] = b.nonce;
        j["hash"] = to_hex(b.hash);
        if (b.tx_first) {
            json rec;
            rec["global_gradient"] = to_hex(fl::serialize_gradient(b.tx_first->global_gradient));
            json rewards = json::array();
            for (const auto& [id, reward] : b.tx_first->reward_list)
                rewards.push_back({{"client", id}, {"reward", reward}});
            rec["reward_list"] = std::move(rewards);
            j["tx_first"] = std::move(rec);
        }
        json txs = json::array();
        for (const auto& t : b.txs)
            txs.push_back({{"sender", t.sender_id},
                           {"receiver", t.receiver_id},
                           {"signature", to_hex(t.gradient_signature)},
                           {"digest", to_hex(t.gradient_digest)}});
        j["txs"] = std::move(txs);
        os << j.dump() << '\n';
    }
    return os.str();
}

std::vector<Block> parse_chain_dump(std::istream& in) {
    std::vector<Block> chain;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        Block b;
        b.index = j.at("index").get<uint64_t>();
        const Bytes prev = from_hex(j.at("prev_hash").get<std::string>());
        std::copy(prev.begin(), prev.end(), b.prev_hash.begin());
        b.timestamp = j.at("timestamp").get<uint64_t>();
        b.nonce = j.at("nonce").get<uint64_t>();
        const Bytes hash = from_hex(j.at("hash").get<std::string>());
        std::copy(hash.begin(), hash.end(), b.hash.begin());
        if (j.contains("tx_first")) {
            GlobalRecord rec;
            rec.global_gradient =
                fl::parse_gradient(from_hex(j["tx_first"].at("global_gradient").get<std::string>()));
            for (const auto& r : j["tx_first"].at("reward_list"))
                rec.reward_list.emplace_back(r.at("client").get<uint32_t>(),
                                             r.at("reward").get<double>());
            b.tx_first = std::move(rec);
        }
        for (const auto& t : j.at("txs")) {
            Transaction tx;
            tx.sender_id = t.at("sender").get<uint32_t>();
            tx.receiver_id = t.at("receiver").get<uint32_t>();
            tx.gradient_signature = from_hex(t.at("signature").get<std::string>());
            const Bytes digest = from_hex(t.at("digest").get<std::string>());
            std::copy(digest.begin(), digest.end(), tx.gradient_digest.begin());
            b.txs.push_back(std::move(tx));
        }
        chain.push_back(std::move(b));
    }
    return chain;
}

bool check_chain_dump(std::istream& in, uint64_t difficulty, std::string* error) {
    try {
        const auto chain = parse_chain_dump(in);
        const MiningParams params = MiningParams::from_difficulty(difficulty);
        BlockFault fault = BlockFault::none;
        size_t at = 0;
        if (!validate_chain(chain, params, &fault, &at)) {
            if (error)
                *error = "block " + std::to_string(at) + ": " + to_string(fault);
            return false;
        }
        return true;
    } catch (const std::exception& e) {
        if (error) *error = e.what();
        return false;
    }
}

}  // namespace bflmec::chain
