#pragma once

#include <istream>
#include <string>
#include <vector>

#include "bflmec/ledger.hpp"

namespace bflmec::chain {

// Line-delimited ledger dump: one JSON object per block. Gradient payloads
// and hashes are hex-encoded byte-exactly so a dump can be re-validated.
std::string chain_dump_jsonl(const std::vector<Block>& chain);

std::vector<Block> parse_chain_dump(std::istream& in);

// Re-parses a dump and re-runs full chain validation (hash recomputation,
// linkage, target under the given difficulty).
bool check_chain_dump(std::istream& in, uint64_t difficulty, std::string* error = nullptr);

}  // namespace bflmec::chain
