#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "bflmec/bytes.hpp"

namespace bflmec {

using Digest = std::array<uint8_t, 32>;

Digest sha256(const uint8_t* data, size_t len);
inline Digest sha256(const Bytes& b) { return sha256(b.data(), b.size()); }

// Domain-separation prefixes: one hash primitive serves both the signature
// challenge and block mining, so inputs are tagged to keep the uses disjoint.
enum class HashDomain : uint8_t {
    challenge = 0x01,
    block = 0x02,
    gradient = 0x03,
};

Digest sha256_tagged(HashDomain domain, const Bytes& payload);

// Expands a 32-byte digest into an unbounded deterministic byte stream
// (SHA-256 over digest || counter). Used to turn a challenge digest into the
// index/sign stream that builds the sparse challenge polynomial.
class DigestStream {
public:
    explicit DigestStream(const Digest& seed) : seed_(seed) {}
    uint8_t next_byte();

private:
    void refill();
    Digest seed_;
    Digest block_{};
    uint64_t counter_ = 0;
    size_t pos_ = 32;  // forces refill on first use
};

}  // namespace bflmec
