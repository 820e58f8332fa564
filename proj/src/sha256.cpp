#include "bflmec/sha256.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace bflmec {

Digest sha256(const uint8_t* data, size_t len) {
    Digest out{};
    unsigned int written = 0;
    if (EVP_Digest(data, len, out.data(), &written, EVP_sha256(), nullptr) != 1 || written != 32)
        throw std::runtime_error("sha256 failed");
    return out;
}

Digest sha256_tagged(HashDomain domain, const Bytes& payload) {
    Bytes buf;
    buf.reserve(payload.size() + 1);
    buf.push_back(static_cast<uint8_t>(domain));
    buf.insert(buf.end(), payload.begin(), payload.end());
    return sha256(buf);
}

uint8_t DigestStream::next_byte() {
    if (pos_ >= 32) refill();
    return block_[pos_++];
}

void DigestStream::refill() {
    ByteWriter w;
    w.raw(seed_);
    w.u64(counter_++);
    block_ = sha256(w.bytes());
    pos_ = 0;
}

}  // namespace bflmec
