#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace bflmec {

using Bytes = std::vector<uint8_t>;

// Little-endian append-only byte buffer. All on-wire and on-chain records in
// this project are built through it, so the layouts documented in
// docs/formats.md are exactly what these helpers emit.
class ByteWriter {
public:
    const Bytes& bytes() const { return buf_; }
    Bytes take() { return std::move(buf_); }
    size_t size() const { return buf_.size(); }

    void u8(uint8_t v) { buf_.push_back(v); }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void raw(const uint8_t* p, size_t n) { buf_.insert(buf_.end(), p, p + n); }
    void raw(const Bytes& b) { raw(b.data(), b.size()); }
    template <size_t N>
    void raw(const std::array<uint8_t, N>& a) {
        raw(a.data(), N);
    }

private:
    Bytes buf_;
};

class ByteReader {
public:
    ByteReader(const uint8_t* p, size_t n) : p_(p), n_(n) {}
    explicit ByteReader(const Bytes& b) : p_(b.data()), n_(b.size()) {}

    size_t remaining() const { return n_ - pos_; }
    bool done() const { return pos_ == n_; }

    uint8_t u8() { return take(1)[0]; }
    uint32_t u32() {
        const uint8_t* p = take(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
        return v;
    }
    uint64_t u64() {
        const uint8_t* p = take(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
        return v;
    }
    int32_t i32() { return static_cast<int32_t>(u32()); }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    Bytes raw(size_t n) {
        const uint8_t* p = take(n);
        return Bytes(p, p + n);
    }
    template <size_t N>
    std::array<uint8_t, N> raw_array() {
        const uint8_t* p = take(N);
        std::array<uint8_t, N> a;
        std::memcpy(a.data(), p, N);
        return a;
    }

private:
    const uint8_t* take(size_t n) {
        if (pos_ + n > n_) throw std::out_of_range("byte reader underflow");
        const uint8_t* p = p_ + pos_;
        pos_ += n;
        return p;
    }
    const uint8_t* p_;
    size_t n_;
    size_t pos_ = 0;
};

inline std::string to_hex(const uint8_t* p, size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(2 * n);
    for (size_t i = 0; i < n; ++i) {
        s.push_back(digits[p[i] >> 4]);
        s.push_back(digits[p[i] & 0xf]);
    }
    return s;
}

inline std::string to_hex(const Bytes& b) { return to_hex(b.data(), b.size()); }

template <size_t N>
std::string to_hex(const std::array<uint8_t, N>& a) {
    return to_hex(a.data(), N);
}

inline Bytes from_hex(const std::string& s) {
    if (s.size() % 2 != 0) throw std::invalid_argument("odd hex string");
    auto nib = [](char c) -> uint8_t {
        if (c >= '0' && c <= '9') return static_cast<uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<uint8_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<uint8_t>(c - 'A' + 10);
        throw std::invalid_argument("bad hex digit");
    };
    Bytes out(s.size() / 2);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<uint8_t>((nib(s[2 * i]) << 4) | nib(s[2 * i + 1]));
    return out;
}

}  // namespace bflmec
