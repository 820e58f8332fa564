#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bflmec/bytes.hpp"
#include "bflmec/rng.hpp"
#include "bflmec/sha256.hpp"

// Simplified-Dilithium signature scheme over R_q = Z_q[X]/(X^n + 1).
// Coefficients are kept in centered representation (-q/2, q/2]. Multiplication
// is schoolbook negacyclic; at n <= 256 this is fast enough and easy to check
// against an independent oracle. No NTT, no key compression, no hints.
namespace bflmec::pqc {

struct LatticeParams {
    int64_t q;           // ring modulus, prime
    uint32_t n_lat;      // polynomial degree, power of two
    uint32_t k_rows;     // rows of A
    uint32_t l_cols;     // columns of A
    int64_t eta_bound;   // secret coefficients drawn from [-eta, eta]
    int64_t gamma1;      // masking coefficients drawn from [-(gamma1-1), gamma1-1]
    int64_t gamma2;      // low/high decomposition radix is 2*gamma2
    int64_t beta;        // rejection margin, beta = tau * eta
    uint32_t tau;        // challenge Hamming weight
    uint32_t sign_iteration_cap = 1000;

    void validate() const;
};

// Desk-scale parameter sets. "toy" keeps every test suite fast; "mini" is the
// benchmark set. Neither claims NIST-level security.
LatticeParams toy_params();
LatticeParams mini_params();

struct Polynomial {
    std::vector<int32_t> coeffs;

    explicit Polynomial(uint32_t n = 0) : coeffs(n, 0) {}
    uint32_t size() const { return static_cast<uint32_t>(coeffs.size()); }
    bool operator==(const Polynomial&) const = default;
};

using PolyVec = std::vector<Polynomial>;
using PolyMat = std::vector<PolyVec>;  // k_rows x l_cols

struct PublicKey {
    PolyMat a;
    PolyVec t;
    bool operator==(const PublicKey&) const = default;
};

struct SecretKey {
    PolyMat a;
    PolyVec t;
    PolyVec s1;
    PolyVec s2;
    bool operator==(const SecretKey&) const = default;
};

struct LatticeKeypair {
    PublicKey pk;
    SecretKey sk;
    bool operator==(const LatticeKeypair&) const = default;
};

struct LatticeSignature {
    PolyVec z;
    Polynomial c;
    bool operator==(const LatticeSignature&) const = default;
};

// Raised when the rejection loop exceeds its iteration cap, which signals
// mis-tuned parameters rather than bad luck.
struct SigningFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exposes the accepted iteration's masking vector for instrumented tests.
struct SignTrace {
    PolyVec y;
    uint32_t iterations = 0;
};

// --- ring arithmetic -------------------------------------------------------

// Reduce x into the centered representation (-q/2, q/2].
int64_t center_mod(int64_t x, int64_t q);

Polynomial poly_add(const Polynomial& a, const Polynomial& b, const LatticeParams& p);
Polynomial poly_sub(const Polynomial& a, const Polynomial& b, const LatticeParams& p);
// Negacyclic convolution mod (X^n + 1, q).
Polynomial poly_mul(const Polynomial& a, const Polynomial& b, const LatticeParams& p);

PolyVec mat_vec_mul(const PolyMat& m, const PolyVec& v, const LatticeParams& p);
PolyVec vec_add(const PolyVec& a, const PolyVec& b, const LatticeParams& p);
PolyVec vec_sub(const PolyVec& a, const PolyVec& b, const LatticeParams& p);
PolyVec poly_scale_vec(const Polynomial& c, const PolyVec& v, const LatticeParams& p);
int64_t inf_norm(const PolyVec& v);

// --- high/low decomposition -------------------------------------------------

// Canonical split w = high * two_gamma2 + low with low in (-gamma2, gamma2].
// Reconstruction is exact over the integers.
struct Decomposed {
    int64_t high;
    int64_t low;
};
Decomposed decompose(int64_t w, int64_t two_gamma2);

PolyVec high_bits(const PolyVec& v, int64_t two_gamma2);
PolyVec low_bits(const PolyVec& v, int64_t two_gamma2);

// --- Algorithm operations ----------------------------------------------------

LatticeKeypair keypair_gen(const LatticeParams& params, Rng& rng);

LatticeSignature sign(const SecretKey& sk, const Bytes& message, const LatticeParams& params,
                      Rng& rng, SignTrace* trace = nullptr);

bool verify(const PublicKey& pk, const Bytes& message, const LatticeSignature& sig,
            const LatticeParams& params);

// Deterministic sparse challenge: exactly tau coefficients in {-1,+1}, built
// by expanding SHA-256(message || w1) into an index/sign stream.
Polynomial hash_challenge(const Bytes& message, const PolyVec& w1, const LatticeParams& params);

// --- serialization (layouts in docs/formats.md) ------------------------------

Bytes serialize_poly(const Polynomial& p);
Bytes serialize_public_key(const PublicKey& pk, const LatticeParams& params);
Bytes serialize_secret_key(const SecretKey& sk, const LatticeParams& params);
Bytes serialize_signature(const LatticeSignature& sig, const LatticeParams& params);

PublicKey parse_public_key(const Bytes& b);
SecretKey parse_secret_key(const Bytes& b);
LatticeSignature parse_signature(const Bytes& b);

}  // namespace bflmec::pqc
