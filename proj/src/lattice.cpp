#include "bflmec/lattice.hpp"

#include <algorithm>
#include <cstdlib>

namespace bflmec::pqc {

namespace {

bool is_prime(int64_t n) {
    if (n < 2) return false;
    for (int64_t d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

bool is_power_of_two(uint32_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Uniform coefficient in [-bound, bound].
Polynomial sample_bounded_poly(uint32_t n, int64_t bound, Rng& rng) {
    Polynomial p(n);
    for (auto& c : p.coeffs)
        c = static_cast<int32_t>(rng.range(-bound, bound));
    return p;
}

Polynomial sample_uniform_poly(const LatticeParams& params, Rng& rng) {
    Polynomial p(params.n_lat);
    for (auto& c : p.coeffs)
        c = static_cast<int32_t>(center_mod(static_cast<int64_t>(rng.below(params.q)), params.q));
    return p;
}

Bytes serialize_polyvec(const PolyVec& v) {
    ByteWriter w;
    for (const auto& p : v) w.raw(serialize_poly(p));
    return w.take();
}

}  // namespace

void LatticeParams::validate() const {
    if (!is_prime(q)) throw std::invalid_argument("lattice params: q must be prime");
    if (!is_power_of_two(n_lat))
        throw std::invalid_argument("lattice params: n_lat must be a power of two");
    if (k_rows == 0 || l_cols == 0) throw std::invalid_argument("lattice params: empty matrix");
    if (beta != static_cast<int64_t>(tau) * eta_bound)
        throw std::invalid_argument("lattice params: beta must equal tau * eta");
    if (gamma1 <= beta || gamma2 <= beta)
        throw std::invalid_argument("lattice params: gamma bounds must exceed beta");
    if (tau > n_lat) throw std::invalid_argument("lattice params: tau exceeds degree");
}

LatticeParams toy_params() {
    LatticeParams p;
    p.q = 8380417;
    p.n_lat = 64;
    p.k_rows = 2;
    p.l_cols = 2;
    p.eta_bound = 2;
    p.gamma1 = 1 << 17;
    p.gamma2 = (p.q - 1) / 88;  // 2*gamma2 divides q-1
    p.tau = 39;
    p.beta = static_cast<int64_t>(p.tau) * p.eta_bound;
    return p;
}

LatticeParams mini_params() {
    LatticeParams p = toy_params();
    p.n_lat = 256;
    p.k_rows = 4;
    p.l_cols = 4;
    return p;
}

int64_t center_mod(int64_t x, int64_t q) {
    int64_t r = x % q;
    if (r < 0) r += q;
    if (2 * r > q) r -= q;
    return r;
}

Polynomial poly_add(const Polynomial& a, const Polynomial& b, const LatticeParams& p) {
    Polynomial out(p.n_lat);
    for (uint32_t i = 0; i < p.n_lat; ++i)
        out.coeffs[i] = static_cast<int32_t>(
            center_mod(static_cast<int64_t>(a.coeffs[i]) + b.coeffs[i], p.q));
    return out;
}

Polynomial poly_sub(const Polynomial& a, const Polynomial& b, const LatticeParams& p) {
    Polynomial out(p.n_lat);
    for (uint32_t i = 0; i < p.n_lat; ++i)
        out.coeffs[i] = static_cast<int32_t>(
            center_mod(static_cast<int64_t>(a.coeffs[i]) - b.coeffs[i], p.q));
    return out;
}

Polynomial poly_mul(const Polynomial& a, const Polynomial& b, const LatticeParams& p) {
    const uint32_t n = p.n_lat;
    std::vector<int64_t> acc(n, 0);
    for (uint32_t i = 0; i < n; ++i) {
        const int64_t ai = a.coeffs[i];
        if (ai == 0) continue;
        for (uint32_t j = 0; j < n; ++j) {
            const uint32_t k = i + j;
            const int64_t prod = ai * b.coeffs[j];
            if (k < n)
                acc[k] += prod;
            else
                acc[k - n] -= prod;  // X^n = -1
        }
        // Coefficient magnitudes stay below n * (q/2)^2 < 2^63 for n <= 256,
        // but reduce periodically to keep headroom explicit.
        if ((i & 31u) == 31u)
            for (auto& v : acc) v = center_mod(v, p.q);
    }
    Polynomial out(n);
    for (uint32_t i = 0; i < n; ++i) out.coeffs[i] = static_cast<int32_t>(center_mod(acc[i], p.q));
    return out;
}

PolyVec mat_vec_mul(const PolyMat& m, const PolyVec& v, const LatticeParams& p) {
    PolyVec out;
    out.reserve(m.size());
    for (const auto& row : m) {
        Polynomial acc(p.n_lat);
        for (size_t j = 0; j < row.size(); ++j)
            acc = poly_add(acc, poly_mul(row[j], v[j], p), p);
        out.push_back(std::move(acc));
    }
    return out;
}

PolyVec vec_add(const PolyVec& a, const PolyVec& b, const LatticeParams& p) {
    PolyVec out;
    out.reserve(a.size());
    for (size_t i = 0; i < a.size(); ++i) out.push_back(poly_add(a[i], b[i], p));
    return out;
}

PolyVec vec_sub(const PolyVec& a, const PolyVec& b, const LatticeParams& p) {
    PolyVec out;
    out.reserve(a.size());
    for (size_t i = 0; i < a.size(); ++i) out.push_back(poly_sub(a[i], b[i], p));
    return out;
}

PolyVec poly_scale_vec(const Polynomial& c, const PolyVec& v, const LatticeParams& p) {
    PolyVec out;
    out.reserve(v.size());
    for (const auto& e : v) out.push_back(poly_mul(c, e, p));
    return out;
}

int64_t inf_norm(const PolyVec& v) {
    int64_t m = 0;
    for (const auto& p : v)
        for (int32_t c : p.coeffs) m = std::max<int64_t>(m, std::llabs(c));
    return m;
}

Decomposed decompose(int64_t w, int64_t two_gamma2) {
    const int64_t m = two_gamma2;
    int64_t low = w % m;
    if (low < 0) low += m;
    if (2 * low > m) low -= m;  // low in (-gamma2, gamma2]
    return {(w - low) / m, low};
}

PolyVec high_bits(const PolyVec& v, int64_t two_gamma2) {
    PolyVec out = v;
    for (auto& p : out)
        for (auto& c : p.coeffs) c = static_cast<int32_t>(decompose(c, two_gamma2).high);
    return out;
}

PolyVec low_bits(const PolyVec& v, int64_t two_gamma2) {
    PolyVec out = v;
    for (auto& p : out)
        for (auto& c : p.coeffs) c = static_cast<int32_t>(decompose(c, two_gamma2).low);
    return out;
}

LatticeKeypair keypair_gen(const LatticeParams& params, Rng& rng) {
    params.validate();
    PolyMat a(params.k_rows);
    for (auto& row : a) {
        row.reserve(params.l_cols);
        for (uint32_t j = 0; j < params.l_cols; ++j)
            row.push_back(sample_uniform_poly(params, rng));
    }
    PolyVec s1, s2;
    s1.reserve(params.l_cols);
    for (uint32_t j = 0; j < params.l_cols; ++j)
        s1.push_back(sample_bounded_poly(params.n_lat, params.eta_bound, rng));
    s2.reserve(params.k_rows);
    for (uint32_t i = 0; i < params.k_rows; ++i)
        s2.push_back(sample_bounded_poly(params.n_lat, params.eta_bound, rng));

    PolyVec t = vec_add(mat_vec_mul(a, s1, params), s2, params);
    LatticeKeypair kp;
    kp.pk = PublicKey{a, t};
    kp.sk = SecretKey{a, t, s1, s2};
    return kp;
}

Polynomial hash_challenge(const Bytes& message, const PolyVec& w1, const LatticeParams& params) {
    ByteWriter w;
    w.raw(message);
    w.raw(serialize_polyvec(w1));
    DigestStream stream(sha256_tagged(HashDomain::challenge, w.bytes()));

    // Fisher-Yates style placement: exactly tau nonzero +-1 coefficients.
    const uint32_t n = params.n_lat;
    Polynomial c(n);
    for (uint32_t i = n - params.tau; i < n; ++i) {
        uint32_t j;
        do {
            j = stream.next_byte();
        } while (j > i);
        const int32_t sign = (stream.next_byte() & 1) ? 1 : -1;
        c.coeffs[i] = c.coeffs[j];
        c.coeffs[j] = sign;
    }
    return c;
}

LatticeSignature sign(const SecretKey& sk, const Bytes& message, const LatticeParams& params,
                      Rng& rng, SignTrace* trace) {
    const int64_t two_gamma2 = 2 * params.gamma2;
    for (uint32_t iter = 1; iter <= params.sign_iteration_cap; ++iter) {
        PolyVec y;
        y.reserve(params.l_cols);
        for (uint32_t j = 0; j < params.l_cols; ++j)
            y.push_back(sample_bounded_poly(params.n_lat, params.gamma1 - 1, rng));

        const PolyVec ay = mat_vec_mul(sk.a, y, params);
        const PolyVec w1 = high_bits(ay, two_gamma2);
        const Polynomial c = hash_challenge(message, w1, params);
        const PolyVec z = vec_add(y, poly_scale_vec(c, sk.s1, params), params);
        if (inf_norm(z) >= params.gamma1 - params.beta) continue;

        const PolyVec ay_minus_cs2 = vec_sub(ay, poly_scale_vec(c, sk.s2, params), params);
        if (inf_norm(low_bits(ay_minus_cs2, two_gamma2)) >= params.gamma2 - params.beta) continue;
        // With the centered mod-q representation a coefficient of Ay - c*s2
        // sitting within beta of +-q/2 can wrap, which the two norm checks do
        // not see. Re-check the high-bits identity directly; the retry rate
        // is ~2*beta/q per coefficient.
        if (high_bits(ay_minus_cs2, two_gamma2) != w1) continue;

        if (trace) {
            trace->y = y;
            trace->iterations = iter;
        }
        return LatticeSignature{z, c};
    }
    throw SigningFailure("rejection sampling exceeded iteration cap");
}

bool verify(const PublicKey& pk, const Bytes& message, const LatticeSignature& sig,
            const LatticeParams& params) {
    if (sig.z.size() != params.l_cols || sig.c.size() != params.n_lat) return false;
    for (const auto& p : sig.z)
        if (p.size() != params.n_lat) return false;
    if (inf_norm(sig.z) >= params.gamma1 - params.beta) return false;

    const PolyVec az = mat_vec_mul(pk.a, sig.z, params);
    const PolyVec ct = poly_scale_vec(sig.c, pk.t, params);
    const PolyVec w1 = high_bits(vec_sub(az, ct, params), 2 * params.gamma2);
    return hash_challenge(message, w1, params) == sig.c;
}

// --- serialization -----------------------------------------------------------

Bytes serialize_poly(const Polynomial& p) {
    ByteWriter w;
    for (int32_t c : p.coeffs) w.i32(c);
    return w.take();
}

namespace {

Polynomial parse_poly(ByteReader& r, uint32_t n) {
    Polynomial p(n);
    for (auto& c : p.coeffs) c = r.i32();
    return p;
}

PolyVec parse_polyvec(ByteReader& r, uint32_t count, uint32_t n) {
    PolyVec v;
    v.reserve(count);
    for (uint32_t i = 0; i < count; ++i) v.push_back(parse_poly(r, n));
    return v;
}

void write_dims(ByteWriter& w, const LatticeParams& p) {
    w.u32(p.k_rows);
    w.u32(p.l_cols);
    w.u32(p.n_lat);
}

}  // namespace

Bytes serialize_public_key(const PublicKey& pk, const LatticeParams& params) {
    ByteWriter w;
    write_dims(w, params);
    for (const auto& row : pk.a) w.raw(serialize_polyvec(row));
    w.raw(serialize_polyvec(pk.t));
    return w.take();
}

Bytes serialize_secret_key(const SecretKey& sk, const LatticeParams& params) {
    ByteWriter w;
    write_dims(w, params);
    for (const auto& row : sk.a) w.raw(serialize_polyvec(row));
    w.raw(serialize_polyvec(sk.t));
    w.raw(serialize_polyvec(sk.s1));
    w.raw(serialize_polyvec(sk.s2));
    return w.take();
}

Bytes serialize_signature(const LatticeSignature& sig, const LatticeParams& params) {
    ByteWriter w;
    w.u32(params.l_cols);
    w.u32(params.n_lat);
    w.raw(serialize_polyvec(sig.z));
    w.raw(serialize_poly(sig.c));
    return w.take();
}

PublicKey parse_public_key(const Bytes& b) {
    ByteReader r(b);
    const uint32_t k = r.u32(), l = r.u32(), n = r.u32();
    PublicKey pk;
    pk.a.reserve(k);
    for (uint32_t i = 0; i < k; ++i) pk.a.push_back(parse_polyvec(r, l, n));
    pk.t = parse_polyvec(r, k, n);
    return pk;
}

SecretKey parse_secret_key(const Bytes& b) {
    ByteReader r(b);
    const uint32_t k = r.u32(), l = r.u32(), n = r.u32();
    SecretKey sk;
    sk.a.reserve(k);
    for (uint32_t i = 0; i < k; ++i) sk.a.push_back(parse_polyvec(r, l, n));
    sk.t = parse_polyvec(r, k, n);
    sk.s1 = parse_polyvec(r, l, n);
    sk.s2 = parse_polyvec(r, k, n);
    return sk;
}

LatticeSignature parse_signature(const Bytes& b) {
    ByteReader r(b);
    const uint32_t l = r.u32(), n = r.u32();
    LatticeSignature sig;
    sig.z = parse_polyvec(r, l, n);
    sig.c = parse_poly(r, n);
    return sig;
}

}  // namespace bflmec::pqc
