#include "che/pairing.hpp"

#include <boost/multiprecision/miller_rabin.hpp>

#include "che/digest.hpp"
#include "che/errors.hpp"

namespace che::pairing {

using boost::multiprecision::uint256_t;
using boost::multiprecision::cpp_int;

namespace {

void check_same(const PairingParams& a, const PairingParams& b) {
    if (!(a == b))
        throw Error(ErrorCode::params_mismatch, "operands from different pairing domains");
}

u128 digest_to_u128(const Digest& d, std::size_t offset) {
    u128 v = 0;
    for (std::size_t i = 0; i < 16; ++i)
        v = v << 8 | d[offset + i];
    return v;
}

} // namespace

PairingParams PairingParams::reference_default() {
    PairingParams p;
    p.q = (u128(1) << 127) - 1;
    p.backend = backend_reference;
    return p;
}

PairingParams PairingParams::reference_with_order(const u128& q) {
    if (q < 5)
        throw Error(ErrorCode::precondition, "group order must be at least 5");
    if (!boost::multiprecision::miller_rabin_test(cpp_int(q), 25))
        throw Error(ErrorCode::precondition, "group order must be prime");
    PairingParams p;
    p.q = q;
    p.backend = backend_reference;
    return p;
}

bool operator==(const Scalar& a, const Scalar& b) { return a.v == b.v; }
bool operator==(const G1& a, const G1& b) { return a.log == b.log && a.params == b.params; }
bool operator==(const G2& a, const G2& b) { return a.exp == b.exp && a.params == b.params; }

u128 mod_add(const u128& a, const u128& b, const u128& q) {
    uint256_t s = uint256_t(a) + b;
    return (s % q).convert_to<u128>();
}

u128 mod_sub(const u128& a, const u128& b, const u128& q) {
    uint256_t s = uint256_t(a) + q - b % q;
    return (s % q).convert_to<u128>();
}

u128 mod_mul(const u128& a, const u128& b, const u128& q) {
    uint256_t p = uint256_t(a) * b;
    return (p % q).convert_to<u128>();
}

Scalar scalar_random(const PairingParams& params, DetRng& rng) {
    // Rejection sampling over the full 128-bit range keeps the draw uniform
    // for any q.
    uint256_t span = uint256_t(1) << 128;
    uint256_t limit = span - span % uint256_t(params.q);
    for (;;) {
        Bytes raw = rng.bytes(16);
        u128 v = u128_from_be(raw);
        if (uint256_t(v) < limit)
            return Scalar{v % params.q};
    }
}

Scalar scalar_from_u64(const PairingParams& params, std::uint64_t v) {
    return Scalar{u128(v) % params.q};
}

Scalar scalar_add(const PairingParams& params, const Scalar& a, const Scalar& b) {
    return Scalar{mod_add(a.v, b.v, params.q)};
}

Scalar scalar_mul(const PairingParams& params, const Scalar& a, const Scalar& b) {
    return Scalar{mod_mul(a.v, b.v, params.q)};
}

G1 g1_zero(const PairingParams& params) { return G1{0, params}; }

G1 g1_generator(const PairingParams& params) { return G1{1, params}; }

G1 g1_add(const G1& a, const G1& b) {
    check_same(a.params, b.params);
    return G1{mod_add(a.log, b.log, a.params.q), a.params};
}

G1 g1_neg(const G1& a) {
    return G1{a.log == 0 ? u128(0) : a.params.q - a.log, a.params};
}

G1 g1_mul(const Scalar& k, const G1& p) {
    return G1{mod_mul(k.v, p.log, p.params.q), p.params};
}

bool g1_is_zero(const G1& a) { return a.log == 0; }

G2 g2_identity(const PairingParams& params) { return G2{0, params}; }

G2 g2_mul(const G2& a, const G2& b) {
    check_same(a.params, b.params);
    return G2{mod_add(a.exp, b.exp, a.params.q), a.params};
}

G2 g2_inv(const G2& a) {
    return G2{a.exp == 0 ? u128(0) : a.params.q - a.exp, a.params};
}

G2 g2_pow(const G2& a, const Scalar& k) {
    return G2{mod_mul(a.exp, k.v, a.params.q), a.params};
}

bool g2_is_identity(const G2& a) { return a.exp == 0; }

G2 pair(const G1& a, const G1& b) {
    check_same(a.params, b.params);
    return G2{mod_mul(a.log, b.log, a.params.q), a.params};
}

G1 hash_to_g1(const PairingParams& params, const Bytes& data) {
    for (std::uint8_t counter = 0;; ++counter) {
        Bytes material = data;
        append_u8(material, counter);
        Digest d = sha256(material);
        u128 hi = digest_to_u128(d, 0);
        u128 lo = digest_to_u128(d, 16);
        uint256_t wide = (uint256_t(hi) << 128) | lo;
        u128 v = (wide % params.q).convert_to<u128>();
        if (v != 0)
            return G1{v, params};
    }
}

Bytes hash_to_mask(const G2& value, std::size_t out_len) {
    if (out_len == 0)
        throw Error(ErrorCode::precondition, "mask length must be positive");
    Bytes seed;
    append_u8(seed, 0x02);
    append(seed, g2_to_bytes(value));
    Bytes out;
    out.reserve(out_len);
    for (std::uint32_t block = 0; out.size() < out_len; ++block) {
        Bytes material = seed;
        append_u32(material, block);
        Digest d = sha256(material);
        for (std::size_t i = 0; i < d.size() && out.size() < out_len; ++i)
            out.push_back(d[i]);
    }
    return out;
}

u128 u128_from_be(const Bytes& b16) {
    if (b16.size() != 16)
        throw Error(ErrorCode::decode, "expected 16 bytes");
    u128 v = 0;
    for (std::uint8_t byte : b16)
        v = v << 8 | byte;
    return v;
}

Bytes u128_to_be(const u128& v) {
    Bytes out(16);
    for (std::size_t i = 0; i < 16; ++i)
        out[15 - i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xff);
    return out;
}

namespace {

Bytes encode_value(std::uint8_t backend, const u128& v) {
    Bytes out;
    out.reserve(17);
    append_u8(out, backend);
    append(out, u128_to_be(v));
    return out;
}

u128 decode_value(const PairingParams& params, const Bytes& data, const char* what) {
    if (data.size() != 17)
        throw Error(ErrorCode::decode, std::string(what) + ": expected 17 bytes");
    if (data[0] != params.backend)
        throw Error(ErrorCode::decode, std::string(what) + ": backend tag mismatch");
    u128 v = u128_from_be(Bytes(data.begin() + 1, data.end()));
    if (v >= params.q)
        throw Error(ErrorCode::decode, std::string(what) + ": value out of range");
    return v;
}

} // namespace

Bytes scalar_to_bytes(const PairingParams& params, const Scalar& s) {
    return encode_value(params.backend, s.v);
}

Bytes g1_to_bytes(const G1& a) {
    return encode_value(a.params.backend, a.log);
}

Bytes g2_to_bytes(const G2& a) {
    return encode_value(a.params.backend, a.exp);
}

Scalar scalar_from_bytes(const PairingParams& params, const Bytes& data) {
    return Scalar{decode_value(params, data, "scalar")};
}

G1 g1_from_bytes(const PairingParams& params, const Bytes& data) {
    return G1{decode_value(params, data, "g1 element"), params};
}

G2 g2_from_bytes(const PairingParams& params, const Bytes& data) {
    return G2{decode_value(params, data, "g2 element"), params};
}

Bytes params_to_bytes(const PairingParams& params) {
    Bytes out;
    append_params(out, params);
    return out;
}

void append_params(Bytes& out, const PairingParams& params) {
    append_u8(out, params.backend);
    append(out, u128_to_be(params.q));
}

PairingParams read_params(ByteReader& r) {
    std::uint8_t backend = r.u8();
    if (backend != backend_reference)
        throw Error(ErrorCode::decode, "unknown pairing backend tag");
    u128 q = u128_from_be(r.raw(16));
    return PairingParams::reference_with_order(q);
}

PairingParams params_from_bytes(const Bytes& data) {
    ByteReader r(data);
    PairingParams p = read_params(r);
    r.expect_done();
    return p;
}

} // namespace che::pairing
