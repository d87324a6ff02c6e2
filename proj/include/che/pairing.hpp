#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include "che/bytes.hpp"
#include "che/rng.hpp"

namespace che::pairing {

using u128 = boost::multiprecision::uint128_t;

inline constexpr std::uint8_t backend_reference = 0x01;

// Domain description for a bilinear pairing e: G1 x G1 -> G2 of prime
// order q. The reference backend is transparent: a G1 element is its
// discrete log with respect to the canonical generator P, a G2 element is
// the exponent of e(P, P), and e(aP, bP) = e(P, P)^(ab) by construction.
// Real curve backends can slot in behind the backend tag later; nothing
// above this module depends on the representation.
struct PairingParams {
    u128 q = 0;
    std::uint8_t backend = backend_reference;

    bool operator==(const PairingParams&) const = default;

    // q = 2^127 - 1, a Mersenne prime.
    static PairingParams reference_default();
    // Any prime q >= 5 (throws Error(precondition) otherwise). Small
    // primes are useful in tests to hit wraparound paths.
    static PairingParams reference_with_order(const u128& q);
};

struct Scalar {
    u128 v = 0;
};

struct G1 {
    u128 log = 0;
    PairingParams params;
};

struct G2 {
    u128 exp = 0;
    PairingParams params;
};

bool operator==(const Scalar& a, const Scalar& b);
bool operator==(const G1& a, const G1& b);
bool operator==(const G2& a, const G2& b);

u128 mod_add(const u128& a, const u128& b, const u128& q);
u128 mod_sub(const u128& a, const u128& b, const u128& q);
u128 mod_mul(const u128& a, const u128& b, const u128& q);

Scalar scalar_random(const PairingParams& params, DetRng& rng);
Scalar scalar_from_u64(const PairingParams& params, std::uint64_t v);
Scalar scalar_add(const PairingParams& params, const Scalar& a, const Scalar& b);
Scalar scalar_mul(const PairingParams& params, const Scalar& a, const Scalar& b);

G1 g1_zero(const PairingParams& params);
G1 g1_generator(const PairingParams& params);
G1 g1_add(const G1& a, const G1& b);
G1 g1_neg(const G1& a);
G1 g1_mul(const Scalar& k, const G1& p);
bool g1_is_zero(const G1& a);

G2 g2_identity(const PairingParams& params);
G2 g2_mul(const G2& a, const G2& b);
G2 g2_inv(const G2& a);
G2 g2_pow(const G2& a, const Scalar& k);
bool g2_is_identity(const G2& a);

// Throws Error(params_mismatch) if the arguments live in different domains.
G2 pair(const G1& a, const G1& b);

// Maps arbitrary bytes to a nonzero G1 element (digest to scalar, then
// scalar * P). Callers prepend their own domain-separation byte.
G1 hash_to_g1(const PairingParams& params, const Bytes& data);

// Expands a G2 element into an out_len-byte mask. Throws
// Error(precondition) if out_len is zero.
Bytes hash_to_mask(const G2& value, std::size_t out_len);

// Canonical encodings: 1-byte backend tag followed by the 16-byte
// big-endian integer. Decoding validates the tag and the range.
Bytes scalar_to_bytes(const PairingParams& params, const Scalar& s);
Bytes g1_to_bytes(const G1& a);
Bytes g2_to_bytes(const G2& a);
Scalar scalar_from_bytes(const PairingParams& params, const Bytes& data);
G1 g1_from_bytes(const PairingParams& params, const Bytes& data);
G2 g2_from_bytes(const PairingParams& params, const Bytes& data);

Bytes params_to_bytes(const PairingParams& params);
PairingParams params_from_bytes(const Bytes& data);
void append_params(Bytes& out, const PairingParams& params);
PairingParams read_params(ByteReader& r);

u128 u128_from_be(const Bytes& b16);
Bytes u128_to_be(const u128& v);

} // namespace che::pairing
