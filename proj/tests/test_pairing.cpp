#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "che/errors.hpp"
#include "che/pairing.hpp"
#include "che/rng.hpp"

using namespace che;
using namespace che::pairing;

namespace {

bool throws_code(ErrorCode code, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

} // namespace

TEST_CASE("modular arithmetic agrees with wide integers") {
    u128 q = (u128(1) << 127) - 1;
    boost::multiprecision::uint256_t wq(q);
    DetRng rng(42);
    for (int i = 0; i < 200; ++i) {
        u128 a = (u128(rng.u64()) << 64) | rng.u64();
        u128 b = (u128(rng.u64()) << 64) | rng.u64();
        a %= q;
        b %= q;
        boost::multiprecision::uint256_t wa(a), wb(b);
        CHECK(mod_add(a, b, q) == u128((wa + wb) % wq));
        CHECK(mod_sub(a, b, q) == u128((wa + wq - wb) % wq));
        CHECK(mod_mul(a, b, q) == u128((wa * wb) % wq));
    }
}

TEST_CASE("parameter construction") {
    PairingParams def = PairingParams::reference_default();
    CHECK(def.q == (u128(1) << 127) - 1);
    CHECK(def.backend == backend_reference);

    CHECK(PairingParams::reference_with_order(7).q == 7);
    CHECK(PairingParams::reference_with_order(101).q == 101);
    CHECK(throws_code(ErrorCode::precondition,
                      [] { PairingParams::reference_with_order(6); }));
    CHECK(throws_code(ErrorCode::precondition,
                      [] { PairingParams::reference_with_order(3); }));
    CHECK(throws_code(ErrorCode::precondition,
                      [] { PairingParams::reference_with_order(0); }));

    Bytes enc = params_to_bytes(def);
    CHECK(params_from_bytes(enc) == def);
}

TEST_CASE("group law on G1") {
    PairingParams params = PairingParams::reference_default();
    DetRng rng(1);
    G1 p = g1_generator(params);
    CHECK(g1_is_zero(g1_zero(params)));
    CHECK(g1_add(p, g1_zero(params)) == p);
    CHECK(g1_is_zero(g1_add(p, g1_neg(p))));

    Scalar a = scalar_random(params, rng);
    Scalar b = scalar_random(params, rng);
    G1 ap = g1_mul(a, p);
    G1 bp = g1_mul(b, p);
    CHECK(g1_add(ap, bp) == g1_mul(scalar_add(params, a, b), p));
    CHECK(g1_mul(a, bp) == g1_mul(b, ap));
}

TEST_CASE("pairing is bilinear and non-degenerate") {
    for (const PairingParams& params :
         {PairingParams::reference_default(), PairingParams::reference_with_order(7),
          PairingParams::reference_with_order(1009)}) {
        DetRng rng(7);
        G1 p = g1_generator(params);
        CHECK_FALSE(g2_is_identity(pair(p, p)));
        for (int i = 0; i < 40; ++i) {
            Scalar a = scalar_random(params, rng);
            Scalar b = scalar_random(params, rng);
            Scalar c = scalar_random(params, rng);
            G1 ap = g1_mul(a, p);
            G1 bp = g1_mul(b, p);
            G2 base = pair(p, p);
            CHECK(pair(ap, bp) == g2_pow(base, scalar_mul(params, a, b)));
            CHECK(pair(ap, bp) == pair(bp, ap));
            CHECK(pair(g1_add(ap, g1_mul(c, p)), bp) ==
                  g2_mul(pair(ap, bp), pair(g1_mul(c, p), bp)));
            CHECK(g2_mul(pair(ap, bp), g2_inv(pair(ap, bp))) == g2_identity(params));
        }
    }
}

TEST_CASE("pairing rejects mixed domains") {
    PairingParams pa = PairingParams::reference_default();
    PairingParams pb = PairingParams::reference_with_order(101);
    CHECK(throws_code(ErrorCode::params_mismatch,
                      [&] { pair(g1_generator(pa), g1_generator(pb)); }));
    CHECK(throws_code(ErrorCode::params_mismatch,
                      [&] { g1_add(g1_generator(pa), g1_generator(pb)); }));
}

TEST_CASE("hash_to_g1 is deterministic and never zero") {
    for (const PairingParams& params :
         {PairingParams::reference_default(), PairingParams::reference_with_order(5)}) {
        G1 h1 = hash_to_g1(params, to_bytes("alpha"));
        G1 h2 = hash_to_g1(params, to_bytes("alpha"));
        CHECK(h1 == h2);
        CHECK_FALSE(g1_is_zero(h1));
        // With q = 5 collisions abound, but zero must still never appear.
        for (int i = 0; i < 64; ++i)
            CHECK_FALSE(g1_is_zero(hash_to_g1(params, {static_cast<std::uint8_t>(i)})));
    }
    PairingParams params = PairingParams::reference_default();
    CHECK_FALSE(hash_to_g1(params, to_bytes("alpha")) ==
                hash_to_g1(params, to_bytes("beta")));
}

TEST_CASE("hash_to_mask expands and separates") {
    PairingParams params = PairingParams::reference_default();
    G2 x = g2_pow(pair(g1_generator(params), g1_generator(params)),
                  scalar_from_u64(params, 12345));
    Bytes m1 = hash_to_mask(x, 100);
    CHECK(m1.size() == 100);
    CHECK(hash_to_mask(x, 100) == m1);
    Bytes m2 = hash_to_mask(x, 32);
    CHECK(Bytes(m1.begin(), m1.begin() + 32) == m2);
    G2 y = g2_mul(x, x);
    CHECK_FALSE(hash_to_mask(y, 100) == m1);
    CHECK(throws_code(ErrorCode::precondition, [&] { hash_to_mask(x, 0); }));
}

TEST_CASE("element encodings round-trip and validate") {
    PairingParams params = PairingParams::reference_default();
    DetRng rng(9);
    for (int i = 0; i < 20; ++i) {
        Scalar s = scalar_random(params, rng);
        G1 p = g1_mul(s, g1_generator(params));
        G2 g = g2_pow(pair(g1_generator(params), g1_generator(params)), s);
        CHECK(scalar_from_bytes(params, scalar_to_bytes(params, s)) == s);
        CHECK(g1_from_bytes(params, g1_to_bytes(p)) == p);
        CHECK(g2_from_bytes(params, g2_to_bytes(g)) == g);
        CHECK(g1_to_bytes(p).size() == 17);
    }

    Bytes good = g1_to_bytes(g1_generator(params));
    Bytes bad_tag = good;
    bad_tag[0] = 0x77;
    CHECK(throws_code(ErrorCode::decode, [&] { g1_from_bytes(params, bad_tag); }));
    Bytes short_enc(good.begin(), good.end() - 1);
    CHECK(throws_code(ErrorCode::decode, [&] { g1_from_bytes(params, short_enc); }));
    Bytes oversized = good;
    for (std::size_t i = 1; i < oversized.size(); ++i)
        oversized[i] = 0xff;
    CHECK(throws_code(ErrorCode::decode, [&] { g1_from_bytes(params, oversized); }));

    // Out-of-range for a small order must be rejected too.
    PairingParams small = PairingParams::reference_with_order(7);
    Bytes enc = g1_to_bytes(g1_generator(small));
    enc[16] = 7;
    CHECK(throws_code(ErrorCode::decode, [&] { g1_from_bytes(small, enc); }));
}

TEST_CASE("scalar_random stays in range") {
    PairingParams small = PairingParams::reference_with_order(11);
    DetRng rng(3);
    for (int i = 0; i < 500; ++i)
        CHECK(scalar_random(small, rng).v < 11);
}

TEST_CASE("u128 big-endian codec") {
    DetRng rng(5);
    for (int i = 0; i < 50; ++i) {
        u128 v = (u128(rng.u64()) << 64) | rng.u64();
        Bytes b = u128_to_be(v);
        CHECK(b.size() == 16);
        CHECK(u128_from_be(b) == v);
    }
    CHECK(u128_from_be(u128_to_be(0)) == 0);
}

TEST_CASE("derived random streams are stable and independent") {
    DetRng a(77);
    DetRng b(77);
    CHECK(a.derive("x").u64() == b.derive("x").u64());
    CHECK_FALSE(DetRng(77).derive("x").u64() == DetRng(77).derive("y").u64());
    // Deriving does not disturb the parent sequence.
    DetRng c(77);
    std::uint64_t first = c.u64();
    DetRng d(77);
    (void)d.derive("anything");
    CHECK(d.u64() == first);
    for (int i = 0; i < 1000; ++i) {
        std::uint64_t v = DetRng(static_cast<std::uint64_t>(i)).below(13);
        CHECK(v < 13);
    }
}
