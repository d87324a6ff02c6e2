#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "che/errors.hpp"
#include "che/history.hpp"
#include "che/protocol.hpp"

using namespace che;
using namespace che::hist;

namespace {

bool throws_code(ErrorCode code, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

struct World {
    DetRng rng{101};
    ibc::ImprintingStation station =
        ibc::ImprintingStation::create("st", pairing::PairingParams::reference_default(), rng);

    ibc::TrustGerm imprint(const std::string& id) { return station.imprint(id); }

    HistoryElement bond(const ibc::TrustGerm& owner, const ibc::TrustGerm& signer,
                        std::int64_t ts) {
        Bytes msg = proto::canonical_trust_message(owner.id(), signer.id(), ts);
        return HistoryElement{msg, signer.pub, ibc::ibs_sign(signer, msg, rng), {}, ts};
    }
};

} // namespace

TEST_CASE("semantic flags validate and round-trip") {
    CHECK(make_flags(true, true, true) == SemanticFlags{true, true, true});
    CHECK(throws_code(ErrorCode::precondition, [] { make_flags(true, false, true); }));
    CHECK(throws_code(ErrorCode::precondition, [] { make_flags(false, false, true); }));

    for (std::uint8_t b : {0, 1, 2, 3, 6, 7})
        CHECK(flags_to_byte(flags_from_byte(b)) == b);
    for (std::uint8_t b : {4, 5, 8, 16, 255})
        CHECK(throws_code(ErrorCode::decode, [&] { flags_from_byte(b); }));
}

TEST_CASE("append verifies, bounds, and evicts oldest first") {
    World w;
    ibc::TrustGerm alice = w.imprint("alice");
    History h("alice", 3, w.station.params);

    std::vector<std::string> peers = {"bob", "carol", "dave", "erin"};
    for (std::size_t i = 0; i < peers.size(); ++i) {
        ibc::TrustGerm peer = w.imprint(peers[i]);
        h.append(w.bond(alice, peer, static_cast<std::int64_t>(i)));
    }
    CHECK(h.size() == 3);
    CHECK(h.identities() == std::set<std::string>{"carol", "dave", "erin"});
    CHECK(h.elements().front().peer.id == "carol");
    CHECK(h.elements().back().peer.id == "erin");
}

TEST_CASE("append rejects bad elements") {
    World w;
    ibc::TrustGerm alice = w.imprint("alice");
    ibc::TrustGerm bob = w.imprint("bob");
    History h("alice", 4, w.station.params);

    HistoryElement self = w.bond(alice, bob, 1);
    self.peer = alice.pub;
    CHECK(throws_code(ErrorCode::precondition, [&] { h.append(self); }));

    HistoryElement good = w.bond(alice, bob, 2);
    CHECK(verify_element(good));
    HistoryElement tampered = good;
    tampered.message.back() ^= 1;
    CHECK_FALSE(verify_element(tampered));
    CHECK(throws_code(ErrorCode::bad_signature, [&] { h.append(tampered); }));

    HistoryElement forged_pub = good;
    forged_pub.peer.id = "mallory";
    CHECK(throws_code(ErrorCode::bad_signature, [&] { h.append(forged_pub); }));

    DetRng rng2(55);
    ibc::ImprintingStation foreign = ibc::ImprintingStation::create(
        "foreign", pairing::PairingParams::reference_with_order(1009), rng2);
    ibc::TrustGerm zed = foreign.imprint("zed");
    Bytes msg = proto::canonical_trust_message("alice", "zed", 3);
    HistoryElement cross{msg, zed.pub, ibc::ibs_sign(zed, msg, rng2), {}, 3};
    CHECK(throws_code(ErrorCode::params_mismatch, [&] { h.append(cross); }));

    h.append(good);
    CHECK(h.size() == 1);
}

TEST_CASE("common excludes the two parties") {
    World w;
    ibc::TrustGerm alice = w.imprint("alice");
    History h("alice", 8, w.station.params);
    for (const std::string& id : {"bob", "carol", "dave"})
        h.append(w.bond(alice, w.imprint(id), 0));

    std::set<std::string> claimed = {"carol", "dave", "erin", "alice"};
    // dave is the counterparty of this session, alice is the owner.
    CHECK(h.common(claimed, "dave") == std::set<std::string>{"carol"});
    CHECK(h.common({}, "bob").empty());
}

TEST_CASE("strikes accumulate, block appends, and survive eviction") {
    World w;
    ibc::TrustGerm alice = w.imprint("alice");
    ibc::TrustGerm bob = w.imprint("bob");
    History h("alice", 2, w.station.params);

    h.append(w.bond(alice, bob, 1));
    h.strike("bob", 10);
    h.strike("bob", 11);
    CHECK(h.strikes("bob") == 2);
    CHECK_FALSE(h.is_blacklisted("bob"));
    h.strike("bob", 12);
    CHECK(h.is_blacklisted("bob"));
    CHECK(h.blacklist().at("bob").last_ts == 12);

    CHECK(throws_code(ErrorCode::blacklisted, [&] { h.append(w.bond(alice, bob, 13)); }));
    // A lower custom threshold applies per call.
    CHECK(h.is_blacklisted("bob", 2));
    CHECK_FALSE(h.is_blacklisted("bob", 4));
    CHECK(throws_code(ErrorCode::precondition, [&] { h.is_blacklisted("bob", 0); }));

    // Evict bob's element with two fresh peers; the strikes must remain.
    h.append(w.bond(alice, w.imprint("carol"), 14));
    h.append(w.bond(alice, w.imprint("dave"), 15));
    CHECK(h.identities() == std::set<std::string>{"carol", "dave"});
    CHECK(h.strikes("bob") == 3);
    CHECK(h.is_blacklisted("bob"));
}

TEST_CASE("history serialization round-trips exactly") {
    World w;
    ibc::TrustGerm alice = w.imprint("alice");
    History h("alice", 5, w.station.params);
    h.append(w.bond(alice, w.imprint("bob"), 1));
    h.append(w.bond(alice, w.imprint("carol"), 2));
    h.strike("mallory", 30);
    h.strike("mallory", 31);

    Bytes enc = h.to_bytes();
    History h2 = History::from_bytes(enc);
    CHECK(h2 == h);
    CHECK(h2.to_bytes() == enc);
    CHECK(h2.owner() == "alice");
    CHECK(h2.capacity() == 5);
    CHECK(h2.strikes("mallory") == 2);
    CHECK(element_equal(h2.elements().front(), h.elements().front()));

    Bytes truncated(enc.begin(), enc.end() - 3);
    CHECK(throws_code(ErrorCode::decode, [&] { History::from_bytes(truncated); }));
    Bytes trailing = enc;
    trailing.push_back(0);
    CHECK(throws_code(ErrorCode::decode, [&] { History::from_bytes(trailing); }));
    Bytes bad_version = enc;
    bad_version[0] = 0x7f;
    CHECK(throws_code(ErrorCode::decode, [&] { History::from_bytes(bad_version); }));
}

TEST_CASE("deserialized elements still verify individually") {
    World w;
    ibc::TrustGerm alice = w.imprint("alice");
    History h("alice", 4, w.station.params);
    h.append(w.bond(alice, w.imprint("bob"), 7));
    History h2 = History::from_bytes(h.to_bytes());
    for (const HistoryElement& e : h2.elements())
        CHECK(verify_element(e));
}
