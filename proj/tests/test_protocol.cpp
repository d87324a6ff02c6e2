#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>

#include "che/errors.hpp"
#include "che/protocol.hpp"

using namespace che;
using namespace che::proto;

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
    DetRng rng{2024};
    ibc::ImprintingStation station = ibc::ImprintingStation::create(
        "st", pairing::PairingParams::reference_default(), rng);

    Node node(const std::string& id, std::uint32_t p = 1, std::size_t capacity = 8) {
        policy::PolicyConfig cfg;
        cfg.p_receiver = p;
        cfg.p_provider = p;
        return make_node(station.imprint(id), capacity, cfg, rng.u64());
    }
};

bool transcript_has(const Transcript& t, const std::string& needle) {
    return std::any_of(t.lines.begin(), t.lines.end(), [&](const std::string& line) {
        return line.find(needle) != std::string::npos;
    });
}

// Reseats one history with a corrupted copy of an element's message byte.
// Serialization does not re-verify, which is exactly how on-disk corruption
// or a dishonest presenter slips in.
void corrupt_message_byte(Node& n, const std::string& marker) {
    Bytes raw = n.history.to_bytes();
    auto it = std::search(raw.begin(), raw.end(), marker.begin(), marker.end());
    REQUIRE(it != raw.end());
    raw[static_cast<std::size_t>(it - raw.begin()) + marker.size()] ^= 0x01;
    n.history = hist::History::from_bytes(raw);
}

} // namespace

TEST_CASE("canonical messages parse back unambiguously") {
    Bytes t = canonical_trust_message("zoe", "adam", 42);
    CHECK(to_string(t) == "TRUST|adam|zoe|42");
    ParsedMessage pm = parse_message(t);
    CHECK(pm.kind == MessageKind::trust);
    CHECK(pm.a == "adam");
    CHECK(pm.b == "zoe");
    CHECK(pm.ts == 42);

    Bytes s = canonical_service_message("prov", "recv", "backup", -3);
    CHECK(to_string(s) == "SERVICE|prov|recv|backup|-3");
    ParsedMessage ps = parse_message(s);
    CHECK(ps.kind == MessageKind::service);
    CHECK(ps.a == "prov");
    CHECK(ps.b == "recv");
    CHECK(ps.tag == "backup");
    CHECK(ps.ts == -3);

    CHECK(throws_code(ErrorCode::precondition,
                      [] { canonical_trust_message("a", "a", 0); }));
    CHECK(throws_code(ErrorCode::precondition,
                      [] { canonical_trust_message("a|b", "c", 0); }));
    CHECK(throws_code(ErrorCode::precondition,
                      [] { canonical_service_message("a", "b", "x|y", 0); }));
    CHECK(throws_code(ErrorCode::decode, [] { parse_message(to_bytes("TRUST|b|a|1")); }));
    CHECK(throws_code(ErrorCode::decode, [] { parse_message(to_bytes("HELLO|a|b|1")); }));
    CHECK(throws_code(ErrorCode::decode,
                      [] { parse_message(to_bytes("SERVICE|a|b|tag|ten")); }));
}

TEST_CASE("the full exchange walks through its phases") {
    World w;
    Node alice = w.node("alice");
    Node bob = w.node("bob");
    Node carol = w.node("carol");
    force_pairing(alice, carol, 0, true, true);
    force_pairing(bob, carol, 0, true, true);
    CHECK(alice.history.size() == 1);
    CHECK(carol.history.size() == 2);

    Transcript t;
    auto [sa, sb] = open_session(alice, bob, &t);
    CHECK(sa.phase == Phase::channel_up);
    CHECK(sb.phase == Phase::channel_up);
    CHECK(sa.session_id == sb.session_id);

    exchange_claims(sa, alice, sb, bob, 1, &t);
    CHECK(sa.phase == Phase::histories_exchanged);
    CHECK(sa.common_ids == std::set<std::string>{"carol"});
    CHECK(sb.common_ids == std::set<std::string>{"carol"});
    CHECK(sa.peer_claims.count("carol") == 1);

    exchange_proofs(sa, alice, sb, bob, 1, &t);
    CHECK(sa.verified_count == 1);
    CHECK(sb.verified_count == 1);

    CHECK(conclude_session(sa, alice, policy::Role::receiver, 1, &t).allowed());
    CHECK(conclude_session(sb, bob, policy::Role::provider, 1, &t).allowed());
    CHECK(sa.phase == Phase::proven);

    auto gained = mutual_trust_exchange(sa, alice, sb, bob, 1, true, true, &t);
    REQUIRE(gained.has_value());
    CHECK(sa.phase == Phase::trusted);
    CHECK(sb.phase == Phase::trusted);
    CHECK(alice.history.size() == 2);
    CHECK(bob.history.size() == 2);
    CHECK(hist::verify_element(gained->first));
    CHECK(to_string(gained->first.message) == "TRUST|alice|bob|1");
    CHECK(transcript_has(t, "Trusted (mutual bond signed)"));

    // Both now hold reputation records of each other.
    CHECK(alice.reputation.find("bob")->direct.meetings == 1);
    CHECK(bob.reputation.find("alice")->direct.meetings == 1);
}

TEST_CASE("run_che is the same walk in one call") {
    World w;
    Node alice = w.node("alice");
    Node bob = w.node("bob");
    Node carol = w.node("carol");
    force_pairing(alice, carol, 0, true, true);
    force_pairing(bob, carol, 0, true, true);
    auto [sa, sb] = run_che(alice, bob, 1);
    CHECK(sa.phase == Phase::proven);
    CHECK(sb.phase == Phase::proven);
    CHECK(sa.verified_count == 1);
}

TEST_CASE("no overlap means no proof and a rejection") {
    World w;
    Node alice = w.node("alice");
    Node bob = w.node("bob");
    Node carol = w.node("carol");
    Node dave = w.node("dave");
    force_pairing(alice, carol, 0, true, true);
    force_pairing(bob, dave, 0, true, true);
    Transcript t;
    auto [sa, sb] = run_che(alice, bob, 1, &t);
    CHECK(sa.phase == Phase::rejected);
    CHECK(sa.reject == RejectReason::threshold_not_met);
    CHECK(sb.phase == Phase::rejected);
    CHECK(alice.history.size() == 1);
}

TEST_CASE("a tampered element rejects the session and earns a strike") {
    World w;
    Node alice = w.node("alice");
    Node bob = w.node("bob");
    Node carol = w.node("carol");
    force_pairing(alice, carol, 0, true, true);
    force_pairing(bob, carol, 0, true, true);

    corrupt_message_byte(alice, "TRUST|alice|carol|");

    Transcript t;
    auto [sa, sb] = run_che(alice, bob, 1, &t);
    CHECK(sa.phase == Phase::rejected);
    CHECK(sb.phase == Phase::rejected);
    CHECK(sb.reject == RejectReason::proof_invalid);
    CHECK(bob.history.strikes("alice") == 1);
    CHECK(alice.history.strikes("bob") == 0);
    CHECK(transcript_has(t, "invalid proof"));

    // Two more offenses blacklist alice on bob's side for good.
    bob.strike_peer("alice", 2);
    bob.strike_peer("alice", 3);
    CHECK(bob.history.is_blacklisted("alice"));
    CHECK(bob.reputation.find("alice")->direct.last_blacklist_ts == 3);
}

TEST_CASE("proofs do not transfer to a third party") {
    World w;
    Node alice = w.node("alice");
    Node bob = w.node("bob");
    Node carol = w.node("carol");
    Node eve = w.node("eve");
    force_pairing(alice, carol, 0, true, true);
    force_pairing(bob, carol, 0, true, true);

    // Eve grabs alice's provable bond with carol off the wire and stores it
    // as if it were her own. The signature is perfectly valid.
    hist::HistoryElement stolen = alice.history.elements().front();
    CHECK(hist::verify_element(stolen));
    eve.history.append(stolen);

    // Presented to bob it witnesses alice and carol, not eve and carol.
    Transcript t;
    auto [se, sb] = run_che(eve, bob, 1, &t);
    CHECK(se.phase == Phase::rejected);
    CHECK(sb.reject == RejectReason::proof_invalid);
    CHECK(bob.history.strikes("eve") == 1);

    // The same check in isolation.
    CommonProof proof{stolen.message, stolen.signature, stolen.peer};
    ProofCheck direct = verify_common_proof(w.station.params, proof, "eve", "carol", 1, 0);
    CHECK_FALSE(direct.ok);
    ProofCheck honest = verify_common_proof(w.station.params, proof, "alice", "carol", 1, 0);
    CHECK(honest.ok);
}

TEST_CASE("proof kinds follow the signed message semantics") {
    World w;
    Node alice = w.node("alice");
    Node bob = w.node("bob");
    Node carol = w.node("carol");
    force_pairing(bob, carol, 0, true, true);
    force_pairing(alice, carol, 0, true, true);
    force_pairing(alice, bob, 0, true, true);

    // carol receives a service from bob and both grant proofs.
    run_service_interaction(carol, bob, "lift", 5, ServiceDecisions{}, 0);

    // bob now holds a carol-signed element naming carol as receiver: proof
    // of the trustor kind. His bond is older, so the service wins.
    auto proofs = make_common_proofs(bob.history, "carol", 6, 0);
    REQUIRE(proofs.size() == 1);
    ProofCheck pc = verify_common_proof(w.station.params, proofs[0], "bob", "carol", 6, 0);
    CHECK(pc.ok);
    CHECK(pc.tp_kind);
    CHECK_FALSE(pc.rp_kind);

    // carol holds a bob-signed reciprocal element: when she proves her past
    // with bob it is of the provider-witness kind.
    auto cproofs = make_common_proofs(carol.history, "bob", 6, 0);
    REQUIRE(cproofs.size() == 1);
    ProofCheck cpc =
        verify_common_proof(w.station.params, cproofs[0], "carol", "bob", 6, 0);
    CHECK(cpc.ok);
    CHECK(cpc.rp_kind);

    // A plain bond proves neither kind but still verifies.
    auto aproofs = make_common_proofs(alice.history, "carol", 6, 0);
    REQUIRE(aproofs.size() == 1);
    ProofCheck apc =
        verify_common_proof(w.station.params, aproofs[0], "alice", "carol", 6, 0);
    CHECK(apc.ok);
    CHECK_FALSE(apc.tp_kind);
    CHECK_FALSE(apc.rp_kind);

    // Stale elements are not presented when a max age is in force.
    CHECK(make_common_proofs(bob.history, "carol", 1000, 10).empty());
}

TEST_CASE("verified proofs feed indirect reputation once") {
    World w;
    Node alice = w.node("alice");
    Node bob = w.node("bob");
    Node carol = w.node("carol");
    force_pairing(alice, carol, 0, true, true);
    force_pairing(bob, carol, 0, true, true);
    run_service_interaction(carol, bob, "lift", 1, ServiceDecisions{}, 0);

    auto [sa, sb] = run_che(alice, bob, 2);
    REQUIRE(sa.phase == Phase::proven);
    // bob presented carol's trustor-kind signature; alice banks it as
    // bob's testimony about carol.
    const rep::ReputationRecord* rec = alice.reputation.find("carol");
    REQUIRE(rec != nullptr);
    CHECK(rec->indirect.vouchers_tp == 1);
    CHECK(rec->seen_vouchers == std::set<std::string>{"bob"});

    // A second session with the same peer does not double-count.
    auto [sa2, sb2] = run_che(alice, bob, 3);
    REQUIRE(sa2.phase == Phase::proven);
    CHECK(alice.reputation.find("carol")->indirect.vouchers_tp == 1);
}

TEST_CASE("declining the bond rejects both sides cleanly") {
    World w;
    Node alice = w.node("alice");
    Node bob = w.node("bob");
    Node carol = w.node("carol");
    force_pairing(alice, carol, 0, true, true);
    force_pairing(bob, carol, 0, true, true);
    auto [sa, sb] = run_che(alice, bob, 1);
    REQUIRE(sa.phase == Phase::proven);
    auto gained = mutual_trust_exchange(sa, alice, sb, bob, 1, true, false);
    CHECK_FALSE(gained.has_value());
    CHECK(sa.phase == Phase::rejected);
    CHECK(sa.reject == RejectReason::declined);
    CHECK(sb.reject == RejectReason::declined);
    CHECK(alice.history.size() == 1);

    // Unproven sessions cannot jump straight to the bond.
    Node dave = w.node("dave");
    Node erin = w.node("erin");
    auto [sd, se] = open_session(dave, erin);
    CHECK(throws_code(ErrorCode::precondition,
                      [&] { mutual_trust_exchange(sd, dave, se, erin, 1); }));
}

TEST_CASE("forced pairing demands both confirmations") {
    World w;
    Node alice = w.node("alice");
    Node bob = w.node("bob");
    CHECK(throws_code(ErrorCode::precondition,
                      [&] { force_pairing(alice, bob, 0, true, false); }));
    CHECK(throws_code(ErrorCode::precondition,
                      [&] { force_pairing(alice, bob, 0, false, true); }));
    CHECK(alice.history.size() == 0);
    auto [ea, eb] = force_pairing(alice, bob, 7, true, true);
    CHECK(alice.history.size() == 1);
    CHECK(bob.history.size() == 1);
    CHECK(hist::verify_element(ea));
    CHECK(hist::verify_element(eb));
    CHECK(ea.peer.id == "bob");
    CHECK(eb.peer.id == "alice");
    CHECK(alice.reputation.find("bob")->direct.meetings == 1);
}

TEST_CASE("service outcomes grant exactly the agreed proofs") {
    struct Row {
        bool provide, trustor, reciprocal;
        bool provider_gains, receiver_gains;
    };
    const Row table[] = {
        {false, false, false, false, false}, {false, false, true, false, false},
        {false, true, false, false, false},  {false, true, true, false, false},
        {true, false, false, false, false},  {true, false, true, false, false},
        {true, true, false, true, false},    {true, true, true, true, true},
    };
    for (const Row& row : table) {
        World w;
        Node alice = w.node("alice");
        Node bob = w.node("bob");
        ServiceDecisions d{row.provide, row.trustor, row.reciprocal};
        InteractionRecord rec = run_service_interaction(alice, bob, "tag", 3, d, 2);
        CHECK(rec.provider_gained == row.provider_gains);
        CHECK(rec.receiver_gained == row.receiver_gains);
        CHECK(bob.history.size() == (row.provider_gains ? 1 : 0));
        CHECK(alice.history.size() == (row.receiver_gains ? 1 : 0));
        if (!row.provide) {
            CHECK(rec.summary.refused);
            CHECK(alice.history.strikes("bob") == 1);
            CHECK(alice.reputation.find("bob")->direct.services_refused == 1);
            CHECK(alice.reputation.find("bob")->direct.meetings == 0);
            CHECK(bob.reputation.find("alice") == nullptr);
        } else {
            CHECK(alice.history.strikes("bob") == 0);
            CHECK(alice.reputation.find("bob")->direct.meetings == 1);
            CHECK(bob.reputation.find("alice")->direct.meetings == 1);
        }
        if (row.provider_gains) {
            const hist::HistoryElement& e = bob.history.elements().back();
            CHECK(e.flags == hist::make_flags(true, true, false));
            CHECK(to_string(e.message) == "SERVICE|bob|alice|tag|3");
        }
        if (row.receiver_gains)
            CHECK(alice.history.elements().back().flags ==
                  hist::make_flags(true, true, true));
    }
}

TEST_CASE("histories full of strangers still converge through a chain") {
    // alice-carol, carol-dave, dave-bob: alice and bob share nobody, but
    // after alice meets dave through carol the overlap appears.
    World w;
    Node alice = w.node("alice");
    Node bob = w.node("bob");
    Node carol = w.node("carol");
    Node dave = w.node("dave");
    force_pairing(alice, carol, 0, true, true);
    force_pairing(carol, dave, 0, true, true);
    force_pairing(dave, bob, 0, true, true);

    auto [s1, s2] = run_che(alice, bob, 1);
    CHECK(s1.phase == Phase::rejected);

    auto [s3, s4] = run_che(alice, dave, 2);
    REQUIRE(s3.phase == Phase::proven);
    mutual_trust_exchange(s3, alice, s4, dave, 2);

    auto [s5, s6] = run_che(alice, bob, 3);
    CHECK(s5.phase == Phase::proven);
    CHECK(s5.common_ids == std::set<std::string>{"dave"});
}

TEST_CASE("sessions across pairing domains reject instead of throwing") {
    DetRng rng(77);
    auto st1 = ibc::ImprintingStation::create(
        "one", pairing::PairingParams::reference_default(), rng);
    auto st2 = ibc::ImprintingStation::create(
        "two", pairing::PairingParams::reference_with_order(1009), rng);
    policy::PolicyConfig cfg;
    Node a = make_node(st1.imprint("alice"), 4, cfg, 1);
    Node b = make_node(st2.imprint("bob"), 4, cfg, 2);
    Transcript t;
    auto [sa, sb] = open_session(a, b, &t);
    CHECK(sa.phase == Phase::rejected);
    CHECK(sa.reject == RejectReason::params_mismatch);
    CHECK(sb.phase == Phase::rejected);
    CHECK(transcript_has(t, "handshake failed"));
}

TEST_CASE("a blacklisted peer is refused at the decision stage") {
    World w;
    Node alice = w.node("alice");
    Node bob = w.node("bob");
    Node carol = w.node("carol");
    force_pairing(alice, carol, 0, true, true);
    force_pairing(bob, carol, 0, true, true);
    for (std::int64_t i = 0; i < 3; ++i)
        alice.strike_peer("bob", i);
    auto [sa, sb] = run_che(alice, bob, 5);
    CHECK(sa.phase == Phase::rejected);
    CHECK(sa.decision.reason == policy::Reason::peer_blacklisted);
    // bob, who struck nobody, still saw a valid exchange on his side.
    CHECK(sb.verified_count == 1);
}

TEST_CASE("element age limits shrink what gets claimed") {
    World w;
    Node alice = w.node("alice");
    Node bob = w.node("bob");
    Node carol = w.node("carol");
    alice.policy.element_max_age = 10;
    force_pairing(alice, carol, 0, true, true);
    force_pairing(bob, carol, 0, true, true);

    auto [sa, sb] = run_che(alice, bob, 100);
    CHECK(sa.phase == Phase::rejected);
    CHECK(sa.common_ids.empty());
    // bob has no age limit, so he claimed carol; alice did not.
    CHECK(sa.peer_claims == std::set<std::string>{"carol"});
    CHECK(sb.peer_claims.empty());
}
