#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "che/history.hpp"
#include "che/identity.hpp"
#include "che/policy.hpp"
#include "che/reputation.hpp"
#include "che/rng.hpp"

namespace che::proto {

// Canonical signed statements. Identity strings never contain '|', so the
// pipe-delimited form parses unambiguously. Trust bonds sort the two ids
// so both parties sign identical bytes.
Bytes canonical_trust_message(const std::string& id_a, const std::string& id_b,
                              std::int64_t ts);
Bytes canonical_service_message(const std::string& provider, const std::string& receiver,
                                const std::string& tag, std::int64_t ts);

enum class MessageKind { trust, service };

struct ParsedMessage {
    MessageKind kind;
    // trust: the two bonded ids (sorted). service: a = provider, b = receiver.
    std::string a;
    std::string b;
    std::string tag;
    std::int64_t ts = 0;
};

ParsedMessage parse_message(const Bytes& message);

// One participant in the protocol: credential, bounded history, local
// reputation, policy stance, and a private random stream.
struct Node {
    ibc::TrustGerm germ;
    hist::History history;
    rep::Table reputation;
    policy::PolicyConfig policy;
    DetRng rng{0};
    std::uint32_t rank = 0;

    const std::string& id() const { return germ.id(); }
    const pairing::PairingParams& params() const { return germ.params(); }
    bool same_domain(const ibc::PeerPublic& peer) const;

    // Records a strike and mirrors a crossing of the blacklist threshold
    // into the reputation record.
    void strike_peer(const std::string& peer_id, std::int64_t now);
};

Node make_node(ibc::TrustGerm germ, std::size_t history_capacity,
               const policy::PolicyConfig& cfg, std::uint64_t seed);

// A third party's signature presented as evidence of a shared acquaintance.
struct CommonProof {
    Bytes message;
    ibc::Signature signature;
    ibc::PeerPublic voucher;
};

struct ProofCheck {
    bool ok = false;
    bool tp_kind = false;  // voucher signed as trustor (voucher received the service)
    bool rp_kind = false;  // voucher signed reciprocally (voucher provided the service)
    std::string why;
};

// Up to two proofs about common_id: the newest service element of each
// kind, or the newest trust bond if no service elements exist. max_age
// filters stale elements (0 = keep all).
std::vector<CommonProof> make_common_proofs(const hist::History& h,
                                            const std::string& common_id,
                                            std::int64_t now, std::int64_t max_age);

// Full check of one presented proof: the message must witness an
// interaction between presenter and common_id, the voucher must be
// common_id itself, the timestamp must be plausible and fresh enough, and
// the signature must verify under the voucher's station.
ProofCheck verify_common_proof(const pairing::PairingParams& params,
                               const CommonProof& proof,
                               const std::string& presenter_id,
                               const std::string& common_id,
                               std::int64_t now, std::int64_t max_age);

enum class Phase { idle, channel_up, histories_exchanged, proven, trusted, rejected };

enum class RejectReason {
    none,
    params_mismatch,
    handshake_failed,
    threshold_not_met,
    proof_invalid,
    declined,
};

const char* phase_name(Phase p);
const char* reject_reason_name(RejectReason r);

struct Session {
    std::uint64_t session_id = 0;
    Phase phase = Phase::idle;
    std::string local_id;
    std::string peer_id;
    std::optional<ibc::SecureChannel> channel;
    std::optional<ibc::PeerPublic> peer_public;
    std::set<std::string> peer_claims;
    std::set<std::string> common_ids;
    // id -> (tp_kind seen, rp_kind seen) over the peer's valid proofs
    std::map<std::string, std::pair<bool, bool>> verified;
    std::uint32_t verified_count = 0;
    std::uint32_t peer_rank = 0;
    RejectReason reject = RejectReason::none;
    policy::Decision decision;
};

struct Transcript {
    std::vector<std::string> lines;
    void log(std::string line) { lines.push_back(std::move(line)); }
};

// Handshake: public part exchange, certification checks, fresh session key
// under the responder's IBE identity. On params mismatch or a failed
// certification both sessions come back rejected rather than throwing.
std::pair<Session, Session> open_session(Node& a, Node& b, Transcript* t = nullptr);

// Claimed-identity exchange over the secure channel, then common set
// computation on both sides. Claims honor each node's element_max_age.
void exchange_claims(Session& sa, Node& a, Session& sb, Node& b, std::int64_t now,
                     Transcript* t = nullptr);

// Both directions of proof presentation and verification. Any invalid
// proof rejects the session and earns the presenter a blacklist strike.
void exchange_proofs(Session& sa, Node& a, Session& sb, Node& b, std::int64_t now,
                     Transcript* t = nullptr);

// Applies the node's policy to the session evidence. Sets the phase to
// proven on allow, rejected otherwise, and banks the peer's testimony
// about common acquaintances (once per voucher) when proven.
policy::Decision conclude_session(Session& s, Node& n, policy::Role role,
                                  std::int64_t now, Transcript* t = nullptr);

// Both parties sign the trust bond and store each other's signature.
// Requires both sessions proven; either party declining rejects cleanly.
// Returns the elements gained by a and b.
std::optional<std::pair<hist::HistoryElement, hist::HistoryElement>>
mutual_trust_exchange(Session& sa, Node& a, Session& sb, Node& b, std::int64_t now,
                      bool a_accepts = true, bool b_accepts = true,
                      Transcript* t = nullptr);

// Out-of-band bootstrap bond: both parties must explicitly confirm.
// Produces elements indistinguishable in format from protocol ones.
std::pair<hist::HistoryElement, hist::HistoryElement>
force_pairing(Node& a, Node& b, std::int64_t now, bool a_confirms, bool b_confirms,
              Transcript* t = nullptr);

struct ServiceDecisions {
    bool provide = true;
    bool grant_trustor = true;
    bool grant_reciprocal = true;
};

struct InteractionRecord {
    rep::InteractionSummary summary;
    bool provider_gained = false;
    bool receiver_gained = false;
};

// One service: provider serves receiver, receiver may sign as trustor,
// provider may sign reciprocally (only after trustor). A refusal earns the
// provider a strike on the receiver's side. Both parties that experienced
// the interaction update their direct counters.
InteractionRecord run_service_interaction(Node& receiver, Node& provider,
                                          const std::string& tag, std::int64_t now,
                                          const ServiceDecisions& decisions,
                                          std::uint32_t common_size = 0,
                                          Transcript* t = nullptr);

// Convenience driver: full session from handshake through conclusion.
// a plays the receiver role, b the provider role when policies are
// consulted. Does not perform the trust exchange itself.
std::pair<Session, Session> run_che(Node& a, Node& b, std::int64_t now,
                                    Transcript* t = nullptr);

} // namespace che::proto
