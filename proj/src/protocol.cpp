#include "che/protocol.hpp"

#include <algorithm>

#include "che/errors.hpp"

namespace che::proto {

namespace {

constexpr std::int64_t clock_skew_allowance = 86400;

void validate_party(const std::string& id) {
    if (id.empty() || id.find('|') != std::string::npos)
        throw Error(ErrorCode::precondition, "invalid identity in message: " + id);
}

std::int64_t parse_ts(const std::string& s) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::decode, "bad timestamp in message: " + s);
    }
}

std::vector<std::string> split_pipes(const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        std::size_t bar = s.find('|', start);
        if (bar == std::string::npos) {
            parts.push_back(s.substr(start));
            return parts;
        }
        parts.push_back(s.substr(start, bar - start));
        start = bar + 1;
    }
}

} // namespace

Bytes canonical_trust_message(const std::string& id_a, const std::string& id_b,
                              std::int64_t ts) {
    validate_party(id_a);
    validate_party(id_b);
    if (id_a == id_b)
        throw Error(ErrorCode::precondition, "a trust bond needs two distinct parties");
    const std::string& lo = std::min(id_a, id_b);
    const std::string& hi = std::max(id_a, id_b);
    return to_bytes("TRUST|" + lo + "|" + hi + "|" + std::to_string(ts));
}

Bytes canonical_service_message(const std::string& provider, const std::string& receiver,
                                const std::string& tag, std::int64_t ts) {
    validate_party(provider);
    validate_party(receiver);
    if (provider == receiver)
        throw Error(ErrorCode::precondition, "a service needs two distinct parties");
    if (tag.empty() || tag.find('|') != std::string::npos)
        throw Error(ErrorCode::precondition, "service tag must be nonempty and '|'-free");
    return to_bytes("SERVICE|" + provider + "|" + receiver + "|" + tag + "|" +
                    std::to_string(ts));
}

ParsedMessage parse_message(const Bytes& message) {
    std::vector<std::string> parts = split_pipes(to_string(message));
    if (parts.empty())
        throw Error(ErrorCode::decode, "empty message");
    ParsedMessage m;
    if (parts[0] == "TRUST") {
        if (parts.size() != 4)
            throw Error(ErrorCode::decode, "trust message needs 4 fields");
        m.kind = MessageKind::trust;
        m.a = parts[1];
        m.b = parts[2];
        m.ts = parse_ts(parts[3]);
        if (m.a.empty() || m.b.empty() || m.a >= m.b)
            throw Error(ErrorCode::decode, "trust message parties not in canonical order");
        return m;
    }
    if (parts[0] == "SERVICE") {
        if (parts.size() != 5)
            throw Error(ErrorCode::decode, "service message needs 5 fields");
        m.kind = MessageKind::service;
        m.a = parts[1];
        m.b = parts[2];
        m.tag = parts[3];
        m.ts = parse_ts(parts[4]);
        if (m.a.empty() || m.b.empty() || m.a == m.b || m.tag.empty())
            throw Error(ErrorCode::decode, "malformed service message");
        return m;
    }
    throw Error(ErrorCode::decode, "unknown message kind: " + parts[0]);
}

bool Node::same_domain(const ibc::PeerPublic& peer) const {
    return peer.station_id == germ.pub.station_id && peer.p_pub == germ.pub.p_pub;
}

void Node::strike_peer(const std::string& peer_id, std::int64_t now) {
    history.strike(peer_id, now);
    if (history.is_blacklisted(peer_id, policy.blacklist_threshold))
        reputation.note_blacklisted(peer_id, now);
}

Node make_node(ibc::TrustGerm germ, std::size_t history_capacity,
               const policy::PolicyConfig& cfg, std::uint64_t seed) {
    Node n;
    n.history = hist::History(germ.id(), history_capacity, germ.params());
    n.germ = std::move(germ);
    n.reputation = rep::Table{};
    n.policy = cfg;
    n.rng = DetRng(seed);
    return n;
}

const char* phase_name(Phase p) {
    switch (p) {
    case Phase::idle: return "Idle";
    case Phase::channel_up: return "ChannelUp";
    case Phase::histories_exchanged: return "HistoriesExchanged";
    case Phase::proven: return "Proven";
    case Phase::trusted: return "Trusted";
    case Phase::rejected: return "Rejected";
    }
    return "Idle";
}

const char* reject_reason_name(RejectReason r) {
    switch (r) {
    case RejectReason::none: return "None";
    case RejectReason::params_mismatch: return "ParamsMismatch";
    case RejectReason::handshake_failed: return "HandshakeFailed";
    case RejectReason::threshold_not_met: return "ThresholdNotMet";
    case RejectReason::proof_invalid: return "ProofInvalid";
    case RejectReason::declined: return "Declined";
    }
    return "None";
}

namespace {

// Newest-first classification of elements about common_id. Service
// messages witness a proof kind; trust bonds witness the meeting only.
struct ProofPick {
    const hist::HistoryElement* tp = nullptr;
    const hist::HistoryElement* rp = nullptr;
    const hist::HistoryElement* bond = nullptr;
};

ProofPick pick_proof_elements(const hist::History& h, const std::string& common_id,
                              std::int64_t now, std::int64_t max_age) {
    ProofPick pick;
    const auto& elems = h.elements();
    for (auto it = elems.rbegin(); it != elems.rend(); ++it) {
        const hist::HistoryElement& e = *it;
        if (e.peer.id != common_id)
            continue;
        if (max_age > 0 && now - e.timestamp > max_age)
            continue;
        ParsedMessage m;
        try {
            m = parse_message(e.message);
        } catch (const Error&) {
            continue;
        }
        if (m.kind == MessageKind::trust) {
            if (!pick.bond)
                pick.bond = &e;
        } else if (m.a == common_id) {
            if (!pick.rp)
                pick.rp = &e;
        } else if (m.b == common_id) {
            if (!pick.tp)
                pick.tp = &e;
        }
    }
    return pick;
}

} // namespace

std::vector<CommonProof> make_common_proofs(const hist::History& h,
                                            const std::string& common_id,
                                            std::int64_t now, std::int64_t max_age) {
    ProofPick pick = pick_proof_elements(h, common_id, now, max_age);
    std::vector<CommonProof> out;
    if (pick.tp)
        out.push_back(CommonProof{pick.tp->message, pick.tp->signature, pick.tp->peer});
    if (pick.rp)
        out.push_back(CommonProof{pick.rp->message, pick.rp->signature, pick.rp->peer});
    if (out.empty() && pick.bond)
        out.push_back(CommonProof{pick.bond->message, pick.bond->signature, pick.bond->peer});
    return out;
}

ProofCheck verify_common_proof(const pairing::PairingParams& params,
                               const CommonProof& proof,
                               const std::string& presenter_id,
                               const std::string& common_id,
                               std::int64_t now, std::int64_t max_age) {
    ProofCheck check;
    if (proof.voucher.id != common_id) {
        check.why = "voucher is not the claimed common node";
        return check;
    }
    if (!(proof.voucher.params == params)) {
        check.why = "voucher from a different pairing domain";
        return check;
    }
    ParsedMessage m;
    try {
        m = parse_message(proof.message);
    } catch (const Error& e) {
        check.why = e.what();
        return check;
    }
    bool parties_match = (m.a == presenter_id && m.b == common_id) ||
                         (m.a == common_id && m.b == presenter_id);
    if (!parties_match) {
        check.why = "message does not witness presenter and common node";
        return check;
    }
    if (m.ts > now + clock_skew_allowance) {
        check.why = "message timestamp lies in the future";
        return check;
    }
    if (max_age > 0 && now - m.ts > max_age) {
        check.why = "message is older than the accepted age";
        return check;
    }
    if (!ibc::verify_peer_public(proof.voucher)) {
        check.why = "voucher public part failed certification";
        return check;
    }
    if (!ibc::ibs_verify_from(proof.voucher, proof.message, proof.signature)) {
        check.why = "voucher signature does not verify";
        return check;
    }
    check.ok = true;
    if (m.kind == MessageKind::service) {
        check.rp_kind = m.a == common_id;
        check.tp_kind = m.b == common_id;
    }
    return check;
}

namespace {

std::set<std::string> claims_of(const Node& n, std::int64_t now) {
    std::set<std::string> out;
    for (const hist::HistoryElement& e : n.history.elements()) {
        if (n.policy.element_max_age > 0 && now - e.timestamp > n.policy.element_max_age)
            continue;
        out.insert(e.peer.id);
    }
    return out;
}

Bytes encode_claims(const std::set<std::string>& claims) {
    Bytes out;
    append_u32(out, static_cast<std::uint32_t>(claims.size()));
    for (const std::string& id : claims)
        append_str16(out, id);
    return out;
}

std::set<std::string> decode_claims(const Bytes& payload) {
    ByteReader r(payload);
    std::uint32_t count = r.u32();
    if (count > 1000000)
        throw Error(ErrorCode::decode, "implausible claim count");
    std::set<std::string> out;
    for (std::uint32_t i = 0; i < count; ++i)
        out.insert(r.str16());
    r.expect_done();
    return out;
}

using ProofBundle = std::vector<std::pair<std::string, std::vector<CommonProof>>>;

Bytes encode_proofs(const pairing::PairingParams& params, const ProofBundle& bundle) {
    Bytes out;
    append_u32(out, static_cast<std::uint32_t>(bundle.size()));
    for (const auto& [id, proofs] : bundle) {
        append_str16(out, id);
        append_u8(out, static_cast<std::uint8_t>(proofs.size()));
        for (const CommonProof& p : proofs) {
            append_blob32(out, p.message);
            p.signature.write(params, out);
            p.voucher.write(out);
        }
    }
    return out;
}

ProofBundle decode_proofs(const pairing::PairingParams& params, const Bytes& payload) {
    ByteReader r(payload);
    std::uint32_t count = r.u32();
    if (count > 1000000)
        throw Error(ErrorCode::decode, "implausible proof bundle size");
    ProofBundle bundle;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string id = r.str16();
        std::uint8_t n = r.u8();
        std::vector<CommonProof> proofs;
        for (std::uint8_t j = 0; j < n; ++j) {
            CommonProof p;
            p.message = r.blob32();
            p.signature = ibc::Signature::read(params, r);
            p.voucher = ibc::PeerPublic::read(r);
            proofs.push_back(std::move(p));
        }
        bundle.emplace_back(std::move(id), std::move(proofs));
    }
    r.expect_done();
    return bundle;
}

std::string join_ids(const std::set<std::string>& ids) {
    std::string out;
    for (const std::string& id : ids) {
        if (!out.empty())
            out += ", ";
        out += id;
    }
    return out;
}

void reject_both(Session& sa, Session& sb, RejectReason why) {
    sa.phase = Phase::rejected;
    sb.phase = Phase::rejected;
    sa.reject = why;
    sb.reject = why;
}

} // namespace

std::pair<Session, Session> open_session(Node& a, Node& b, Transcript* t) {
    Session sa, sb;
    sa.local_id = a.id();
    sa.peer_id = b.id();
    sb.local_id = b.id();
    sb.peer_id = a.id();
    std::uint64_t sid = a.rng.u64();
    sa.session_id = sid;
    sb.session_id = sid;
    if (t)
        t->log(a.id() + " -> " + b.id() + ": open secure channel");
    if (!(a.params() == b.params())) {
        reject_both(sa, sb, RejectReason::params_mismatch);
        if (t)
            t->log("handshake failed: pairing domains differ");
        return {sa, sb};
    }
    try {
        auto [ca, cb] = ibc::establish_channel(a.germ, b.germ, a.rng);
        sa.channel = std::move(ca);
        sb.channel = std::move(cb);
    } catch (const Error& e) {
        reject_both(sa, sb,
                    e.code() == ErrorCode::params_mismatch ? RejectReason::params_mismatch
                                                           : RejectReason::handshake_failed);
        if (t)
            t->log(std::string("handshake failed: ") + e.what());
        return {sa, sb};
    }
    sa.peer_public = b.germ.pub;
    sb.peer_public = a.germ.pub;
    sa.phase = Phase::channel_up;
    sb.phase = Phase::channel_up;
    if (t)
        t->log("channel established between " + a.id() + " and " + b.id());
    return {sa, sb};
}

void exchange_claims(Session& sa, Node& a, Session& sb, Node& b, std::int64_t now,
                     Transcript* t) {
    if (sa.phase != Phase::channel_up || sb.phase != Phase::channel_up)
        throw Error(ErrorCode::precondition, "claims exchange requires both channels up");
    std::set<std::string> claims_a = claims_of(a, now);
    std::set<std::string> claims_b = claims_of(b, now);

    Bytes frame_ab = ibc::channel_send(*sa.channel, encode_claims(claims_a));
    sb.peer_claims = decode_claims(ibc::channel_receive(*sb.channel, frame_ab));
    if (t)
        t->log(a.id() + " -> " + b.id() + ": claims [" + join_ids(claims_a) + "]");

    Bytes frame_ba = ibc::channel_send(*sb.channel, encode_claims(claims_b));
    sa.peer_claims = decode_claims(ibc::channel_receive(*sa.channel, frame_ba));
    if (t)
        t->log(b.id() + " -> " + a.id() + ": claims [" + join_ids(claims_b) + "]");

    auto intersect = [](const std::set<std::string>& mine, const std::set<std::string>& theirs,
                        const std::string& self, const std::string& peer) {
        std::set<std::string> out;
        for (const std::string& id : mine)
            if (id != self && id != peer && theirs.count(id))
                out.insert(id);
        return out;
    };
    sa.common_ids = intersect(claims_a, sa.peer_claims, a.id(), b.id());
    sb.common_ids = intersect(claims_b, sb.peer_claims, b.id(), a.id());
    sa.phase = Phase::histories_exchanged;
    sb.phase = Phase::histories_exchanged;
    if (t)
        t->log("common acquaintances: [" + join_ids(sa.common_ids) + "]");
}

namespace {

// Verifies one direction of proof presentation. Returns false when the
// session died on an invalid proof.
bool receive_proofs(Session& presenter_session, Node& presenter, Session& verifier_session,
                    Node& verifier, std::int64_t now, Transcript* t) {
    ProofBundle bundle;
    for (const std::string& id : presenter_session.common_ids) {
        std::vector<CommonProof> proofs = make_common_proofs(
            presenter.history, id, now, presenter.policy.element_max_age);
        if (!proofs.empty())
            bundle.emplace_back(id, std::move(proofs));
    }
    Bytes frame = ibc::channel_send(*presenter_session.channel,
                                    encode_proofs(presenter.params(), bundle));
    Bytes payload = ibc::channel_receive(*verifier_session.channel, frame);
    ProofBundle received = decode_proofs(verifier.params(), payload);
    if (t)
        t->log(presenter.id() + " -> " + verifier.id() + ": proofs for " +
               std::to_string(received.size()) + " common ids");
    for (const auto& [id, proofs] : received) {
        if (!verifier_session.common_ids.count(id)) {
            verifier_session.reject = RejectReason::proof_invalid;
            if (t)
                t->log(verifier.id() + ": proof for unexpected id " + id);
        }
        bool any_ok = false;
        bool tp_kind = false;
        bool rp_kind = false;
        for (const CommonProof& p : proofs) {
            ProofCheck check = verify_common_proof(verifier.params(), p, presenter.id(), id,
                                                   now, verifier.policy.element_max_age);
            if (!check.ok) {
                verifier_session.reject = RejectReason::proof_invalid;
                if (t)
                    t->log(verifier.id() + ": invalid proof for " + id + " (" + check.why + ")");
                break;
            }
            any_ok = true;
            tp_kind = tp_kind || check.tp_kind;
            rp_kind = rp_kind || check.rp_kind;
        }
        if (verifier_session.reject == RejectReason::proof_invalid) {
            verifier_session.phase = Phase::rejected;
            presenter_session.phase = Phase::rejected;
            presenter_session.reject = RejectReason::proof_invalid;
            verifier.strike_peer(presenter.id(), now);
            if (t)
                t->log(verifier.id() + ": session rejected (ProofInvalid), " +
                       presenter.id() + " struck");
            return false;
        }
        if (any_ok)
            verifier_session.verified[id] = {tp_kind, rp_kind};
    }
    verifier_session.verified_count =
        static_cast<std::uint32_t>(verifier_session.verified.size());
    return true;
}

} // namespace

void exchange_proofs(Session& sa, Node& a, Session& sb, Node& b, std::int64_t now,
                     Transcript* t) {
    if (sa.phase != Phase::histories_exchanged || sb.phase != Phase::histories_exchanged)
        throw Error(ErrorCode::precondition, "proof exchange requires exchanged histories");
    if (!receive_proofs(sa, a, sb, b, now, t))
        return;
    receive_proofs(sb, b, sa, a, now, t);
}

policy::Decision conclude_session(Session& s, Node& n, policy::Role role,
                                  std::int64_t now, Transcript* t) {
    if (s.phase != Phase::histories_exchanged)
        throw Error(ErrorCode::precondition, "conclusion requires a live proven exchange");
    policy::DecisionInput in;
    in.verified_common = s.verified_count;
    in.same_domain = s.peer_public && n.same_domain(*s.peer_public);
    rep::Weights weights;
    const rep::ReputationRecord* rec = n.reputation.find(s.peer_id);
    in.rep_score = rec ? rep::score(*rec, weights, n.policy.element_max_age, now) : 0.0;
    in.peer_blacklisted = n.history.is_blacklisted(s.peer_id, n.policy.blacklist_threshold);
    in.local_history_size = static_cast<std::uint32_t>(n.history.identities().size());
    in.my_rank = n.rank;
    in.peer_rank = s.peer_rank;
    policy::Decision d = policy::decide(n.policy, role, in);
    s.decision = d;
    if (t)
        t->log(n.id() + ": verified common: " + std::to_string(s.verified_count) +
               " (required " + std::to_string(d.required_common) + ") -> " +
               policy::action_name(d.action));
    if (d.action == policy::Action::allow) {
        s.phase = Phase::proven;
        for (const auto& [id, kinds] : s.verified)
            if (n.reputation.has(id))
                n.reputation.record_voucher(id, s.peer_id, kinds.first, kinds.second);
    } else {
        s.phase = Phase::rejected;
        s.reject = RejectReason::threshold_not_met;
    }
    return d;
}

std::optional<std::pair<hist::HistoryElement, hist::HistoryElement>>
mutual_trust_exchange(Session& sa, Node& a, Session& sb, Node& b, std::int64_t now,
                      bool a_accepts, bool b_accepts, Transcript* t) {
    if (sa.phase != Phase::proven || sb.phase != Phase::proven)
        throw Error(ErrorCode::precondition, "trust exchange requires both sessions proven");
    if (!a_accepts || !b_accepts) {
        reject_both(sa, sb, RejectReason::declined);
        if (t)
            t->log("trust exchange declined by " + std::string(!a_accepts ? a.id() : b.id()));
        return std::nullopt;
    }
    Bytes m = canonical_trust_message(a.id(), b.id(), now);
    ibc::Signature sig_a = ibc::ibs_sign(a.germ, m, a.rng);
    ibc::Signature sig_b = ibc::ibs_sign(b.germ, m, b.rng);
    hist::HistoryElement for_b{m, a.germ.pub, sig_a, hist::SemanticFlags{}, now};
    hist::HistoryElement for_a{m, b.germ.pub, sig_b, hist::SemanticFlags{}, now};
    b.history.append(for_b, b.policy.blacklist_threshold);
    a.history.append(for_a, a.policy.blacklist_threshold);
    a.reputation.record_interaction(b.id(), rep::summary_trust_exchange(sa.verified_count));
    b.reputation.record_interaction(a.id(), rep::summary_trust_exchange(sb.verified_count));
    sa.phase = Phase::trusted;
    sb.phase = Phase::trusted;
    if (t)
        t->log(a.id() + " <-> " + b.id() + ": Trusted (mutual bond signed)");
    return std::make_pair(for_a, for_b);
}

std::pair<hist::HistoryElement, hist::HistoryElement>
force_pairing(Node& a, Node& b, std::int64_t now, bool a_confirms, bool b_confirms,
              Transcript* t) {
    if (!a_confirms || !b_confirms)
        throw Error(ErrorCode::precondition,
                    "forced pairing requires explicit confirmation from both parties");
    if (!(a.params() == b.params()))
        throw Error(ErrorCode::params_mismatch, "forced pairing across pairing domains");
    if (a.id() == b.id())
        throw Error(ErrorCode::precondition, "a node cannot pair with itself");
    Bytes m = canonical_trust_message(a.id(), b.id(), now);
    ibc::Signature sig_a = ibc::ibs_sign(a.germ, m, a.rng);
    ibc::Signature sig_b = ibc::ibs_sign(b.germ, m, b.rng);
    hist::HistoryElement for_b{m, a.germ.pub, sig_a, hist::SemanticFlags{}, now};
    hist::HistoryElement for_a{m, b.germ.pub, sig_b, hist::SemanticFlags{}, now};
    b.history.append(for_b, b.policy.blacklist_threshold);
    a.history.append(for_a, a.policy.blacklist_threshold);
    a.reputation.record_interaction(b.id(), rep::summary_trust_exchange(0));
    b.reputation.record_interaction(a.id(), rep::summary_trust_exchange(0));
    if (t)
        t->log("forced pairing: " + a.id() + " <-> " + b.id());
    return {for_a, for_b};
}

InteractionRecord run_service_interaction(Node& receiver, Node& provider,
                                          const std::string& tag, std::int64_t now,
                                          const ServiceDecisions& decisions,
                                          std::uint32_t common_size, Transcript* t) {
    if (!(receiver.params() == provider.params()))
        throw Error(ErrorCode::params_mismatch, "service across pairing domains");
    if (receiver.id() == provider.id())
        throw Error(ErrorCode::precondition, "a node cannot serve itself");
    InteractionRecord rec;
    if (t)
        t->log("service request: " + receiver.id() + " <- " + provider.id() + " [" + tag + "]");
    if (!decisions.provide) {
        rec.summary = rep::summary_refused(common_size);
        receiver.strike_peer(provider.id(), now);
        receiver.reputation.record_interaction(provider.id(), rec.summary);
        if (t)
            t->log(provider.id() + " refused service; " + receiver.id() + " recorded a strike");
        return rec;
    }
    Bytes m = canonical_service_message(provider.id(), receiver.id(), tag, now);
    bool tp = decisions.grant_trustor;
    bool rp = tp && decisions.grant_reciprocal;
    if (tp) {
        ibc::Signature sig_r = ibc::ibs_sign(receiver.germ, m, receiver.rng);
        hist::HistoryElement e{m, receiver.germ.pub, sig_r,
                               hist::make_flags(true, true, false), now};
        provider.history.append(e, provider.policy.blacklist_threshold);
        rec.provider_gained = true;
        if (t)
            t->log(receiver.id() + " granted trustor proof to " + provider.id());
    }
    if (rp) {
        ibc::Signature sig_p = ibc::ibs_sign(provider.germ, m, provider.rng);
        hist::HistoryElement e{m, provider.germ.pub, sig_p,
                               hist::make_flags(true, true, true), now};
        receiver.history.append(e, receiver.policy.blacklist_threshold);
        rec.receiver_gained = true;
        if (t)
            t->log(provider.id() + " granted reciprocal proof to " + receiver.id());
    }
    rec.summary = rep::summary_service(tp, rp, common_size);
    receiver.reputation.record_interaction(provider.id(), rec.summary);
    provider.reputation.record_interaction(receiver.id(), rec.summary);
    return rec;
}

std::pair<Session, Session> run_che(Node& a, Node& b, std::int64_t now, Transcript* t) {
    auto [sa, sb] = open_session(a, b, t);
    if (sa.phase == Phase::rejected)
        return {sa, sb};
    sa.peer_rank = b.rank;
    sb.peer_rank = a.rank;
    exchange_claims(sa, a, sb, b, now, t);
    exchange_proofs(sa, a, sb, b, now, t);
    if (sa.phase == Phase::rejected || sb.phase == Phase::rejected)
        return {sa, sb};
    conclude_session(sa, a, policy::Role::receiver, now, t);
    conclude_session(sb, b, policy::Role::provider, now, t);
    if (sa.phase == Phase::proven && sb.phase == Phase::rejected) {
        sa.phase = Phase::rejected;
        sa.reject = RejectReason::threshold_not_met;
    } else if (sb.phase == Phase::proven && sa.phase == Phase::rejected) {
        sb.phase = Phase::rejected;
        sb.reject = RejectReason::threshold_not_met;
    }
    return {sa, sb};
}

} // namespace che::proto
