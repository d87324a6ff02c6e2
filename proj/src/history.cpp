#include "che/history.hpp"

#include "che/errors.hpp"

namespace che::hist {

namespace {
constexpr std::uint8_t history_version = 1;
}

SemanticFlags make_flags(bool sp, bool tp, bool rp) {
    if (rp && !tp)
        throw Error(ErrorCode::precondition, "reciprocal proof implies trustor proof");
    return SemanticFlags{sp, tp, rp};
}

std::uint8_t flags_to_byte(const SemanticFlags& f) {
    return static_cast<std::uint8_t>((f.sp ? 1 : 0) | (f.tp ? 2 : 0) | (f.rp ? 4 : 0));
}

SemanticFlags flags_from_byte(std::uint8_t b) {
    if (b > 7)
        throw Error(ErrorCode::decode, "unknown semantic flag bits");
    SemanticFlags f{(b & 1) != 0, (b & 2) != 0, (b & 4) != 0};
    if (f.rp && !f.tp)
        throw Error(ErrorCode::decode, "reciprocal flag without trustor flag");
    return f;
}

bool verify_element(const HistoryElement& e) {
    if (!ibc::verify_peer_public(e.peer))
        return false;
    return ibc::ibs_verify_from(e.peer, e.message, e.signature);
}

History::History(std::string owner_id, std::size_t capacity,
                 const pairing::PairingParams& params)
    : owner_id_(std::move(owner_id)), capacity_(capacity), params_(params) {
    if (owner_id_.empty())
        throw Error(ErrorCode::precondition, "history owner must be nonempty");
    if (capacity_ == 0)
        throw Error(ErrorCode::precondition, "history capacity must be positive");
}

void History::append(const HistoryElement& e, std::uint32_t blacklist_threshold) {
    if (e.peer.id == owner_id_)
        throw Error(ErrorCode::precondition, "history cannot hold a self-element");
    if (!(e.peer.params == params_))
        throw Error(ErrorCode::params_mismatch, "element from a different pairing domain");
    if (is_blacklisted(e.peer.id, blacklist_threshold))
        throw Error(ErrorCode::blacklisted, "peer is blacklisted: " + e.peer.id);
    if (!verify_element(e))
        throw Error(ErrorCode::bad_signature, "history element failed verification");
    elements_.push_back(e);
    if (elements_.size() > capacity_)
        elements_.pop_front();
}

std::set<std::string> History::identities() const {
    std::set<std::string> out;
    for (const HistoryElement& e : elements_)
        out.insert(e.peer.id);
    return out;
}

std::set<std::string> History::common(const std::set<std::string>& claimed,
                                      const std::string& peer_id) const {
    std::set<std::string> mine = identities();
    std::set<std::string> out;
    for (const std::string& id : claimed) {
        if (id == owner_id_ || id == peer_id)
            continue;
        if (mine.count(id))
            out.insert(id);
    }
    return out;
}

void History::strike(const std::string& peer_id, std::int64_t now) {
    BlacklistEntry& entry = blacklist_[peer_id];
    entry.strikes++;
    entry.last_ts = now;
}

std::uint32_t History::strikes(const std::string& peer_id) const {
    auto it = blacklist_.find(peer_id);
    return it == blacklist_.end() ? 0 : it->second.strikes;
}

bool History::is_blacklisted(const std::string& peer_id, std::uint32_t threshold) const {
    if (threshold == 0)
        throw Error(ErrorCode::precondition, "blacklist threshold must be positive");
    return strikes(peer_id) >= threshold;
}

void write_element(Bytes& out, const HistoryElement& e) {
    append_blob32(out, e.message);
    e.peer.write(out);
    e.signature.write(e.peer.params, out);
    append_u8(out, flags_to_byte(e.flags));
    append_i64(out, e.timestamp);
}

HistoryElement read_element(const pairing::PairingParams& params, ByteReader& r) {
    HistoryElement e;
    e.message = r.blob32();
    e.peer = ibc::PeerPublic::read(r);
    if (!(e.peer.params == params))
        throw Error(ErrorCode::decode, "element peer from a different pairing domain");
    e.signature = ibc::Signature::read(params, r);
    e.flags = flags_from_byte(r.u8());
    e.timestamp = r.i64();
    return e;
}

void History::write(Bytes& out) const {
    append_u8(out, history_version);
    append_str16(out, owner_id_);
    pairing::append_params(out, params_);
    append_u32(out, static_cast<std::uint32_t>(capacity_));
    append_u32(out, static_cast<std::uint32_t>(elements_.size()));
    for (const HistoryElement& e : elements_)
        write_element(out, e);
    append_u32(out, static_cast<std::uint32_t>(blacklist_.size()));
    for (const auto& [id, entry] : blacklist_) {
        append_str16(out, id);
        append_u32(out, entry.strikes);
        append_i64(out, entry.last_ts);
    }
}

Bytes History::to_bytes() const {
    Bytes out;
    write(out);
    return out;
}

History History::read(ByteReader& r) {
    if (r.u8() != history_version)
        throw Error(ErrorCode::decode, "unsupported history version");
    std::string owner = r.str16();
    pairing::PairingParams params = pairing::read_params(r);
    std::uint32_t capacity = r.u32();
    History h(owner, capacity, params);
    std::uint32_t count = r.u32();
    if (count > capacity)
        throw Error(ErrorCode::decode, "history holds more elements than its capacity");
    for (std::uint32_t i = 0; i < count; ++i)
        h.elements_.push_back(read_element(params, r));
    std::uint32_t bl_count = r.u32();
    for (std::uint32_t i = 0; i < bl_count; ++i) {
        std::string id = r.str16();
        BlacklistEntry entry;
        entry.strikes = r.u32();
        entry.last_ts = r.i64();
        h.blacklist_[id] = entry;
    }
    return h;
}

History History::from_bytes(const Bytes& data) {
    ByteReader r(data);
    History h = read(r);
    r.expect_done();
    return h;
}

bool element_equal(const HistoryElement& a, const HistoryElement& b) {
    return a.message == b.message && a.peer.id == b.peer.id &&
           a.peer.station_id == b.peer.station_id && a.peer.p_pub == b.peer.p_pub &&
           a.peer.q_id == b.peer.q_id && a.peer.cert == b.peer.cert &&
           a.signature.u == b.signature.u && a.signature.h == b.signature.h &&
           a.signature.v == b.signature.v && a.flags == b.flags &&
           a.timestamp == b.timestamp;
}

bool History::operator==(const History& other) const {
    if (owner_id_ != other.owner_id_ || capacity_ != other.capacity_ ||
        !(params_ == other.params_) || elements_.size() != other.elements_.size())
        return false;
    for (std::size_t i = 0; i < elements_.size(); ++i)
        if (!element_equal(elements_[i], other.elements_[i]))
            return false;
    if (blacklist_.size() != other.blacklist_.size())
        return false;
    auto it = other.blacklist_.begin();
    for (const auto& [id, entry] : blacklist_) {
        if (it->first != id || it->second.strikes != entry.strikes ||
            it->second.last_ts != entry.last_ts)
            return false;
        ++it;
    }
    return true;
}

} // namespace che::hist
