#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <string>

#include "che/bytes.hpp"
#include "che/identity.hpp"

namespace che::hist {

// Semantic annotation of a history element from the holder's point of
// view: sp = a service happened, tp = the counterparty signed as trustor,
// rp = the counterparty signed reciprocally. rp implies tp.
struct SemanticFlags {
    bool sp = false;
    bool tp = false;
    bool rp = false;

    bool operator==(const SemanticFlags&) const = default;
};

SemanticFlags make_flags(bool sp, bool tp, bool rp);
std::uint8_t flags_to_byte(const SemanticFlags& f);
SemanticFlags flags_from_byte(std::uint8_t b);

// One provable past interaction: the counterparty's signature over the
// canonical message, plus everything needed to re-verify it offline.
struct HistoryElement {
    Bytes message;
    ibc::PeerPublic peer;
    ibc::Signature signature;
    SemanticFlags flags;
    std::int64_t timestamp = 0;
};

// Full chain check: the peer's public part is internally consistent and
// certified, and the signature verifies under the peer's station key.
bool verify_element(const HistoryElement& e);

struct BlacklistEntry {
    std::uint32_t strikes = 0;
    std::int64_t last_ts = 0;
};

inline constexpr std::uint32_t default_blacklist_threshold = 3;

// Bounded FIFO of verified interaction proofs. Appending to a full history
// evicts the oldest element; blacklist strikes survive eviction.
class History {
  public:
    History() = default;
    History(std::string owner_id, std::size_t capacity,
            const pairing::PairingParams& params);

    const std::string& owner() const { return owner_id_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return elements_.size(); }
    const pairing::PairingParams& params() const { return params_; }
    const std::deque<HistoryElement>& elements() const { return elements_; }

    // Throws Error(precondition) on a self-element, Error(bad_signature)
    // if the element does not verify, Error(blacklisted) if the peer has
    // reached the strike threshold.
    void append(const HistoryElement& e,
                std::uint32_t blacklist_threshold = default_blacklist_threshold);

    // Distinct peer ids present in the window, oldest evicted ones gone.
    std::set<std::string> identities() const;
    // Ids present both locally and in the peer's claim, excluding the two
    // parties themselves.
    std::set<std::string> common(const std::set<std::string>& claimed,
                                 const std::string& peer_id) const;

    void strike(const std::string& peer_id, std::int64_t now);
    std::uint32_t strikes(const std::string& peer_id) const;
    bool is_blacklisted(const std::string& peer_id,
                        std::uint32_t threshold = default_blacklist_threshold) const;
    const std::map<std::string, BlacklistEntry>& blacklist() const { return blacklist_; }

    Bytes to_bytes() const;
    static History from_bytes(const Bytes& data);
    void write(Bytes& out) const;
    static History read(ByteReader& r);

    bool operator==(const History& other) const;

  private:
    std::string owner_id_;
    std::size_t capacity_ = 0;
    pairing::PairingParams params_;
    std::deque<HistoryElement> elements_;
    std::map<std::string, BlacklistEntry> blacklist_;
};

void write_element(Bytes& out, const HistoryElement& e);
HistoryElement read_element(const pairing::PairingParams& params, ByteReader& r);

bool element_equal(const HistoryElement& a, const HistoryElement& b);

} // namespace che::hist
