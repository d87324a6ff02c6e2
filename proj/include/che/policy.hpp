#pragma once

#include <cstdint>
#include <string>

namespace che::policy {

enum class Mode { closed, open };

enum class Pattern { family, network, market, organization, custom };

enum class Role { receiver, provider };

// Tunable trust stance of one node. Thresholds count verified common
// acquaintances; min_score defaults low enough that it never binds until
// a user opts in.
struct PolicyConfig {
    Pattern pattern = Pattern::custom;
    Mode mode = Mode::open;
    std::uint32_t p_receiver = 1;
    std::uint32_t p_provider = 1;
    // Added to the role threshold when the peer was imprinted by a
    // different station (open mode only).
    std::uint32_t p_interdomain_extra = 0;
    std::uint32_t blacklist_threshold = 3;
    // Seconds before a history element stops being claimed or accepted;
    // 0 disables expiry.
    std::int64_t element_max_age = 0;
    double min_score = -1e9;
    // Organization pattern: threshold multiplier per rank step when
    // approaching a higher-ranked peer.
    double hierarchy_multiplier = 1.0;
    // Provider serves receivers it would otherwise deny on thresholds.
    bool altruist = false;

    bool operator==(const PolicyConfig&) const = default;
};

PolicyConfig preset(Pattern pattern);
PolicyConfig altruist_variant(const PolicyConfig& cfg);

enum class Action { allow, deny, require_forced_pairing };

enum class Reason {
    none,
    peer_blacklisted,
    domain_mismatch,
    threshold_not_met,
    score_too_low,
};

struct Decision {
    Action action = Action::deny;
    Reason reason = Reason::none;
    std::uint32_t required_common = 0;

    bool allowed() const { return action == Action::allow; }
};

struct DecisionInput {
    std::uint32_t verified_common = 0;
    bool same_domain = true;
    double rep_score = 0.0;
    bool peer_blacklisted = false;
    // Distinct identities currently in the local history; used to tell a
    // cold-start node (forced pairing makes sense) from a connected one.
    std::uint32_t local_history_size = 0;
    std::uint32_t my_rank = 0;
    std::uint32_t peer_rank = 0;
};

// Role threshold after hierarchy scaling: approaching a peer peer_rank -
// my_rank steps above you multiplies the base threshold by
// hierarchy_multiplier per step (organization pattern only).
std::uint32_t effective_p(const PolicyConfig& cfg, Role role,
                          std::uint32_t my_rank, std::uint32_t peer_rank);

Decision decide(const PolicyConfig& cfg, Role role, const DecisionInput& in);

const char* mode_name(Mode m);
const char* pattern_name(Pattern p);
const char* role_name(Role r);
const char* action_name(Action a);
const char* reason_name(Reason r);

// key=value text form, one key per line, '#' comments allowed. Parsing an
// unknown key or a malformed value throws Error(decode). to_text emits a
// canonical ordering that round-trips bit-exactly.
std::string policy_to_text(const PolicyConfig& cfg);
PolicyConfig policy_from_text(const std::string& text);

} // namespace che::policy
