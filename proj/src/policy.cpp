#include "che/policy.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "che/errors.hpp"

namespace che::policy {

PolicyConfig preset(Pattern pattern) {
    PolicyConfig cfg;
    cfg.pattern = pattern;
    switch (pattern) {
    case Pattern::family:
        cfg.mode = Mode::closed;
        cfg.p_receiver = 0;
        cfg.p_provider = 0;
        break;
    case Pattern::network:
        cfg.mode = Mode::open;
        cfg.p_receiver = 3;
        cfg.p_provider = 3;
        cfg.p_interdomain_extra = 1;
        break;
    case Pattern::market:
        cfg.mode = Mode::open;
        cfg.p_receiver = 3;
        cfg.p_provider = 2;
        cfg.p_interdomain_extra = 1;
        break;
    case Pattern::organization:
        cfg.mode = Mode::closed;
        cfg.p_receiver = 2;
        cfg.p_provider = 2;
        cfg.hierarchy_multiplier = 2.0;
        break;
    case Pattern::custom:
        break;
    }
    return cfg;
}

PolicyConfig altruist_variant(const PolicyConfig& cfg) {
    PolicyConfig out = cfg;
    out.altruist = true;
    return out;
}

std::uint32_t effective_p(const PolicyConfig& cfg, Role role,
                          std::uint32_t my_rank, std::uint32_t peer_rank) {
    std::uint32_t base = role == Role::receiver ? cfg.p_receiver : cfg.p_provider;
    if (cfg.pattern != Pattern::organization || peer_rank <= my_rank)
        return base;
    double scaled = base * std::pow(cfg.hierarchy_multiplier, peer_rank - my_rank);
    if (scaled > 1e9)
        return 1'000'000'000u;
    return static_cast<std::uint32_t>(std::lround(scaled));
}

Decision decide(const PolicyConfig& cfg, Role role, const DecisionInput& in) {
    Decision d;
    if (in.peer_blacklisted) {
        d.action = Action::deny;
        d.reason = Reason::peer_blacklisted;
        return d;
    }
    if (cfg.mode == Mode::closed && !in.same_domain) {
        d.action = Action::deny;
        d.reason = Reason::domain_mismatch;
        return d;
    }
    if (cfg.altruist && role == Role::provider) {
        d.action = Action::allow;
        return d;
    }
    std::uint32_t required = effective_p(cfg, role, in.my_rank, in.peer_rank);
    if (cfg.mode == Mode::open && !in.same_domain)
        required += cfg.p_interdomain_extra;
    d.required_common = required;
    if (in.rep_score < cfg.min_score) {
        d.action = Action::deny;
        d.reason = Reason::score_too_low;
        return d;
    }
    if (in.verified_common >= required) {
        d.action = Action::allow;
        return d;
    }
    if (in.local_history_size < required) {
        d.action = Action::require_forced_pairing;
        d.reason = Reason::threshold_not_met;
        return d;
    }
    d.action = Action::deny;
    d.reason = Reason::threshold_not_met;
    return d;
}

const char* mode_name(Mode m) {
    return m == Mode::closed ? "closed" : "open";
}

const char* pattern_name(Pattern p) {
    switch (p) {
    case Pattern::family: return "family";
    case Pattern::network: return "network";
    case Pattern::market: return "market";
    case Pattern::organization: return "organization";
    case Pattern::custom: return "custom";
    }
    return "custom";
}

const char* role_name(Role r) {
    return r == Role::receiver ? "receiver" : "provider";
}

const char* action_name(Action a) {
    switch (a) {
    case Action::allow: return "allow";
    case Action::deny: return "deny";
    case Action::require_forced_pairing: return "require_forced_pairing";
    }
    return "deny";
}

const char* reason_name(Reason r) {
    switch (r) {
    case Reason::none: return "none";
    case Reason::peer_blacklisted: return "peer_blacklisted";
    case Reason::domain_mismatch: return "domain_mismatch";
    case Reason::threshold_not_met: return "threshold_not_met";
    case Reason::score_too_low: return "score_too_low";
    }
    return "none";
}

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Mode parse_mode(const std::string& v) {
    if (v == "closed")
        return Mode::closed;
    if (v == "open")
        return Mode::open;
    throw Error(ErrorCode::decode, "unknown mode: " + v);
}

Pattern parse_pattern(const std::string& v) {
    if (v == "family") return Pattern::family;
    if (v == "network") return Pattern::network;
    if (v == "market") return Pattern::market;
    if (v == "organization") return Pattern::organization;
    if (v == "custom") return Pattern::custom;
    throw Error(ErrorCode::decode, "unknown pattern: " + v);
}

std::uint32_t parse_u32(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        unsigned long parsed = std::stoul(v, &pos);
        if (pos != v.size() || parsed > 0xfffffffful)
            throw std::invalid_argument(v);
        return static_cast<std::uint32_t>(parsed);
    } catch (const std::exception&) {
        throw Error(ErrorCode::decode, "bad value for " + key + ": " + v);
    }
}

std::int64_t parse_i64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long parsed = std::stoll(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return parsed;
    } catch (const std::exception&) {
        throw Error(ErrorCode::decode, "bad value for " + key + ": " + v);
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double parsed = std::stod(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return parsed;
    } catch (const std::exception&) {
        throw Error(ErrorCode::decode, "bad value for " + key + ": " + v);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "0" || v == "false") return false;
    if (v == "1" || v == "true") return true;
    throw Error(ErrorCode::decode, "bad value for " + key + ": " + v);
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

std::string policy_to_text(const PolicyConfig& cfg) {
    std::ostringstream out;
    out << "pattern=" << pattern_name(cfg.pattern) << "\n";
    out << "mode=" << mode_name(cfg.mode) << "\n";
    out << "p_receiver=" << cfg.p_receiver << "\n";
    out << "p_provider=" << cfg.p_provider << "\n";
    out << "p_interdomain_extra=" << cfg.p_interdomain_extra << "\n";
    out << "blacklist_threshold=" << cfg.blacklist_threshold << "\n";
    out << "element_max_age=" << cfg.element_max_age << "\n";
    out << "min_score=" << format_double(cfg.min_score) << "\n";
    out << "hierarchy_multiplier=" << format_double(cfg.hierarchy_multiplier) << "\n";
    out << "altruist=" << (cfg.altruist ? 1 : 0) << "\n";
    return out.str();
}

PolicyConfig policy_from_text(const std::string& text) {
    PolicyConfig cfg;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#')
            continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::decode, "expected key=value, got: " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key == "pattern")
            cfg.pattern = parse_pattern(value);
        else if (key == "mode")
            cfg.mode = parse_mode(value);
        else if (key == "p_receiver")
            cfg.p_receiver = parse_u32(key, value);
        else if (key == "p_provider")
            cfg.p_provider = parse_u32(key, value);
        else if (key == "p_interdomain_extra")
            cfg.p_interdomain_extra = parse_u32(key, value);
        else if (key == "blacklist_threshold")
            cfg.blacklist_threshold = parse_u32(key, value);
        else if (key == "element_max_age")
            cfg.element_max_age = parse_i64(key, value);
        else if (key == "min_score")
            cfg.min_score = parse_double(key, value);
        else if (key == "hierarchy_multiplier")
            cfg.hierarchy_multiplier = parse_double(key, value);
        else if (key == "altruist")
            cfg.altruist = parse_bool(key, value);
        else
            throw Error(ErrorCode::decode, "unknown policy key: " + key);
    }
    if (cfg.blacklist_threshold == 0)
        throw Error(ErrorCode::decode, "blacklist_threshold must be positive");
    return cfg;
}

} // namespace che::policy
