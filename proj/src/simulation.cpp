#include "che/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <queue>
#include <sstream>

#include "che/errors.hpp"
#include "che/protocol.hpp"

namespace che::sim {

void validate_spec(const CommunitySpec& spec) {
    if (spec.size < 2)
        throw Error(ErrorCode::precondition, "population needs at least 2 nodes");
    if (spec.d_min < 1 || spec.d_min > spec.d_max)
        throw Error(ErrorCode::precondition, "need 1 <= d_min <= d_max");
    if (spec.d_max >= spec.size)
        throw Error(ErrorCode::precondition, "d_max must be below the population size");
    if (!(spec.alpha > 1.0))
        throw Error(ErrorCode::precondition, "power-law exponent must exceed 1");
}

std::uint32_t sample_degree(const CommunitySpec& spec, DetRng& rng) {
    double u = rng.unit();
    double lo = std::pow(static_cast<double>(spec.d_min), 1.0 - spec.alpha);
    double hi = std::pow(static_cast<double>(spec.d_max) + 1.0, 1.0 - spec.alpha);
    double x = std::pow(lo + u * (hi - lo), 1.0 / (1.0 - spec.alpha));
    auto d = static_cast<std::uint32_t>(x);
    return std::clamp(d, spec.d_min, spec.d_max);
}

std::vector<std::uint32_t> degree_sequence(const CommunitySpec& spec, DetRng& rng) {
    validate_spec(spec);
    std::vector<std::uint32_t> degrees(spec.size);
    for (std::uint32_t& d : degrees)
        d = sample_degree(spec, rng);
    return degrees;
}

double SocialGraph::intra_community_edge_share() const {
    std::uint32_t touching = 0;
    std::uint32_t intra = 0;
    for (const auto& [u, v] : edges) {
        bool cu = in_community(u);
        bool cv = in_community(v);
        if (cu || cv)
            touching++;
        if (cu && cv)
            intra++;
    }
    return touching == 0 ? 0.0 : static_cast<double>(intra) / touching;
}

namespace {

std::uint64_t edge_key(std::uint32_t u, std::uint32_t v) {
    if (u > v)
        std::swap(u, v);
    return static_cast<std::uint64_t>(u) << 32 | v;
}

// Pops a partner for u from stubs, avoiding self-loops and duplicate
// edges. Swap-pop keeps removal O(1); nullopt after the retry budget.
std::optional<std::uint32_t> pop_partner(std::vector<std::uint32_t>& stubs,
                                         std::uint32_t u,
                                         const std::set<std::uint64_t>& taken,
                                         DetRng& rng) {
    for (int attempt = 0; attempt < 30 && !stubs.empty(); ++attempt) {
        std::size_t j = static_cast<std::size_t>(rng.below(stubs.size()));
        std::uint32_t v = stubs[j];
        if (v == u || taken.count(edge_key(u, v)))
            continue;
        stubs[j] = stubs.back();
        stubs.pop_back();
        return v;
    }
    return std::nullopt;
}

} // namespace

SocialGraph build_graph(const CommunitySpec& community, const CommunitySpec& world,
                        std::uint64_t seed, double mix_intra) {
    validate_spec(community);
    validate_spec(world);
    if (community.size > world.size)
        throw Error(ErrorCode::precondition, "community cannot exceed the world population");
    if (mix_intra < 0.0 || mix_intra > 1.0)
        throw Error(ErrorCode::precondition, "mix_intra must lie in [0, 1]");

    DetRng rng = DetRng(seed).derive("graph");
    SocialGraph g;
    g.total = world.size;
    g.community_size = community.size;

    std::vector<std::uint32_t> degrees(g.total);
    for (std::uint32_t i = 0; i < g.total; ++i)
        degrees[i] = sample_degree(g.in_community(i) ? community : world, rng);
    std::uint64_t stub_sum = 0;
    for (std::uint32_t d : degrees)
        stub_sum += d;
    if (stub_sum % 2 != 0) {
        bool fixed = false;
        for (std::uint32_t i = g.total; i-- > 0 && !fixed;) {
            const CommunitySpec& spec = g.in_community(i) ? community : world;
            if (degrees[i] < spec.d_max) {
                degrees[i]++;
                fixed = true;
            }
        }
        if (!fixed)
            degrees[g.total - 1]--;
    }

    std::vector<std::uint32_t> comm_stubs;
    std::vector<std::uint32_t> world_stubs;
    for (std::uint32_t i = 0; i < g.total; ++i)
        for (std::uint32_t d = 0; d < degrees[i]; ++d)
            (g.in_community(i) ? comm_stubs : world_stubs).push_back(i);
    std::shuffle(comm_stubs.begin(), comm_stubs.end(), rng.engine());
    std::shuffle(world_stubs.begin(), world_stubs.end(), rng.engine());

    std::set<std::uint64_t> taken;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    auto add_edge = [&](std::uint32_t u, std::uint32_t v) {
        taken.insert(edge_key(u, v));
        edges.emplace_back(std::min(u, v), std::max(u, v));
    };

    while (!comm_stubs.empty()) {
        std::uint32_t u = comm_stubs.back();
        comm_stubs.pop_back();
        bool want_intra = !comm_stubs.empty() && rng.unit() < mix_intra;
        std::optional<std::uint32_t> v;
        if (want_intra) {
            v = pop_partner(comm_stubs, u, taken, rng);
            if (!v)
                v = pop_partner(world_stubs, u, taken, rng);
        } else {
            v = pop_partner(world_stubs, u, taken, rng);
            if (!v)
                v = pop_partner(comm_stubs, u, taken, rng);
        }
        if (v)
            add_edge(u, *v);
        else
            g.dropped_stubs++;
    }
    while (world_stubs.size() >= 2) {
        std::uint32_t u = world_stubs.back();
        world_stubs.pop_back();
        std::optional<std::uint32_t> v = pop_partner(world_stubs, u, taken, rng);
        if (v)
            add_edge(u, *v);
        else
            g.dropped_stubs++;
    }
    g.dropped_stubs += static_cast<std::uint32_t>(world_stubs.size());

    if (edges.empty())
        throw Error(ErrorCode::precondition, "graph construction produced no edges");

    std::sort(edges.begin(), edges.end());
    g.edges = std::move(edges);
    g.adjacency.assign(g.total, {});
    for (const auto& [u, v] : g.edges) {
        g.adjacency[u].push_back(v);
        g.adjacency[v].push_back(u);
    }
    return g;
}

namespace {

// BFS over any adjacency up to the given depth; x itself excluded.
std::set<std::uint32_t> ball(const std::vector<std::vector<std::uint32_t>>& adj,
                             std::uint32_t x, std::uint32_t depth) {
    std::set<std::uint32_t> seen;
    std::queue<std::pair<std::uint32_t, std::uint32_t>> frontier;
    frontier.emplace(x, 0);
    std::vector<bool> visited(adj.size(), false);
    visited[x] = true;
    while (!frontier.empty()) {
        auto [node, dist] = frontier.front();
        frontier.pop();
        if (dist == depth)
            continue;
        for (std::uint32_t next : adj[node]) {
            if (visited[next])
                continue;
            visited[next] = true;
            seen.insert(next);
            frontier.emplace(next, dist + 1);
        }
    }
    return seen;
}

} // namespace

std::set<std::uint32_t> neighborhood(const SocialGraph& g, std::uint32_t x,
                                     std::uint32_t depth) {
    if (x >= g.total)
        throw Error(ErrorCode::precondition, "node outside the graph");
    return ball(g.adjacency, x, depth);
}

namespace {

std::string node_name(std::uint32_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "n%03u", i);
    return buf;
}

struct Engine {
    const SocialGraph& g;
    const SimConfig& cfg;
    policy::PolicyConfig pol;
    bool full_crypto;
    // Shadow bookkeeping: same FIFO content as the real histories, kept in
    // both modes so metrics come from one code path.
    std::vector<std::deque<std::uint32_t>> shadow;
    std::vector<proto::Node> nodes;

    Engine(const SocialGraph& graph, const SimConfig& config, DetRng& crypto)
        : g(graph), cfg(config), full_crypto(config.full_crypto) {
        pol.mode = policy::Mode::open;
        pol.p_receiver = cfg.threshold_p;
        pol.p_provider = cfg.threshold_p;
        shadow.assign(g.total, {});
        if (full_crypto) {
            auto params = pairing::PairingParams::reference_default();
            ibc::ImprintingStation station =
                ibc::ImprintingStation::create("sim-station", params, crypto);
            nodes.reserve(g.total);
            for (std::uint32_t i = 0; i < g.total; ++i)
                nodes.push_back(proto::make_node(station.imprint(node_name(i)),
                                                 cfg.history_capacity, pol, crypto.u64()));
        }
    }

    void shadow_append(std::uint32_t holder, std::uint32_t peer) {
        auto& h = shadow[holder];
        h.push_back(peer);
        if (h.size() > cfg.history_capacity)
            h.pop_front();
    }

    std::set<std::uint32_t> shadow_ids(std::uint32_t i) const {
        return std::set<std::uint32_t>(shadow[i].begin(), shadow[i].end());
    }

    void bootstrap_pair(std::uint32_t u, std::uint32_t v) {
        if (full_crypto)
            proto::force_pairing(nodes[u], nodes[v], 0, true, true);
        shadow_append(v, u);
        shadow_append(u, v);
    }

    // One sampled meeting; returns (verified commons, formed).
    std::pair<std::uint32_t, bool> meet(std::uint32_t receiver, std::uint32_t provider,
                                        std::int64_t now) {
        std::uint32_t v_c;
        bool formed;
        if (full_crypto) {
            auto [sr, sp] = proto::run_che(nodes[receiver], nodes[provider], now);
            v_c = sr.verified_count;
            formed = sr.phase == proto::Phase::proven && sp.phase == proto::Phase::proven;
            if (formed)
                proto::run_service_interaction(nodes[receiver], nodes[provider], "svc",
                                               now, proto::ServiceDecisions{}, v_c);
        } else {
            std::set<std::uint32_t> mine = shadow_ids(receiver);
            std::set<std::uint32_t> theirs = shadow_ids(provider);
            std::uint32_t common = 0;
            for (std::uint32_t id : mine)
                if (id != receiver && id != provider && theirs.count(id))
                    common++;
            v_c = common;
            policy::DecisionInput in_r;
            in_r.verified_common = v_c;
            in_r.local_history_size = static_cast<std::uint32_t>(mine.size());
            policy::DecisionInput in_p = in_r;
            in_p.local_history_size = static_cast<std::uint32_t>(theirs.size());
            formed = policy::decide(pol, policy::Role::receiver, in_r).allowed() &&
                     policy::decide(pol, policy::Role::provider, in_p).allowed();
        }
        if (formed) {
            shadow_append(provider, receiver);
            shadow_append(receiver, provider);
        }
        return {v_c, formed};
    }
};

} // namespace

SimResult run_meetings(const SocialGraph& g, const SimConfig& cfg) {
    if (g.total < 2 || g.edges.empty())
        throw Error(ErrorCode::precondition, "simulation needs a populated graph");
    if (cfg.history_capacity == 0 || cfg.rounds == 0 || cfg.ring_depth == 0)
        throw Error(ErrorCode::precondition, "simulation sizes must be positive");

    DetRng sampler = DetRng(cfg.seed).derive("sampler");
    DetRng crypto = DetRng(cfg.seed).derive("crypto");
    Engine engine(g, cfg, crypto);

    SimResult result;
    result.config = cfg;
    result.intra_share = g.intra_community_edge_share();
    result.dropped_stubs = g.dropped_stubs;
    result.meetings_per_round =
        static_cast<std::uint32_t>((g.edges.size() + 3) / 4);

    std::vector<std::vector<std::uint32_t>> trust_adj(g.total);
    auto add_trust_edge = [&](std::uint32_t u, std::uint32_t v) {
        auto key = std::minmax(u, v);
        if (result.trust_edges.insert({key.first, key.second}).second) {
            trust_adj[u].push_back(v);
            trust_adj[v].push_back(u);
        }
    };

    for (const auto& [u, v] : g.edges) {
        bool intra = g.in_community(u) && g.in_community(v);
        double pr = intra ? cfg.bootstrap_prob : cfg.bootstrap_cross_prob;
        if (pr > 0.0 && sampler.unit() < pr) {
            engine.bootstrap_pair(u, v);
            add_trust_edge(u, v);
        }
    }

    for (std::uint32_t round = 1; round <= cfg.rounds; ++round) {
        auto now = static_cast<std::int64_t>(round);
        double common_sum = 0.0;
        for (std::uint32_t m = 0; m < result.meetings_per_round; ++m) {
            const auto& [u, v] = g.edges[sampler.below(g.edges.size())];
            bool u_receives = sampler.below(2) == 0;
            std::uint32_t receiver = u_receives ? u : v;
            std::uint32_t provider = u_receives ? v : u;
            auto [v_c, formed] = engine.meet(receiver, provider, now);
            common_sum += v_c;
            if (formed)
                add_trust_edge(u, v);
        }

        RoundMetrics metrics;
        metrics.round = round;
        metrics.trust_edges = static_cast<std::uint32_t>(result.trust_edges.size());
        metrics.mean_common = common_sum / result.meetings_per_round;

        std::vector<double> ring_sums(cfg.ring_depth, 0.0);
        for (std::uint32_t x = 0; x < g.community_size; ++x) {
            for (std::uint32_t depth = 1; depth <= cfg.ring_depth; ++depth)
                ring_sums[depth - 1] +=
                    static_cast<double>(ball(trust_adj, x, depth).size());
        }
        metrics.mean_rings.resize(cfg.ring_depth);
        for (std::uint32_t i = 0; i < cfg.ring_depth; ++i)
            metrics.mean_rings[i] = ring_sums[i] / g.community_size;

        std::uint32_t outsiders = 0;
        {
            std::vector<int> dist(g.total, -1);
            std::queue<std::uint32_t> q;
            for (std::uint32_t x = 0; x < g.community_size; ++x) {
                dist[x] = 0;
                q.push(x);
            }
            while (!q.empty()) {
                std::uint32_t node = q.front();
                q.pop();
                if (dist[node] >= 3)
                    continue;
                for (std::uint32_t next : trust_adj[node])
                    if (dist[next] < 0) {
                        dist[next] = dist[node] + 1;
                        q.push(next);
                    }
            }
            for (std::uint32_t x = g.community_size; x < g.total; ++x)
                if (dist[x] > 0)
                    outsiders++;
        }
        metrics.outsiders_lt4 = outsiders;
        result.rounds.push_back(std::move(metrics));
    }
    return result;
}

std::string metrics_csv(const SimResult& result) {
    std::ostringstream out;
    const SimConfig& c = result.config;
    out << "# community=" << c.community.size << " world=" << c.world.size
        << " p=" << c.threshold_p << " k=" << c.history_capacity
        << " rounds=" << c.rounds << " seed=" << c.seed
        << " full_crypto=" << (c.full_crypto ? 1 : 0) << "\n";
    out << "# meetings_per_round=" << result.meetings_per_round;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", result.intra_share);
    out << " intra_share=" << buf << " dropped_stubs=" << result.dropped_stubs << "\n";
    out << "round,trust_edges,mean_common,outsiders_lt4\n";
    for (const RoundMetrics& r : result.rounds) {
        std::snprintf(buf, sizeof buf, "%.6f", r.mean_common);
        out << r.round << ',' << r.trust_edges << ',' << buf << ',' << r.outsiders_lt4
            << "\n";
    }
    return out.str();
}

std::vector<SweepRun> p_sweep_runs(const SocialGraph& g, const SimConfig& base,
                                   const std::vector<std::uint32_t>& p_values,
                                   const std::vector<std::uint64_t>& seeds) {
    if (p_values.empty() || seeds.empty())
        throw Error(ErrorCode::precondition, "sweep needs p values and seeds");
    std::vector<SweepRun> runs;
    for (std::uint32_t p : p_values) {
        for (std::uint64_t seed : seeds) {
            SimConfig cfg = base;
            cfg.threshold_p = p;
            cfg.seed = seed;
            SimResult result = run_meetings(g, cfg);
            SweepRun run;
            run.p = p;
            run.seed = seed;
            run.final_outsiders_lt4 = result.rounds.back().outsiders_lt4;
            run.final_rings = result.rounds.back().mean_rings;
            runs.push_back(std::move(run));
        }
    }
    return runs;
}

std::vector<SweepRow> p_sweep(const SocialGraph& g, const SimConfig& base,
                              const std::vector<std::uint32_t>& p_values,
                              const std::vector<std::uint64_t>& seeds) {
    std::vector<SweepRun> runs = p_sweep_runs(g, base, p_values, seeds);
    std::vector<SweepRow> rows;
    for (std::uint32_t p : p_values) {
        std::vector<double> sums(base.ring_depth, 0.0);
        std::uint32_t count = 0;
        for (const SweepRun& run : runs)
            if (run.p == p) {
                for (std::uint32_t i = 0; i < base.ring_depth; ++i)
                    sums[i] += run.final_rings[i];
                count++;
            }
        for (std::uint32_t i = 0; i < base.ring_depth; ++i)
            rows.push_back(SweepRow{p, i + 1, sums[i] / count, base.seed});
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "p,i,mean_size,seed\n";
    char buf[32];
    for (const SweepRow& row : rows) {
        std::snprintf(buf, sizeof buf, "%.6f", row.mean_size);
        out << row.p << ',' << row.ring << ',' << buf << ',' << row.base_seed << "\n";
    }
    return out.str();
}

} // namespace che::sim
