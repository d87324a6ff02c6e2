#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "che/rng.hpp"

namespace che::sim {

// Truncated power-law degree population: size nodes with degrees in
// [d_min, d_max] drawn as floor of an inverse-CDF Pareto sample with
// exponent alpha.
struct CommunitySpec {
    std::uint32_t size = 0;
    std::uint32_t d_min = 1;
    std::uint32_t d_max = 1;
    double alpha = 2.4;
};

void validate_spec(const CommunitySpec& spec);
std::uint32_t sample_degree(const CommunitySpec& spec, DetRng& rng);
std::vector<std::uint32_t> degree_sequence(const CommunitySpec& spec, DetRng& rng);

// Undirected social graph over world.size nodes; the first community.size
// of them form the insulated community. Edges hold u < v and are sorted.
struct SocialGraph {
    std::uint32_t total = 0;
    std::uint32_t community_size = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::vector<std::vector<std::uint32_t>> adjacency;
    std::uint32_t dropped_stubs = 0;

    bool in_community(std::uint32_t v) const { return v < community_size; }
    // Intra edges as a share of all edges touching the community.
    double intra_community_edge_share() const;
};

// Configuration-model construction. Community stubs prefer community
// partners with probability mix_intra; unmatched stubs are dropped and
// counted. Throws Error(precondition) on an unusable spec pair.
SocialGraph build_graph(const CommunitySpec& community, const CommunitySpec& world,
                        std::uint64_t seed, double mix_intra = 0.8);

// Nodes within distance <= depth of x, excluding x itself.
std::set<std::uint32_t> neighborhood(const SocialGraph& g, std::uint32_t x,
                                     std::uint32_t depth);

struct SimConfig {
    CommunitySpec community{30, 6, 12, 2.4};
    CommunitySpec world{100, 5, 10, 2.4};
    std::uint32_t threshold_p = 4;
    std::uint32_t history_capacity = 22;
    std::uint32_t rounds = 30;
    std::uint64_t seed = 1;
    // false runs trusted bookkeeping with the same decision logic and no
    // signatures; true drives real protocol sessions. Metrics agree
    // bit-for-bit as long as min_score stays at its non-binding default.
    bool full_crypto = false;
    double mix_intra = 0.8;
    // Forced-pairing bootstrap probability per community-internal edge,
    // and per every other edge.
    double bootstrap_prob = 0.5;
    double bootstrap_cross_prob = 0.0;
    std::uint32_t ring_depth = 4;
};

struct RoundMetrics {
    std::uint32_t round = 0;
    std::uint32_t trust_edges = 0;  // cumulative distinct trusted pairs
    double mean_common = 0.0;       // mean verified commons over the round's meetings
    std::uint32_t outsiders_lt4 = 0;
    std::vector<double> mean_rings; // mean |V_i(x)| over community nodes, i = 1..ring_depth
};

struct SimResult {
    SimConfig config;
    double intra_share = 0.0;
    std::uint32_t dropped_stubs = 0;
    std::uint32_t meetings_per_round = 0;
    std::vector<RoundMetrics> rounds;
    std::set<std::pair<std::uint32_t, std::uint32_t>> trust_edges;
};

// Meeting rounds over the social graph: bootstrap forced pairings, then
// rounds of ceil(|E|/4) sampled edge meetings, each a trust session
// followed by an all-yes service when both policies allow. Sampling and
// cryptography draw from separate streams derived from config.seed, so
// fast and full-crypto runs sample identically.
SimResult run_meetings(const SocialGraph& g, const SimConfig& cfg);

std::string metrics_csv(const SimResult& result);

struct SweepRun {
    std::uint32_t p = 0;
    std::uint64_t seed = 0;
    std::uint32_t final_outsiders_lt4 = 0;
    std::vector<double> final_rings;
};

struct SweepRow {
    std::uint32_t p = 0;
    std::uint32_t ring = 0;     // i of V_i
    double mean_size = 0.0;     // averaged over seeds
    std::uint64_t base_seed = 0;
};

std::vector<SweepRun> p_sweep_runs(const SocialGraph& g, const SimConfig& base,
                                   const std::vector<std::uint32_t>& p_values,
                                   const std::vector<std::uint64_t>& seeds);
std::vector<SweepRow> p_sweep(const SocialGraph& g, const SimConfig& base,
                              const std::vector<std::uint32_t>& p_values,
                              const std::vector<std::uint64_t>& seeds);
std::string sweep_csv(const std::vector<SweepRow>& rows);

} // namespace che::sim
