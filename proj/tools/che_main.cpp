#include <algorithm>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "che/analysis.hpp"
#include "che/errors.hpp"
#include "che/node_file.hpp"
#include "che/simulation.hpp"

using namespace che;

namespace {

int exit_code_for(const Error& e) {
    switch (e.code()) {
    case ErrorCode::policy:
        return 3;
    case ErrorCode::mac_mismatch:
    case ErrorCode::bad_signature:
    case ErrorCode::replay:
    case ErrorCode::blacklisted:
        return 4;
    default:
        return 2;
    }
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void print_transcript(const proto::Transcript& t) {
    for (const std::string& line : t.lines)
        std::cout << "  " << line << "\n";
}

struct ImprintArgs {
    std::string station_path;
    std::string new_station_id;
    std::string node_path;
    std::string node_id;
    std::string preset = "custom";
    std::uint32_t history_size = 22;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

policy::Pattern pattern_from_name(const std::string& name) {
    if (name == "family") return policy::Pattern::family;
    if (name == "network") return policy::Pattern::network;
    if (name == "market") return policy::Pattern::market;
    if (name == "organization") return policy::Pattern::organization;
    if (name == "custom") return policy::Pattern::custom;
    throw Error(ErrorCode::precondition, "unknown policy preset: " + name);
}

int cmd_imprint(const ImprintArgs& args) {
    std::uint64_t seed = args.seed_given ? args.seed : os_seed();
    std::cout << "seed: " << seed << "\n";
    DetRng rng(seed);
    ibc::ImprintingStation station;
    if (!args.new_station_id.empty()) {
        station = ibc::ImprintingStation::create(
            args.new_station_id, pairing::PairingParams::reference_default(), rng);
        io::save_station(args.station_path, station);
        std::cout << "station '" << station.station_id << "' written to "
                  << args.station_path << "\n";
    } else {
        station = io::load_station(args.station_path);
        std::cout << "station '" << station.station_id << "' loaded from "
                  << args.station_path << "\n";
    }
    if (!args.node_path.empty()) {
        if (args.node_id.empty())
            throw Error(ErrorCode::precondition, "--node requires --id");
        io::NodeState state;
        state.germ = station.imprint(args.node_id);
        state.history = hist::History(args.node_id, args.history_size, station.params);
        state.policy = policy::preset(pattern_from_name(args.preset));
        io::save_node(args.node_path, state);
        std::cout << "imprinted '" << args.node_id << "' (history capacity "
                  << args.history_size << ", policy " << args.preset << ") to "
                  << args.node_path << "\n";
    }
    return 0;
}

int cmd_demo(std::uint64_t seed, bool tamper) {
    std::cout << "seed: " << seed << "\n";
    DetRng rng(seed);
    auto params = pairing::PairingParams::reference_default();
    ibc::ImprintingStation station = ibc::ImprintingStation::create("demo-station", params, rng);
    policy::PolicyConfig pol;
    pol.p_receiver = 1;
    pol.p_provider = 1;
    proto::Node alice = proto::make_node(station.imprint("alice"), 8, pol, rng.u64());
    proto::Node bob = proto::make_node(station.imprint("bob"), 8, pol, rng.u64());
    proto::Node carol = proto::make_node(station.imprint("carol"), 8, pol, rng.u64());

    proto::Transcript t;
    proto::force_pairing(alice, carol, 0, true, true, &t);
    proto::force_pairing(bob, carol, 0, true, true, &t);

    if (tamper) {
        // Simulates on-disk corruption of alice's stored bond: one digit of
        // the signed message changes, so carol's signature no longer
        // matches what alice presents.
        Bytes raw = alice.history.to_bytes();
        std::string needle = "TRUST|alice|carol|";
        auto it = std::search(raw.begin(), raw.end(), needle.begin(), needle.end());
        if (it == raw.end())
            throw Error(ErrorCode::io, "demo internal error: bond not found");
        raw[static_cast<std::size_t>(it - raw.begin()) + needle.size()] ^= 0x01;
        alice.history = hist::History::from_bytes(raw);
        t.log("alice's stored bond was tampered with");
    }

    auto [sa, sb] = proto::run_che(alice, bob, 1, &t);
    if (sa.phase == proto::Phase::proven && sb.phase == proto::Phase::proven)
        proto::mutual_trust_exchange(sa, alice, sb, bob, 1, true, true, &t);

    print_transcript(t);
    if (sa.phase == proto::Phase::trusted && sb.phase == proto::Phase::trusted) {
        std::cout << "result: Trusted\n";
        return 0;
    }
    std::cout << "result: " << proto::reject_reason_name(sa.reject) << "\n";
    switch (sa.reject) {
    case proto::RejectReason::proof_invalid:
    case proto::RejectReason::handshake_failed:
        return 4;
    default:
        return 3;
    }
}

struct PlanArgs {
    std::uint32_t population = 0;
    std::uint32_t k = 0;
    std::uint32_t p = 0;
    bool table = false;
    std::vector<std::uint32_t> populations;
    std::vector<std::uint32_t> ks;
    std::vector<std::uint32_t> ps;
    std::string csv_path;
};

int cmd_plan(const PlanArgs& args) {
    if (args.table) {
        if (args.populations.empty() || args.ks.empty() || args.ps.empty())
            throw Error(ErrorCode::precondition,
                        "--table needs --populations, --ks and --ps");
        auto rows = analysis::prob_table(args.populations, args.ks, args.ps);
        std::string csv = analysis::table_csv(rows);
        if (!args.csv_path.empty()) {
            io::write_file(args.csv_path, to_bytes(csv));
            std::cout << "wrote " << rows.size() << " rows to " << args.csv_path << "\n";
        } else {
            std::cout << csv;
        }
        return 0;
    }
    if (args.population == 0)
        throw Error(ErrorCode::precondition, "--population is required");
    if (args.k != 0) {
        std::uint32_t p = args.p;
        double prob = analysis::common_prob(args.population, args.k, p);
        std::cout << "P(common >= " << p << " | n=" << args.population
                  << ", k=" << args.k << ") = " << fmt6(prob) << "\n";
        return 0;
    }
    analysis::Recommendation rec = analysis::recommend_params(args.population);
    std::cout << "population: " << args.population << "\n";
    std::cout << "recommended history size k: " << rec.k << "\n";
    std::cout << "recommended threshold p: " << rec.p << "\n";
    std::cout << "P(common >= p): " << fmt6(rec.prob) << "\n";
    return 0;
}

struct SimulateArgs {
    sim::SimConfig cfg;
    bool sweep = false;
    std::vector<std::uint32_t> p_values{0, 2, 4, 6};
    std::uint32_t sweep_seeds = 10;
    std::string metrics_path;
    std::string rings_path;
};

int cmd_simulate(const SimulateArgs& args) {
    sim::SocialGraph g = sim::build_graph(args.cfg.community, args.cfg.world,
                                          args.cfg.seed, args.cfg.mix_intra);
    std::cout << "graph: " << g.total << " nodes, " << g.edges.size()
              << " edges, intra share " << fmt6(g.intra_community_edge_share())
              << ", dropped stubs " << g.dropped_stubs << "\n";
    if (args.sweep) {
        std::vector<std::uint64_t> seeds;
        for (std::uint32_t i = 0; i < args.sweep_seeds; ++i)
            seeds.push_back(args.cfg.seed + i);
        auto rows = sim::p_sweep(g, args.cfg, args.p_values, seeds);
        std::string csv = sim::sweep_csv(rows);
        if (!args.rings_path.empty()) {
            io::write_file(args.rings_path, to_bytes(csv));
            std::cout << "wrote " << rows.size() << " rows to " << args.rings_path << "\n";
        } else {
            std::cout << csv;
        }
        return 0;
    }
    sim::SimResult result = sim::run_meetings(g, args.cfg);
    const sim::RoundMetrics& last = result.rounds.back();
    std::cout << "meetings per round: " << result.meetings_per_round << "\n";
    std::cout << "final: trust_edges=" << last.trust_edges
              << " mean_common=" << fmt6(last.mean_common)
              << " outsiders_lt4=" << last.outsiders_lt4 << "\n";
    std::cout << "final rings:";
    for (std::size_t i = 0; i < last.mean_rings.size(); ++i)
        std::cout << " V" << i + 1 << "=" << fmt6(last.mean_rings[i]);
    std::cout << "\n";
    if (!args.metrics_path.empty()) {
        io::write_file(args.metrics_path, to_bytes(sim::metrics_csv(result)));
        std::cout << "wrote metrics to " << args.metrics_path << "\n";
    }
    return 0;
}

struct InteractArgs {
    std::string node_a_path;
    std::string node_b_path;
    std::string action = "che";
    std::int64_t now = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool confirm_a = false;
    bool confirm_b = false;
    std::string provider = "b";
    std::string tag = "service";
    bool refuse = false;
    bool no_trustor = false;
    bool no_reciprocal = false;
};

int cmd_interact(const InteractArgs& args) {
    std::uint64_t seed = args.seed_given ? args.seed : os_seed();
    std::cout << "seed: " << seed << "\n";
    DetRng rng(seed);
    io::NodeState state_a = io::load_node(args.node_a_path);
    io::NodeState state_b = io::load_node(args.node_b_path);
    proto::Node a = io::node_from_state(state_a, rng.derive("a").u64());
    proto::Node b = io::node_from_state(state_b, rng.derive("b").u64());
    proto::Transcript t;
    int rc = 0;

    if (args.action == "force-pair") {
        if (!args.confirm_a || !args.confirm_b)
            throw Error(ErrorCode::precondition,
                        "forced pairing needs --confirm-a and --confirm-b");
        proto::force_pairing(a, b, args.now, true, true, &t);
        print_transcript(t);
        std::cout << "result: Paired\n";
    } else if (args.action == "che") {
        auto [sa, sb] = proto::run_che(a, b, args.now, &t);
        if (sa.phase == proto::Phase::proven && sb.phase == proto::Phase::proven)
            proto::mutual_trust_exchange(sa, a, sb, b, args.now, true, true, &t);
        print_transcript(t);
        if (sa.phase == proto::Phase::trusted) {
            std::cout << "result: Trusted\n";
        } else {
            std::cout << "result: " << proto::reject_reason_name(
                             sa.reject != proto::RejectReason::none ? sa.reject : sb.reject)
                      << "\n";
            switch (sa.reject != proto::RejectReason::none ? sa.reject : sb.reject) {
            case proto::RejectReason::proof_invalid:
            case proto::RejectReason::handshake_failed:
            case proto::RejectReason::params_mismatch:
                rc = 4;
                break;
            default:
                rc = 3;
            }
        }
    } else if (args.action == "service") {
        proto::Node& receiver = args.provider == "b" ? a : b;
        proto::Node& provider = args.provider == "b" ? b : a;
        auto [sr, sp] = proto::run_che(receiver, provider, args.now, &t);
        if (sr.phase != proto::Phase::proven || sp.phase != proto::Phase::proven) {
            print_transcript(t);
            std::cout << "result: "
                      << proto::reject_reason_name(
                             sr.reject != proto::RejectReason::none ? sr.reject : sp.reject)
                      << "\n";
            rc = sr.reject == proto::RejectReason::proof_invalid ||
                         sr.reject == proto::RejectReason::handshake_failed ||
                         sr.reject == proto::RejectReason::params_mismatch
                     ? 4
                     : 3;
        } else {
            proto::ServiceDecisions d;
            d.provide = !args.refuse;
            d.grant_trustor = !args.no_trustor;
            d.grant_reciprocal = !args.no_reciprocal;
            proto::InteractionRecord rec = proto::run_service_interaction(
                receiver, provider, args.tag, args.now, d, sr.verified_count, &t);
            print_transcript(t);
            if (rec.summary.refused)
                std::cout << "result: Refused\n";
            else
                std::cout << "result: Served (provider gained "
                          << (rec.provider_gained ? 1 : 0) << ", receiver gained "
                          << (rec.receiver_gained ? 1 : 0) << ")\n";
        }
    } else {
        throw Error(ErrorCode::precondition, "unknown action: " + args.action);
    }

    io::save_node(args.node_a_path, io::state_from_node(a));
    io::save_node(args.node_b_path, io::state_from_node(b));
    return rc;
}

struct PolicyArgs {
    std::string node_path;
    std::string preset;
    std::vector<std::string> sets;
};

int cmd_policy(const PolicyArgs& args) {
    io::NodeState state = io::load_node(args.node_path);
    if (!args.preset.empty())
        state.policy = policy::preset(pattern_from_name(args.preset));
    if (!args.sets.empty()) {
        std::string text = policy::policy_to_text(state.policy);
        for (const std::string& kv : args.sets)
            text += kv + "\n";
        state.policy = policy::policy_from_text(text);
    }
    io::save_node(args.node_path, state);
    std::cout << policy::policy_to_text(state.policy);
    return 0;
}

int cmd_inspect(const std::string& node_path, std::int64_t now) {
    io::NodeState state = io::load_node(node_path);
    std::cout << "id: " << state.germ.id() << "\n";
    std::cout << "station: " << state.germ.pub.station_id << "\n";
    std::cout << "history: " << state.history.size() << "/" << state.history.capacity()
              << " elements\n";
    std::size_t i = 0;
    for (const hist::HistoryElement& e : state.history.elements()) {
        std::string flags;
        flags += e.flags.sp ? 's' : '-';
        flags += e.flags.tp ? 't' : '-';
        flags += e.flags.rp ? 'r' : '-';
        std::cout << "  [" << i++ << "] peer=" << e.peer.id << " flags=" << flags
                  << " ts=" << e.timestamp << " msg=" << to_string(e.message) << "\n";
    }
    std::cout << "blacklist:";
    if (state.history.blacklist().empty())
        std::cout << " (empty)";
    std::cout << "\n";
    for (const auto& [id, entry] : state.history.blacklist())
        std::cout << "  " << id << ": strikes=" << entry.strikes
                  << " last_ts=" << entry.last_ts << "\n";
    std::cout << "reputation:\n";
    rep::Weights w;
    for (const auto& [id, rec] : state.reputation.records()) {
        std::cout << "  " << id << ": meetings=" << rec.direct.meetings
                  << " trustor=" << rec.direct.trustor_proofs
                  << " reciprocal=" << rec.direct.reciprocal_proofs
                  << " refused=" << rec.direct.services_refused
                  << " v_tp=" << rec.indirect.vouchers_tp
                  << " v_rp=" << rec.indirect.vouchers_rp
                  << " v_both=" << rec.indirect.vouchers_both
                  << " score=" << fmt6(rep::score(rec, w, state.policy.element_max_age, now))
                  << "\n";
    }
    std::cout << "policy:\n";
    std::istringstream pol(policy::policy_to_text(state.policy));
    std::string line;
    while (std::getline(pol, line))
        std::cout << "  " << line << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"history-based trust tool"};
    app.require_subcommand(1);

    ImprintArgs imprint_args;
    CLI::App* imprint = app.add_subcommand(
        "imprint", "create an imprinting station or imprint a node identity");
    imprint->add_option("--station", imprint_args.station_path, "station file")->required();
    imprint->add_option("--new-station-id", imprint_args.new_station_id,
                        "create a new station under this id");
    imprint->add_option("--node", imprint_args.node_path, "node state file to create");
    imprint->add_option("--id", imprint_args.node_id, "identity to imprint");
    imprint->add_option("--history-size", imprint_args.history_size, "history capacity");
    imprint->add_option("--preset", imprint_args.preset,
                        "policy preset (family|network|market|organization|custom)");
    imprint->add_option("--seed", imprint_args.seed, "random seed")
        ->each([&](const std::string&) { imprint_args.seed_given = true; });

    std::uint64_t demo_seed = 7;
    bool demo_tamper = false;
    CLI::App* demo = app.add_subcommand("demo", "three-node walkthrough of the protocol");
    demo->add_option("--seed", demo_seed, "random seed");
    demo->add_flag("--tamper", demo_tamper, "corrupt a stored bond before the exchange");

    PlanArgs plan_args;
    CLI::App* plan = app.add_subcommand("plan", "history sizing and commonality odds");
    plan->add_option("--population", plan_args.population, "population size n");
    plan->add_option("--k", plan_args.k, "history size");
    plan->add_option("--p", plan_args.p, "common threshold");
    plan->add_flag("--table", plan_args.table, "emit a probability table");
    plan->add_option("--populations", plan_args.populations, "table populations")
        ->delimiter(',');
    plan->add_option("--ks", plan_args.ks, "table history sizes")->delimiter(',');
    plan->add_option("--ps", plan_args.ps, "table thresholds")->delimiter(',');
    plan->add_option("--csv", plan_args.csv_path, "write the table to this file");

    SimulateArgs sim_args;
    CLI::App* simulate = app.add_subcommand("simulate", "social-graph meeting simulation");
    simulate->add_option("--community-size", sim_args.cfg.community.size, "community size");
    simulate->add_option("--community-dmin", sim_args.cfg.community.d_min, "community d_min");
    simulate->add_option("--community-dmax", sim_args.cfg.community.d_max, "community d_max");
    simulate->add_option("--world-size", sim_args.cfg.world.size, "world size");
    simulate->add_option("--world-dmin", sim_args.cfg.world.d_min, "world d_min");
    simulate->add_option("--world-dmax", sim_args.cfg.world.d_max, "world d_max");
    simulate->add_option("--alpha", sim_args.cfg.community.alpha, "power-law exponent")
        ->each([&](const std::string& v) { sim_args.cfg.world.alpha = std::stod(v); });
    simulate->add_option("--p", sim_args.cfg.threshold_p, "common threshold");
    simulate->add_option("--k", sim_args.cfg.history_capacity, "history capacity");
    simulate->add_option("--rounds", sim_args.cfg.rounds, "meeting rounds");
    simulate->add_option("--seed", sim_args.cfg.seed, "random seed");
    simulate->add_flag("--full-crypto", sim_args.cfg.full_crypto,
                       "run real protocol sessions instead of fast bookkeeping");
    simulate->add_option("--bootstrap-prob", sim_args.cfg.bootstrap_prob,
                         "forced-pairing probability per community edge");
    simulate->add_option("--bootstrap-cross-prob", sim_args.cfg.bootstrap_cross_prob,
                         "forced-pairing probability per non-community edge");
    simulate->add_option("--mix-intra", sim_args.cfg.mix_intra,
                         "community partner preference");
    simulate->add_flag("--sweep", sim_args.sweep, "sweep thresholds and report ring sizes");
    simulate->add_option("--p-values", sim_args.p_values, "sweep thresholds")->delimiter(',');
    simulate->add_option("--sweep-seeds", sim_args.sweep_seeds, "seeds per sweep point");
    simulate->add_option("--metrics", sim_args.metrics_path, "write per-round metrics CSV");
    simulate->add_option("--rings", sim_args.rings_path, "write sweep ring CSV");

    InteractArgs interact_args;
    CLI::App* interact = app.add_subcommand("interact", "run the protocol between two node files");
    interact->add_option("--node-a", interact_args.node_a_path, "first node state file")
        ->required();
    interact->add_option("--node-b", interact_args.node_b_path, "second node state file")
        ->required();
    interact->add_option("--action", interact_args.action, "che|force-pair|service");
    interact->add_option("--now", interact_args.now, "logical timestamp");
    interact->add_option("--seed", interact_args.seed, "random seed")
        ->each([&](const std::string&) { interact_args.seed_given = true; });
    interact->add_flag("--confirm-a", interact_args.confirm_a, "node a confirms forced pairing");
    interact->add_flag("--confirm-b", interact_args.confirm_b, "node b confirms forced pairing");
    interact->add_option("--provider", interact_args.provider, "which node provides (a|b)");
    interact->add_option("--tag", interact_args.tag, "service tag");
    interact->add_flag("--refuse", interact_args.refuse, "provider refuses the service");
    interact->add_flag("--no-trustor", interact_args.no_trustor,
                       "receiver withholds the trustor proof");
    interact->add_flag("--no-reciprocal", interact_args.no_reciprocal,
                       "provider withholds the reciprocal proof");

    PolicyArgs policy_args;
    CLI::App* policy_cmd = app.add_subcommand("policy", "show or edit a node's policy");
    policy_cmd->add_option("--node", policy_args.node_path, "node state file")->required();
    policy_cmd->add_option("--preset", policy_args.preset, "apply a preset first");
    policy_cmd->add_option("--set", policy_args.sets, "key=value override (repeatable)");

    std::string inspect_path;
    std::int64_t inspect_now = 0;
    CLI::App* inspect = app.add_subcommand("inspect", "print a node state file");
    inspect->add_option("--node", inspect_path, "node state file")->required();
    inspect->add_option("--now", inspect_now, "logical timestamp for score aging");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*imprint)
            return cmd_imprint(imprint_args);
        if (*demo)
            return cmd_demo(demo_seed, demo_tamper);
        if (*plan)
            return cmd_plan(plan_args);
        if (*simulate)
            return cmd_simulate(sim_args);
        if (*interact)
            return cmd_interact(interact_args);
        if (*policy_cmd)
            return cmd_policy(policy_args);
        if (*inspect)
            return cmd_inspect(inspect_path, inspect_now);
    } catch (const Error& e) {
        std::cerr << "error (" << error_code_name(e.code()) << "): " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
