#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cascadelab/cascade.hpp"
#include "cascadelab/graph.hpp"
#include "cascadelab/hierarchy.hpp"
#include "cascadelab/report.hpp"

namespace cascadelab {

// Cover-style decision inputs. Vertex and element names are 1-based in files
// and in memory; builders translate to 0-based instance ids.

struct vc_instance {
    int n = 0;
    std::vector<std::pair<int, int>> edges;  // multigraph; duplicates allowed
    int kbar = 0;

    static vc_instance from_json(const json& j);
    json to_json() const;
    void validate() const;  // DomainError on bad endpoints / missing edges
    // Exhaustive cover search (small n only); fills the first witness found,
    // preferring one that avoids vertex 1.
    bool has_cover(std::vector<int>* witness = nullptr) const;
};

struct sc_instance {
    int n = 0;                              // universe size
    std::vector<std::vector<int>> subsets;  // elements per subset
    int k = 0;

    static sc_instance from_json(const json& j);
    json to_json() const;
    void validate() const;  // DomainError; AssumptionViolation on uncovered element
    // Universe padded to a power of two; padding elements join every subset.
    sc_instance padded() const;
    bool has_cover(std::vector<int>* witness = nullptr) const;
};

// Cover-to-cascade family parameters. Zero means "derive the default"; the
// closed-form defaults grow astronomically with instance size, so desk-scale
// runs override W and M explicitly and the bundle records both.
struct hbm_params {
    long long W = 0;       // 0 = n*m
    long long M = 0;       // 0 = closed form (n(2W+m)-1)^(1/epsilon)
    double delta = 0.0;    // 0 = halve until the tenth-margin rule holds; else a power of two
    double epsilon = 0.5;  // enters only the default M; recorded
};

struct shbm_params {
    long long W = 0;  // required (>= 2)
    long long M = 0;  // payoff bundle size (required)
};

enum class setcover_variant { directed, undirected, a1zero };

struct setcover_params {
    double delta = 0.3;          // separation parameter for the gadget machinery
    double eps_shift = 0.0;      // 0 = derive; slack between p_star and the active band
    long long M1 = 8;            // payoff bundle size per verification copy
    long long M2 = 0;            // 0 = n^2 verification copies
    long long edge_upsilon = 1;  // one-way link fan bound (undirected variant)
    double edge_eps = 0.9;       // one-way link leak bound (undirected variant)
};

// A generated hardness instance: the cascade instance itself plus the
// prescribed seed strategy, the payoff region whose infection separates YES
// from NO, and desk-scale outcome predictions. Stochastic-tree bundles leave
// instance.graph empty and carry the tree instead.
struct reduction_bundle {
    std::string kind;  // hbm | shbm | setcover_directed | setcover_undirected | setcover_a1zero
    hierarchy_tree tree;        // hbm / shbm only
    cascade_instance instance;  // thresholds always populated; graph empty for shbm
    std::vector<vertex> yes_strategy;  // empty when the instance has no cover
    std::vector<vertex> payoff_region;
    long long expected_yes_floor = 0;
    long long expected_no_ceiling = 0;
    json params;  // effective + closed-form parameters, vertex layout, predictions

    json to_sidecar() const;
    static reduction_bundle from_sidecar(const json& j, hierarchy_tree tree,
                                         weighted_graph graph);
};

// Effective parameters (W, M, delta, k, N, scale) without building the graph;
// build_hbm_reduction starts from exactly this resolution.
json hbm_resolve_params(const vc_instance& vc, const hbm_params& p);

reduction_bundle build_hbm_reduction(const vc_instance& vc, const hbm_params& p);
reduction_bundle build_shbm_reduction(const vc_instance& vc, const shbm_params& p);
reduction_bundle build_setcover_reduction(const sc_instance& sc, setcover_variant variant,
                                          const a_sequence& a, const setcover_params& p);

// Pair-to-clique connector for the zero-a1 variant: six intermediates between
// the pair (a, b) and target. Seeding both a and b fires the target with
// probability exactly a2^7; an infected target plus any single extra seed can
// never light both a and b back.
void append_pair_junction(weighted_graph& g, vertex a, vertex b, vertex target);

struct yes_report {
    double payoff_fraction = 0.0;
    double stderr_ = 0.0;
    long long trials = 0;
    // Deterministic bundles only: per-level [first, last] infection rounds and
    // whether every level finished strictly before the next began.
    std::vector<std::pair<int, int>> windows;
    int b_round = -1;  // round the payoff region completed; -1 if it never did
    bool levels_ordered = false;
    json to_json() const;
};

yes_report verify_yes_strategy(const reduction_bundle& b, long long trials, uint64_t seed,
                               int threads = 1);

enum class no_gap_mode { exhaustive, heuristic };
enum class no_gap_domain { all, exclude_payoff };

struct no_gap_options {
    no_gap_mode mode = no_gap_mode::exhaustive;
    no_gap_domain domain = no_gap_domain::all;
    long long cap = 10'000'000;  // exhaustive: bound on the number of seed sets
    long long probes = 1000;     // heuristic: random seed sets tried
    uint64_t seed = 0;
    int threads = 1;
};

struct no_gap_report {
    long long best_payoff = 0;           // non-seeded payoff vertices infected
    std::vector<vertex> best_seeds;      // lexicographically first maximizer
    long long sets_tried = 0;
    json to_json() const;
};

// Deterministic bundles only (DomainError otherwise): search seed sets for the
// most payoff infections. Exhaustive mode throws TooLarge past opt.cap.
no_gap_report verify_no_gap_small(const reduction_bundle& b, const no_gap_options& opt);

struct good_sample_options {
    long long pair_draws = 200;  // random (inside, outside) set pairs per clique
    uint64_t seed = 0;
};

struct good_sample_report {
    bool good = false;
    // Every (outside vertex, level bundle) neighbor count inside (1±delta)W^2.
    bool neighbor_counts_ok = false;
    long long pairs_checked = 0;
    long long first_violation_vertex = -1;
    std::string detail;
    // Sampled + extremal-degree draws of (delta W^2, (kbar+1) W^2) vertex sets
    // keep cross edges under W^3.6.
    bool cross_edges_ok = false;
    long long draws = 0;
    long long max_cross_edges = 0;
    double cross_edge_cap = 0.0;
    json to_json() const;
};

good_sample_report check_good_sample(const sampled_graph& g, const reduction_bundle& b,
                                     const good_sample_options& opt);

}  // namespace cascadelab
