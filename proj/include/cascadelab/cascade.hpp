#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cascadelab/asequence.hpp"
#include "cascadelab/graph.hpp"
#include "cascadelab/hierarchy.hpp"
#include "cascadelab/rng.hpp"

namespace cascadelab {

enum class influence_kind { linear, counting, symmetric };

// Per-vertex influence function over the infected neighborhood: linear sums
// edge weights, counting counts neighbors, symmetric applies a_{|S|}. All are
// monotone with f(empty) = 0.
struct influence_spec {
    influence_kind kind = influence_kind::counting;
    a_sequence a;  // symmetric only

    static influence_spec linear() { return {influence_kind::linear, {}}; }
    static influence_spec counting() { return {influence_kind::counting, {}}; }
    static influence_spec symmetric(a_sequence seq) {
        return {influence_kind::symmetric, std::move(seq)};
    }
};

enum class threshold_kind { degenerate, uniform01 };

struct threshold_spec {
    threshold_kind kind = threshold_kind::degenerate;
    std::vector<double> theta;  // degenerate: one value per vertex

    static threshold_spec degenerate(std::vector<double> t) {
        return {threshold_kind::degenerate, std::move(t)};
    }
    static threshold_spec degenerate_uniform(vertex n, double t) {
        return {threshold_kind::degenerate, std::vector<double>(size_t(n), t)};
    }
    static threshold_spec uniform01() { return {threshold_kind::uniform01, {}}; }

    std::string to_tsv() const;  // "vertex<TAB>theta" lines (degenerate only)
    static threshold_spec from_tsv(const std::string& text, vertex n);

    // One value per vertex, drawn in vertex order for uniform01 (values lie in
    // (0, 1] so only seeds and explicit zero thresholds fire unprompted).
    std::vector<double> realize(vertex n, rng& r) const;
};

struct cascade_instance {
    weighted_graph graph;
    influence_spec influence;
    threshold_spec thresholds;
    int k = 0;
};

// Counting/symmetric influence require unit edge weights. Throws SpecMismatch.
void validate_instance(const cascade_instance& inst);

struct cascade_result {
    std::vector<int> round_of;                // -1 = never infected; seeds get 0
    std::vector<std::vector<vertex>> rounds;  // rounds[0] = seeds, ascending ids
    long long infected_count = 0;
};

struct sigma_estimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    long long replications = 0;
};

// Synchronous rounds: round r+1 infects every uninfected v whose influence
// from the round-r infected set reaches its threshold (ties infect — the >=
// rule is load-bearing for the hard-instance constructions). Terminates at the
// first round with no new infection; the result is the unique fixpoint.
cascade_result run_cascade(const cascade_instance& inst, const std::vector<double>& theta,
                           const std::vector<vertex>& seeds);

// Mean/stderr of the infected count over independent threshold draws.
// Degenerate thresholds make every replication identical, so one run suffices.
sigma_estimate estimate_sigma(const cascade_instance& inst, const std::vector<vertex>& seeds,
                              long long replications, uint64_t seed, int threads = 1);

// Exact sigma for symmetric influence under uniform thresholds: a vertex's
// behavior only depends on which gap between consecutive distinct a-values its
// threshold lands in, so the joint bucket assignment is enumerable.
double exact_sigma_bucket(const cascade_instance& inst, const std::vector<vertex>& seeds,
                          vertex n_limit = 10);

// Seeds fixed first, then per replication a fresh graph is sampled from the
// stochastic tree and fresh thresholds are drawn.
sigma_estimate estimate_sigma_pre_sampling(const hierarchy_tree& tree,
                                           const influence_spec& influence,
                                           const threshold_spec& thresholds,
                                           const std::vector<vertex>& seeds,
                                           long long replications, uint64_t seed,
                                           int threads = 1);

}  // namespace cascadelab
