#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "cascadelab/cascade.hpp"
#include "cascadelab/hierarchy.hpp"

namespace cascadelab {

// Deterministic tree + finite thresholds + budget, under one-way influence:
// every internal node gets a sign deciding which child's block influences the
// other across it. Intra-block edges stay bidirectional.
struct oneway_instance {
    hierarchy_tree tree;  // deterministic mode, normalized (0/2 children)
    std::vector<double> theta;
    int k = 0;

    void validate() const;
};

struct seed_plan {
    std::vector<vertex> seeds;
    std::map<long long, char> signs;  // internal node id -> '+' | '-'
    long long nu = 0;

    json to_json() const;
    static seed_plan from_json(const json& j);
};

// H[t,i,nu] = smallest external threshold discount that lets i seeds inside
// V(t) infect at least nu of V(t). Entries exist for i <= min(k,|V(t)|) and
// nu <= |V(t)|; everything beyond is infeasible (infinite).
struct dp_table {
    struct choice {
        char sign = '+';
        int i_left = 0;
        long long nu_left = 0;
    };
    int k = 0;
    std::vector<int> icap;           // per node
    std::vector<long long> nucap;    // per node
    std::vector<std::vector<double>> H;        // per node, (icap+1) x (nucap+1)
    std::vector<std::vector<choice>> pick;     // internal nodes only

    double at(int node, int i, long long nu) const {
        if (nu > nucap[size_t(node)]) return std::numeric_limits<double>::infinity();
        if (i > icap[size_t(node)]) i = icap[size_t(node)];
        return H[size_t(node)][size_t(i) * size_t(nucap[size_t(node)] + 1) + size_t(nu)];
    }
    long long best_nu(const hierarchy_tree& tree) const;  // max nu with H[root,k,nu] = 0
};

enum class leaf_model {
    plain,    // seeds alone discount the block: theta <- theta - i*w
    chained,  // infected non-seeds also chain inside the block (optional mode)
};

// Smallest discount for one block: with i seeds, updated thresholds theta-i*w;
// 0 when nu <= #{updated <= 0} + i, else the (nu-i)-th smallest updated value;
// infinite when nu exceeds the block.
double leaf_init(std::vector<double> block, double w, int i, long long nu,
                 leaf_model model = leaf_model::plain);

dp_table dp_solve(const oneway_instance& inst, leaf_model model = leaf_model::plain);

// Walks stored choices from (root, k, nu_target); seeds land on each block's
// highest thresholds. Throws InfeasibleTarget unless H[root,k,nu_target] = 0.
seed_plan reconstruct(const oneway_instance& inst, const dp_table& table, long long nu_target);

// Orients every cross-block pair by its LCA's sign and runs the directed
// linear cascade; returns the infected count.
long long verify_plan(const oneway_instance& inst, const seed_plan& plan);

// Exhaustive max of verify_plan over sign assignments x seed sets.
// Throws TooLarge above the combination cap.
std::pair<long long, seed_plan> brute_force_oneway(const oneway_instance& inst,
                                                   long long cap = 1'000'000);

// Reproducible random instance for soundness and scaling runs: a random full
// binary tree with monotone weights, thresholds scaled to the leaf weights.
oneway_instance random_oneway_instance(vertex n, int k, uint64_t seed);

}  // namespace cascadelab
