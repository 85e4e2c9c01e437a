#pragma once

#include <cstdint>
#include <vector>

#include "cascadelab/graph.hpp"
#include "cascadelab/report.hpp"

namespace cascadelab {

enum class tree_mode { deterministic, stochastic };

struct tree_node {
    long long id = 0;
    double weight = 0.0;
    std::vector<int> children;  // node indices; 0, 1, or 2 before normalization
    long long block = 0;        // graph vertices on this leaf; 0 on internal nodes
    // derived by finalize():
    int parent = -1;
    int depth = 0;
    vertex v_begin = 0, v_end = 0;  // pre-order vertex range of the subtree
};

// Node-weighted tree over vertex blocks. Weights are non-decreasing away from
// the root; the weight of two vertices' lowest common ancestor (the leaf itself
// for a same-block pair) is their edge weight (deterministic mode) or edge
// probability (stochastic mode). Vertex ids are assigned contiguously per leaf
// in pre-order, so every subtree owns the range [v_begin, v_end).
struct hierarchy_tree {
    tree_mode mode = tree_mode::deterministic;
    std::vector<tree_node> nodes;
    // derived by finalize():
    int root = -1;
    vertex n_vertices = 0;
    std::vector<int> pre_order;  // node indices
    std::vector<int> leaves;     // leaf indices, pre-order

    static constexpr size_t node_cap = size_t(1) << 20;

    static hierarchy_tree from_json(const json& j);
    json to_json() const;

    // Structural validation plus derived fields. Throws DomainError,
    // MonotonicityViolation, WeightOutOfRange, or TooLarge.
    void finalize();

    bool is_leaf(int idx) const { return nodes[idx].children.empty(); }
    int leaf_of(vertex u) const;  // throws UnknownVertex
    int lca(int a, int b) const;  // node indices
};

// Splices out every single-child node (the child is promoted); pairwise edge
// weights are unchanged because a single-child node is never a lowest common
// ancestor. Idempotent; surviving nodes keep their ids and order.
hierarchy_tree normalize_tree(const hierarchy_tree& t);

double edge_weight(const hierarchy_tree& t, vertex u, vertex v);

// Explicit edge list of every positive-weight pair (deterministic mode).
weighted_graph materialize(const hierarchy_tree& t);

// Each positive-probability pair kept independently with its LCA weight
// (stochastic mode). Pairs are visited in a canonical order with one uniform
// draw each, so equal seeds give identical adjacency.
sampled_graph sample(const hierarchy_tree& t, std::uint64_t seed);

}  // namespace cascadelab
