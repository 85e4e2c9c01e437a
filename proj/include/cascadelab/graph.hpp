#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cascadelab {

using vertex = int;

struct graph_edge {
    vertex u = 0, v = 0;
    double w = 1.0;
    bool directed = false;  // influence flows u -> v only (gadget wiring)
};

// Edge-list graph. Undirected edges are stored once with u < v.
struct weighted_graph {
    vertex n = 0;
    std::vector<graph_edge> edges;
    std::vector<int> vertex_leaf;  // leaf index per vertex when tree-born, else empty

    std::string to_tsv() const;
    static weighted_graph from_tsv(const std::string& text);
};

struct sampled_graph {
    vertex n = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<vertex, vertex>> edges;  // u < v

    std::string to_tsv() const;  // weight column fixed at 1
    weighted_graph as_weighted() const;
};

}  // namespace cascadelab
