#include "cascadelab/hierarchy.hpp"

#include <algorithm>
#include <unordered_map>

#include "cascadelab/errors.hpp"
#include "cascadelab/rng.hpp"

namespace cascadelab {

hierarchy_tree hierarchy_tree::from_json(const json& j) {
    if (!j.is_object()) throw DomainError("tree file must be a JSON object");
    hierarchy_tree t;
    std::string mode = j.value("mode", "");
    if (mode == "deterministic")
        t.mode = tree_mode::deterministic;
    else if (mode == "stochastic")
        t.mode = tree_mode::stochastic;
    else
        throw DomainError("tree mode must be 'deterministic' or 'stochastic'");
    if (!j.contains("nodes") || !j.at("nodes").is_array())
        throw DomainError("tree file needs a 'nodes' array");

    const auto& jn = j.at("nodes");
    if (jn.size() > node_cap) throw TooLarge("tree file exceeds the node cap");
    std::unordered_map<long long, int> index;
    for (const auto& e : jn) {
        tree_node nd;
        if (!e.is_object() || !e.contains("id") || !e.contains("weight"))
            throw DomainError("tree node needs 'id' and 'weight'");
        nd.id = e.at("id").get<long long>();
        nd.weight = e.at("weight").get<double>();
        nd.block = e.value("block_size", 0ll);
        if (!index.emplace(nd.id, int(t.nodes.size())).second)
            throw DomainError("duplicate node id " + std::to_string(nd.id));
        t.nodes.push_back(std::move(nd));
    }
    // second pass: children ids -> indices
    for (size_t i = 0; i < jn.size(); ++i) {
        const auto& e = jn[i];
        if (!e.contains("children") || e.at("children").is_null()) continue;
        if (!e.at("children").is_array()) throw DomainError("'children' must be an array or null");
        for (const auto& c : e.at("children")) {
            auto it = index.find(c.get<long long>());
            if (it == index.end())
                throw DomainError("unknown child id " + c.dump());
            t.nodes[i].children.push_back(it->second);
        }
    }
    t.finalize();
    return t;
}

json hierarchy_tree::to_json() const {
    json j;
    j["mode"] = mode == tree_mode::deterministic ? "deterministic" : "stochastic";
    json arr = json::array();
    for (const auto& nd : nodes) {
        json e;
        e["id"] = nd.id;
        e["weight"] = nd.weight;
        if (nd.children.empty()) {
            e["children"] = nullptr;
            e["block_size"] = nd.block;
        } else {
            json cs = json::array();
            for (int c : nd.children) cs.push_back(nodes[c].id);
            e["children"] = cs;
        }
        arr.push_back(e);
    }
    j["nodes"] = arr;
    return j;
}

void hierarchy_tree::finalize() {
    if (nodes.empty()) throw DomainError("tree has no nodes");
    if (nodes.size() > node_cap) throw TooLarge("tree exceeds the node cap");

    for (auto& nd : nodes) {
        nd.parent = -1;
        if (nd.children.size() > 2)
            throw DomainError("node " + std::to_string(nd.id) + " has more than 2 children");
        if (nd.weight < 0.0)
            throw DomainError("negative weight on node " + std::to_string(nd.id));
        if (mode == tree_mode::stochastic && nd.weight > 1.0)
            throw WeightOutOfRange("stochastic weight above 1 on node " + std::to_string(nd.id));
        if (nd.children.empty()) {
            if (nd.block < 1)
                throw DomainError("leaf " + std::to_string(nd.id) + " needs block_size >= 1");
        } else if (nd.block != 0) {
            throw DomainError("internal node " + std::to_string(nd.id) + " carries block_size");
        }
    }
    for (size_t i = 0; i < nodes.size(); ++i)
        for (int c : nodes[i].children) {
            if (nodes[c].parent != -1)
                throw DomainError("node " + std::to_string(nodes[c].id) + " has two parents");
            nodes[c].parent = int(i);
        }
    root = -1;
    for (size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].parent == -1) {
            if (root != -1) throw DomainError("tree has multiple roots");
            root = int(i);
        }
    if (root == -1) throw DomainError("tree has no root (cycle)");

    pre_order.clear();
    leaves.clear();
    pre_order.reserve(nodes.size());
    std::vector<int> stack{root};
    vertex next_vertex = 0;
    while (!stack.empty()) {
        int idx = stack.back();
        stack.pop_back();
        auto& nd = nodes[idx];
        nd.depth = nd.parent == -1 ? 0 : nodes[nd.parent].depth + 1;
        if (nd.parent != -1 && nd.weight < nodes[nd.parent].weight)
            throw MonotonicityViolation("weight decreases from node " +
                                        std::to_string(nodes[nd.parent].id) + " to node " +
                                        std::to_string(nd.id));
        pre_order.push_back(idx);
        if (nd.children.empty()) {
            nd.v_begin = next_vertex;
            next_vertex += vertex(nd.block);
            nd.v_end = next_vertex;
            leaves.push_back(idx);
        }
        for (auto it = nd.children.rbegin(); it != nd.children.rend(); ++it)
            stack.push_back(*it);
    }
    if (pre_order.size() != nodes.size())
        throw DomainError("tree has unreachable nodes (cycle)");
    n_vertices = next_vertex;
    // subtree ranges: children appear after their parent in pre-order, so a
    // reverse sweep sees every child before its parent
    for (auto it = pre_order.rbegin(); it != pre_order.rend(); ++it) {
        auto& nd = nodes[*it];
        if (!nd.children.empty()) {
            nd.v_begin = nodes[nd.children.front()].v_begin;
            nd.v_end = nodes[nd.children.back()].v_end;
        }
    }
}

int hierarchy_tree::leaf_of(vertex u) const {
    if (u < 0 || u >= n_vertices)
        throw UnknownVertex("vertex " + std::to_string(u) + " out of range");
    auto it = std::upper_bound(leaves.begin(), leaves.end(), u,
                               [&](vertex x, int idx) { return x < nodes[idx].v_begin; });
    return *std::prev(it);
}

int hierarchy_tree::lca(int a, int b) const {
    while (nodes[a].depth > nodes[b].depth) a = nodes[a].parent;
    while (nodes[b].depth > nodes[a].depth) b = nodes[b].parent;
    while (a != b) {
        a = nodes[a].parent;
        b = nodes[b].parent;
    }
    return a;
}

hierarchy_tree normalize_tree(const hierarchy_tree& t) {
    // resolve every node to its first descendant with 0 or 2 children
    std::vector<int> target(t.nodes.size());
    for (size_t i = 0; i < t.nodes.size(); ++i) {
        int idx = int(i);
        while (t.nodes[idx].children.size() == 1) idx = t.nodes[idx].children[0];
        target[i] = idx;
    }
    std::vector<int> new_index(t.nodes.size(), -1);
    hierarchy_tree out;
    out.mode = t.mode;
    for (size_t i = 0; i < t.nodes.size(); ++i) {
        if (t.nodes[i].children.size() == 1) continue;
        new_index[i] = int(out.nodes.size());
        tree_node nd;
        nd.id = t.nodes[i].id;
        nd.weight = t.nodes[i].weight;
        nd.block = t.nodes[i].block;
        out.nodes.push_back(std::move(nd));
    }
    for (size_t i = 0; i < t.nodes.size(); ++i) {
        if (new_index[i] == -1) continue;
        for (int c : t.nodes[i].children)
            out.nodes[new_index[i]].children.push_back(new_index[target[c]]);
    }
    out.finalize();
    return out;
}

double edge_weight(const hierarchy_tree& t, vertex u, vertex v) {
    if (u == v) throw DomainError("edge weight needs two distinct vertices");
    int lu = t.leaf_of(u), lv = t.leaf_of(v);
    if (lu == lv) return t.nodes[lu].weight;
    return t.nodes[t.lca(lu, lv)].weight;
}

namespace {

constexpr long long pair_cap = 50'000'000;  // materialized/sampled pair budget

// counts candidate pairs (positive-weight) before generating anything
long long count_pairs(const hierarchy_tree& t) {
    long long total = 0;
    for (int idx : t.pre_order) {
        const auto& nd = t.nodes[idx];
        if (!(nd.weight > 0.0)) continue;
        if (nd.children.empty()) {
            total += nd.block * (nd.block - 1) / 2;
        } else if (nd.children.size() == 2) {
            const auto& a = t.nodes[nd.children[0]];
            const auto& b = t.nodes[nd.children[1]];
            total += (long long)(a.v_end - a.v_begin) * (b.v_end - b.v_begin);
        }
    }
    return total;
}

// visits candidate pairs in canonical order: nodes in pre-order, leaf cliques
// by ascending (u, v), cross pairs left-range-major
template <class F>
void for_each_pair(const hierarchy_tree& t, F&& f) {
    for (int idx : t.pre_order) {
        const auto& nd = t.nodes[idx];
        if (!(nd.weight > 0.0)) continue;
        if (nd.children.empty()) {
            for (vertex u = nd.v_begin; u < nd.v_end; ++u)
                for (vertex v = u + 1; v < nd.v_end; ++v) f(u, v, nd.weight);
        } else if (nd.children.size() == 2) {
            const auto& a = t.nodes[nd.children[0]];
            const auto& b = t.nodes[nd.children[1]];
            for (vertex u = a.v_begin; u < a.v_end; ++u)
                for (vertex v = b.v_begin; v < b.v_end; ++v) f(u, v, nd.weight);
        }
    }
}

}  // namespace

weighted_graph materialize(const hierarchy_tree& t) {
    if (t.mode != tree_mode::deterministic)
        throw ModeMismatch("materialize needs a deterministic tree");
    long long pairs = count_pairs(t);
    if (pairs > pair_cap) throw TooLarge("materialization exceeds the pair budget");
    weighted_graph g;
    g.n = t.n_vertices;
    g.edges.reserve(size_t(pairs));
    for_each_pair(t, [&](vertex u, vertex v, double w) { g.edges.push_back({u, v, w, false}); });
    g.vertex_leaf.resize(size_t(t.n_vertices));
    for (size_t li = 0; li < t.leaves.size(); ++li) {
        const auto& nd = t.nodes[t.leaves[li]];
        for (vertex u = nd.v_begin; u < nd.v_end; ++u) g.vertex_leaf[size_t(u)] = int(li);
    }
    return g;
}

sampled_graph sample(const hierarchy_tree& t, std::uint64_t seed) {
    if (t.mode != tree_mode::stochastic)
        throw ModeMismatch("sample needs a stochastic tree");
    for (const auto& nd : t.nodes)
        if (nd.weight < 0.0 || nd.weight > 1.0)
            throw WeightOutOfRange("edge probability outside [0,1]");
    if (count_pairs(t) > pair_cap) throw TooLarge("sampling exceeds the pair budget");
    sampled_graph g;
    g.n = t.n_vertices;
    g.seed = seed;
    rng r(derive_seed(seed, 0x74726565 /* "tree" */, 0));
    for_each_pair(t, [&](vertex u, vertex v, double w) {
        if (r.u01() < w) g.edges.emplace_back(u, v);
    });
    return g;
}

}  // namespace cascadelab
