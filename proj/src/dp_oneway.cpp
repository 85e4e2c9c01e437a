#include "cascadelab/dp_oneway.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cascadelab/errors.hpp"
#include "cascadelab/rng.hpp"

namespace cascadelab {

namespace {
constexpr double inf = std::numeric_limits<double>::infinity();
}

void oneway_instance::validate() const {
    if (tree.mode != tree_mode::deterministic)
        throw ModeMismatch("one-way influence needs a deterministic tree");
    for (int idx : tree.pre_order)
        if (tree.nodes[size_t(idx)].children.size() == 1)
            throw DomainError("tree must be normalized (no single-child nodes)");
    if (theta.size() != size_t(tree.n_vertices))
        throw DomainError("threshold vector does not match vertex count");
    for (double t : theta)
        if (!(t >= 0.0) || t == inf) throw DomainError("thresholds must be finite and >= 0");
    if (k < 0 || k > tree.n_vertices) throw DomainError("budget out of range");
}

json seed_plan::to_json() const {
    json j;
    json s = json::array();
    for (vertex v : seeds) s.push_back(v);
    j["seeds"] = s;
    json g = json::object();
    for (const auto& [id, sign] : signs) g[std::to_string(id)] = std::string(1, sign);
    j["signs"] = g;
    j["nu"] = nu;
    return j;
}

seed_plan seed_plan::from_json(const json& j) {
    seed_plan p;
    for (const auto& v : j.at("seeds")) p.seeds.push_back(v.get<vertex>());
    for (const auto& [key, val] : j.at("signs").items()) {
        std::string s = val.get<std::string>();
        if (s != "+" && s != "-") throw DomainError("sign must be '+' or '-'");
        p.signs[std::stoll(key)] = s[0];
    }
    p.nu = j.at("nu").get<long long>();
    return p;
}

double leaf_init(std::vector<double> block, double w, int i, long long nu, leaf_model model) {
    long long b = (long long)block.size();
    if (nu > b) return inf;
    if (nu <= 0) return 0.0;
    if (i > b) i = int(b);
    std::sort(block.begin(), block.end());
    if (model == leaf_model::plain) {
        long long zero = 0;
        for (double t : block)
            if (t - double(i) * w <= 0.0) ++zero;
        if (nu <= zero + i) return 0.0;
        return block[size_t(nu - i - 1)] - double(i) * w;  // (nu-i)-th smallest updated
    }
    // chained: the j-th cheapest non-seed fires after j-1 block mates joined
    long long need = nu - i;
    if (need <= 0) return 0.0;
    double gamma = 0.0;
    for (long long j = 1; j <= need; ++j)
        gamma = std::max(gamma, block[size_t(j - 1)] - double(i) * w - double(j - 1) * w);
    return std::max(0.0, gamma);
}

dp_table dp_solve(const oneway_instance& inst, leaf_model model) {
    inst.validate();
    const auto& tree = inst.tree;
    dp_table tab;
    tab.k = inst.k;
    tab.icap.resize(tree.nodes.size());
    tab.nucap.resize(tree.nodes.size());
    tab.H.resize(tree.nodes.size());
    tab.pick.resize(tree.nodes.size());

    // children appear after their parent in pre-order: sweep in reverse
    for (auto it = tree.pre_order.rbegin(); it != tree.pre_order.rend(); ++it) {
        int idx = *it;
        const auto& nd = tree.nodes[size_t(idx)];
        long long vcount = nd.v_end - nd.v_begin;
        int icap = int(std::min<long long>(inst.k, vcount));
        long long nucap = vcount;
        tab.icap[size_t(idx)] = icap;
        tab.nucap[size_t(idx)] = nucap;
        auto& H = tab.H[size_t(idx)];
        H.assign(size_t(icap + 1) * size_t(nucap + 1), 0.0);

        if (nd.children.empty()) {
            std::vector<double> block(inst.theta.begin() + nd.v_begin,
                                      inst.theta.begin() + nd.v_end);
            for (int i = 0; i <= icap; ++i)
                for (long long nu = 0; nu <= nucap; ++nu)
                    H[size_t(i) * size_t(nucap + 1) + size_t(nu)] =
                        leaf_init(block, nd.weight, i, nu, model);
            continue;
        }

        int li = nd.children[0], ri = nd.children[1];
        double w = nd.weight;
        int licap = tab.icap[size_t(li)], ricap = tab.icap[size_t(ri)];
        long long lncap = tab.nucap[size_t(li)], rncap = tab.nucap[size_t(ri)];
        const auto& HL = tab.H[size_t(li)];
        const auto& HR = tab.H[size_t(ri)];
        auto& pick = tab.pick[size_t(idx)];
        pick.assign(size_t(icap + 1) * size_t(nucap + 1), {});

        for (int i = 0; i <= icap; ++i)
            for (long long nu = 0; nu <= nucap; ++nu) {
                double best = inf;
                dp_table::choice bc;
                for (char sign : {'+', '-'})
                    for (int il = std::max(0, i - ricap); il <= std::min(i, licap); ++il) {
                        int ir = i - il;
                        long long nl_lo = std::max<long long>(0, nu - rncap);
                        long long nl_hi = std::min(nu, lncap);
                        for (long long nl = nl_lo; nl <= nl_hi; ++nl) {
                            long long nr = nu - nl;
                            double hl = HL[size_t(il) * size_t(lncap + 1) + size_t(nl)];
                            double hr = HR[size_t(ir) * size_t(rncap + 1) + size_t(nr)];
                            double cand;
                            if (sign == '+')  // left block feeds the right one
                                cand = std::max(hl, std::max(0.0, hr - double(nl) * w));
                            else
                                cand = std::max(std::max(0.0, hl - double(nr) * w), hr);
                            if (cand < best) {
                                best = cand;
                                bc = {sign, il, nl};
                            }
                        }
                    }
                H[size_t(i) * size_t(nucap + 1) + size_t(nu)] = best;
                pick[size_t(i) * size_t(nucap + 1) + size_t(nu)] = bc;
            }
    }
    return tab;
}

long long dp_table::best_nu(const hierarchy_tree& tree) const {
    int root = tree.root;
    for (long long nu = nucap[size_t(root)]; nu >= 0; --nu)
        if (at(root, k, nu) == 0.0) return nu;
    return 0;
}

seed_plan reconstruct(const oneway_instance& inst, const dp_table& tab, long long nu_target) {
    const auto& tree = inst.tree;
    if (nu_target < 0 || tab.at(tree.root, inst.k, nu_target) != 0.0)
        throw InfeasibleTarget("target count is not certified feasible at budget k");
    seed_plan plan;
    plan.nu = nu_target;
    if (nu_target == 0) {  // nothing to infect: no seeds, default signs
        for (int idx : tree.pre_order)
            if (tree.nodes[size_t(idx)].children.size() == 2)
                plan.signs[tree.nodes[size_t(idx)].id] = '+';
        return plan;
    }

    struct frame {
        int node;
        int i;
        long long nu;
    };
    std::vector<frame> stack{{tree.root, std::min(inst.k, tab.icap[size_t(tree.root)]), nu_target}};
    while (!stack.empty()) {
        auto [idx, i, nu] = stack.back();
        stack.pop_back();
        const auto& nd = tree.nodes[size_t(idx)];
        if (nd.children.empty()) {
            // seeds on the i highest thresholds; ties broken toward smaller ids
            std::vector<vertex> order;
            for (vertex v = nd.v_begin; v < nd.v_end; ++v) order.push_back(v);
            std::stable_sort(order.begin(), order.end(), [&](vertex a, vertex b) {
                return inst.theta[size_t(a)] > inst.theta[size_t(b)];
            });
            for (int j = 0; j < i && j < (int)order.size(); ++j) plan.seeds.push_back(order[size_t(j)]);
            continue;
        }
        auto c = tab.pick[size_t(idx)][size_t(i) * size_t(tab.nucap[size_t(idx)] + 1) + size_t(nu)];
        plan.signs[nd.id] = c.sign;
        stack.push_back({nd.children[0], c.i_left, c.nu_left});
        stack.push_back({nd.children[1], i - c.i_left, nu - c.nu_left});
    }
    std::sort(plan.seeds.begin(), plan.seeds.end());
    return plan;
}

namespace {

// cross-block pairs oriented by their LCA's sign; intra-block cliques stay
// undirected
weighted_graph oriented_graph(const hierarchy_tree& tree, const seed_plan& plan) {
    weighted_graph g;
    g.n = tree.n_vertices;
    for (int idx : tree.pre_order) {
        const auto& nd = tree.nodes[size_t(idx)];
        if (!(nd.weight > 0.0)) continue;
        if (nd.children.empty()) {
            for (vertex u = nd.v_begin; u < nd.v_end; ++u)
                for (vertex v = u + 1; v < nd.v_end; ++v)
                    g.edges.push_back({u, v, nd.weight, false});
        } else if (nd.children.size() == 2) {
            auto it = plan.signs.find(nd.id);
            if (it == plan.signs.end())
                throw DomainError("plan is missing a sign for node " + std::to_string(nd.id));
            bool forward = it->second == '+';
            const auto& a = tree.nodes[size_t(nd.children[0])];
            const auto& b = tree.nodes[size_t(nd.children[1])];
            for (vertex u = a.v_begin; u < a.v_end; ++u)
                for (vertex v = b.v_begin; v < b.v_end; ++v) {
                    if (forward)
                        g.edges.push_back({u, v, nd.weight, true});
                    else
                        g.edges.push_back({v, u, nd.weight, true});
                }
        }
    }
    return g;
}

}  // namespace

long long verify_plan(const oneway_instance& inst, const seed_plan& plan) {
    inst.validate();
    if ((int)plan.seeds.size() > inst.k) throw DomainError("plan uses more seeds than the budget");
    cascade_instance ci{oriented_graph(inst.tree, plan), influence_spec::linear(),
                        threshold_spec::degenerate(inst.theta), inst.k};
    return run_cascade(ci, inst.theta, plan.seeds).infected_count;
}

std::pair<long long, seed_plan> brute_force_oneway(const oneway_instance& inst, long long cap) {
    inst.validate();
    std::vector<int> internals;
    for (int idx : inst.tree.pre_order)
        if (inst.tree.nodes[size_t(idx)].children.size() == 2) internals.push_back(idx);
    if (internals.size() > 62) throw TooLarge("too many sign assignments");

    vertex n = inst.tree.n_vertices;
    double combos = std::pow(2.0, double(internals.size()));
    double sets = 1.0;
    for (int j = 0; j < inst.k; ++j) sets = sets * double(n - j) / double(j + 1);
    if (combos * sets > double(cap)) throw TooLarge("sign/seed enumeration over the cap");

    long long best = -1;
    seed_plan best_plan;
    std::vector<vertex> comb(size_t(inst.k));
    for (uint64_t mask = 0; mask < (uint64_t(1) << internals.size()); ++mask) {
        seed_plan plan;
        for (size_t b = 0; b < internals.size(); ++b)
            plan.signs[inst.tree.nodes[size_t(internals[b])].id] = (mask >> b) & 1 ? '-' : '+';
        cascade_instance ci{oriented_graph(inst.tree, plan), influence_spec::linear(),
                            threshold_spec::degenerate(inst.theta), inst.k};
        // k-combinations in lexicographic order
        for (int j = 0; j < inst.k; ++j) comb[size_t(j)] = j;
        while (true) {
            long long got = run_cascade(ci, inst.theta, comb).infected_count;
            if (got > best) {
                best = got;
                best_plan = plan;
                best_plan.seeds = comb;
                best_plan.nu = got;
            }
            if (inst.k == 0) break;
            int j = inst.k - 1;
            while (j >= 0 && comb[size_t(j)] == n - inst.k + j) --j;
            if (j < 0) break;
            ++comb[size_t(j)];
            for (int l = j + 1; l < inst.k; ++l) comb[size_t(l)] = comb[size_t(l - 1)] + 1;
        }
        if (internals.empty()) break;
    }
    return {best, best_plan};
}

oneway_instance random_oneway_instance(vertex n, int k, uint64_t seed) {
    rng r(seed);
    oneway_instance inst;
    inst.k = k;
    inst.tree.mode = tree_mode::deterministic;

    // random full binary splits over [0, n) with weights growing away from the
    // root; blocks close when small or by coin flip
    struct span {
        vertex lo, hi;
        double w;
        int parent_slot;  // index into nodes, -1 for root
    };
    auto& nodes = inst.tree.nodes;
    std::vector<span> todo{{0, n, 0.1 + 0.2 * r.u01(), -1}};
    while (!todo.empty()) {
        span s = todo.back();
        todo.pop_back();
        int me = int(nodes.size());
        tree_node nd;
        nd.id = me;
        nd.weight = s.w;
        if (s.parent_slot >= 0) nodes[size_t(s.parent_slot)].children.push_back(me);
        vertex len = s.hi - s.lo;
        if (len <= 2 || r.u01() < 0.3) {
            nd.block = len;
            nodes.push_back(nd);
            continue;
        }
        nodes.push_back(nd);
        vertex cut = s.lo + 1 + vertex(r.below(uint64_t(len - 1)));
        double wl = s.w + 0.25 * r.u01();
        double wr = s.w + 0.25 * r.u01();
        // push right first so the left child lands first in the children list
        todo.push_back({cut, s.hi, wr, me});
        todo.push_back({s.lo, cut, wl, me});
    }
    inst.tree.finalize();

    inst.theta.resize(size_t(n));
    for (vertex v = 0; v < n; ++v) {
        double w_leaf = inst.tree.nodes[size_t(inst.tree.leaf_of(v))].weight;
        inst.theta[size_t(v)] = (0.2 + 2.3 * r.u01()) * w_leaf;
    }
    return inst;
}

}  // namespace cascadelab
