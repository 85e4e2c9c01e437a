#include "cascadelab/reductions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "cascadelab/errors.hpp"
#include "cascadelab/gadgets.hpp"
#include "cascadelab/parallel.hpp"
#include "cascadelab/rng.hpp"

namespace cascadelab {

namespace {

constexpr uint64_t stream_yes = 0x79657376;    // per-trial draws in verify_yes_strategy
constexpr uint64_t stream_nogap = 0x6e6f6770;  // heuristic probe sets
constexpr uint64_t stream_good = 0x676f6f64;   // good-sample pair draws

constexpr long long desk_vertex_cap = 1LL << 20;
constexpr long long desk_edge_cap = 1LL << 23;
constexpr long long desk_scale_cap = 1LL << 40;  // keeps every scaled weight exact in a double

// C(n, k), clamped to cap + 1 on overflow or overrun.
long long comb_capped(long long n, long long k, long long cap) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    __int128 r = 1;
    for (long long i = 1; i <= k; ++i) {
        r = r * __int128(n - k + i) / i;
        if (r > cap) return cap + 1;
    }
    return (long long)r;
}

// Advances k sorted indices over [0, n); false once exhausted.
bool next_combination(std::vector<int>& c, int n) {
    int k = int(c.size());
    for (int i = k - 1; i >= 0; --i) {
        if (c[size_t(i)] < n - k + i) {
            ++c[size_t(i)];
            for (int j = i + 1; j < k; ++j) c[size_t(j)] = c[size_t(j - 1)] + 1;
            return true;
        }
    }
    return false;
}

void push_undirected(weighted_graph& g, vertex u, vertex v, double w = 1.0) {
    g.edges.push_back({std::min(u, v), std::max(u, v), w, false});
}

void push_directed(weighted_graph& g, vertex u, vertex v, double w = 1.0) {
    g.edges.push_back({u, v, w, true});
}

// Appends a gadget template to g. Template vertices listed in `pin` take the
// given existing ids; every other template vertex gets a fresh id in template
// order. Returns the full template-to-instance map.
std::vector<vertex> stamp_gadget(weighted_graph& g, const gadget& tpl,
                                 const std::vector<std::pair<vertex, vertex>>& pin) {
    auto map = std::vector<vertex>(size_t(tpl.graph.n), vertex(-1));
    for (const auto& [t, real] : pin) map[size_t(t)] = real;
    for (vertex t = 0; t < tpl.graph.n; ++t)
        if (map[size_t(t)] < 0) map[size_t(t)] = g.n++;
    for (const auto& e : tpl.graph.edges) {
        vertex u = map[size_t(e.u)], v = map[size_t(e.v)];
        if (e.directed)
            push_directed(g, u, v, e.w);
        else
            push_undirected(g, u, v, e.w);
    }
    return map;
}

std::string variant_name(setcover_variant v) {
    switch (v) {
        case setcover_variant::directed: return "setcover_directed";
        case setcover_variant::undirected: return "setcover_undirected";
        case setcover_variant::a1zero: return "setcover_a1zero";
    }
    return "";
}

// Fan-in block response for a1 = 0: Lambda0 junctions each firing with
// q = a2 x^2, combined through the a-sequence (the i = 1 term vanishes).
double a1zero_block_map(double x, int lambda0, const a_sequence& a) {
    double q = a.a2() * x * x;
    double sum = 0.0, c = 1.0;
    for (int i = 1; i <= lambda0; ++i) {
        c = c * double(lambda0 - i + 1) / double(i);
        double term = c * std::pow(q, i) * std::pow(1.0 - q, lambda0 - i);
        if (i >= 2) sum += a.at(size_t(i)) * term;
    }
    return sum;
}

json range_json(long long lo, long long hi) { return json::array({lo, hi}); }

}  // namespace

// ---------------------------------------------------------------------------
// decision inputs

vc_instance vc_instance::from_json(const json& j) {
    vc_instance vc;
    vc.n = j.at("n").get<int>();
    vc.kbar = j.at("k").get<int>();
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2)
            throw DomainError("each edge must be a [u, v] pair");
        vc.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }
    vc.validate();
    return vc;
}

json vc_instance::to_json() const {
    json es = json::array();
    for (const auto& [u, v] : edges) es.push_back(json::array({u, v}));
    return {{"n", n}, {"edges", es}, {"k", kbar}};
}

void vc_instance::validate() const {
    if (n < 1) throw DomainError("vertex count must be positive");
    if (kbar < 0 || kbar > n) throw DomainError("cover budget must lie in [0, n]");
    if (edges.empty()) throw DomainError("edge list must be non-empty");
    for (const auto& [u, v] : edges) {
        if (u < 1 || u > n || v < 1 || v > n)
            throw UnknownVertex("edge endpoint out of range");
        if (u == v) throw DomainError("self-loops are not allowed");
    }
}

bool vc_instance::has_cover(std::vector<int>* witness) const {
    validate();
    if (comb_capped(n, kbar, 2'000'000) > 2'000'000)
        throw TooLarge("cover enumeration exceeds the desk cap");
    auto covers = [&](const std::vector<int>& set) {
        for (const auto& [u, v] : edges) {
            bool hit = false;
            for (int s : set)
                if (s == u || s == v) hit = true;
            if (!hit) return false;
        }
        return true;
    };
    if (kbar == 0) {
        bool ok = covers({});
        if (ok && witness) witness->clear();
        return ok;
    }
    auto idx = std::vector<int>(size_t(kbar));
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> best;
    bool found = false;
    do {
        std::vector<int> set;
        for (int i : idx) set.push_back(i + 1);
        if (!covers(set)) continue;
        bool best_uses_1 = std::find(best.begin(), best.end(), 1) != best.end();
        bool set_uses_1 = std::find(set.begin(), set.end(), 1) != set.end();
        // keep the first cover, upgraded once to the first one avoiding vertex 1
        if (!found || (best_uses_1 && !set_uses_1)) best = set;
        found = true;
    } while (next_combination(idx, n));
    if (found && witness) *witness = best;
    return found;
}

sc_instance sc_instance::from_json(const json& j) {
    sc_instance sc;
    sc.n = j.at("n").get<int>();
    sc.k = j.at("k").get<int>();
    for (const auto& s : j.at("subsets")) {
        if (!s.is_array()) throw DomainError("each subset must be an element array");
        sc.subsets.push_back(s.get<std::vector<int>>());
    }
    sc.validate();
    return sc;
}

json sc_instance::to_json() const {
    json ss = json::array();
    for (const auto& s : subsets) ss.push_back(s);
    return {{"n", n}, {"subsets", ss}, {"k", k}};
}

void sc_instance::validate() const {
    if (n < 1) throw DomainError("universe size must be positive");
    if (subsets.empty()) throw DomainError("subset list must be non-empty");
    if (k < 0 || k > int(subsets.size()))
        throw DomainError("selection budget must lie in [0, #subsets]");
    auto seen = std::vector<char>(size_t(n) + 1, 0);
    for (const auto& s : subsets)
        for (int e : s) {
            if (e < 1 || e > n) throw DomainError("subset element out of range");
            seen[size_t(e)] = 1;
        }
    for (int e = 1; e <= n; ++e)
        if (!seen[size_t(e)])
            throw AssumptionViolation("every universe element must appear in some subset");
}

sc_instance sc_instance::padded() const {
    validate();
    int n2 = 2;
    while (n2 < n) n2 *= 2;
    sc_instance out;
    out.n = n2;
    out.k = k;
    for (const auto& s : subsets) {
        std::vector<int> t = s;
        std::sort(t.begin(), t.end());
        t.erase(std::unique(t.begin(), t.end()), t.end());
        for (int e = n + 1; e <= n2; ++e) t.push_back(e);
        out.subsets.push_back(std::move(t));
    }
    return out;
}

bool sc_instance::has_cover(std::vector<int>* witness) const {
    validate();
    int K = int(subsets.size());
    if (comb_capped(K, k, 2'000'000) > 2'000'000)
        throw TooLarge("cover enumeration exceeds the desk cap");
    auto covers = [&](const std::vector<int>& pick) {
        auto seen = std::vector<char>(size_t(n) + 1, 0);
        for (int i : pick)
            for (int e : subsets[size_t(i)]) seen[size_t(e)] = 1;
        for (int e = 1; e <= n; ++e)
            if (!seen[size_t(e)]) return false;
        return true;
    };
    if (k == 0) {
        bool ok = covers({});
        if (ok && witness) witness->clear();
        return ok;
    }
    auto idx = std::vector<int>(size_t(k));
    std::iota(idx.begin(), idx.end(), 0);
    do {
        if (covers(idx)) {
            if (witness) {
                witness->clear();
                for (int i : idx) witness->push_back(i + 1);
            }
            return true;
        }
    } while (next_combination(idx, K));
    return false;
}

// ---------------------------------------------------------------------------
// one-clique-per-vertex family (deterministic tree, linear influence)

json hbm_resolve_params(const vc_instance& vc, const hbm_params& p) {
    vc.validate();
    long long n = vc.n, m = (long long)vc.edges.size(), kb = vc.kbar;
    long long W = p.W > 0 ? p.W : n * m;
    if (W < 2) throw DomainError("group size must be at least 2");
    long long base = n * (2 * W + m) - 1;
    long long M = p.M;
    bool m_default = (M == 0);
    if (m_default) {
        if (!(p.epsilon > 0.0 && p.epsilon <= 1.0))
            throw DomainError("exponent must lie in (0, 1]");
        double Md = std::pow(double(base), 1.0 / p.epsilon);
        if (!(Md <= double(desk_scale_cap)))
            throw TooLarge("closed-form payoff block is astronomical; pass M explicitly");
        M = std::llround(Md);
    }
    if (M < 1) throw DomainError("payoff block must be non-empty");

    // incidence of graph vertex 1 with the last edge enters the margin rule
    auto inc = [&](long long i, long long j) {
        const auto& e = vc.edges[size_t(j - 1)];
        return (e.first == i || e.second == i) ? 1LL : 0LL;
    };
    auto num_at = [&](int t, long long i, long long j) {
        return (1LL << t) - (n + kb - 1) * W - (n - 1) * (j - 1) - 2 + inc(i, j);
    };
    // delta = 1/2^t; the bottom chain weight must stay positive and dominate the
    // cross-group weights by a factor of ten
    auto margin_ok = [&](int t) {
        long long n1m = num_at(t, 1, m);
        if (n1m <= 0) return false;
        __int128 lhs = __int128(10) * (W - 1 + m) * ((n - 1) * (2 * W + m) * W + W + 1);
        return lhs < __int128(n1m) * W;
    };
    int t;
    if (p.delta > 0.0) {
        double l2 = -std::log2(p.delta);
        t = int(std::llround(l2));
        if (t < 1 || std::ldexp(1.0, -t) != p.delta)
            throw DomainError("delta must be a negative power of two");
        if (!margin_ok(t))
            throw AssumptionViolation("delta too large for the tenth-margin rule");
    } else {
        t = 1;
        while (t < 60 && !margin_ok(t)) ++t;
        if (!margin_ok(t)) throw TooLarge("no admissible delta before the scale cap");
    }
    long long lc = 1;
    for (long long d = W; d <= W - 1 + m; ++d) {
        lc = std::lcm(lc, d);
        if (lc > desk_scale_cap) throw TooLarge("weight denominators exceed the scale cap");
    }
    if (lc > desk_scale_cap >> t) throw TooLarge("scaled weights exceed the scale cap");
    long long D = lc << t;

    json out;
    out["n"] = n;
    out["m"] = m;
    out["kbar"] = kb;
    out["k"] = n + kb;
    out["W"] = W;
    out["M"] = M;
    out["M_default"] = m_default;
    out["epsilon"] = p.epsilon;
    out["t"] = t;
    out["delta"] = std::ldexp(1.0, -t);
    out["delta_str"] = "1/2^" + std::to_string(t);
    out["base"] = base;
    out["N"] = M + base;
    out["scale"] = D;
    return out;
}

reduction_bundle build_hbm_reduction(const vc_instance& vc, const hbm_params& p) {
    vc.validate();
    if (!(vc.n > vc.kbar))
        throw AssumptionViolation("needs more graph vertices than the cover budget");
    if (!((long long)vc.edges.size() > (long long)vc.n + vc.kbar))
        throw AssumptionViolation("needs more edges than vertices plus the cover budget");
    json rp = hbm_resolve_params(vc, p);
    const long long n = rp["n"], m = rp["m"], kb = rp["kbar"], W = rp["W"], M = rp["M"];
    const long long N = rp["N"], D = rp["scale"];
    const int t = rp["t"];
    if (N > 2048) throw TooLarge("dense construction is capped at 2048 vertices");

    auto inc = [&](long long i, long long j) {
        const auto& e = vc.edges[size_t(j - 1)];
        return (e.first == i || e.second == i) ? 1LL : 0LL;
    };
    // all weights as exact integers scaled by D = 2^t * lcm(W .. W-1+m)
    auto w_scaled = [&](long long i, long long j) {
        long long numv = (1LL << t) - (n + kb - 1) * W - (n - 1) * (j - 1) - 2 + inc(i, j);
        return numv * (D >> t) / (W - 1 + j);
    };
    const long long dS = D >> t;
    const long long drS = (D >> t) / W * (W + 1);

    // vertex layout, flattened per subtree: C_i, v_i1..v_im (B replaces v_1m), D_i
    auto c_lo = std::vector<long long>(size_t(n));
    auto d_lo = std::vector<long long>(size_t(n));
    auto v_id = std::vector<std::vector<long long>>(size_t(n), std::vector<long long>(size_t(m), -1));
    long long b_lo = -1, cur = 0;
    for (long long i = 0; i < n; ++i) {
        c_lo[size_t(i)] = cur;
        cur += W;
        for (long long j = 0; j < m; ++j) {
            if (i == 0 && j == m - 1) {
                b_lo = cur;
                cur += M;
            } else {
                v_id[size_t(i)][size_t(j)] = cur++;
            }
        }
        d_lo[size_t(i)] = cur;
        cur += W;
    }
    if (cur != N) throw DomainError("layout size disagrees with the closed form");

    auto mat = std::vector<long long>(size_t(N) * size_t(N), 0);
    auto put = [&](const std::vector<long long>& g1, const std::vector<long long>& g2,
                   long long w) {
        for (long long u : g1)
            for (long long v : g2)
                if (u != v) {
                    mat[size_t(u) * size_t(N) + size_t(v)] = w;
                    mat[size_t(v) * size_t(N) + size_t(u)] = w;
                }
    };
    auto block = [](long long lo, long long cnt) {
        auto ids = std::vector<long long>(size_t(cnt));
        std::iota(ids.begin(), ids.end(), lo);
        return ids;
    };
    auto group = [&](long long i, long long j) {  // leaf group at chain level j
        if (i == 0 && j == m - 1) return block(b_lo, M);
        return block(v_id[size_t(i)][size_t(j)], 1);
    };
    for (long long i = 0; i < n; ++i) {
        put(block(c_lo[size_t(i)], W), block(c_lo[size_t(i)], W), D);
        put(block(d_lo[size_t(i)], W), block(d_lo[size_t(i)], W), D);
        if (i == 0) put(block(b_lo, M), block(b_lo, M), w_scaled(1, m));
        for (long long j = 0; j < m; ++j) {
            auto below = block(c_lo[size_t(i)], W);
            for (long long j2 = 0; j2 < j; ++j2)
                for (long long u : group(i, j2)) below.push_back(u);
            put(group(i, j), below, w_scaled(i + 1, j + 1));
        }
        auto rest = block(c_lo[size_t(i)], W);
        for (long long j = 0; j < m; ++j)
            for (long long u : group(i, j)) rest.push_back(u);
        put(block(d_lo[size_t(i)], W), rest, drS);
    }
    auto subtree = [&](long long i) {
        auto s = block(c_lo[size_t(i)], W);
        for (long long j = 0; j < m; ++j)
            for (long long u : group(i, j)) s.push_back(u);
        for (long long u : block(d_lo[size_t(i)], W)) s.push_back(u);
        return s;
    };
    for (long long i = 0; i < n; ++i)
        for (long long i2 = i + 1; i2 < n; ++i2) put(subtree(i), subtree(i2), dS);

    weighted_graph g;
    g.n = vertex(N);
    for (long long u = 0; u < N; ++u)
        for (long long v = u + 1; v < N; ++v)
            if (long long w = mat[size_t(u) * size_t(N) + size_t(v)]; w > 0)
                push_undirected(g, vertex(u), vertex(v), double(w));

    // the same weights as tree ratios; the artifact mirrors the dense graph
    hierarchy_tree tr;
    tr.mode = tree_mode::deterministic;
    auto add_node = [&](double w, long long blk, std::vector<int> ch) {
        tree_node nd;
        nd.id = (long long)tr.nodes.size();
        nd.weight = w;
        nd.block = blk;
        nd.children = std::move(ch);
        tr.nodes.push_back(std::move(nd));
        return int(tr.nodes.size() - 1);
    };
    const double dd = double(dS) / double(D);
    const double drd = double(drS) / double(D);
    auto roots = std::vector<int>();
    for (long long i = 0; i < n; ++i) {
        int chain = add_node(1.0, W, {});  // C_i
        for (long long j = 0; j < m; ++j) {
            int leaf = (i == 0 && j == m - 1)
                           ? add_node(double(w_scaled(1, m)) / double(D), M, {})
                           : add_node(1.0, 1, {});
            chain = add_node(double(w_scaled(i + 1, j + 1)) / double(D), 0, {chain, leaf});
        }
        int d_leaf = add_node(1.0, W, {});
        roots.push_back(add_node(drd, 0, {chain, d_leaf}));
    }
    auto bal = [&](auto&& self, long long lo, long long hi) -> int {
        if (hi - lo == 1) return roots[size_t(lo)];
        long long mid = lo + (hi - lo + 1) / 2;
        int l = self(self, lo, mid);
        int r = self(self, mid, hi);
        return add_node(dd, 0, {l, r});
    };
    bal(bal, 0, n);
    tr.finalize();

    reduction_bundle b;
    b.kind = "hbm";
    b.tree = std::move(tr);
    b.instance.graph = std::move(g);
    b.instance.influence = influence_spec::linear();
    b.instance.thresholds = threshold_spec::degenerate_uniform(vertex(N), double(D));
    b.instance.k = int(n + kb);
    std::vector<int> cov;
    if (vc.has_cover(&cov)) {
        for (long long i = 0; i < n; ++i) b.yes_strategy.push_back(vertex(c_lo[size_t(i)]));
        for (int i : cov) b.yes_strategy.push_back(vertex(d_lo[size_t(i - 1)]));
    }
    for (long long u = b_lo; u < b_lo + M; ++u) b.payoff_region.push_back(vertex(u));
    b.expected_yes_floor = M;
    b.expected_no_ceiling = N - M;

    json layout;
    layout["B"] = range_json(b_lo, b_lo + M);
    layout["C"] = json::array();
    layout["D"] = json::array();
    layout["v"] = json::array();
    for (long long i = 0; i < n; ++i) {
        layout["C"].push_back(range_json(c_lo[size_t(i)], c_lo[size_t(i)] + W));
        layout["D"].push_back(range_json(d_lo[size_t(i)], d_lo[size_t(i)] + W));
        layout["v"].push_back(v_id[size_t(i)]);
    }
    json ws = json::array();
    for (long long i = 1; i <= n; ++i) {
        json row = json::array();
        for (long long j = 1; j <= m; ++j) row.push_back(w_scaled(i, j));
        ws.push_back(row);
    }
    b.params = rp;
    b.params["layout"] = layout;
    b.params["w_scaled"] = ws;
    b.params["d_scaled"] = dS;
    b.params["droot_scaled"] = drS;
    b.params["threshold_scaled"] = D;
    b.params["vc"] = vc.to_json();
    b.params["cover"] = cov;
    return b;
}

// ---------------------------------------------------------------------------
// stochastic-tree family (counting influence, degenerate thresholds)

reduction_bundle build_shbm_reduction(const vc_instance& vc, const shbm_params& p) {
    vc.validate();
    const long long n = vc.n, m = (long long)vc.edges.size(), kb = vc.kbar;
    if (kb < 1) throw AssumptionViolation("cover budget must be positive");
    if (!(m > n)) throw AssumptionViolation("needs more edges than graph vertices");
    if (!(n > kb * kb + 2))
        throw AssumptionViolation("vertex count must exceed the squared budget plus two");
    if (n < 4 || (n & (n - 1)) != 0)
        throw AssumptionViolation("vertex count must be a power of two");
    const long long W = p.W;
    if (W < 2) throw DomainError("group scale must be at least 2");
    if (p.M < 1) throw DomainError("payoff block must be non-empty");
    const long long W2 = W * W, W3 = W2 * W, M = p.M;
    const long long k = kb * W2;
    const long long clique_base = kb * W2 + m * (n - 2) * W3;
    const long long N = n * clique_base + M;
    if (N > desk_vertex_cap) throw TooLarge("instance exceeds the vertex cap");
    if (k > std::numeric_limits<int>::max()) throw TooLarge("seed budget overflows");
    const double delta = 1.0 / (10.0 * double(m) * double(n) * double(n) * double(kb));
    const double Delta = 1.0 / (10.0 * double(kb));

    // layout: per clique i, the bistable block first, then the (j, iota) level
    // blocks j-major, then (clique 1 only) the payoff block last
    auto b_lo = std::vector<long long>(size_t(n));
    auto lvl_lo = std::vector<long long>(size_t(n) * size_t(m) * size_t(n - 2));
    auto lvl_index = [&](long long i, long long j, long long io) {
        return (size_t(i - 1) * size_t(m) + size_t(j - 1)) * size_t(n - 2) + size_t(io - 1);
    };
    long long c_lo = -1, cur = 0;
    auto clique_lo = std::vector<long long>(size_t(n));
    auto clique_hi = std::vector<long long>(size_t(n));
    for (long long i = 1; i <= n; ++i) {
        clique_lo[size_t(i - 1)] = cur;
        b_lo[size_t(i - 1)] = cur;
        cur += kb * W2;
        for (long long j = 1; j <= m; ++j)
            for (long long io = 1; io <= n - 2; ++io) {
                lvl_lo[lvl_index(i, j, io)] = cur;
                cur += W3;
            }
        if (i == 1) {
            c_lo = cur;
            cur += M;
        }
        clique_hi[size_t(i - 1)] = cur;
    }
    if (cur != N) throw DomainError("layout size disagrees with the closed form");

    // level thresholds: column offsets vanish on the edge's endpoints and cycle
    // 1..n-2 across the remaining columns, rotated by iota
    auto offset_of = [&](long long i, long long j, long long io) {
        long long a = vc.edges[size_t(j - 1)].first, b2 = vc.edges[size_t(j - 1)].second;
        if (a > b2) std::swap(a, b2);
        if (i == a || i == b2) return 0LL;
        long long pos = 0;
        for (long long v = 1; v < i; ++v)
            if (v != a && v != b2) ++pos;
        long long md = (pos - (io - 1)) % (n - 2);
        if (md < 0) md += n - 2;
        return md + 1;
    };
    auto theta = std::vector<double>(size_t(N), 0.0);
    for (long long i = 1; i <= n; ++i) {
        for (long long u = b_lo[size_t(i - 1)]; u < b_lo[size_t(i - 1)] + kb * W2; ++u)
            theta[size_t(u)] = std::numeric_limits<double>::infinity();
        for (long long j = 1; j <= m; ++j)
            for (long long io = 1; io <= n - 2; ++io) {
                long long idx = (j - 1) * (n - 2) + (io - 1);
                double omega = double(idx * W3) + double((n - 1) * idx * W2);
                double th = omega + (1.0 - Delta) * double(W2) +
                            double(offset_of(i, j, io) * W2);
                long long lo = lvl_lo[lvl_index(i, j, io)];
                for (long long u = lo; u < lo + W3; ++u) theta[size_t(u)] = th;
            }
    }
    double theta_c = double(m * (n - 2) * W3) + double((n - 1) * m * (n - 2) * W2) +
                     (1.0 - Delta) * double(W2);
    for (long long u = c_lo; u < c_lo + M; ++u) theta[size_t(u)] = theta_c;

    // stochastic tree: perfect binary over the n cliques, every internal 1/W
    hierarchy_tree tr;
    tr.mode = tree_mode::stochastic;
    auto add_node = [&](double w, long long blk, std::vector<int> ch) {
        tree_node nd;
        nd.id = (long long)tr.nodes.size();
        nd.weight = w;
        nd.block = blk;
        nd.children = std::move(ch);
        tr.nodes.push_back(std::move(nd));
        return int(tr.nodes.size() - 1);
    };
    auto leaves = std::vector<int>();
    for (long long i = 1; i <= n; ++i)
        leaves.push_back(add_node(1.0, clique_hi[size_t(i - 1)] - clique_lo[size_t(i - 1)], {}));
    auto bal = [&](auto&& self, long long lo, long long hi) -> int {
        if (hi - lo == 1) return leaves[size_t(lo)];
        long long mid = lo + (hi - lo) / 2;
        int l = self(self, lo, mid);
        int r = self(self, mid, hi);
        return add_node(1.0 / double(W), 0, {l, r});
    };
    bal(bal, 0, n);
    tr.finalize();

    reduction_bundle b;
    b.kind = "shbm";
    b.tree = std::move(tr);
    b.instance.influence = influence_spec::counting();
    b.instance.thresholds = threshold_spec::degenerate(std::move(theta));
    b.instance.k = int(k);
    std::vector<int> cov;
    if (vc.has_cover(&cov))
        for (int i : cov)
            for (long long u = b_lo[size_t(i - 1)]; u < b_lo[size_t(i - 1)] + W2; ++u)
                b.yes_strategy.push_back(vertex(u));
    for (long long u = c_lo; u < c_lo + M; ++u) b.payoff_region.push_back(vertex(u));
    b.expected_yes_floor = k + n * m * (n - 2) * W3 + M;
    b.expected_no_ceiling = N - M;

    json layout;
    layout["cliques"] = json::array();
    layout["B"] = json::array();
    for (long long i = 0; i < n; ++i) {
        layout["cliques"].push_back(range_json(clique_lo[size_t(i)], clique_hi[size_t(i)]));
        layout["B"].push_back(range_json(b_lo[size_t(i)], b_lo[size_t(i)] + kb * W2));
    }
    json lv = json::array();
    for (long long i = 1; i <= n; ++i) {
        json per_j = json::array();
        for (long long j = 1; j <= m; ++j) {
            json per_io = json::array();
            for (long long io = 1; io <= n - 2; ++io)
                per_io.push_back(lvl_lo[lvl_index(i, j, io)]);
            per_j.push_back(per_io);
        }
        lv.push_back(per_j);
    }
    layout["levels"] = lv;
    layout["C"] = range_json(c_lo, c_lo + M);
    b.params["n"] = n;
    b.params["m"] = m;
    b.params["kbar"] = kb;
    b.params["k"] = k;
    b.params["W"] = W;
    b.params["M"] = M;
    b.params["N"] = N;
    b.params["delta"] = delta;
    b.params["delta_den"] = 10 * m * n * n * kb;
    b.params["Delta"] = Delta;
    b.params["layout"] = layout;
    b.params["vc"] = vc.to_json();
    b.params["cover"] = cov;
    return b;
}

// ---------------------------------------------------------------------------
// set-cover verification families (symmetric influence, Uniform01 thresholds)

namespace {

struct setcover_common {
    sc_instance sc;  // padded
    long long n = 0, K = 0;
};

setcover_common prep_setcover(const sc_instance& sc_in, const a_sequence& a,
                              const setcover_params& p) {
    sc_in.validate();
    a.validate();
    if (!check_2qs(a))
        throw AssumptionViolation("influence sequence must be strictly two-quasi-submodular");
    if (!(p.delta > 0.0 && p.delta < 1.0))
        throw DomainError("separation parameter must lie in (0, 1)");
    if (p.M1 < 1) throw DomainError("payoff bundle must be non-empty");
    setcover_common c;
    c.sc = sc_in.padded();
    c.n = c.sc.n;
    c.K = (long long)c.sc.subsets.size();
    return c;
}

void check_budgets(long long n_vertices, long long n_edges) {
    if (n_vertices > desk_vertex_cap) throw TooLarge("instance exceeds the vertex cap");
    if (n_edges > desk_edge_cap) throw TooLarge("instance exceeds the edge cap");
}

reduction_bundle finish_setcover(weighted_graph g, const setcover_common& c,
                                 setcover_variant variant, const a_sequence& a, int k_seeds,
                                 std::vector<vertex> yes, std::vector<vertex> payoff,
                                 json params) {
    reduction_bundle b;
    b.kind = variant_name(variant);
    b.instance.graph = std::move(g);
    b.instance.influence = influence_spec::symmetric(a);
    b.instance.thresholds = threshold_spec::uniform01();
    b.instance.k = k_seeds;
    b.yes_strategy = std::move(yes);
    b.payoff_region = std::move(payoff);
    params["sc"] = c.sc.to_json();
    b.params = std::move(params);
    return b;
}

reduction_bundle build_setcover_directed(const setcover_common& c, const a_sequence& a,
                                         const setcover_params& p) {
    if (a.a1() <= 0.0)
        throw AssumptionViolation("variant needs a positive single-neighbor response");
    separation_params rp = choose_params(a, p.delta);
    fixed_point_report fp = find_fixed_points(rp, a);
    const long long n = c.n, K = c.K;
    const double p_star = a.p_star();
    const double eps_paper = 2.0 * (p_star - a.at(size_t(std::floor(a.a1() * double(n)))));
    const double eps_eff = p.eps_shift > 0.0
                               ? p.eps_shift
                               : (eps_paper > 0.0 && eps_paper < p_star / 10.0 ? eps_paper
                                                                              : p_star / 20.0);
    const double p0 = a.a1() * (p_star - eps_eff);
    const double eps1 = 1.0 / double(n), eps2 = fp.p2 / 100.0;
    gadget and_g = build_and(int(n), p0, eps1, eps2, p.delta, a);
    const long long Lambda = (long long)and_g.input_sets[0].size();
    const long long M2 = p.M2 > 0 ? p.M2 : n * n;
    const long long m = M2 * Lambda;
    const long long clique0 = K, verify0 = K + n * m;
    const long long and_V = and_g.graph.n, and_E = (long long)and_g.graph.edges.size();
    long long memberships = 0;
    for (const auto& s : c.sc.subsets) memberships += (long long)s.size();
    check_budgets(verify0 + M2 * (and_V + p.M1),
                  n * m * (m - 1) / 2 + memberships * m + M2 * (and_E + n * Lambda + p.M1));

    weighted_graph g;
    g.n = vertex(verify0);
    for (long long e = 0; e < n; ++e) {
        long long lo = clique0 + e * m;
        for (long long u = lo; u < lo + m; ++u)
            for (long long v = u + 1; v < lo + m; ++v)
                push_undirected(g, vertex(u), vertex(v));
    }
    for (long long i = 0; i < K; ++i)
        for (int el : c.sc.subsets[size_t(i)])
            for (long long r = 0; r < m; ++r)
                push_directed(g, vertex(i), vertex(clique0 + (el - 1) * m + r));

    std::vector<vertex> payoff;
    json copies = json::array();
    for (long long cpy = 0; cpy < M2; ++cpy) {
        long long off = g.n;
        auto map = stamp_gadget(g, and_g, {});
        for (long long e = 0; e < n; ++e)
            for (long long r = 0; r < Lambda; ++r)
                push_directed(g, vertex(clique0 + e * m + cpy * Lambda + r),
                              map[size_t(and_g.input_sets[size_t(e)][size_t(r)])]);
        vertex out = map[size_t(and_g.output)];
        long long blo = g.n;
        g.n += vertex(p.M1);
        for (long long bme = blo; bme < blo + p.M1; ++bme) {
            push_undirected(g, out, vertex(bme));
            payoff.push_back(vertex(bme));
        }
        copies.push_back({{"offset", off}, {"output", out}, {"bundle", range_json(blo, blo + p.M1)}});
    }

    std::vector<int> cov;
    std::vector<vertex> yes;
    if (c.sc.has_cover(&cov))
        for (int i : cov) yes.push_back(vertex(i - 1));

    json params;
    params["variant"] = "directed";
    params["n"] = n;
    params["K"] = K;
    params["k_seeds"] = c.sc.k;
    params["delta"] = p.delta;
    params["h"] = rp.h;
    params["alpha"] = rp.alpha;
    params["p1"] = fp.p1;
    params["p2"] = fp.p2;
    params["eps1"] = eps1;
    params["eps2"] = eps2;
    params["eps_paper"] = eps_paper;
    params["eps_eff"] = eps_eff;
    params["p0"] = p0;
    params["Lambda"] = Lambda;
    params["M1"] = p.M1;
    params["M2"] = M2;
    params["m"] = m;
    params["layout"] = {{"subsets", range_json(0, K)},
                        {"cliques", [&] {
                             json arr = json::array();
                             for (long long e = 0; e < n; ++e)
                                 arr.push_back(range_json(clique0 + e * m, clique0 + (e + 1) * m));
                             return arr;
                         }()},
                        {"copies", copies}};
    params["and_contract"] = and_g.contract;
    params["predictions"] = {{"clique_rate", p_star},
                             {"input_rate", a.a1() * p_star},
                             {"payoff_rate_true", a.a1() * and_g.contract["pred_true"].get<double>()},
                             {"payoff_rate_false", a.a1() * and_g.contract["pred_false"].get<double>()}};
    reduction_bundle b = finish_setcover(std::move(g), c, setcover_variant::directed, a,
                                         c.sc.k, std::move(yes), std::move(payoff),
                                         std::move(params));
    b.params["cover"] = cov;
    b.expected_yes_floor =
        (long long)std::floor(b.params["predictions"]["payoff_rate_true"].get<double>() *
                              double(p.M1 * M2));
    b.expected_no_ceiling =
        (long long)std::ceil(b.params["predictions"]["payoff_rate_false"].get<double>() *
                             double(p.M1 * M2));
    return b;
}

reduction_bundle build_setcover_undirected(const setcover_common& c, const a_sequence& a,
                                           const setcover_params& p) {
    if (a.a1() <= 0.0)
        throw AssumptionViolation("variant needs a positive single-neighbor response");
    separation_params rp = choose_params(a, p.delta);
    fixed_point_report fp = find_fixed_points(rp, a);
    const long long n = c.n, K = c.K;
    const double p_star = a.p_star();
    const double eps2 = fp.p2 / 100.0;
    const double p0 = p_star * (fp.p2 - eps2);
    const double eps1 = 1.0 / double(n);
    gadget and_g = build_and(int(n), p0, eps1, eps2, p.delta, a);
    if (p.edge_upsilon < 1) throw DomainError("fan bound must be positive");
    if (!(p.edge_eps > 0.0 && p.edge_eps < 1.0))
        throw DomainError("leak bound must lie in (0, 1)");
    gadget edge_g = build_directed_edge(int(p.edge_upsilon), p.edge_eps, rp, a);
    const vertex edge_src = edge_g.input_sets[0][0], edge_out = edge_g.output;
    const long long Lambda = (long long)and_g.input_sets[0].size();
    const long long M2 = p.M2 > 0 ? p.M2 : n * n;
    const long long m = M2 * Lambda;
    const long long clique0 = K, verify0 = K + n * m;
    const long long and_V = and_g.graph.n, and_E = (long long)and_g.graph.edges.size();
    const long long edge_V = edge_g.graph.n, edge_E = (long long)edge_g.graph.edges.size();
    long long memberships = 0;
    for (const auto& s : c.sc.subsets) memberships += (long long)s.size();
    const long long links = memberships * m + M2 * n * Lambda;
    check_budgets(verify0 + M2 * (and_V + p.M1) + links * (edge_V - 2),
                  n * m * (m - 1) / 2 + links * edge_E + M2 * (and_E + p.M1));

    weighted_graph g;
    g.n = vertex(verify0);
    for (long long e = 0; e < n; ++e) {
        long long lo = clique0 + e * m;
        for (long long u = lo; u < lo + m; ++u)
            for (long long v = u + 1; v < lo + m; ++v)
                push_undirected(g, vertex(u), vertex(v));
    }
    // every one-way link becomes a stamped one-way gadget copy
    auto link = [&](vertex src, vertex dst) {
        stamp_gadget(g, edge_g, {{edge_src, src}, {edge_out, dst}});
    };
    for (long long i = 0; i < K; ++i)
        for (int el : c.sc.subsets[size_t(i)])
            for (long long r = 0; r < m; ++r)
                link(vertex(i), vertex(clique0 + (el - 1) * m + r));

    std::vector<vertex> payoff;
    json copies = json::array();
    for (long long cpy = 0; cpy < M2; ++cpy) {
        long long off = g.n;
        auto map = stamp_gadget(g, and_g, {});
        for (long long e = 0; e < n; ++e)
            for (long long r = 0; r < Lambda; ++r)
                link(vertex(clique0 + e * m + cpy * Lambda + r),
                     map[size_t(and_g.input_sets[size_t(e)][size_t(r)])]);
        vertex out = map[size_t(and_g.output)];
        long long blo = g.n;
        g.n += vertex(p.M1);
        for (long long bme = blo; bme < blo + p.M1; ++bme) {
            push_undirected(g, out, vertex(bme));
            payoff.push_back(vertex(bme));
        }
        copies.push_back({{"offset", off}, {"output", out}, {"bundle", range_json(blo, blo + p.M1)}});
    }

    std::vector<int> cov;
    std::vector<vertex> yes;
    if (c.sc.has_cover(&cov))
        for (int i : cov) yes.push_back(vertex(i - 1));

    json params;
    params["variant"] = "undirected";
    params["n"] = n;
    params["K"] = K;
    params["k_seeds"] = c.sc.k;
    params["delta"] = p.delta;
    params["h"] = rp.h;
    params["alpha"] = rp.alpha;
    params["p1"] = fp.p1;
    params["p2"] = fp.p2;
    params["eps1"] = eps1;
    params["eps2"] = eps2;
    params["p0"] = p0;
    params["Lambda"] = Lambda;
    params["M1"] = p.M1;
    params["M2"] = M2;
    params["m"] = m;
    params["links"] = links;
    params["layout"] = {{"subsets", range_json(0, K)},
                        {"cliques", [&] {
                             json arr = json::array();
                             for (long long e = 0; e < n; ++e)
                                 arr.push_back(range_json(clique0 + e * m, clique0 + (e + 1) * m));
                             return arr;
                         }()},
                        {"copies", copies}};
    params["and_contract"] = and_g.contract;
    params["edge_contract"] = edge_g.contract;
    params["predictions"] = {{"clique_rate", p_star},
                             {"link_rate", edge_g.contract["b_pred"].get<double>()},
                             {"payoff_rate_true", a.a1() * and_g.contract["pred_true"].get<double>()},
                             {"payoff_rate_false", a.a1() * and_g.contract["pred_false"].get<double>()}};
    reduction_bundle b = finish_setcover(std::move(g), c, setcover_variant::undirected, a,
                                         c.sc.k, std::move(yes), std::move(payoff),
                                         std::move(params));
    b.params["cover"] = cov;
    b.expected_yes_floor =
        (long long)std::floor(b.params["predictions"]["payoff_rate_true"].get<double>() *
                              double(p.M1 * M2));
    b.expected_no_ceiling =
        (long long)std::ceil(b.params["predictions"]["payoff_rate_false"].get<double>() *
                             double(p.M1 * M2));
    return b;
}

reduction_bundle build_setcover_a1zero(const setcover_common& c, const a_sequence& a,
                                       const setcover_params& p) {
    if (a.a1() != 0.0) throw AssumptionViolation("variant requires a zero single-neighbor response");
    if (a.a2() <= 0.0) throw AssumptionViolation("variant requires a positive pair response");
    const long long n = c.n, K = c.K;
    int lambda0 = find_lambda0(a);
    gadget tower_g = build_and_a1zero(int(2 * n), lambda0, a);
    const long long Lambda = (long long)tower_g.input_sets[0].size();
    const long long M2 = p.M2 > 0 ? p.M2 : n * n;
    const long long m = 2 * M2 * Lambda;
    const double junction_rate = std::pow(a.a2(), 7.0);
    if (!(a.at(size_t(std::floor(junction_rate * double(m)))) > 0.5 * a.a2()))
        throw AssumptionViolation("cliques too small to relay the junction drive");
    const long long pair0 = 0, clique0 = 2 * K;
    const long long verify0 = clique0 + 2 * n * m;
    const long long tower_V = tower_g.graph.n, tower_E = (long long)tower_g.graph.edges.size();
    long long memberships = 0;
    for (const auto& s : c.sc.subsets) memberships += (long long)s.size();
    const long long junctions = memberships * 2 * m;
    check_budgets(verify0 + 2 * M2 * (tower_V - 2 * n * Lambda) + junctions * 6 + M2 * p.M1,
                  2 * n * m * (m - 1) / 2 + 2 * M2 * tower_E + junctions * 14 + 2 * M2 * p.M1);

    weighted_graph g;
    g.n = vertex(verify0);
    for (long long s = 0; s < 2 * n; ++s) {
        long long lo = clique0 + s * m;
        for (long long u = lo; u < lo + m; ++u)
            for (long long v = u + 1; v < lo + m; ++v)
                push_undirected(g, vertex(u), vertex(v));
    }
    // towers plug straight into the cliques: input set s of tower tau is the
    // slot range [tau Lambda, (tau+1) Lambda) of clique s
    auto tower_out = std::vector<vertex>();
    json towers = json::array();
    for (long long tau = 0; tau < 2 * M2; ++tau) {
        std::vector<std::pair<vertex, vertex>> pin;
        for (long long s = 0; s < 2 * n; ++s)
            for (long long r = 0; r < Lambda; ++r)
                pin.emplace_back(tower_g.input_sets[size_t(s)][size_t(r)],
                                 vertex(clique0 + s * m + tau * Lambda + r));
        long long fresh = g.n;
        auto map = stamp_gadget(g, tower_g, pin);
        tower_out.push_back(map[size_t(tower_g.output)]);
        towers.push_back({{"fresh", range_json(fresh, g.n)},
                          {"output", map[size_t(tower_g.output)]}});
    }
    long long junction0 = g.n;
    for (long long i = 0; i < K; ++i)
        for (int el : c.sc.subsets[size_t(i)])
            for (long long side = 0; side < 2; ++side) {
                long long lo = clique0 + (2 * (el - 1) + side) * m;
                for (long long r = 0; r < m; ++r)
                    append_pair_junction(g, vertex(pair0 + 2 * i), vertex(pair0 + 2 * i + 1),
                                         vertex(lo + r));
            }
    std::vector<vertex> payoff;
    json bundles = json::array();
    for (long long ph = 0; ph < M2; ++ph) {
        long long blo = g.n;
        g.n += vertex(p.M1);
        for (long long bme = blo; bme < blo + p.M1; ++bme) {
            push_undirected(g, tower_out[size_t(2 * ph)], vertex(bme));
            push_undirected(g, tower_out[size_t(2 * ph + 1)], vertex(bme));
            payoff.push_back(vertex(bme));
        }
        bundles.push_back(range_json(blo, blo + p.M1));
    }

    std::vector<int> cov;
    std::vector<vertex> yes;
    if (c.sc.has_cover(&cov))
        for (int i : cov) {
            yes.push_back(vertex(2 * (i - 1)));
            yes.push_back(vertex(2 * (i - 1) + 1));
        }

    int levels_j = 0;
    for (long long x = 2 * n; x > 1; x >>= 1) ++levels_j;
    double top = a.p_star();
    for (int l = 0; l < levels_j; ++l) top = a1zero_block_map(top, lambda0, a);

    json params;
    params["variant"] = "a1zero";
    params["n"] = n;
    params["K"] = K;
    params["k_seeds"] = 2 * c.sc.k;
    params["Lambda0"] = lambda0;
    params["Lambda"] = Lambda;
    params["M1"] = p.M1;
    params["M2"] = M2;
    params["m"] = m;
    params["junctions"] = junctions;
    params["layout"] = {{"pairs", range_json(0, 2 * K)},
                        {"cliques", [&] {
                             json arr = json::array();
                             for (long long s = 0; s < 2 * n; ++s)
                                 arr.push_back(range_json(clique0 + s * m, clique0 + (s + 1) * m));
                             return arr;
                         }()},
                        {"towers", towers},
                        {"junction_base", junction0},
                        {"bundles", bundles}};
    params["tower_contract"] = tower_g.contract;
    params["predictions"] = {{"junction_rate", junction_rate},
                             {"clique_rate", a.p_star()},
                             {"tower_top", top},
                             {"payoff_rate_true", a.a2() * top * top}};
    reduction_bundle b = finish_setcover(std::move(g), c, setcover_variant::a1zero, a,
                                         2 * c.sc.k, std::move(yes), std::move(payoff),
                                         std::move(params));
    b.params["cover"] = cov;
    b.expected_yes_floor =
        (long long)std::floor(b.params["predictions"]["payoff_rate_true"].get<double>() *
                              double(p.M1 * M2));
    b.expected_no_ceiling = 0;
    return b;
}

}  // namespace

reduction_bundle build_setcover_reduction(const sc_instance& sc, setcover_variant variant,
                                          const a_sequence& a, const setcover_params& p) {
    setcover_common c = prep_setcover(sc, a, p);
    switch (variant) {
        case setcover_variant::directed: return build_setcover_directed(c, a, p);
        case setcover_variant::undirected: return build_setcover_undirected(c, a, p);
        case setcover_variant::a1zero: return build_setcover_a1zero(c, a, p);
    }
    throw DomainError("unknown variant");
}

void append_pair_junction(weighted_graph& g, vertex a, vertex b, vertex target) {
    vertex x1 = g.n, x2 = g.n + 1, x3 = g.n + 2, x4 = g.n + 3, d = g.n + 4, e = g.n + 5;
    g.n += 6;
    push_undirected(g, a, x1);
    push_undirected(g, b, x1);
    push_undirected(g, x1, x2);
    push_undirected(g, a, x2);
    push_undirected(g, x1, x3);
    push_undirected(g, b, x3);
    push_undirected(g, x2, x4);
    push_undirected(g, x3, x4);
    push_undirected(g, x4, d);
    push_undirected(g, a, d);
    push_undirected(g, x4, e);
    push_undirected(g, b, e);
    push_undirected(g, d, target);
    push_undirected(g, e, target);
}

// ---------------------------------------------------------------------------
// verification

json yes_report::to_json() const {
    json w = json::array();
    for (const auto& [lo, hi] : windows) w.push_back(json::array({lo, hi}));
    return {{"payoff_fraction", payoff_fraction}, {"stderr", stderr_},
            {"trials", trials},  {"windows", w},
            {"b_round", b_round}, {"levels_ordered", levels_ordered}};
}

yes_report verify_yes_strategy(const reduction_bundle& b, long long trials, uint64_t seed,
                               int threads) {
    yes_report rep;
    const long long P = (long long)b.payoff_region.size();
    if (P == 0) throw DomainError("bundle has no payoff region");
    auto count_payoff = [&](const cascade_result& res, const std::vector<vertex>& seeds) {
        auto seeded = std::vector<char>(res.round_of.size(), 0);
        for (vertex s : seeds) seeded[size_t(s)] = 1;
        long long c = 0;
        for (vertex v : b.payoff_region)
            if (res.round_of[size_t(v)] >= 0 && !seeded[size_t(v)]) ++c;
        return c;
    };

    bool deterministic = b.instance.graph.n > 0 &&
                         b.instance.thresholds.kind == threshold_kind::degenerate;
    if (deterministic) {
        cascade_result res =
            run_cascade(b.instance, b.instance.thresholds.theta, b.yes_strategy);
        rep.trials = 1;
        rep.payoff_fraction = double(count_payoff(res, b.yes_strategy)) / double(P);
        bool payoff_full = true;
        int pr = -1;
        for (vertex v : b.payoff_region) {
            if (res.round_of[size_t(v)] < 0) payoff_full = false;
            pr = std::max(pr, res.round_of[size_t(v)]);
        }
        rep.b_round = payoff_full ? pr : -1;
        if (b.params.contains("layout") && b.params["layout"].contains("v")) {
            bool ordered = true;
            const auto& vids = b.params["layout"]["v"];
            long long m = vids.empty() ? 0 : (long long)vids[0].size();
            for (long long j = 0; j < m; ++j) {
                int lo = std::numeric_limits<int>::max(), hi = -1;
                for (const auto& row : vids) {
                    long long id = row[size_t(j)].get<long long>();
                    if (id < 0) continue;
                    int r = res.round_of[size_t(id)];
                    if (r < 0) ordered = false;
                    lo = std::min(lo, r);
                    hi = std::max(hi, r);
                }
                rep.windows.emplace_back(lo, hi);
            }
            for (size_t j = 0; j + 1 < rep.windows.size(); ++j)
                if (!(rep.windows[j].second < rep.windows[j + 1].first)) ordered = false;
            rep.levels_ordered = ordered && !rep.windows.empty();
        }
        return rep;
    }

    if (trials < 1) throw DomainError("trial count must be positive");
    bool stochastic_tree = b.instance.graph.n == 0;
    if (stochastic_tree && b.tree.nodes.empty())
        throw DomainError("bundle carries neither a graph nor a tree");
    auto counts = std::vector<long long>(size_t(trials), 0);
    parallel_for_blocks(trials, threads, [&](int64_t lo, int64_t hi) {
        for (int64_t r = lo; r < hi; ++r) {
            uint64_t s = derive_seed(seed, stream_yes, uint64_t(r));
            if (stochastic_tree) {
                sampled_graph sg = sample(b.tree, s);
                cascade_instance ci{sg.as_weighted(), b.instance.influence,
                                    b.instance.thresholds, b.instance.k};
                cascade_result res =
                    run_cascade(ci, b.instance.thresholds.theta, b.yes_strategy);
                counts[size_t(r)] = count_payoff(res, b.yes_strategy);
            } else {
                rng rr(s);
                auto theta = b.instance.thresholds.realize(b.instance.graph.n, rr);
                cascade_result res = run_cascade(b.instance, theta, b.yes_strategy);
                counts[size_t(r)] = count_payoff(res, b.yes_strategy);
            }
        }
    });
    long long sum = 0, sumsq = 0;
    for (long long cnt : counts) {
        sum += cnt;
        sumsq += cnt * cnt;
    }
    double mean = double(sum) / double(trials);
    double var = double(sumsq) / double(trials) - mean * mean;
    rep.trials = trials;
    rep.payoff_fraction = mean / double(P);
    rep.stderr_ = trials > 1 ? std::sqrt(std::max(0.0, var) / double(trials)) / double(P) : 0.0;
    return rep;
}

json no_gap_report::to_json() const {
    return {{"best_payoff", best_payoff}, {"best_seeds", best_seeds}, {"sets_tried", sets_tried}};
}

namespace {

// Influence-sum cascade over a fixed adjacency, rebuilt once per search.
struct flood_runner {
    vertex n = 0;
    std::vector<double> theta;
    std::vector<int> off;
    std::vector<vertex> to;
    std::vector<double> wt;

    flood_runner(const weighted_graph& g, std::vector<double> th) : n(g.n), theta(std::move(th)) {
        auto deg = std::vector<int>(size_t(n) + 1, 0);
        for (const auto& e : g.edges) {
            ++deg[size_t(e.u) + 1];
            if (!e.directed) ++deg[size_t(e.v) + 1];
        }
        off.assign(size_t(n) + 1, 0);
        for (vertex v = 0; v < n; ++v) off[size_t(v) + 1] = off[size_t(v)] + deg[size_t(v) + 1];
        to.resize(size_t(off[size_t(n)]));
        wt.resize(to.size());
        auto cur = off;
        for (const auto& e : g.edges) {
            to[size_t(cur[size_t(e.u)])] = e.v;
            wt[size_t(cur[size_t(e.u)]++)] = e.w;
            if (!e.directed) {
                to[size_t(cur[size_t(e.v)])] = e.u;
                wt[size_t(cur[size_t(e.v)]++)] = e.w;
            }
        }
    }

    struct scratch {
        std::vector<char> on;
        std::vector<double> infl;
        std::vector<vertex> frontier, next;
    };

    long long payoff_from(const std::vector<vertex>& seeds, const std::vector<char>& pay,
                          scratch& sc) const {
        sc.on.assign(size_t(n), 0);
        sc.infl.assign(size_t(n), 0.0);
        sc.frontier.clear();
        for (vertex s : seeds)
            if (!sc.on[size_t(s)]) {
                sc.on[size_t(s)] = 1;
                sc.frontier.push_back(s);
            }
        while (!sc.frontier.empty()) {
            for (vertex u : sc.frontier)
                for (int e = off[size_t(u)]; e < off[size_t(u) + 1]; ++e)
                    sc.infl[size_t(to[size_t(e)])] += wt[size_t(e)];
            sc.next.clear();
            for (vertex v = 0; v < n; ++v)
                if (!sc.on[size_t(v)] && sc.infl[size_t(v)] >= theta[size_t(v)]) {
                    sc.on[size_t(v)] = 1;
                    sc.next.push_back(v);
                }
            sc.frontier.swap(sc.next);
        }
        long long c = 0;
        for (vertex v = 0; v < n; ++v)
            if (sc.on[size_t(v)] && pay[size_t(v)]) ++c;
        for (vertex s : seeds)
            if (pay[size_t(s)]) --c;
        return c;
    }
};

}  // namespace

no_gap_report verify_no_gap_small(const reduction_bundle& b, const no_gap_options& opt) {
    if (b.instance.graph.n <= 0 || b.instance.thresholds.kind != threshold_kind::degenerate)
        throw DomainError("gap search needs a deterministic single-graph bundle");
    if (b.instance.influence.kind != influence_kind::linear)
        throw DomainError("gap search evaluates weight sums; bundle influence is not linear");
    const vertex N = b.instance.graph.n;
    const int k = b.instance.k;
    auto pay = std::vector<char>(size_t(N), 0);
    for (vertex v : b.payoff_region) pay[size_t(v)] = 1;
    std::vector<vertex> cand;
    for (vertex v = 0; v < N; ++v)
        if (opt.domain == no_gap_domain::all || !pay[size_t(v)]) cand.push_back(v);
    no_gap_report rep;
    if (k == 0) {
        rep.sets_tried = 1;
        return rep;
    }
    if ((size_t)k > cand.size()) throw DomainError("seed budget exceeds the candidate pool");
    flood_runner runner(b.instance.graph, b.instance.thresholds.theta);

    auto better = [](long long pv, const std::vector<vertex>& sv, long long pb,
                     const std::vector<vertex>& sb) {
        if (pv != pb) return pv > pb;
        if (sb.empty()) return true;
        return sv < sb;
    };

    if (opt.mode == no_gap_mode::exhaustive) {
        long long total = comb_capped((long long)cand.size(), k, opt.cap);
        if (total > opt.cap) throw TooLarge("seed-set enumeration exceeds the cap");
        rep.sets_tried = total;
        const int F = int(cand.size()) - k + 1;
        auto best_pay = std::vector<long long>(size_t(F), -1);
        auto best_set = std::vector<std::vector<vertex>>(size_t(F));
        parallel_for_blocks(F, opt.threads, [&](int64_t lo, int64_t hi) {
            flood_runner::scratch sc;
            auto seeds = std::vector<vertex>(size_t(k));
            for (int64_t f = lo; f < hi; ++f) {
                seeds[0] = cand[size_t(f)];
                if (k == 1) {
                    long long pv = runner.payoff_from(seeds, pay, sc);
                    if (better(pv, seeds, best_pay[size_t(f)], best_set[size_t(f)])) {
                        best_pay[size_t(f)] = pv;
                        best_set[size_t(f)] = seeds;
                    }
                    continue;
                }
                auto idx = std::vector<int>(size_t(k - 1));
                std::iota(idx.begin(), idx.end(), int(f) + 1);
                int pool = int(cand.size());
                if (idx.back() >= pool) continue;
                do {
                    for (int i = 0; i + 1 < k; ++i) seeds[size_t(i + 1)] = cand[size_t(idx[size_t(i)])];
                    long long pv = runner.payoff_from(seeds, pay, sc);
                    if (better(pv, seeds, best_pay[size_t(f)], best_set[size_t(f)])) {
                        best_pay[size_t(f)] = pv;
                        best_set[size_t(f)] = seeds;
                    }
                } while ([&] {
                    // advance the (k-1)-combination over [f+1, pool)
                    int kk = k - 1;
                    for (int i = kk - 1; i >= 0; --i) {
                        if (idx[size_t(i)] < pool - kk + i) {
                            ++idx[size_t(i)];
                            for (int j2 = i + 1; j2 < kk; ++j2)
                                idx[size_t(j2)] = idx[size_t(j2 - 1)] + 1;
                            return true;
                        }
                    }
                    return false;
                }());
            }
        });
        rep.best_payoff = 0;
        for (int f = 0; f < F; ++f)
            if (best_pay[size_t(f)] >= 0 &&
                better(best_pay[size_t(f)], best_set[size_t(f)], rep.best_payoff, rep.best_seeds))
                {
                    rep.best_payoff = best_pay[size_t(f)];
                    rep.best_seeds = best_set[size_t(f)];
                }
        return rep;
    }

    // heuristic: random seed sets plus one weighted-degree greedy probe
    long long probes = std::max<long long>(1, opt.probes);
    auto pr_pay = std::vector<long long>(size_t(probes) + 1, -1);
    auto pr_set = std::vector<std::vector<vertex>>(size_t(probes) + 1);
    parallel_for_blocks(probes + 1, opt.threads, [&](int64_t lo, int64_t hi) {
        flood_runner::scratch sc;
        for (int64_t i = lo; i < hi; ++i) {
            std::vector<vertex> seeds;
            if (i == 0) {
                auto deg = std::vector<std::pair<double, vertex>>();
                for (vertex v : cand) {
                    double s = 0.0;
                    for (int e = runner.off[size_t(v)]; e < runner.off[size_t(v) + 1]; ++e)
                        s += runner.wt[size_t(e)];
                    deg.emplace_back(-s, v);
                }
                std::sort(deg.begin(), deg.end());
                for (int j2 = 0; j2 < k; ++j2) seeds.push_back(deg[size_t(j2)].second);
                std::sort(seeds.begin(), seeds.end());
            } else {
                rng rr(derive_seed(opt.seed, stream_nogap, uint64_t(i)));
                auto pool = cand;
                for (int j2 = 0; j2 < k; ++j2) {
                    size_t pick = size_t(j2) + size_t(rr.below(uint64_t(pool.size() - size_t(j2))));
                    std::swap(pool[size_t(j2)], pool[pick]);
                    seeds.push_back(pool[size_t(j2)]);
                }
                std::sort(seeds.begin(), seeds.end());
            }
            pr_pay[size_t(i)] = runner.payoff_from(seeds, pay, sc);
            pr_set[size_t(i)] = std::move(seeds);
        }
    });
    rep.sets_tried = probes + 1;
    rep.best_payoff = 0;
    for (long long i = 0; i <= probes; ++i)
        if (pr_pay[size_t(i)] >= 0 &&
            better(pr_pay[size_t(i)], pr_set[size_t(i)], rep.best_payoff, rep.best_seeds)) {
            rep.best_payoff = pr_pay[size_t(i)];
            rep.best_seeds = pr_set[size_t(i)];
        }
    return rep;
}

// ---------------------------------------------------------------------------
// sampled-graph regularity

json good_sample_report::to_json() const {
    return {{"good", good},
            {"neighbor_counts_ok", neighbor_counts_ok},
            {"pairs_checked", pairs_checked},
            {"first_violation_vertex", first_violation_vertex},
            {"detail", detail},
            {"cross_edges_ok", cross_edges_ok},
            {"draws", draws},
            {"max_cross_edges", max_cross_edges},
            {"cross_edge_cap", cross_edge_cap}};
}

good_sample_report check_good_sample(const sampled_graph& g, const reduction_bundle& b,
                                     const good_sample_options& opt) {
    if (b.kind != "shbm") throw DomainError("regularity check applies to stochastic-tree bundles");
    const long long n = b.params.at("n"), m = b.params.at("m"), kb = b.params.at("kbar");
    const long long W = b.params.at("W"), N = b.params.at("N");
    const double delta = b.params.at("delta");
    if (g.n != N) throw SpecMismatch("sampled graph size disagrees with the bundle");
    const long long W2 = W * W, W3 = W2 * W;
    const long long L = n * m * (n - 2);

    auto clique_of = std::vector<int>(size_t(N), -1);
    const auto& cl = b.params.at("layout").at("cliques");
    for (long long i = 0; i < n; ++i) {
        long long lo = cl[size_t(i)][0], hi = cl[size_t(i)][1];
        for (long long u = lo; u < hi; ++u) clique_of[size_t(u)] = int(i);
    }
    auto level_of = std::vector<int>(size_t(N), -1);
    auto level_clique = std::vector<int>(size_t(L), 0);
    const auto& lv = b.params.at("layout").at("levels");
    for (long long i = 0; i < n; ++i)
        for (long long j = 0; j < m; ++j)
            for (long long io = 0; io < n - 2; ++io) {
                long long lo = lv[size_t(i)][size_t(j)][size_t(io)];
                int id = int((i * m + j) * (n - 2) + io);
                level_clique[size_t(id)] = int(i);
                for (long long u = lo; u < lo + W3; ++u) level_of[size_t(u)] = id;
            }

    good_sample_report rep;
    rep.cross_edge_cap = std::pow(double(W), 3.6);

    // neighbor counts of every vertex into every level block of other cliques
    auto cnt = std::vector<int>(size_t(N) * size_t(L), 0);
    auto adj = std::vector<std::vector<vertex>>(size_t(N));
    for (const auto& [u, v] : g.edges) {
        adj[size_t(u)].push_back(v);
        adj[size_t(v)].push_back(u);
        if (int l = level_of[size_t(v)]; l >= 0 && level_clique[size_t(l)] != clique_of[size_t(u)])
            ++cnt[size_t(u) * size_t(L) + size_t(l)];
        if (int l = level_of[size_t(u)]; l >= 0 && level_clique[size_t(l)] != clique_of[size_t(v)])
            ++cnt[size_t(v) * size_t(L) + size_t(l)];
    }
    const double lo_bound = (1.0 - delta) * double(W2), hi_bound = (1.0 + delta) * double(W2);
    rep.neighbor_counts_ok = true;
    for (long long u = 0; u < N && rep.neighbor_counts_ok; ++u)
        for (long long l = 0; l < L; ++l) {
            if (level_clique[size_t(l)] == clique_of[size_t(u)]) continue;
            ++rep.pairs_checked;
            int c = cnt[size_t(u) * size_t(L) + size_t(l)];
            if (!(double(c) > lo_bound && double(c) < hi_bound)) {
                rep.neighbor_counts_ok = false;
                rep.first_violation_vertex = u;
                rep.detail = "vertex " + std::to_string(u) + " has " + std::to_string(c) +
                             " neighbors in level block " + std::to_string(l) + "; bounds (" +
                             std::to_string(lo_bound) + ", " + std::to_string(hi_bound) + ")";
                break;
            }
        }

    // cross-edge counts between small inside sets and budget-sized outside sets
    const long long s1 = (long long)std::floor(delta * double(W2));
    const long long s2 = (kb + 1) * W2;
    rep.cross_edges_ok = true;
    if (s1 == 0) {
        if (rep.detail.empty()) rep.detail = "inside draw is empty at this scale";
    } else {
        auto degree = std::vector<int>(size_t(N), 0);
        for (long long u = 0; u < N; ++u) degree[size_t(u)] = int(adj[size_t(u)].size());
        auto mark = std::vector<char>(size_t(N), 0);
        auto count_cross = [&](const std::vector<vertex>& inside,
                               const std::vector<vertex>& outside) {
            for (vertex u : inside) mark[size_t(u)] = 1;
            long long c = 0;
            for (vertex u : outside)
                for (vertex w : adj[size_t(u)])
                    if (mark[size_t(w)]) ++c;
            for (vertex u : inside) mark[size_t(u)] = 0;
            return c;
        };
        auto record = [&](long long c) {
            ++rep.draws;
            rep.max_cross_edges = std::max(rep.max_cross_edges, c);
            if (!(double(c) < rep.cross_edge_cap)) rep.cross_edges_ok = false;
        };
        for (long long d = 0; d < opt.pair_draws; ++d) {
            rng rr(derive_seed(opt.seed, stream_good, uint64_t(d)));
            long long i = (long long)rr.below(uint64_t(n));
            long long ilo = cl[size_t(i)][0], ihi = cl[size_t(i)][1];
            if (s1 > ihi - ilo || s2 > N - (ihi - ilo))
                throw DomainError("draw sizes exceed the graph");
            std::vector<vertex> inside_pool(size_t(ihi - ilo));
            std::iota(inside_pool.begin(), inside_pool.end(), vertex(ilo));
            std::vector<vertex> inside;
            for (long long j = 0; j < s1; ++j) {
                size_t pick = size_t(j) + size_t(rr.below(uint64_t(inside_pool.size() - size_t(j))));
                std::swap(inside_pool[size_t(j)], inside_pool[pick]);
                inside.push_back(inside_pool[size_t(j)]);
            }
            std::vector<vertex> outside_pool;
            outside_pool.reserve(size_t(N - (ihi - ilo)));
            for (long long u = 0; u < N; ++u)
                if (u < ilo || u >= ihi) outside_pool.push_back(vertex(u));
            std::vector<vertex> outside;
            for (long long j = 0; j < s2; ++j) {
                size_t pick = size_t(j) + size_t(rr.below(uint64_t(outside_pool.size() - size_t(j))));
                std::swap(outside_pool[size_t(j)], outside_pool[pick]);
                outside.push_back(outside_pool[size_t(j)]);
            }
            record(count_cross(inside, outside));
        }
        // extremal probe: highest-degree inside and outside sets per clique
        for (long long i = 0; i < n; ++i) {
            long long ilo = cl[size_t(i)][0], ihi = cl[size_t(i)][1];
            auto by_degree = [&](vertex x, vertex y) {
                if (degree[size_t(x)] != degree[size_t(y)]) return degree[size_t(x)] > degree[size_t(y)];
                return x < y;
            };
            std::vector<vertex> inside(size_t(ihi - ilo));
            std::iota(inside.begin(), inside.end(), vertex(ilo));
            std::partial_sort(inside.begin(), inside.begin() + std::min<size_t>(inside.size(), size_t(s1)),
                              inside.end(), by_degree);
            inside.resize(size_t(s1));
            std::vector<vertex> outside;
            outside.reserve(size_t(N - (ihi - ilo)));
            for (long long u = 0; u < N; ++u)
                if (u < ilo || u >= ihi) outside.push_back(vertex(u));
            std::partial_sort(outside.begin(), outside.begin() + std::min<size_t>(outside.size(), size_t(s2)),
                              outside.end(), by_degree);
            outside.resize(size_t(s2));
            record(count_cross(inside, outside));
        }
    }
    rep.good = rep.neighbor_counts_ok && rep.cross_edges_ok;
    return rep;
}

// ---------------------------------------------------------------------------
// sidecar round trip

json reduction_bundle::to_sidecar() const {
    json j;
    j["kind"] = kind;
    j["k"] = instance.k;
    long long nv = instance.graph.n > 0 ? (long long)instance.graph.n : (long long)tree.n_vertices;
    j["n_vertices"] = nv;
    switch (instance.influence.kind) {
        case influence_kind::linear: j["influence"] = "linear"; break;
        case influence_kind::counting: j["influence"] = "counting"; break;
        case influence_kind::symmetric:
            j["influence"] = "symmetric";
            j["a"] = instance.influence.a.to_json();
            break;
    }
    if (instance.thresholds.kind == threshold_kind::degenerate) {
        j["thresholds"] = "degenerate";
        json th = json::array();
        for (double x : instance.thresholds.theta) {
            if (std::isinf(x))
                th.push_back("inf");
            else
                th.push_back(x);
        }
        j["theta"] = th;
    } else {
        j["thresholds"] = "uniform01";
    }
    j["yes_strategy"] = yes_strategy;
    j["payoff_region"] = payoff_region;
    j["expected_yes_floor"] = expected_yes_floor;
    j["expected_no_ceiling"] = expected_no_ceiling;
    j["params"] = params;
    return j;
}

reduction_bundle reduction_bundle::from_sidecar(const json& j, hierarchy_tree tree,
                                                weighted_graph graph) {
    reduction_bundle b;
    b.kind = j.at("kind").get<std::string>();
    if (b.kind != "hbm" && b.kind != "shbm" && b.kind != "setcover_directed" &&
        b.kind != "setcover_undirected" && b.kind != "setcover_a1zero")
        throw DomainError("unknown bundle kind");
    b.tree = std::move(tree);
    b.instance.graph = std::move(graph);
    long long nv = b.instance.graph.n > 0 ? (long long)b.instance.graph.n
                                          : (long long)b.tree.n_vertices;
    if (nv <= 0) throw DomainError("bundle carries neither a graph nor a tree");
    if (j.at("n_vertices").get<long long>() != nv)
        throw SpecMismatch("artifact size disagrees with the sidecar");
    std::string inf = j.at("influence").get<std::string>();
    if (inf == "linear")
        b.instance.influence = influence_spec::linear();
    else if (inf == "counting")
        b.instance.influence = influence_spec::counting();
    else if (inf == "symmetric")
        b.instance.influence = influence_spec::symmetric(a_sequence::from_json(j.at("a")));
    else
        throw DomainError("unknown influence kind");
    std::string th = j.at("thresholds").get<std::string>();
    if (th == "degenerate") {
        std::vector<double> theta;
        for (const auto& x : j.at("theta")) {
            if (x.is_string()) {
                if (x.get<std::string>() != "inf") throw DomainError("bad threshold entry");
                theta.push_back(std::numeric_limits<double>::infinity());
            } else {
                theta.push_back(x.get<double>());
            }
        }
        if ((long long)theta.size() != nv)
            throw SpecMismatch("threshold count disagrees with the artifact");
        b.instance.thresholds = threshold_spec::degenerate(std::move(theta));
    } else if (th == "uniform01") {
        b.instance.thresholds = threshold_spec::uniform01();
    } else {
        throw DomainError("unknown threshold kind");
    }
    b.instance.k = j.at("k").get<int>();
    auto read_ids = [&](const char* key) {
        std::vector<vertex> out;
        for (const auto& x : j.at(key)) {
            long long v = x.get<long long>();
            if (v < 0 || v >= nv) throw UnknownVertex("sidecar id out of range");
            out.push_back(vertex(v));
        }
        return out;
    };
    b.yes_strategy = read_ids("yes_strategy");
    b.payoff_region = read_ids("payoff_region");
    b.expected_yes_floor = j.at("expected_yes_floor").get<long long>();
    b.expected_no_ceiling = j.at("expected_no_ceiling").get<long long>();
    b.params = j.at("params");
    return b;
}

}  // namespace cascadelab
