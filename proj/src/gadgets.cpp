#include "cascadelab/gadgets.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "cascadelab/errors.hpp"
#include "cascadelab/parallel.hpp"
#include "cascadelab/rng.hpp"

namespace cascadelab {

namespace {

constexpr uint64_t stream_forward = 0x67616467ull;
constexpr uint64_t stream_reverse = 0x72657667ull;

constexpr int desk_h_cap = 8;
constexpr int desk_layer_cap = 6;
constexpr long long desk_lambda_cap = 10000;

// Probability that the converging endpoint fires given every chain end fires
// independently with the listed probability. The endpoint combines the fired
// count through the a-sequence.
double pv_of_ends(const std::vector<double>& ends, const a_sequence& a) {
    std::vector<double> dist{1.0};
    for (double q : ends) {
        std::vector<double> nd(dist.size() + 1, 0.0);
        for (size_t i = 0; i < dist.size(); ++i) {
            nd[i] += dist[i] * (1.0 - q);
            nd[i + 1] += dist[i] * q;
        }
        dist = std::move(nd);
    }
    double pv = 0.0;
    for (size_t i = 1; i < dist.size(); ++i) pv += dist[i] * a.at(i);
    return pv;
}

// In-place graph assembly; undirected unit edges stored with u < v.
struct assembler {
    weighted_graph g;

    vertex add() { return g.n++; }
    vertex add(int count) {
        vertex first = g.n;
        g.n += count;
        return first;
    }
    void edge(vertex u, vertex v) {
        g.edges.push_back({std::min(u, v), std::max(u, v), 1.0, false});
    }
    // chain with l edges and l-1 fresh intermediates
    void path(vertex from, vertex to, int l) {
        vertex prev = from;
        for (int i = 0; i + 1 < l; ++i) {
            vertex x = add();
            edge(prev, x);
            prev = x;
        }
        edge(prev, to);
    }
};

int intermediates_of(const scaling_model& m) {
    int s = 0;
    for (int l : m.lengths) s += l - 1;
    return s;
}

// separation map with the realized (built) factor substituted for alpha
double iterate_realized(double x, int layers, int h, double realized, const a_sequence& a) {
    separation_params rp{h, realized, 1.0 - h * realized * a.a1()};
    for (int i = 0; i < layers; ++i) x = separation_map(x, rp, a);
    return x;
}

int clamp_layers(double eps, double delta) {
    int l = int(std::ceil(std::log(1.0 / eps) / std::log(1.0 / (1.0 - delta))));
    return std::max(1, std::min(desk_layer_cap, l));
}

long long pow_capped(long long base, int exp, long long cap) {
    long long r = 1;
    for (int i = 0; i < exp; ++i) {
        r *= base;
        if (r > cap) return cap + 1;
    }
    return r;
}

void check_filter_caps(const separation_params& p, int layers) {
    if (layers < 1) throw DomainError("filter needs at least one layer");
    if (p.h < 2) throw DomainError("separation fan-in must be at least 2");
    if (p.h > desk_h_cap) throw TooLarge("separation fan-in exceeds the desk cap");
    if (layers > desk_layer_cap) throw TooLarge("layer count exceeds the desk cap");
    if (pow_capped(p.h, layers, desk_lambda_cap) > desk_lambda_cap)
        throw TooLarge("input-set size exceeds the desk cap");
}

// Appends a pair-junction stage feeding a copy of `filter`: one junction per
// input pair, beta-scaling chains from each junction onto the filter's
// matching input slot. Returns the copied filter's output id.
vertex graft_and2(assembler& as, const std::vector<vertex>& left,
                  const std::vector<vertex>& right, const and2_betas& betas,
                  const gadget& filter) {
    const auto& fin = filter.input_sets.at(0);
    size_t lam = fin.size();
    if (left.size() != lam || right.size() != lam)
        throw DomainError("junction stage needs one input pair per filter slot");
    vertex jn = as.add(int(lam));
    for (size_t i = 0; i < lam; ++i) {
        as.edge(left[i], jn + vertex(i));
        as.edge(right[i], jn + vertex(i));
    }
    vertex off = as.g.n + vertex(lam) * intermediates_of(betas.model);
    for (size_t i = 0; i < lam; ++i)
        for (int l : betas.model.lengths) as.path(jn + vertex(i), off + fin[i], l);
    for (const auto& e : filter.graph.edges)
        as.g.edges.push_back({e.u + off, e.v + off, 1.0, false});
    as.g.n = off + filter.graph.n;
    return off + filter.output;
}

double contract_real(const json& c, const char* key) { return c.at(key).get<double>(); }

}  // namespace

json gadget::to_sidecar() const {
    json j;
    j["type"] = type;
    j["params"] = contract;
    j["params"]["a"] = a.to_json();
    j["input_sets"] = input_sets;
    j["output"] = output;
    return j;
}

gadget gadget::from_sidecar(const json& j, weighted_graph g) {
    gadget out;
    out.type = j.at("type").get<std::string>();
    out.contract = j.at("params");
    out.a = a_sequence::from_json(out.contract.at("a"));
    out.contract.erase("a");
    out.input_sets = j.at("input_sets").get<std::vector<std::vector<vertex>>>();
    out.output = j.at("output").get<vertex>();
    out.graph = std::move(g);
    for (const auto& set : out.input_sets)
        for (vertex v : set)
            if (v < 0 || v >= out.graph.n) throw DomainError("input set vertex out of range");
    if (out.output < 0 || out.output >= out.graph.n)
        throw DomainError("output vertex out of range");
    return out;
}

scaling_model scaling_paths(double alpha, double eps, const a_sequence& a) {
    a.validate();
    if (a.a1() <= 0.0) throw DomainError("scaling chains need a1 > 0");
    if (alpha <= 0.0) throw DomainError("scaling factor must be positive");
    if (eps <= 0.0) throw DomainError("scaling tolerance must be positive");
    if (alpha > a.p_star()) throw Unachievable("scaling factor above the attainable supremum");
    scaling_model m;
    if (eps >= alpha) return m;  // zero already inside (alpha - eps, alpha]
    std::vector<double> ends;
    double cur = 0.0;
    int guard = 0;
    while (!(alpha - eps < cur && cur <= alpha)) {
        if (++guard > 20000) throw Unachievable("scaling factor search did not converge");
        int l = 2;
        for (;; ++l) {
            if (l > 500) throw Unachievable("no chain length keeps the factor under target");
            ends.push_back(std::pow(a.a1(), l - 1));
            double trial = pv_of_ends(ends, a);
            ends.pop_back();
            if (trial <= alpha) break;
        }
        m.lengths.push_back(l);
        ends.push_back(std::pow(a.a1(), l - 1));
        cur = pv_of_ends(ends, a);
    }
    m.realized = cur;
    return m;
}

gadget build_scaling_down(double alpha, double eps, const a_sequence& a) {
    scaling_model m = scaling_paths(alpha, eps, a);
    assembler as;
    vertex u = as.add();
    vertex v = as.add();
    for (int l : m.lengths) as.path(u, v, l);
    gadget g;
    g.type = "scaling";
    g.graph = std::move(as.g);
    g.input_sets = {{u}};
    g.output = v;
    g.a = a;
    g.contract = {{"alpha", alpha}, {"eps", eps}, {"realized", m.realized},
                  {"lengths", m.lengths}};
    return g;
}

gadget build_filter(const separation_params& params, int layers, const a_sequence& a) {
    check_filter_caps(params, layers);
    fixed_point_report fp = find_fixed_points(params, a);
    scaling_model sm = scaling_paths(params.alpha, params.alpha * 1e-3, a);

    assembler as;
    long long lam = pow_capped(params.h, layers, desk_lambda_cap);
    vertex first_input = as.add(int(lam));
    auto prev = std::vector<vertex>(size_t(lam));
    for (long long i = 0; i < lam; ++i) prev[size_t(i)] = first_input + vertex(i);
    while (prev.size() > 1) {
        std::vector<vertex> next;
        for (size_t b = 0; b < prev.size(); b += size_t(params.h)) {
            std::vector<vertex> scaled;
            for (int i = 0; i < params.h; ++i) {
                vertex s = as.add();
                for (int l : sm.lengths) as.path(prev[b + size_t(i)], s, l);
                scaled.push_back(s);
            }
            vertex w = as.add();
            for (vertex s : scaled) as.edge(s, w);
            next.push_back(w);
        }
        prev = std::move(next);
    }

    gadget g;
    g.type = "filter";
    g.graph = std::move(as.g);
    g.input_sets.emplace_back();
    for (long long i = 0; i < lam; ++i) g.input_sets[0].push_back(first_input + vertex(i));
    g.output = prev[0];
    g.a = a;
    g.contract = {{"h", params.h},
                  {"alpha", params.alpha},
                  {"delta", params.delta},
                  {"layers", layers},
                  {"Lambda", lam},
                  {"p1", fp.p1},
                  {"p2", fp.p2},
                  {"realized_alpha", sm.realized},
                  {"lengths", sm.lengths},
                  {"pred_half_p1", iterate_realized(0.5 * fp.p1, layers, params.h, sm.realized, a)},
                  {"pred_p2", iterate_realized(fp.p2, layers, params.h, sm.realized, a)}};
    return g;
}

double junction_map(double pu, double pv, const a_sequence& a) {
    return (a.a2() - 2.0 * a.a1()) * pu * pv + a.a1() * pu + a.a1() * pv;
}

and2_betas choose_betas(double p0, double p1, double p2, const a_sequence& a) {
    if (p0 <= 0.0) throw DomainError("junction threshold must be positive");
    and2_betas b;
    double a1 = a.a1(), a2 = a.a2();
    b.phiT_plus = (a2 - 2.0 * a1) * (1.1 * p0) * (1.1 * p0) + 2.0 * a1 * (1.1 * p0);
    b.phiT_minus = (a2 - 2.0 * a1) * p0 * p0 + 2.0 * a1 * p0;
    b.phiF_plus = (11.0 / 20.0) * (a2 - 2.0 * a1) * p0 * p0 + (16.0 / 10.0) * a1 * p0;
    b.lo = p1 / b.phiT_minus;
    b.hi = std::min({a.p_star(), p2 / b.phiT_plus, p1 / b.phiF_plus});
    if (!(b.lo < b.hi))
        throw InfeasibleBetas("no inter-stage factor clears all three junction bounds");
    b.target = std::sqrt(b.lo * b.hi);
    b.model = scaling_paths(b.target, b.target * 1e-3, a);
    b.beta = b.model.realized;
    if (!(b.beta * b.phiT_plus < p2 && b.beta * b.phiT_minus > p1 && b.beta * b.phiF_plus < p1))
        throw InfeasibleBetas("realized inter-stage factor violates a junction bound");
    return b;
}

gadget build_and2(double p0, const and2_betas& betas, gadget filter, const a_sequence& a) {
    double p1 = contract_real(filter.contract, "p1");
    double p2 = contract_real(filter.contract, "p2");
    if (!(betas.beta * betas.phiT_plus < p2 && betas.beta * betas.phiT_minus > p1 &&
          betas.beta * betas.phiF_plus < p1))
        throw InfeasibleBetas("inter-stage factor violates a junction bound for this filter");
    size_t lam = filter.input_sets.at(0).size();
    assembler as;
    vertex u0 = as.add(int(lam));
    vertex v0 = as.add(int(lam));
    std::vector<vertex> left, right;
    for (size_t i = 0; i < lam; ++i) left.push_back(u0 + vertex(i));
    for (size_t i = 0; i < lam; ++i) right.push_back(v0 + vertex(i));
    vertex out = graft_and2(as, left, right, betas, filter);

    int h = filter.contract.at("h").get<int>();
    int layers = filter.contract.at("layers").get<int>();
    double realized = contract_real(filter.contract, "realized_alpha");
    double dT = 1.05 * p0;
    gadget g;
    g.type = "and2";
    g.graph = std::move(as.g);
    g.input_sets = {left, right};
    g.output = out;
    g.a = a;
    g.contract = filter.contract;
    g.contract.erase("pred_half_p1");
    g.contract.erase("pred_p2");
    g.contract["p0"] = p0;
    g.contract["beta_lo"] = betas.lo;
    g.contract["beta_hi"] = betas.hi;
    g.contract["beta_target"] = betas.target;
    g.contract["beta"] = betas.beta;
    g.contract["beta_lengths"] = betas.model.lengths;
    g.contract["pred_true"] =
        iterate_realized(betas.beta * junction_map(dT, dT, a), layers, h, realized, a);
    g.contract["pred_false"] =
        iterate_realized(betas.beta * junction_map(0.5 * p0, dT, a), layers, h, realized, a);
    return g;
}

gadget build_and(int I, double p0, double eps1, double eps2, double delta,
                 const a_sequence& a) {
    if (I < 2 || (I & (I - 1)) != 0) throw DomainError("fan-in must be a power of two >= 2");
    if (eps1 <= 0.0) throw DomainError("false-side tolerance must be positive");
    separation_params cp = choose_params(a, delta);
    if (cp.h > desk_h_cap) throw TooLarge("separation fan-in exceeds the desk cap");
    fixed_point_report fp = find_fixed_points(cp, a);
    if (!(eps2 > 0.0 && eps2 < fp.p2))
        throw DomainError("true-side tolerance must lie in (0, p2)");

    int J = 0;
    for (int x = I; x > 1; x >>= 1) ++J;
    int lA = clamp_layers((fp.p2 - eps2) / 3.0, delta);
    int lC = clamp_layers(eps1, delta);
    long long lam0 = pow_capped(cp.h, lA, desk_lambda_cap);
    long long lamC = pow_capped(cp.h, lC, desk_lambda_cap);
    long long lam = lamC;
    for (int i = 0; i < J - 1; ++i) {
        lam *= lam0;
        if (lam > desk_lambda_cap) break;
    }
    if (lam > desk_lambda_cap) throw TooLarge("input-set size exceeds the desk cap");

    and2_betas betasA = choose_betas(p0, fp.p1, fp.p2, a);
    and2_betas betasMid =
        J >= 2 ? choose_betas(fp.p2 - eps2, fp.p1, fp.p2, a) : betasA;
    gadget filterA = J >= 2 ? build_filter(cp, lA, a) : gadget{};
    gadget filterC = build_filter(cp, lC, a);

    assembler as;
    auto sets = std::vector<std::vector<vertex>>(size_t(I));
    // Subtree over `width` consecutive input sets starting at s0; returns
    // `copies` replica outputs. width == 1 allocates fresh tower inputs.
    auto rec = [&](auto&& self, int s0, int width, long long copies) -> std::vector<vertex> {
        std::vector<vertex> outs;
        if (width == 1) {
            vertex first = as.add(int(copies));
            for (long long i = 0; i < copies; ++i) {
                sets[size_t(s0)].push_back(first + vertex(i));
                outs.push_back(first + vertex(i));
            }
            return outs;
        }
        int level = 0;
        for (int x = width; x > 1; x >>= 1) ++level;
        const gadget& f = level == J ? filterC : filterA;
        const and2_betas& bs = level == 1 ? betasA : betasMid;
        long long side = level == J ? lamC : lam0;
        for (long long r = 0; r < copies; ++r) {
            auto left = self(self, s0, width / 2, side);
            auto right = self(self, s0 + width / 2, width / 2, side);
            outs.push_back(graft_and2(as, left, right, bs, f));
        }
        return outs;
    };
    vertex out = rec(rec, 0, I, 1).at(0);

    // scalar forward-model chain: level-1 true/bad pair, then upward
    double realized = contract_real(filterC.contract, "realized_alpha");
    double qT, qB;
    if (J == 1) {
        qT = iterate_realized(betasA.beta * junction_map(1.05 * p0, 1.05 * p0, a), lC, cp.h,
                              realized, a);
        qB = iterate_realized(betasA.beta * junction_map(0.5 * p0, 1.05 * p0, a), lC, cp.h,
                              realized, a);
    } else {
        qT = iterate_realized(betasA.beta * junction_map(1.05 * p0, 1.05 * p0, a), lA, cp.h,
                              realized, a);
        qB = iterate_realized(betasA.beta * junction_map(0.5 * p0, 1.05 * p0, a), lA, cp.h,
                              realized, a);
    }
    double level1T = qT, level1B = qB;
    for (int lvl = 2; lvl < J; ++lvl) {
        double nT = iterate_realized(betasMid.beta * junction_map(qT, qT, a), lA, cp.h,
                                     realized, a);
        double nB = iterate_realized(betasMid.beta * junction_map(qB, qT, a), lA, cp.h,
                                     realized, a);
        qT = nT;
        qB = nB;
    }
    double predT = qT, predF = qB;
    if (J >= 2) {
        predT = iterate_realized(betasMid.beta * junction_map(qT, qT, a), lC, cp.h, realized, a);
        predF = iterate_realized(betasMid.beta * junction_map(qB, qT, a), lC, cp.h, realized, a);
    }

    gadget g;
    g.type = "and";
    g.graph = std::move(as.g);
    g.input_sets = std::move(sets);
    g.output = out;
    g.a = a;
    g.contract = {{"I", I},
                  {"p0", p0},
                  {"eps1", eps1},
                  {"eps2", eps2},
                  {"delta", delta},
                  {"h", cp.h},
                  {"alpha", cp.alpha},
                  {"p1", fp.p1},
                  {"p2", fp.p2},
                  {"layers_bulk", J >= 2 ? lA : lC},
                  {"layers_top", lC},
                  {"Lambda0", lam0},
                  {"LambdaC", lamC},
                  {"Lambda", lam},
                  {"realized_alpha", realized},
                  {"betaA", betasA.beta},
                  {"betaA_lo", betasA.lo},
                  {"betaA_hi", betasA.hi},
                  {"betaA_target", betasA.target},
                  {"betaA_lengths", betasA.model.lengths},
                  {"betaMid", betasMid.beta},
                  {"betaMid_lo", betasMid.lo},
                  {"betaMid_hi", betasMid.hi},
                  {"betaMid_target", betasMid.target},
                  {"betaMid_lengths", betasMid.model.lengths},
                  {"pred_level1_true", level1T},
                  {"pred_level1_bad", level1B},
                  {"pred_true", predT},
                  {"pred_false", predF}};
    return g;
}

int directed_edge_layers(int Upsilon, double eps, double delta) {
    if (Upsilon < 1) throw DomainError("fan bound must be at least 1");
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("leak tolerance must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("contrast must lie in (0, 1)");
    double raw = std::log(double(Upsilon) / eps) / std::log(1.0 / (1.0 - delta)) + 1.0;
    return std::max(1, int(std::ceil(raw)));
}

gadget build_directed_edge(int Upsilon, double eps, const separation_params& params,
                           const a_sequence& a) {
    int L = directed_edge_layers(Upsilon, eps, params.delta);
    gadget f = build_filter(params, L, a);

    assembler as;
    as.g = std::move(f.graph);
    vertex u = as.add();
    for (vertex in : f.input_sets[0]) as.edge(in, u);

    double realized = contract_real(f.contract, "realized_alpha");
    double per_layer = params.h * a.a1() * realized;
    double mean_bound = double(Upsilon) * std::pow(per_layer, L);
    double source_bound = 0.0;
    for (int k = 0; k <= 15; ++k) {
        double pk = std::exp(-mean_bound);
        for (int i = 1; i <= k; ++i) pk *= mean_bound / i;
        source_bound += pk * a.at(size_t(k));
    }

    gadget g;
    g.type = "directed_edge";
    g.graph = std::move(as.g);
    g.input_sets = {{u}};
    g.output = f.output;
    g.a = a;
    g.contract = f.contract;
    g.contract.erase("pred_half_p1");
    g.contract.erase("pred_p2");
    g.contract["Upsilon"] = Upsilon;
    g.contract["eps"] = eps;
    g.contract["L"] = L;
    g.contract["b_pred"] = iterate_realized(a.a1(), L, params.h, realized, a);
    g.contract["reverse_mean_bound"] = mean_bound;
    g.contract["reverse_source_bound"] = source_bound;
    return g;
}

namespace {

// y(x) = sum_{i>=2} C(L0,i) a_i q^i (1-q)^{L0-i} with q = a2 x^2
double a1zero_map(double x, int lambda0, const a_sequence& a) {
    double q = a.a2() * x * x;
    if (q <= 0.0) return 0.0;
    double term = std::pow(1.0 - q, lambda0);  // i = 0
    double y = 0.0;
    for (int i = 1; i <= lambda0; ++i) {
        term *= double(lambda0 - i + 1) / double(i) * q / (1.0 - q);
        if (i >= 2) y += term * a.at(size_t(i));
    }
    return y;
}

void check_a1zero(const a_sequence& a) {
    a.validate();
    if (a.a1() != 0.0) throw DomainError("variant requires a1 = 0");
    if (a.a2() <= 0.0) throw DomainError("variant requires a2 > 0");
}

}  // namespace

int find_lambda0(const a_sequence& a, int cap) {
    check_a1zero(a);
    double x = 0.5 * a.a2();
    for (int l0 = 2; l0 <= cap; ++l0)
        if (a1zero_map(x, l0, a) >= x) return l0;
    throw NoLambda0("no fan-in keeps the half-a2 drive from shrinking");
}

gadget build_and_a1zero(int I, int Lambda0, const a_sequence& a) {
    check_a1zero(a);
    if (I < 2 || (I & (I - 1)) != 0) throw DomainError("fan-in must be a power of two >= 2");
    if (Lambda0 < 2) throw DomainError("block fan-in must be at least 2");
    double x = 0.5 * a.a2();
    if (a1zero_map(x, Lambda0, a) < x)
        throw NoLambda0("block fan-in too small to sustain the half-a2 drive");
    int J = 0;
    for (int v = I; v > 1; v >>= 1) ++J;
    if (pow_capped(Lambda0, J, desk_lambda_cap) > desk_lambda_cap)
        throw TooLarge("input-set size exceeds the desk cap");

    assembler as;
    auto sets = std::vector<std::vector<vertex>>(size_t(I));
    auto rec = [&](auto&& self, int s0, int width, long long copies) -> std::vector<vertex> {
        std::vector<vertex> outs;
        if (width == 1) {
            vertex first = as.add(int(copies));
            for (long long i = 0; i < copies; ++i) {
                sets[size_t(s0)].push_back(first + vertex(i));
                outs.push_back(first + vertex(i));
            }
            return outs;
        }
        for (long long r = 0; r < copies; ++r) {
            auto left = self(self, s0, width / 2, Lambda0);
            auto right = self(self, s0 + width / 2, width / 2, Lambda0);
            vertex jn = as.add(Lambda0);
            for (int i = 0; i < Lambda0; ++i) {
                as.edge(left[size_t(i)], jn + i);
                as.edge(right[size_t(i)], jn + i);
            }
            vertex w = as.add();
            for (int i = 0; i < Lambda0; ++i) as.edge(jn + i, w);
            outs.push_back(w);
        }
        return outs;
    };
    vertex out = rec(rec, 0, I, 1).at(0);

    double level1 = a1zero_map(x, Lambda0, a);
    double top = x;
    for (int lvl = 0; lvl < J; ++lvl) top = a1zero_map(top, Lambda0, a);

    gadget g;
    g.type = "and_a1zero";
    g.graph = std::move(as.g);
    g.input_sets = std::move(sets);
    g.output = out;
    g.a = a;
    g.contract = {{"I", I},
                  {"Lambda0", Lambda0},
                  {"Lambda", pow_capped(Lambda0, J, desk_lambda_cap)},
                  {"y_half", level1},
                  {"pred_top", top}};
    return g;
}

namespace {

struct csr_adj {
    std::vector<int> off;
    std::vector<vertex> adj;
};

csr_adj build_adj(const weighted_graph& g) {
    csr_adj c;
    c.off.assign(size_t(g.n) + 1, 0);
    for (const auto& e : g.edges) {
        ++c.off[size_t(e.u) + 1];
        ++c.off[size_t(e.v) + 1];
    }
    for (size_t i = 1; i < c.off.size(); ++i) c.off[i] += c.off[i - 1];
    c.adj.resize(size_t(c.off.back()));
    std::vector<int> pos(c.off.begin(), c.off.end() - 1);
    for (const auto& e : g.edges) {
        c.adj[size_t(pos[size_t(e.u)]++)] = e.v;
        c.adj[size_t(pos[size_t(e.v)]++)] = e.u;
    }
    return c;
}

// monotone fixpoint by queue relaxation; the final infected set does not
// depend on processing order
struct gadget_runner {
    const csr_adj& adj;
    const a_sequence& a;
    vertex n;
    std::vector<double> theta;
    std::vector<int> cnt;
    std::vector<char> inf;
    std::vector<vertex> stack;

    gadget_runner(const csr_adj& c, const a_sequence& seq, vertex nn)
        : adj(c), a(seq), n(nn), theta(size_t(nn)), cnt(size_t(nn)), inf(size_t(nn)) {}

    void run(const std::vector<vertex>& seeds) {
        std::fill(cnt.begin(), cnt.end(), 0);
        std::fill(inf.begin(), inf.end(), 0);
        stack.clear();
        for (vertex s : seeds) {
            if (!inf[size_t(s)]) {
                inf[size_t(s)] = 1;
                stack.push_back(s);
            }
        }
        while (!stack.empty()) {
            vertex u = stack.back();
            stack.pop_back();
            for (int i = adj.off[size_t(u)]; i < adj.off[size_t(u) + 1]; ++i) {
                vertex v = adj.adj[size_t(i)];
                if (inf[size_t(v)]) continue;
                ++cnt[size_t(v)];
                if (a.at(size_t(cnt[size_t(v)])) >= theta[size_t(v)]) {
                    inf[size_t(v)] = 1;
                    stack.push_back(v);
                }
            }
        }
    }
};

}  // namespace

measure_result measure_gadget(const gadget& g, const std::vector<double>& set_probs,
                              long long trials, uint64_t seed, int threads) {
    if (set_probs.size() != g.input_sets.size())
        throw DomainError("need one drive probability per input set");
    for (double p : set_probs)
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("drive probability outside [0, 1]");
    if (trials < 1) throw DomainError("need at least one trial");
    if (g.output < 0 || g.output >= g.graph.n) throw DomainError("output vertex out of range");

    csr_adj adj = build_adj(g.graph);
    std::mutex mu;
    long long total = 0;  // integer accumulation, so worker count cannot matter
    parallel_for_blocks(trials, threads, [&](int64_t lo, int64_t hi) {
        gadget_runner run(adj, g.a, g.graph.n);
        long long local = 0;
        std::vector<vertex> seeds;
        for (int64_t r = lo; r < hi; ++r) {
            rng t(derive_seed(seed, stream_forward, uint64_t(r)));
            seeds.clear();
            for (size_t s = 0; s < g.input_sets.size(); ++s)
                for (vertex v : g.input_sets[s])
                    if (t.u01() < set_probs[s]) seeds.push_back(v);
            for (vertex i = 0; i < g.graph.n; ++i) run.theta[size_t(i)] = 1.0 - t.u01();
            run.run(seeds);
            local += run.inf[size_t(g.output)];
        }
        std::lock_guard<std::mutex> lock(mu);
        total += local;
    });
    measure_result res;
    res.trials = trials;
    res.frequency = double(total) / double(trials);
    res.stderr_ = std::sqrt(res.frequency * (1.0 - res.frequency) / double(trials));
    return res;
}

measure_result measure_reverse(const gadget& g, long long trials, uint64_t seed, int threads) {
    if (trials < 1) throw DomainError("need at least one trial");
    if (g.output < 0 || g.output >= g.graph.n) throw DomainError("output vertex out of range");
    csr_adj adj = build_adj(g.graph);
    std::vector<vertex> inputs;
    for (const auto& set : g.input_sets) inputs.insert(inputs.end(), set.begin(), set.end());
    std::vector<vertex> seeds{g.output};
    std::mutex mu;
    long long sum = 0, sq = 0;
    parallel_for_blocks(trials, threads, [&](int64_t lo, int64_t hi) {
        gadget_runner run(adj, g.a, g.graph.n);
        long long lsum = 0, lsq = 0;
        for (int64_t r = lo; r < hi; ++r) {
            rng t(derive_seed(seed, stream_reverse, uint64_t(r)));
            for (vertex i = 0; i < g.graph.n; ++i) run.theta[size_t(i)] = 1.0 - t.u01();
            run.run(seeds);
            long long c = 0;
            for (vertex v : inputs) c += run.inf[size_t(v)];
            lsum += c;
            lsq += c * c;
        }
        std::lock_guard<std::mutex> lock(mu);
        sum += lsum;
        sq += lsq;
    });
    measure_result res;
    res.trials = trials;
    res.frequency = double(sum) / double(trials);
    if (trials > 1) {
        double var = (double(sq) - double(sum) * double(sum) / double(trials)) /
                     double(trials - 1);
        res.stderr_ = std::sqrt(std::max(0.0, var) / double(trials));
    }
    return res;
}

}  // namespace cascadelab
