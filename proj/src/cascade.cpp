#include "cascadelab/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "cascadelab/errors.hpp"
#include "cascadelab/parallel.hpp"

namespace cascadelab {

namespace stream {
constexpr uint64_t sigma = 0x7369676d;      // threshold draws for estimate_sigma
constexpr uint64_t pre_graph = 0x70726567;  // per-replication graph sampling
constexpr uint64_t pre_theta = 0x70726574;  // per-replication threshold draws
}  // namespace stream

std::string threshold_spec::to_tsv() const {
    if (kind != threshold_kind::degenerate)
        throw DomainError("only degenerate thresholds serialize to TSV");
    std::string out;
    for (size_t i = 0; i < theta.size(); ++i) {
        out += std::to_string(i);
        out += '\t';
        out += format_real(theta[i]);
        out += '\n';
    }
    return out;
}

threshold_spec threshold_spec::from_tsv(const std::string& text, vertex n) {
    std::vector<double> t(size_t(n), -1.0);
    std::vector<bool> seen(size_t(n), false);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        long long v;
        double th;
        if (std::sscanf(line.c_str(), "%lld\t%lf", &v, &th) != 2) {
            // accept "inf" for never-infectable vertices
            char buf[16] = {0};
            if (std::sscanf(line.c_str(), "%lld\t%15s", &v, buf) == 2 &&
                std::string(buf) == "inf")
                th = std::numeric_limits<double>::infinity();
            else
                throw DomainError("bad threshold line: " + line);
        }
        if (v < 0 || v >= n) throw UnknownVertex("threshold for vertex out of range: " + line);
        if (seen[size_t(v)]) throw DomainError("duplicate threshold for vertex " + std::to_string(v));
        if (th < 0.0) throw DomainError("negative threshold: " + line);
        seen[size_t(v)] = true;
        t[size_t(v)] = th;
    }
    for (vertex v = 0; v < n; ++v)
        if (!seen[size_t(v)])
            throw DomainError("missing threshold for vertex " + std::to_string(v));
    return degenerate(std::move(t));
}

std::vector<double> threshold_spec::realize(vertex n, rng& r) const {
    if (kind == threshold_kind::degenerate) {
        if (theta.size() != size_t(n))
            throw DomainError("threshold vector does not match vertex count");
        for (double t : theta)
            if (t < 0.0) throw DomainError("negative threshold");
        return theta;
    }
    auto t = std::vector<double>(size_t(n));
    for (vertex v = 0; v < n; ++v) t[size_t(v)] = 1.0 - r.u01();  // (0, 1]
    return t;
}

void validate_instance(const cascade_instance& inst) {
    if (inst.influence.kind != influence_kind::linear)
        for (const auto& e : inst.graph.edges)
            if (e.w != 1.0)
                throw SpecMismatch("counting/symmetric influence needs unit edge weights");
    if (inst.influence.kind == influence_kind::symmetric) inst.influence.a.validate();
    if (inst.k < 0 || inst.k > inst.graph.n) throw DomainError("budget out of range");
    if (inst.thresholds.kind == threshold_kind::uniform01 &&
        inst.influence.kind == influence_kind::linear)
        for (const auto& e : inst.graph.edges)
            if (e.w < 0.0) throw DomainError("negative edge weight");
}

namespace {

// out-neighbor CSR; undirected edges contribute both directions
struct csr {
    vertex n = 0;
    std::vector<size_t> off;
    std::vector<vertex> nbr;
    std::vector<double> wt;

    static csr build(const weighted_graph& g) {
        csr c;
        c.n = g.n;
        std::vector<size_t> deg(size_t(g.n) + 1, 0);
        for (const auto& e : g.edges) {
            ++deg[size_t(e.u) + 1];
            if (!e.directed) ++deg[size_t(e.v) + 1];
        }
        c.off.resize(size_t(g.n) + 1, 0);
        for (vertex v = 0; v < g.n; ++v) c.off[size_t(v) + 1] = c.off[size_t(v)] + deg[size_t(v) + 1];
        c.nbr.resize(c.off.back());
        c.wt.resize(c.off.back());
        std::vector<size_t> at(c.off.begin(), c.off.end() - 1);
        for (const auto& e : g.edges) {
            c.nbr[at[size_t(e.u)]] = e.v;
            c.wt[at[size_t(e.u)]++] = e.w;
            if (!e.directed) {
                c.nbr[at[size_t(e.v)]] = e.u;
                c.wt[at[size_t(e.v)]++] = e.w;
            }
        }
        return c;
    }
};

// Reusable cascade workspace; one instance per worker thread.
struct engine {
    const csr& g;
    influence_kind kind;
    const a_sequence* a;
    std::vector<double> acc;  // linear influence accumulator
    std::vector<int> cnt;     // counting/symmetric accumulator
    std::vector<char> infected;
    std::vector<vertex> frontier, next, touched;
    std::vector<char> in_touched;

    engine(const csr& graph, const influence_spec& inf)
        : g(graph), kind(inf.kind), a(&inf.a) {
        if (kind == influence_kind::linear)
            acc.assign(size_t(g.n), 0.0);
        else
            cnt.assign(size_t(g.n), 0);
        infected.assign(size_t(g.n), 0);
        in_touched.assign(size_t(g.n), 0);
    }

    double value(vertex v) const {
        switch (kind) {
            case influence_kind::linear: return acc[size_t(v)];
            case influence_kind::counting: return double(cnt[size_t(v)]);
            default: return a->at(size_t(cnt[size_t(v)]));
        }
    }

    // returns the infected count; fills round_of / rounds when asked
    long long run(const std::vector<double>& theta, const std::vector<vertex>& seeds,
                  cascade_result* out) {
        if (theta.size() != size_t(g.n)) throw DomainError("threshold vector size mismatch");
        std::fill(infected.begin(), infected.end(), 0);
        if (kind == influence_kind::linear)
            std::fill(acc.begin(), acc.end(), 0.0);
        else
            std::fill(cnt.begin(), cnt.end(), 0);
        if (out) {
            out->round_of.assign(size_t(g.n), -1);
            out->rounds.clear();
        }

        frontier.clear();
        for (vertex s : seeds) {
            if (s < 0 || s >= g.n) throw UnknownVertex("seed out of range");
            if (infected[size_t(s)]) continue;
            infected[size_t(s)] = 1;
            frontier.push_back(s);
        }
        std::sort(frontier.begin(), frontier.end());
        long long total = (long long)frontier.size();
        if (out) {
            for (vertex s : frontier) out->round_of[size_t(s)] = 0;
            out->rounds.push_back(frontier);
        }

        int round = 0;
        while (!frontier.empty() || round == 0) {
            ++round;
            touched.clear();
            for (vertex u : frontier)
                for (size_t i = g.off[size_t(u)]; i < g.off[size_t(u) + 1]; ++i) {
                    vertex v = g.nbr[i];
                    if (infected[size_t(v)]) continue;
                    if (kind == influence_kind::linear)
                        acc[size_t(v)] += g.wt[i];
                    else
                        ++cnt[size_t(v)];
                    if (!in_touched[size_t(v)]) {
                        in_touched[size_t(v)] = 1;
                        touched.push_back(v);
                    }
                }
            if (round == 1)  // zero thresholds fire without any infected neighbor
                for (vertex v = 0; v < g.n; ++v)
                    if (!infected[size_t(v)] && theta[size_t(v)] <= 0.0 && !in_touched[size_t(v)]) {
                        in_touched[size_t(v)] = 1;
                        touched.push_back(v);
                    }
            next.clear();
            for (vertex v : touched) {
                in_touched[size_t(v)] = 0;
                if (value(v) >= theta[size_t(v)]) next.push_back(v);
            }
            if (next.empty()) break;
            std::sort(next.begin(), next.end());
            for (vertex v : next) infected[size_t(v)] = 1;
            total += (long long)next.size();
            if (out) {
                for (vertex v : next) out->round_of[size_t(v)] = round;
                out->rounds.push_back(next);
            }
            frontier.swap(next);
        }
        return total;
    }
};

}  // namespace

cascade_result run_cascade(const cascade_instance& inst, const std::vector<double>& theta,
                           const std::vector<vertex>& seeds) {
    validate_instance(inst);
    csr g = csr::build(inst.graph);
    engine e(g, inst.influence);
    cascade_result res;
    res.infected_count = e.run(theta, seeds, &res);
    return res;
}

namespace {

sigma_estimate aggregate(const std::vector<long long>& counts) {
    sigma_estimate est;
    est.replications = (long long)counts.size();
    double sum = 0.0;
    for (long long c : counts) sum += double(c);
    est.mean = sum / double(counts.size());
    if (counts.size() > 1) {
        double ss = 0.0;
        for (long long c : counts) {
            double d = double(c) - est.mean;
            ss += d * d;
        }
        est.stderr_ = std::sqrt(ss / (double(counts.size()) * double(counts.size() - 1)));
    }
    return est;
}

}  // namespace

sigma_estimate estimate_sigma(const cascade_instance& inst, const std::vector<vertex>& seeds,
                              long long replications, uint64_t seed, int threads) {
    validate_instance(inst);
    if (replications < 1) throw DomainError("replications must be positive");
    csr g = csr::build(inst.graph);
    if (inst.thresholds.kind == threshold_kind::degenerate) {
        engine e(g, inst.influence);
        long long c = e.run(inst.thresholds.theta, seeds, nullptr);
        return {double(c), 0.0, replications};
    }
    auto counts = std::vector<long long>(size_t(replications));
    threads = resolve_threads(threads);
    // one engine per worker block; slot i depends only on (seed, i)
    parallel_for_blocks(replications, threads, [&](int64_t lo, int64_t hi) {
        engine e(g, inst.influence);
        for (int64_t i = lo; i < hi; ++i) {
            rng r(derive_seed(seed, stream::sigma, uint64_t(i)));
            auto theta = inst.thresholds.realize(inst.graph.n, r);
            counts[size_t(i)] = e.run(theta, seeds, nullptr);
        }
    });
    return aggregate(counts);
}

double exact_sigma_bucket(const cascade_instance& inst, const std::vector<vertex>& seeds,
                          vertex n_limit) {
    validate_instance(inst);
    if (inst.influence.kind != influence_kind::symmetric ||
        inst.thresholds.kind != threshold_kind::uniform01)
        throw SpecMismatch("bucket oracle needs symmetric influence and uniform thresholds");
    vertex n = inst.graph.n;
    if (n > n_limit) throw TooLarge("bucket enumeration limited to " + std::to_string(n_limit) +
                                    " vertices");

    // distinct sequence values 0 = d_0 < d_1 < ... < d_B; a threshold in
    // (d_{j-1}, d_j] behaves exactly like the degenerate threshold d_j, and the
    // leftover (d_B, 1] mass never fires
    std::vector<double> d{0.0};
    for (double x : inst.influence.a.v)
        if (x > d.back()) d.push_back(x);
    std::vector<double> level, prob;
    for (size_t j = 1; j < d.size(); ++j) {
        level.push_back(d[j]);
        prob.push_back(d[j] - d[j - 1]);
    }
    if (d.back() < 1.0) {
        level.push_back(std::numeric_limits<double>::infinity());
        prob.push_back(1.0 - d.back());
    }

    std::vector<char> is_seed(size_t(n), 0);
    for (vertex s : seeds) {
        if (s < 0 || s >= n) throw UnknownVertex("seed out of range");
        is_seed[size_t(s)] = 1;
    }
    std::vector<vertex> free_vertices;
    for (vertex v = 0; v < n; ++v)
        if (!is_seed[size_t(v)]) free_vertices.push_back(v);

    double assignments = std::pow(double(level.size()), double(free_vertices.size()));
    if (assignments > 2e7) throw TooLarge("bucket assignment space too large");

    csr g = csr::build(inst.graph);
    engine e(g, inst.influence);
    std::vector<double> theta(size_t(n), 0.0);  // seeds' buckets are irrelevant
    std::vector<size_t> pick(free_vertices.size(), 0);
    double sigma = 0.0;
    while (true) {
        double w = 1.0;
        for (size_t i = 0; i < free_vertices.size(); ++i) {
            theta[size_t(free_vertices[i])] = level[pick[i]];
            w *= prob[pick[i]];
        }
        sigma += w * double(e.run(theta, seeds, nullptr));
        size_t i = 0;
        for (; i < pick.size(); ++i) {
            if (++pick[i] < level.size()) break;
            pick[i] = 0;
        }
        if (i == pick.size()) break;
    }
    return sigma;
}

sigma_estimate estimate_sigma_pre_sampling(const hierarchy_tree& tree,
                                           const influence_spec& influence,
                                           const threshold_spec& thresholds,
                                           const std::vector<vertex>& seeds,
                                           long long replications, uint64_t seed, int threads) {
    if (tree.mode != tree_mode::stochastic)
        throw ModeMismatch("pre-sampling estimation needs a stochastic tree");
    if (replications < 1) throw DomainError("replications must be positive");
    auto counts = std::vector<long long>(size_t(replications));
    threads = resolve_threads(threads);
    parallel_for_blocks(replications, threads, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) {
            auto graph = sample(tree, derive_seed(seed, stream::pre_graph, uint64_t(i)));
            cascade_instance inst{graph.as_weighted(), influence, thresholds, 0};
            validate_instance(inst);
            csr g = csr::build(inst.graph);
            engine e(g, influence);
            rng r(derive_seed(seed, stream::pre_theta, uint64_t(i)));
            auto theta = thresholds.realize(inst.graph.n, r);
            counts[size_t(i)] = e.run(theta, seeds, nullptr);
        }
    });
    return aggregate(counts);
}

}  // namespace cascadelab
