#include "cascadelab/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "cascadelab/errors.hpp"
#include "cascadelab/parallel.hpp"
#include "cascadelab/rng.hpp"

namespace cascadelab {

std::vector<vertex> greedy_trace::seeds() const {
    std::vector<vertex> s;
    for (const auto& st : steps) s.push_back(st.v);
    return s;
}

std::string greedy_trace::to_csv() const {
    std::string out = "step,vertex,marginal_mean,marginal_stderr,cumulative_mean\n";
    for (const auto& st : steps) {
        out += std::to_string(st.step);
        out += ',';
        out += std::to_string(st.v);
        out += ',';
        out += format_real(st.marginal_mean);
        out += ',';
        out += format_real(st.marginal_stderr);
        out += ',';
        out += format_real(st.cumulative_mean);
        out += '\n';
    }
    return out;
}

double exact_sigma(const cascade_instance& inst, const std::vector<vertex>& seeds) {
    if (inst.thresholds.kind == threshold_kind::degenerate)
        return double(run_cascade(inst, inst.thresholds.theta, seeds).infected_count);
    if (inst.influence.kind == influence_kind::symmetric)
        return exact_sigma_bucket(inst, seeds);
    throw DomainError("no exact evaluator for this influence/threshold combination");
}

namespace {

// per-step CRN evaluator: replication r of step s draws the same thresholds
// for every candidate
struct evaluator {
    const cascade_instance& inst;
    long long reps;
    uint64_t master;
    bool exact;
    int threads;

    // mean and stderr of |infected(S)| - base_r over the step's draws
    std::pair<double, double> marginal(const std::vector<vertex>& seeds, int step,
                                       const std::vector<double>& base) const {
        if (exact) {
            double v = exact_sigma(inst, seeds);
            return {v - base[0], 0.0};
        }
        double sum = 0.0, sq = 0.0;
        for (long long r = 0; r < reps; ++r) {
            rng eng(derive_seed(master, uint64_t(step), uint64_t(r)));
            auto theta = inst.thresholds.realize(inst.graph.n, eng);
            double d = double(run_cascade(inst, theta, seeds).infected_count) - base[size_t(r)];
            sum += d;
            sq += d * d;
        }
        double mean = sum / double(reps);
        double se = 0.0;
        if (reps > 1) {
            double var = (sq - double(reps) * mean * mean) / double(reps - 1);
            se = std::sqrt(std::max(0.0, var) / double(reps));
        }
        return {mean, se};
    }

    // base_r = |infected(S)| on the step's draws (single entry when exact)
    std::vector<double> base_values(const std::vector<vertex>& seeds, int step) const {
        if (exact) return {exact_sigma(inst, seeds)};
        auto base = std::vector<double>(size_t(reps));
        for (long long r = 0; r < reps; ++r) {
            rng eng(derive_seed(master, uint64_t(step), uint64_t(r)));
            auto theta = inst.thresholds.realize(inst.graph.n, eng);
            base[size_t(r)] = double(run_cascade(inst, theta, seeds).infected_count);
        }
        return base;
    }
};

}  // namespace

greedy_trace greedy(const cascade_instance& inst, long long replications, uint64_t seed,
                    bool exact, bool lazy, int threads) {
    validate_instance(inst);
    if (!exact && replications < 1) throw DomainError("replications must be positive");
    if (inst.thresholds.kind == threshold_kind::degenerate) {
        exact = true;  // every draw is identical anyway
    }
    evaluator ev{inst, replications, splitmix64(seed ^ 0x67726479ull), exact, threads};

    greedy_trace trace;
    std::vector<vertex> chosen;
    std::vector<char> used(size_t(inst.graph.n), 0);

    struct entry {
        double gain;
        double se;
        vertex v;
        int fresh;  // step the gain was computed at
    };
    auto worse = [](const entry& a, const entry& b) {
        if (a.gain != b.gain) return a.gain < b.gain;
        return a.v > b.v;
    };
    std::priority_queue<entry, std::vector<entry>, decltype(worse)> queue(worse);

    for (int step = 1; step <= inst.k; ++step) {
        auto base = ev.base_values(chosen, step);
        double base_mean = 0.0;
        for (double b : base) base_mean += b;
        base_mean /= double(base.size());

        greedy_step out;
        out.step = step;
        if (!lazy || step == 1) {
            // full sweep; step 1 also primes the lazy queue
            std::vector<std::pair<double, double>> gains(size_t(inst.graph.n),
                                                         {-1.0, 0.0});
            std::vector<vertex> cands;
            for (vertex v = 0; v < inst.graph.n; ++v)
                if (!used[size_t(v)]) cands.push_back(v);
            parallel_for((int64_t)cands.size(), threads, [&](int64_t ci) {
                vertex v = cands[size_t(ci)];
                auto s2 = chosen;
                s2.push_back(v);
                gains[size_t(v)] = ev.marginal(s2, step, base);
            });
            vertex best = -1;
            for (vertex v : cands)
                if (best < 0 || gains[size_t(v)].first > gains[size_t(best)].first) best = v;
            out.v = best;
            out.marginal_mean = gains[size_t(best)].first;
            out.marginal_stderr = gains[size_t(best)].second;
            if (lazy) {
                while (!queue.empty()) queue.pop();
                for (vertex v : cands)
                    if (v != best)
                        queue.push({gains[size_t(v)].first, gains[size_t(v)].second, v, step});
            }
        } else {
            // lazy: re-evaluate stale heads until a fresh entry tops the queue
            while (true) {
                entry e = queue.top();
                queue.pop();
                if (e.fresh == step) {
                    out.v = e.v;
                    out.marginal_mean = e.gain;
                    out.marginal_stderr = e.se;
                    break;
                }
                auto s2 = chosen;
                s2.push_back(e.v);
                auto fresh = ev.marginal(s2, step, base);
                queue.push({fresh.first, fresh.second, e.v, step});
            }
        }
        used[size_t(out.v)] = 1;
        chosen.push_back(out.v);
        out.cumulative_mean = base_mean + out.marginal_mean;
        trace.steps.push_back(out);
    }
    return trace;
}

std::pair<std::vector<vertex>, double> brute_force(const cascade_instance& inst, bool exact,
                                                   long long replications, uint64_t seed,
                                                   long long cap, int threads) {
    validate_instance(inst);
    vertex n = inst.graph.n;
    int k = inst.k;
    if (k == 0) return {{}, 0.0};
    double sets = 1.0;
    for (int j = 0; j < k; ++j) sets = sets * double(n - j) / double(j + 1);
    if (sets > double(cap)) throw TooLarge("seed-set enumeration over the cap");

    std::vector<std::vector<vertex>> combos;
    auto comb = std::vector<vertex>(size_t(k));
    for (int j = 0; j < k; ++j) comb[size_t(j)] = j;
    while (true) {
        combos.push_back(comb);
        int j = k - 1;
        while (j >= 0 && comb[size_t(j)] == n - k + j) --j;
        if (j < 0) break;
        ++comb[size_t(j)];
        for (int l = j + 1; l < k; ++l) comb[size_t(l)] = comb[size_t(l - 1)] + 1;
    }

    std::vector<double> scores(combos.size());
    parallel_for((int64_t)combos.size(), threads, [&](int64_t i) {
        if (exact)
            scores[size_t(i)] = exact_sigma(inst, combos[size_t(i)]);
        else
            scores[size_t(i)] =
                estimate_sigma(inst, combos[size_t(i)], replications, seed, 1).mean;
    });
    size_t best = 0;
    for (size_t i = 1; i < combos.size(); ++i)
        if (scores[i] > scores[best]) best = i;  // lex order: ties keep the earliest
    return {combos[best], scores[best]};
}

}  // namespace cascadelab
