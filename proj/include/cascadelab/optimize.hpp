#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cascadelab/cascade.hpp"

namespace cascadelab {

struct greedy_step {
    int step = 0;  // 1-based
    vertex v = 0;
    double marginal_mean = 0.0;
    double marginal_stderr = 0.0;
    double cumulative_mean = 0.0;
};

struct greedy_trace {
    std::vector<greedy_step> steps;

    std::vector<vertex> seeds() const;
    std::string to_csv() const;  // step, vertex, marginal_mean, marginal_stderr, cumulative_mean
};

// sigma without sampling noise: a single cascade for degenerate thresholds,
// the bucket enumeration for symmetric influence under uniform thresholds
double exact_sigma(const cascade_instance& inst, const std::vector<vertex>& seeds);

// Monte Carlo greedy with common random numbers per step (every candidate in a
// step sees the same threshold draws) and lazy re-evaluation of cached gains.
// Ties go to the smallest vertex id. exact = true swaps the estimator for
// exact_sigma; lazy = false forces the full sweep each step (reference mode).
greedy_trace greedy(const cascade_instance& inst, long long replications, uint64_t seed,
                    bool exact = false, bool lazy = true, int threads = 1);

// Maximum sigma over all size-k sets, exact or MC-estimated with one shared
// seed (so candidates face identical draws). Ties go to the lexicographically
// smallest set. Throws TooLarge above the combination cap.
std::pair<std::vector<vertex>, double> brute_force(const cascade_instance& inst, bool exact,
                                                   long long replications = 1000,
                                                   uint64_t seed = 0,
                                                   long long cap = 1'000'000, int threads = 1);

}  // namespace cascadelab
