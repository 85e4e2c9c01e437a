#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cascadelab/asequence.hpp"
#include "cascadelab/graph.hpp"
#include "cascadelab/report.hpp"

namespace cascadelab {

// Unit-weight wiring plus the probability contract it was built to satisfy.
// Vertices cascade under symmetric influence with Uniform01 thresholds; the
// declared contract carries both requested parameters and forward-model
// predictions so a Monte Carlo run can certify the build.
struct gadget {
    std::string type;  // scaling | filter | and2 | and | directed_edge | and_a1zero
    weighted_graph graph;
    std::vector<std::vector<vertex>> input_sets;
    vertex output = -1;
    a_sequence a;
    json contract;

    json to_sidecar() const;  // {type, params, input_sets, output}
    static gadget from_sidecar(const json& j, weighted_graph g);
};

// Multiset of chain lengths realizing a multiplicative factor in
// (alpha - eps, alpha]. Forward model: a length-l chain relays with a1 per
// hop, so its far end fires with a1^{l-1}; the converging endpoint combines
// fired ends through the a-sequence. Greedy: repeatedly add the shortest
// chain that keeps the modeled factor <= alpha.
struct scaling_model {
    std::vector<int> lengths;  // insertion order
    double realized = 0.0;     // modeled factor after the last addition
};
scaling_model scaling_paths(double alpha, double eps, const a_sequence& a);

// Two-terminal realization of scaling_paths. eps >= alpha yields the empty
// gadget (a zero factor is already inside tolerance).
gadget build_scaling_down(double alpha, double eps, const a_sequence& a);

// layers-deep tree of separation blocks; h^layers inputs, one output. Each
// block scales its h inputs by params.alpha and fans them into one vertex.
// Contract fixed points come from the requested alpha, predictions from the
// realized one.
gadget build_filter(const separation_params& params, int layers, const a_sequence& a);

// Inter-stage factor for pair junctions feeding a filter, with the bounds it
// must clear: junction firing probability is phiT_minus at both inputs p0,
// at most phiT_plus below 1.1*p0, and at most phiF_plus once an input drops
// to p0/2.
struct and2_betas {
    double lo = 0.0, hi = 0.0;  // feasible factor interval
    double target = 0.0;        // geometric mean of (lo, hi)
    double beta = 0.0;          // realized factor
    double phiT_plus = 0.0, phiT_minus = 0.0, phiF_plus = 0.0;
    scaling_model model;
};
and2_betas choose_betas(double p0, double p1, double p2, const a_sequence& a);

// Exact firing probability of a vertex with two independently infected
// neighbors: (a2 - 2 a1) pu pv + a1 pu + a1 pv.
double junction_map(double pu, double pv, const a_sequence& a);

// Two Lambda-sized input sets joined pairwise at junctions, scaled by beta
// into the given filter. Consumes the filter graph.
gadget build_and2(double p0, const and2_betas& betas, gadget filter, const a_sequence& a);

// log2(I)-level tower: threshold-p0 gadgets at level 1, threshold-(p2-eps2)
// gadgets above, one tightened top. delta sets the separation contract via
// choose_params.
gadget build_and(int I, double p0, double eps1, double eps2, double delta,
                 const a_sequence& a);

// ceil(log(Upsilon/eps)/log(1/(1-delta)) + 1); more layers only strengthen
// the reverse-leak bound.
int directed_edge_layers(int Upsilon, double eps, double delta);

// Filter with directed_edge_layers layers whose h^L inputs all attach to a
// single source vertex. Forward transmit is positive; reverse leak decays
// geometrically per layer.
gadget build_directed_edge(int Upsilon, double eps, const separation_params& params,
                           const a_sequence& a);

// Smallest Lambda0 >= 2 whose fan-in map y at x = a2/2 satisfies
// y(a2/2) >= a2/2, where y(x) = sum_{i>=2} C(Lambda0,i) a_i q^i (1-q)^{Lambda0-i}
// with q = a2 x^2. Throws NoLambda0 past the cap.
int find_lambda0(const a_sequence& a, int cap = 10000);

// Tower of 2-input blocks for a1 = 0: paired inputs meet at degree-2
// junctions, Lambda0 junctions fan into each block output. A never-firing
// input set forces a never-firing output exactly, not statistically.
gadget build_and_a1zero(int I, int Lambda0, const a_sequence& a);

struct measure_result {
    double frequency = 0.0;  // forward: output firing rate; reverse: mean infected inputs
    double stderr_ = 0.0;
    long long trials = 0;
};

// Per trial: seed each input vertex independently with its set's probability,
// draw Uniform01 thresholds for every vertex, cascade, record the output
// state. Worker count never affects the result.
measure_result measure_gadget(const gadget& g, const std::vector<double>& set_probs,
                              long long trials, uint64_t seed, int threads = 1);

// Seeds the output instead and reports the mean number of infected input
// vertices per trial (the reverse-leak certificate).
measure_result measure_reverse(const gadget& g, long long trials, uint64_t seed,
                               int threads = 1);

}  // namespace cascadelab
