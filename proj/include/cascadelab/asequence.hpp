#pragma once

#include <cstddef>
#include <vector>

#include "cascadelab/report.hpp"

namespace cascadelab {

// Symmetric local influence sequence a_0..a_L with constant tail a_i = a_L for
// i > L. p* = a_L is the supremum of attainable influence.
struct a_sequence {
    std::vector<double> v;  // v[0] == 0, non-decreasing, within [0,1]

    static a_sequence from_json(const json& j);
    json to_json() const;
    void validate() const;  // throws DomainError on malformed sequences

    double at(size_t i) const {  // constant-tail lookup
        if (v.empty()) return 0.0;
        return i < v.size() ? v[i] : v.back();
    }
    double p_star() const { return v.empty() ? 0.0 : v.back(); }
    double a1() const { return at(1); }
    double a2() const { return at(2); }
};

// f(2) > 2 f(1) and non-increasing marginals from the second step on.
bool check_2qs(const a_sequence& a);

// One separation block analyzed as a scalar map: fan-in h, per-input scaling
// alpha, and h*alpha*a1 = 1 - delta when a1 > 0.
struct separation_params {
    int h = 0;
    double alpha = 0.0;
    double delta = 0.0;
};

// y(x) = sum_{i=1..h} C(h,i) a_i (alpha x)^i (1 - alpha x)^{h-i}
double separation_map(double x, const separation_params& p, const a_sequence& a);

struct fixed_point_report {
    double p1 = 0.0;     // smallest positive crossing of y(x) = x
    double p2 = 0.0;     // largest crossing
    double gamma = 0.0;  // admissible gamma witness for the p2 lower bound
    double tol = 0.0;
    int h = 0;
    double alpha = 0.0;
    double delta = 0.0;

    json to_json() const;
};

// Boundary of the positive region of
//   Phi(g) = a2 (1 - e^{-g} - g e^{-g}) - a1 (g - g e^{-g});
// Phi is positive on a right-neighborhood of 0 when a2 > 2 a1 and eventually
// negative, so the boundary is Phi's first positive root.
double admissible_gamma(const a_sequence& a, double tol = 1e-12);

// Brackets crossings of y(x) = x by a 1e-4 grid scan, then bisects each to
// tol. Requires the 2-quasi-submodular sign pattern (= exactly two interior
// crossings); throws NoCrossing otherwise.
fixed_point_report find_fixed_points(const separation_params& p, const a_sequence& a,
                                     double tol = 1e-9);

// Smallest h >= 2 with alpha = (1-delta)/(h*a1) <= p* and two fixed points.
separation_params choose_params(const a_sequence& a, double delta, int h_cap = 10000);

}  // namespace cascadelab
