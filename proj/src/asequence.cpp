#include "cascadelab/asequence.hpp"

#include <cmath>

#include "cascadelab/errors.hpp"

namespace cascadelab {

a_sequence a_sequence::from_json(const json& j) {
    if (!j.is_array()) throw DomainError("influence sequence must be a JSON array");
    a_sequence a;
    for (const auto& x : j) {
        if (!x.is_number()) throw DomainError("influence sequence entries must be numbers");
        a.v.push_back(x.get<double>());
    }
    a.validate();
    return a;
}

json a_sequence::to_json() const {
    json j = json::array();
    for (double x : v) j.push_back(x);
    return j;
}

void a_sequence::validate() const {
    if (v.empty()) throw DomainError("influence sequence is empty");
    if (v[0] != 0.0) throw DomainError("influence sequence must start at 0");
    for (size_t i = 0; i < v.size(); ++i) {
        if (v[i] < 0.0 || v[i] > 1.0)
            throw DomainError("influence values must lie in [0,1]");
        if (i > 0 && v[i] < v[i - 1])
            throw DomainError("influence sequence must be non-decreasing");
    }
}

bool check_2qs(const a_sequence& a) {
    if (!(a.a2() > 2.0 * a.a1())) return false;
    // marginals a_i - a_{i-1} non-increasing from i = 2 on; the constant tail
    // contributes zeros which can never break it
    for (size_t i = 3; i < a.v.size(); ++i)
        if (a.v[i] - a.v[i - 1] > a.v[i - 1] - a.v[i - 2]) return false;
    return true;
}

double separation_map(double x, const separation_params& p, const a_sequence& a) {
    double q = p.alpha * x;
    if (q > 1.0 + 1e-15) throw DomainError("alpha*x exceeds 1");
    if (q > 1.0) q = 1.0;
    if (q < 0.0) throw DomainError("alpha*x negative");
    // binomial terms built incrementally: C(h,i) q^i (1-q)^{h-i}
    double y = 0.0;
    double term = std::pow(1.0 - q, p.h);  // i = 0 term
    for (int i = 1; i <= p.h; ++i) {
        if (1.0 - q == 0.0) {
            // point mass at i = h
            y = a.at(size_t(p.h));
            return y;
        }
        term *= double(p.h - i + 1) / double(i) * q / (1.0 - q);
        y += a.at(size_t(i)) * term;
    }
    return y;
}

json fixed_point_report::to_json() const {
    json j;
    j["p1"] = p1;
    j["p2"] = p2;
    j["gamma"] = gamma;
    j["h"] = h;
    j["alpha"] = alpha;
    j["delta"] = delta;
    return j;
}

double admissible_gamma(const a_sequence& a, double tol) {
    double a1 = a.a1(), a2 = a.a2();
    if (!(a2 > 2.0 * a1)) throw NoAdmissibleParams("sequence is not 2-quasi-submodular");
    auto phi = [&](double g) {
        double e = std::exp(-g);
        return a2 * (1.0 - e - g * e) - a1 * (g - g * e);
    };
    // Phi > 0 just right of 0 and -> -infinity (a1 > 0) or -> a2 > 0 (a1 == 0).
    if (a.a1() == 0.0) throw NoAdmissibleParams("gamma boundary undefined for a1 = 0");
    double step = 0.01, g = step;
    while (phi(g) <= 0.0) {  // skip any initial numerically-flat region
        g += step;
        if (g > 1e6) throw NoAdmissibleParams("no positive region for gamma");
    }
    double lo = g;
    while (phi(g) > 0.0) {
        lo = g;
        g += step;
        if (g > 1e6) throw NoAdmissibleParams("gamma boundary not found");
    }
    double hi = g;
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        (phi(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

fixed_point_report find_fixed_points(const separation_params& p, const a_sequence& a,
                                     double tol) {
    auto g = [&](double x) { return separation_map(x, p, a) - x; };
    const double grid = 1e-4;
    double hi_end = std::min(1.0, 1.0 / p.alpha);

    // bracket sign changes of g on (0, hi_end]
    std::vector<std::pair<double, double>> brackets;
    double x_prev = grid, g_prev = g(x_prev);
    for (double x = 2 * grid; x <= hi_end + grid / 2; x += grid) {
        double xc = std::min(x, hi_end);
        double gc = g(xc);
        if ((g_prev < 0.0 && gc >= 0.0) || (g_prev > 0.0 && gc <= 0.0))
            brackets.emplace_back(x_prev, xc);
        x_prev = xc;
        g_prev = gc;
        if (xc >= hi_end) break;
    }
    if (brackets.size() < 2)
        throw NoCrossing("separation map has no interior fixed-point pair");

    auto bisect = [&](double lo, double hi) {
        double glo = g(lo);
        while (hi - lo > tol) {
            double mid = 0.5 * (lo + hi);
            double gm = g(mid);
            if ((glo < 0.0) == (gm < 0.0)) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    fixed_point_report r;
    r.p1 = bisect(brackets.front().first, brackets.front().second);
    r.p2 = bisect(brackets.back().first, brackets.back().second);
    r.tol = tol;
    r.h = p.h;
    r.alpha = p.alpha;
    r.delta = p.delta;
    r.gamma = admissible_gamma(a);

    // sign pattern: y < x before p1, y > x between (checked at interval midpoints)
    if (!(g(0.5 * r.p1) < 0.0) || !(g(0.5 * (r.p1 + r.p2)) > 0.0))
        throw NoCrossing("fixed points found but sign pattern is wrong");
    return r;
}

separation_params choose_params(const a_sequence& a, double delta, int h_cap) {
    if (!(a.a1() > 0.0)) throw DomainError("parameter choice requires a1 > 0");
    if (!(delta > 0.0 && delta < 0.5)) throw DomainError("delta must lie in (0, 0.5)");
    if (!check_2qs(a)) throw NoAdmissibleParams("sequence is not 2-quasi-submodular");
    for (int h = 2; h <= h_cap; ++h) {
        double alpha = (1.0 - delta) / (h * a.a1());
        if (alpha > a.p_star()) continue;
        separation_params p{h, alpha, delta};
        try {
            find_fixed_points(p, a);
            return p;
        } catch (const NoCrossing&) {
            continue;
        }
    }
    throw NoAdmissibleParams("no h up to cap yields two fixed points");
}

}  // namespace cascadelab
