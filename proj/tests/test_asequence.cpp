#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cascadelab/asequence.hpp"
#include "cascadelab/errors.hpp"

using namespace cascadelab;

static a_sequence seq(std::initializer_list<double> xs) {
    a_sequence a;
    a.v.assign(xs);
    a.validate();
    return a;
}

TEST_CASE("sequence validation") {
    CHECK_NOTHROW(seq({0.0, 0.2, 0.9, 0.95}));
    CHECK_THROWS_AS(seq({}), DomainError);
    CHECK_THROWS_AS(seq({0.1, 0.2}), DomainError);        // must start at 0
    CHECK_THROWS_AS(seq({0.0, 0.5, 0.4}), DomainError);   // decreasing
    CHECK_THROWS_AS(seq({0.0, 0.5, 1.2}), DomainError);   // above 1
    CHECK_THROWS_AS(seq({0.0, -0.1, 0.5}), DomainError);  // below 0

    auto a = seq({0.0, 0.2, 0.9, 0.95});
    CHECK(a.a1() == 0.2);
    CHECK(a.a2() == 0.9);
    CHECK(a.p_star() == 0.95);
    CHECK(a.at(3) == 0.95);
    CHECK(a.at(17) == 0.95);  // constant tail
}

TEST_CASE("json round trip") {
    auto a = seq({0.0, 0.1, 0.6});
    auto j = a.to_json();
    auto b = a_sequence::from_json(j);
    CHECK(b.v == a.v);
    CHECK_THROWS_AS(a_sequence::from_json(json::object()), DomainError);
}

TEST_CASE("quasi-submodularity predicate") {
    CHECK(check_2qs(seq({0.0, 0.0, 1.0})));
    CHECK_FALSE(check_2qs(seq({0.0, 0.5, 1.0})));              // a2 == 2 a1
    CHECK(check_2qs(seq({0.0, 0.1, 0.5, 0.7, 0.8})));          // marginals .4 .2 .1
    CHECK_FALSE(check_2qs(seq({0.0, 0.1, 0.5, 0.6, 0.8})));    // marginal bump .1 -> .2
    CHECK_FALSE(check_2qs(seq({0.0, 0.4, 0.6})));              // submodular
    CHECK(check_2qs(seq({0.0, 0.2, 0.9, 0.95})));
    CHECK(check_2qs(seq({0.0, 0.1, 0.6})));
}

TEST_CASE("separation map point values") {
    // h=2, alpha=0.5: y(0.4) = 2*(0.2)(0.8)*0.1 + (0.2)^2*0.6 = 0.056
    separation_params p{2, 0.5, 0.0};
    auto a = seq({0.0, 0.1, 0.6});
    CHECK(separation_map(0.4, p, a) == doctest::Approx(0.056).epsilon(1e-12));
    CHECK(separation_map(0.0, p, a) == 0.0);
    // alpha*x = 1: point mass at i = h
    separation_params p2{2, 1.0, 0.0};
    CHECK(separation_map(1.0, p2, a) == doctest::Approx(0.6));
    CHECK_THROWS_AS(separation_map(1.1, p2, a), DomainError);
}

TEST_CASE("gamma boundary") {
    auto a = seq({0.0, 0.1, 0.6});
    CHECK(admissible_gamma(a) == doctest::Approx(5.90300005865).epsilon(1e-9));
    auto f2 = seq({0.0, 0.2, 0.9, 0.95});
    CHECK(admissible_gamma(f2) == doctest::Approx(4.21577651644).epsilon(1e-9));
    CHECK_THROWS_AS(admissible_gamma(seq({0.0, 0.4, 0.6})), NoAdmissibleParams);
    CHECK_THROWS_AS(admissible_gamma(seq({0.0, 0.0, 0.8, 0.9})), NoAdmissibleParams);
}

TEST_CASE("fixed points of the reference block") {
    // a = (0, 0.2, 0.9, 0.95), delta = 0.3 -> h = 4, alpha = 0.7/0.8 = 0.875
    auto a = seq({0.0, 0.2, 0.9, 0.95});
    auto p = choose_params(a, 0.3);
    CHECK(p.h == 4);
    CHECK(p.alpha == doctest::Approx(0.875).epsilon(1e-15));
    auto r = find_fixed_points(p, a);
    CHECK(r.p1 == doctest::Approx(0.16522388649).epsilon(1e-8));
    CHECK(r.p2 == doctest::Approx(0.924698259354).epsilon(1e-8));
    CHECK(r.gamma == doctest::Approx(4.21577651644).epsilon(1e-9));
    // the lower bound certified by gamma: p2 > a1 * gamma
    CHECK(r.p2 > a.a1() * r.gamma);
    CHECK(a.a1() * r.gamma == doctest::Approx(0.843155303287).epsilon(1e-9));
}

TEST_CASE("fixed points shrink with delta") {
    auto a = seq({0.0, 0.1, 0.6});
    const double gamma = 5.90300005865;
    struct row {
        double delta;
        int h;
        double alpha, p1, p2;
    };
    const row rows[] = {
        {0.10, 15, 0.6, 0.00688585166931, 0.593566801071},
        {0.05, 16, 0.59375, 0.00301076011658, 0.595367273331},
        {0.01, 17, 0.582352941176, 0.000543971633911, 0.596372143173},
    };
    for (const auto& w : rows) {
        CAPTURE(w.delta);
        auto p = choose_params(a, w.delta);
        CHECK(p.h == w.h);
        CHECK(p.alpha == doctest::Approx(w.alpha).epsilon(1e-10));
        auto r = find_fixed_points(p, a);
        CHECK(r.p1 == doctest::Approx(w.p1).epsilon(1e-7));
        CHECK(r.p2 == doctest::Approx(w.p2).epsilon(1e-8));
        // the contraction bound: p1 < 6 a1^2 delta / (a2 - 2 a1)
        double bound = 6.0 * a.a1() * a.a1() * w.delta / (a.a2() - 2.0 * a.a1());
        CHECK(r.p1 < bound);
        CHECK(r.p2 > a.a1() * gamma);
    }
}

TEST_CASE("parameter choice rejects bad inputs") {
    CHECK_THROWS_AS(choose_params(seq({0.0, 0.4, 0.6}), 0.1), NoAdmissibleParams);
    CHECK_THROWS_AS(choose_params(seq({0.0, 0.0, 0.8}), 0.1), DomainError);  // a1 = 0
    CHECK_THROWS_AS(choose_params(seq({0.0, 0.1, 0.6}), 0.0), DomainError);
    CHECK_THROWS_AS(choose_params(seq({0.0, 0.1, 0.6}), 0.7), DomainError);
}
