#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <queue>
#include <set>

#include "cascadelab/errors.hpp"
#include "cascadelab/gadgets.hpp"

using namespace cascadelab;

static a_sequence seq(std::initializer_list<double> xs) {
    a_sequence a;
    a.v.assign(xs);
    a.validate();
    return a;
}

// fixture contract: delta = 0.3 gives h = 4, alpha = 0.875
static const a_sequence FA = seq({0.0, 0.2, 0.9, 0.95});

static separation_params fixture_params() { return choose_params(FA, 0.3); }

static std::map<int, int> histogram(const std::vector<int>& lengths) {
    std::map<int, int> h;
    for (int l : lengths) ++h[l];
    return h;
}

static bool reaches_output(const gadget& g) {
    std::vector<std::vector<vertex>> adj(size_t(g.graph.n));
    for (const auto& e : g.graph.edges) {
        adj[size_t(e.u)].push_back(e.v);
        adj[size_t(e.v)].push_back(e.u);
    }
    std::vector<char> seen(size_t(g.graph.n), 0);
    std::queue<vertex> q;
    for (const auto& set : g.input_sets)
        for (vertex v : set) {
            seen[size_t(v)] = 1;
            q.push(v);
        }
    while (!q.empty()) {
        vertex u = q.front();
        q.pop();
        for (vertex v : adj[size_t(u)])
            if (!seen[size_t(v)]) {
                seen[size_t(v)] = 1;
                q.push(v);
            }
    }
    return seen[size_t(g.output)] != 0;
}

static void check_shape(const gadget& g) {
    std::set<vertex> all;
    size_t n = 0;
    for (const auto& set : g.input_sets) {
        all.insert(set.begin(), set.end());
        n += set.size();
    }
    CHECK(all.size() == n);                 // sets pairwise disjoint
    CHECK(all.count(g.output) == 0);        // output outside every input set
    CHECK(reaches_output(g));
}

static double iterate_map(double x, int layers, int h, double alpha, const a_sequence& a) {
    separation_params p{h, alpha, 1.0 - h * alpha * a.a1()};
    for (int i = 0; i < layers; ++i) x = separation_map(x, p, a);
    return x;
}

TEST_CASE("scaling chains realize the requested factor") {
    scaling_model m = scaling_paths(0.875, 0.875e-3, FA);
    CHECK(m.lengths.size() == 23);
    CHECK(histogram(m.lengths) == std::map<int, int>{{2, 18}, {3, 4}, {4, 1}});
    CHECK(m.realized == doctest::Approx(0.8745031586937784).epsilon(1e-12));
    CHECK(m.realized <= 0.875);
    CHECK(m.realized > 0.875 - 0.875e-3);

    gadget g = build_scaling_down(0.875, 0.875e-3, FA);
    CHECK(g.graph.n == 31);  // two terminals + 29 intermediates
    CHECK(g.graph.edges.size() == 52);
    CHECK(g.input_sets.size() == 1);
    CHECK(g.output == 1);
    check_shape(g);

    // factor a1^2 needs exactly one length-2 chain
    double al = FA.a1() * FA.a1();
    gadget tiny = build_scaling_down(al, 1e-5, FA);
    CHECK(tiny.graph.n == 3);
    CHECK(tiny.graph.edges.size() == 2);
    CHECK(tiny.contract["realized"].get<double>() == al);

    // tolerance at or above the target: zero factor suffices, no chains
    gadget empty = build_scaling_down(0.3, 0.3, FA);
    CHECK(empty.graph.n == 2);
    CHECK(empty.graph.edges.empty());
    CHECK(empty.contract["realized"].get<double>() == 0.0);

    CHECK_THROWS_AS(scaling_paths(0.96, 1e-3, FA), Unachievable);  // above p*
    CHECK_THROWS_AS(scaling_paths(0.5, 1e-3, seq({0.0, 0.0, 0.8})), DomainError);
    CHECK_THROWS_AS(scaling_paths(0.0, 1e-3, FA), DomainError);
    CHECK_THROWS_AS(scaling_paths(0.5, 0.0, FA), DomainError);
}

TEST_CASE("scaling gadget transmits the factor in both directions") {
    gadget g = build_scaling_down(0.875, 0.875e-3, FA);
    double abar = g.contract["realized"].get<double>();
    auto fwd = measure_gadget(g, {1.0}, 5000, 11, 4);
    CHECK(std::abs(fwd.frequency - abar) < 4.0 * fwd.stderr_);
    auto rev = measure_reverse(g, 5000, 12, 4);
    double joint = std::sqrt(fwd.stderr_ * fwd.stderr_ + rev.stderr_ * rev.stderr_);
    CHECK(std::abs(fwd.frequency - rev.frequency) < 3.0 * joint);
}

TEST_CASE("filter structure and contract") {
    separation_params cp = fixture_params();
    REQUIRE(cp.h == 4);
    REQUIRE(cp.alpha == doctest::Approx(0.875).epsilon(1e-15));

    gadget f = build_filter(cp, 4, FA);
    CHECK(f.graph.n == 10541);
    CHECK(f.graph.edges.size() == 18020);
    CHECK(f.input_sets.size() == 1);
    CHECK(f.input_sets[0].size() == 256);
    CHECK(f.input_sets[0].front() == 0);
    CHECK(f.input_sets[0].back() == 255);
    CHECK(f.contract["Lambda"].get<long long>() == 256);
    CHECK(f.contract["p1"].get<double>() == doctest::Approx(0.16522388649).epsilon(1e-8));
    CHECK(f.contract["p2"].get<double>() == doctest::Approx(0.924698259354).epsilon(1e-8));
    CHECK(f.contract["realized_alpha"].get<double>() ==
          doctest::Approx(0.8745031586937784).epsilon(1e-12));
    CHECK(f.contract["pred_half_p1"].get<double>() ==
          doctest::Approx(0.0407438594835).epsilon(1e-8));
    CHECK(f.contract["pred_p2"].get<double>() ==
          doctest::Approx(0.924487489571).epsilon(1e-8));
    check_shape(f);

    // the realized factor keeps both fixed points essentially in place
    separation_params rp{4, f.contract["realized_alpha"].get<double>(), 0.0};
    rp.delta = 1.0 - rp.h * rp.alpha * FA.a1();
    fixed_point_report rfp = find_fixed_points(rp, FA);
    CHECK(rfp.p1 == doctest::Approx(0.165735287094).epsilon(1e-8));
    CHECK(rfp.p2 == doctest::Approx(0.924486021042).epsilon(1e-8));

    gadget one = build_filter(cp, 1, FA);
    CHECK(one.graph.n == 125);
    CHECK(one.graph.edges.size() == 212);
    CHECK(one.input_sets[0].size() == 4);

    CHECK_THROWS_AS(build_filter(cp, 0, FA), DomainError);
    CHECK_THROWS_AS(build_filter(cp, 7, FA), TooLarge);
    CHECK_THROWS_AS(build_filter(choose_params(seq({0.0, 0.1, 0.6}), 0.1), 2, seq({0.0, 0.1, 0.6})),
                    TooLarge);  // fan-in 15 is past the desk cap
}

TEST_CASE("filter sharpens toward the declared band") {
    separation_params cp = fixture_params();
    gadget f3 = build_filter(cp, 3, FA);
    double abar = f3.contract["realized_alpha"].get<double>();
    double p1 = f3.contract["p1"].get<double>();
    double p2 = f3.contract["p2"].get<double>();

    double lo_pred = iterate_map(0.5 * p1, 3, 4, abar, FA);
    auto lo = measure_gadget(f3, {0.5 * p1}, 3000, 21, 4);
    CHECK(std::abs(lo.frequency - lo_pred) < 4.0 * std::max(lo.stderr_, 1e-3));

    double hi_pred = iterate_map(p2, 3, 4, abar, FA);
    auto hi = measure_gadget(f3, {p2}, 3000, 22, 4);
    CHECK(std::abs(hi.frequency - hi_pred) < 4.0 * hi.stderr_);

    // more layers pump a drive inside (p1, p2) upward and a drive below p1
    // downward; measured frequencies track the model at every depth
    double prev_up = 0.0, prev_dn = 1.0;
    for (int layers = 1; layers <= 3; ++layers) {
        gadget f = layers == 3 ? std::move(f3) : build_filter(cp, layers, FA);
        double up_pred = iterate_map(0.3, layers, 4, abar, FA);
        double dn_pred = iterate_map(0.5 * p1, layers, 4, abar, FA);
        CHECK(up_pred > prev_up);
        CHECK(dn_pred < prev_dn);
        prev_up = up_pred;
        prev_dn = dn_pred;
        auto up = measure_gadget(f, {0.3}, 3000, 30 + uint64_t(layers), 4);
        CHECK(std::abs(up.frequency - up_pred) < 4.0 * std::max(up.stderr_, 1e-3));
    }
}

TEST_CASE("pair junction factor selection") {
    separation_params cp = fixture_params();
    fixed_point_report fp = find_fixed_points(cp, FA);
    and2_betas b = choose_betas(0.5, fp.p1, fp.p2, FA);
    CHECK(b.lo == doctest::Approx(0.5083811892).epsilon(1e-8));
    CHECK(b.hi == doctest::Approx(0.722290214163).epsilon(1e-8));
    CHECK(b.target == doctest::Approx(0.605969271518).epsilon(1e-8));
    CHECK(b.beta == doctest::Approx(0.6055644147525141).epsilon(1e-12));
    CHECK(histogram(b.model.lengths) == std::map<int, int>{{2, 9}, {3, 2}, {4, 2}, {5, 2}});

    CHECK(junction_map(0.0, 0.0, FA) == 0.0);
    CHECK(junction_map(0.5, 0.5, FA) == doctest::Approx(b.phiT_minus).epsilon(1e-15));
    CHECK(junction_map(0.25, 0.55, FA) ==
          doctest::Approx((0.9 - 0.4) * 0.25 * 0.55 + 0.2 * 0.25 + 0.2 * 0.55).epsilon(1e-15));

    // a narrow (p1, p2) gap admits no factor
    CHECK_THROWS_AS(choose_betas(0.5, 0.5, 0.55, FA), InfeasibleBetas);
    CHECK_THROWS_AS(choose_betas(0.0, fp.p1, fp.p2, FA), DomainError);
}

TEST_CASE("two-input gadget separates true from false drives") {
    separation_params cp = fixture_params();
    fixed_point_report fp = find_fixed_points(cp, FA);
    and2_betas b = choose_betas(0.5, fp.p1, fp.p2, FA);
    gadget f = build_filter(cp, 4, FA);
    gadget g = build_and2(0.5, b, std::move(f), FA);

    CHECK(g.graph.n == 18221);
    CHECK(g.graph.edges.size() == 29284);
    CHECK(g.input_sets.size() == 2);
    CHECK(g.input_sets[0].size() == 256);
    CHECK(g.input_sets[1].size() == 256);
    CHECK(g.contract["pred_true"].get<double>() ==
          doctest::Approx(0.284806066297).epsilon(1e-8));
    CHECK(g.contract["pred_false"].get<double>() ==
          doctest::Approx(0.103204256556).epsilon(1e-8));
    check_shape(g);

    auto t = measure_gadget(g, {0.525, 0.525}, 3000, 41, 4);
    auto fl = measure_gadget(g, {0.25, 0.525}, 3000, 42, 4);
    CHECK(std::abs(t.frequency - 0.284806066297) < 4.0 * t.stderr_);
    CHECK(std::abs(fl.frequency - 0.103204256556) < 4.0 * fl.stderr_);
    double joint = std::sqrt(t.stderr_ * t.stderr_ + fl.stderr_ * fl.stderr_);
    CHECK(t.frequency - fl.frequency > 0.181601809741 - 6.0 * joint);

    // mismatched factor set against a fresh filter with a doctored band
    gadget f2 = build_filter(cp, 1, FA);
    f2.contract["p1"] = 0.5;
    f2.contract["p2"] = 0.55;
    CHECK_THROWS_AS(build_and2(0.5, b, std::move(f2), FA), InfeasibleBetas);
}

TEST_CASE("conjunction tower schedule and structure") {
    CHECK_THROWS_AS(build_and(3, 0.5, 0.25, 0.01, 0.3, FA), DomainError);
    CHECK_THROWS_AS(build_and(0, 0.5, 0.25, 0.01, 0.3, FA), DomainError);
    CHECK_THROWS_AS(build_and(1, 0.5, 0.25, 0.01, 0.3, FA), DomainError);
    CHECK_THROWS_AS(build_and(8, 0.9, 0.5, 0.01, 0.3, FA), TooLarge);
    CHECK_THROWS_AS(build_and(2, 0.5, 0.25, 2.0, 0.3, FA), DomainError);  // eps2 >= p2

    // two inputs degenerate to a single pair-junction stage
    gadget g2 = build_and(2, 0.5, 0.25, 0.01, 0.3, FA);
    CHECK(g2.graph.n == 18221);
    CHECK(g2.graph.edges.size() == 29284);
    CHECK(g2.contract["layers_top"].get<int>() == 4);
    CHECK(g2.contract["Lambda"].get<long long>() == 256);

    gadget g4 = build_and(4, 0.9, 0.5, 0.01, 0.3, FA);
    CHECK(g4.contract["layers_bulk"].get<int>() == 4);
    CHECK(g4.contract["layers_top"].get<int>() == 2);
    CHECK(g4.contract["Lambda0"].get<long long>() == 256);
    CHECK(g4.contract["LambdaC"].get<long long>() == 16);
    CHECK(g4.contract["Lambda"].get<long long>() == 4096);
    CHECK(g4.contract["betaA_lo"].get<double>() == doctest::Approx(0.215978936588).epsilon(1e-8));
    CHECK(g4.contract["betaA_hi"].get<double>() == doctest::Approx(0.323492680352).epsilon(1e-8));
    CHECK(g4.contract["betaA_target"].get<double>() ==
          doctest::Approx(0.264324809839).epsilon(1e-8));
    CHECK(g4.contract["betaA"].get<double>() ==
          doctest::Approx(0.26416058003456006).epsilon(1e-12));
    CHECK(histogram(g4.contract["betaA_lengths"].get<std::vector<int>>()) ==
          std::map<int, int>{{2, 4}, {3, 1}, {4, 1}, {6, 1}});
    CHECK(g4.contract["betaMid_lo"].get<double>() ==
          doctest::Approx(0.210686772237).epsilon(1e-8));
    CHECK(g4.contract["betaMid_hi"].get<double>() == doctest::Approx(0.316043465).epsilon(1e-8));
    CHECK(g4.contract["betaMid"].get<double>() ==
          doctest::Approx(0.2580152542570087).epsilon(1e-12));
    CHECK(histogram(g4.contract["betaMid_lengths"].get<std::vector<int>>()) ==
          std::map<int, int>{{2, 4}, {4, 4}});
    CHECK(g4.contract["pred_level1_true"].get<double>() ==
          doctest::Approx(0.306696967386).epsilon(1e-8));
    CHECK(g4.contract["pred_level1_bad"].get<double>() ==
          doctest::Approx(0.0971924983044).epsilon(1e-8));
    CHECK(g4.contract["pred_true"].get<double>() ==
          doctest::Approx(0.0269782596001).epsilon(1e-8));
    CHECK(g4.contract["pred_false"].get<double>() ==
          doctest::Approx(0.0138052648706).epsilon(1e-8));

    // 32 level-1 replicas of 14893 vertices plus an 893-vertex top stage
    CHECK(g4.graph.n == 477469);
    CHECK(g4.graph.edges.size() == 766532);
    REQUIRE(g4.input_sets.size() == 4);
    for (const auto& s : g4.input_sets) CHECK(s.size() == 4096);
    check_shape(g4);

    auto t = measure_gadget(g4, {0.945, 0.945, 0.945, 0.945}, 1500, 51, 4);
    CHECK(std::abs(t.frequency - 0.0269782596001) < 4.0 * std::max(t.stderr_, 1e-3));
}

TEST_CASE("one-way link layer count and leak bounds") {
    CHECK(directed_edge_layers(4, 0.1, 0.5) == 7);
    CHECK(directed_edge_layers(2, 0.5, 0.3) == 5);
    CHECK_THROWS_AS(directed_edge_layers(0, 0.5, 0.3), DomainError);
    CHECK_THROWS_AS(directed_edge_layers(2, 0.0, 0.3), DomainError);

    separation_params cp = fixture_params();
    CHECK_THROWS_AS(build_directed_edge(4, 0.1, cp, FA), TooLarge);  // needs 12 layers

    gadget g = build_directed_edge(2, 0.5, cp, FA);
    CHECK(g.graph.n == 42286);
    CHECK(g.graph.edges.size() == 73316);
    CHECK(g.input_sets.size() == 1);
    CHECK(g.input_sets[0].size() == 1);
    CHECK(g.contract["L"].get<int>() == 5);
    CHECK(g.contract["b_pred"].get<double>() == doctest::Approx(0.279105103784).epsilon(1e-8));
    CHECK(g.contract["reverse_mean_bound"].get<double>() ==
          doctest::Approx(0.33518675038).epsilon(1e-8));
    CHECK(g.contract["reverse_source_bound"].get<double>() ==
          doctest::Approx(0.0887515763449).epsilon(1e-8));
    check_shape(g);

    // forward: the source fires the output with the predicted positive rate
    auto fwd = measure_gadget(g, {1.0}, 3000, 61, 4);
    CHECK(std::abs(fwd.frequency - 0.279105103784) < 4.0 * fwd.stderr_);
    CHECK(fwd.frequency - 3.0 * fwd.stderr_ > 0.0);

    // reverse: seeding the output leaks back under both declared bounds
    auto rev = measure_reverse(g, 3000, 62, 4);
    CHECK(rev.frequency < 0.0887515763449 + 3.0 * std::max(rev.stderr_, 1e-3));
    CHECK(rev.frequency < 0.5);
}

TEST_CASE("zero-a1 conjunction never fires from a dead set") {
    a_sequence az = seq({0.0, 0.0, 0.8, 0.9});
    CHECK(find_lambda0(az) == 13);
    CHECK_THROWS_AS(find_lambda0(seq({0.0, 0.0, 0.05})), NoLambda0);
    CHECK_THROWS_AS(find_lambda0(FA), DomainError);  // a1 > 0 belongs elsewhere

    gadget g2 = build_and_a1zero(2, 13, az);
    CHECK(g2.graph.n == 40);
    CHECK(g2.graph.edges.size() == 39);
    CHECK(g2.input_sets.size() == 2);
    CHECK(g2.input_sets[0].size() == 13);
    CHECK(g2.contract["y_half"].get<double>() == doctest::Approx(0.430519960678).epsilon(1e-8));
    check_shape(g2);

    gadget g4 = build_and_a1zero(4, 13, az);
    CHECK(g4.graph.n == 1054);
    CHECK(g4.graph.edges.size() == 1053);
    CHECK(g4.contract["Lambda"].get<long long>() == 169);
    CHECK(g4.contract["pred_top"].get<double>() ==
          doctest::Approx(0.506104758518).epsilon(1e-8));
    for (const auto& s : g4.input_sets) CHECK(s.size() == 169);
    check_shape(g4);

    // every tower here is a tree
    gadget g8 = build_and_a1zero(8, 13, az);
    CHECK(g8.graph.edges.size() == size_t(g8.graph.n) - 1);
    CHECK(g8.contract["Lambda"].get<long long>() == 2197);
    CHECK_THROWS_AS(build_and_a1zero(16, 13, az), TooLarge);
    CHECK_THROWS_AS(build_and_a1zero(2, 2, az), NoLambda0);
    CHECK_THROWS_AS(build_and_a1zero(3, 13, az), DomainError);

    // a dead input set blocks the output exactly, at any trial count
    auto dead2 = measure_gadget(g2, {0.0, 0.7}, 10000, 71, 4);
    CHECK(dead2.frequency == 0.0);
    auto dead4 = measure_gadget(g4, {0.0, 1.0, 1.0, 1.0}, 10000, 72, 4);
    CHECK(dead4.frequency == 0.0);

    // live drive at a2/2 tracks the two-level map prediction
    auto live = measure_gadget(g4, {0.4, 0.4, 0.4, 0.4}, 4000, 73, 4);
    CHECK(std::abs(live.frequency - 0.506104758518) < 4.0 * live.stderr_);
}

TEST_CASE("measurement validation and determinism") {
    separation_params cp = fixture_params();
    gadget f = build_filter(cp, 1, FA);
    CHECK_THROWS_AS(measure_gadget(f, {0.5, 0.5}, 10, 1), DomainError);
    CHECK_THROWS_AS(measure_gadget(f, {1.5}, 10, 1), DomainError);
    CHECK_THROWS_AS(measure_gadget(f, {0.5}, 0, 1), DomainError);

    auto zero = measure_gadget(f, {0.0}, 500, 2);
    CHECK(zero.frequency == 0.0);

    auto a = measure_gadget(f, {0.6}, 4000, 3, 1);
    auto b = measure_gadget(f, {0.6}, 4000, 3, 4);
    CHECK(a.frequency == b.frequency);
    CHECK(a.stderr_ == b.stderr_);
    auto c = measure_gadget(f, {0.6}, 4000, 4, 1);
    CHECK(a.frequency != c.frequency);

    auto r1 = measure_reverse(f, 4000, 5, 1);
    auto r4 = measure_reverse(f, 4000, 5, 4);
    CHECK(r1.frequency == r4.frequency);
    CHECK(r1.stderr_ == r4.stderr_);
}

TEST_CASE("sidecar round trip") {
    separation_params cp = fixture_params();
    fixed_point_report fp = find_fixed_points(cp, FA);
    and2_betas b = choose_betas(0.5, fp.p1, fp.p2, FA);
    gadget g = build_and2(0.5, b, build_filter(cp, 1, FA), FA);

    json side = g.to_sidecar();
    std::string graph_tsv = g.graph.to_tsv();
    json reparsed = json::parse(side.dump());
    gadget back = gadget::from_sidecar(reparsed, weighted_graph::from_tsv(graph_tsv));

    CHECK(back.type == g.type);
    CHECK(back.output == g.output);
    CHECK(back.input_sets == g.input_sets);
    CHECK(back.graph.n == g.graph.n);
    CHECK(back.graph.edges.size() == g.graph.edges.size());
    CHECK(back.a.v == FA.v);
    CHECK(back.contract["beta"].get<double>() == g.contract["beta"].get<double>());
    CHECK(back.contract["p0"].get<double>() == 0.5);
    CHECK_FALSE(back.contract.contains("a"));

    json bad = side;
    bad["output"] = 999999;
    CHECK_THROWS_AS(gadget::from_sidecar(bad, weighted_graph::from_tsv(graph_tsv)), DomainError);
}
