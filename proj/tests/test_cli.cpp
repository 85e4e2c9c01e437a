#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "cascadelab/asequence.hpp"
#include "cascadelab/cascade.hpp"
#include "cascadelab/dp_oneway.hpp"
#include "cascadelab/gadgets.hpp"
#include "cascadelab/hierarchy.hpp"
#include "cascadelab/optimize.hpp"
#include "cascadelab/reductions.hpp"
#include "cascadelab/report.hpp"
#include "doctest.h"

using namespace cascadelab;

namespace {

const std::string& cli_path() {
    static std::string p = [] {
        const char* env = std::getenv("CASCADELAB_CLI");
        if (!env || !*env) throw std::runtime_error("CASCADELAB_CLI is not set");
        return std::string(env);
    }();
    return p;
}

const std::string& work_dir() {
    static std::string dir = [] {
        char tmpl[] = "/tmp/cascadelab_cli_XXXXXX";
        const char* d = mkdtemp(tmpl);
        if (!d) throw std::runtime_error("mkdtemp failed");
        return std::string(d);
    }();
    return dir;
}

std::string at(const std::string& name) { return work_dir() + "/" + name; }

void put(const std::string& name, const std::string& content) {
    write_text_file(at(name), content);
}

struct cli_result {
    int code = -1;
    std::string out;
    std::string err;
};

// Every invocation runs inside the scratch dir with an explicit stdin file, so
// relative fixture paths resolve there and "-" inputs never touch a terminal.
cli_result run_cli(const std::string& args, const std::string& stdin_text = "") {
    static int counter = 0;
    std::string base = at("io" + std::to_string(counter++));
    write_text_file(base + ".in", stdin_text);
    std::string cmd = "cd '" + work_dir() + "' && '" + cli_path() + "' " + args + " <'" + base +
                      ".in' >'" + base + ".out' 2>'" + base + ".err'";
    int rc = std::system(cmd.c_str());
    cli_result r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = read_text_file(base + ".out");
    r.err = read_text_file(base + ".err");
    return r;
}

bool file_at(const std::string& name) { return std::filesystem::exists(at(name)); }

const char* FA_TEXT = "[0, 0.2, 0.9, 0.95]\n";
const char* AZ_TEXT = "[0, 0, 0.8, 0.9]\n";
const char* EDGE_TSV = "# N=2\n0\t1\t1\n";
const char* HALF_TEXT = "[0, 0.5, 0.5]\n";
const char* VC_N2M4 = "{\"n\": 2, \"edges\": [[1,2],[1,2],[1,2],[1,2]], \"k\": 1}\n";
const char* VC_N3M5 = "{\"n\": 3, \"edges\": [[1,2],[1,2],[1,2],[1,3],[2,3]], \"k\": 1}\n";
const char* VC_SHBM = "{\"n\": 4, \"edges\": [[1,2],[1,2],[1,3],[1,3],[1,4]], \"k\": 1}\n";
const char* SC_DESK = "{\"n\": 2, \"subsets\": [[1,2],[2]], \"k\": 1}\n";

const char* TOY_TREE = R"({"mode": "deterministic", "nodes": [
  {"id": 0, "weight": 0.2, "children": [1, 2]},
  {"id": 1, "weight": 0.6, "children": null, "block_size": 3},
  {"id": 2, "weight": 0.5, "children": [3, 4]},
  {"id": 3, "weight": 0.9, "children": null, "block_size": 2},
  {"id": 4, "weight": 1.0, "children": null, "block_size": 2}
]})";
const char* TOY_THETA = "0\t0.5\n1\t0.7\n2\t1.4\n3\t0.8\n4\t1.6\n5\t0.9\n6\t2.0\n";

const char* STOCH_TREE = R"({"mode": "stochastic", "nodes": [
  {"id": 0, "weight": 0.1, "children": [1, 2]},
  {"id": 1, "weight": 0.8, "children": null, "block_size": 4},
  {"id": 2, "weight": 0.9, "children": null, "block_size": 3}
]})";

a_sequence seq(std::vector<double> v) {
    a_sequence a;
    a.v = std::move(v);
    a.validate();
    return a;
}

}  // namespace

TEST_CASE("dispatch: exit codes, help, version") {
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("tree").code == 2);          // group without a child
    CHECK(run_cli("verify maybe").code == 2);  // unknown child
    cli_result help = run_cli("--help");
    CHECK(help.code == 0);
    CHECK(help.out.find("Subcommands") != std::string::npos);
    cli_result ver = run_cli("--version");
    CHECK(ver.code == 0);
    CHECK(ver.out.find("cascadelab 1.0.0") != std::string::npos);
    // validation failures carry exit 2 and a diagnostic on stderr
    put("bad.tsv", "0\t1\t1\n");
    cli_result bad = run_cli("sigma exact --graph bad.tsv --seeds 0");
    CHECK(bad.code == 2);
    CHECK(bad.err.find("error:") != std::string::npos);
}

TEST_CASE("tree subcommands match the library and write manifests") {
    put("toy_tree.json", TOY_TREE);
    hierarchy_tree toy = hierarchy_tree::from_json(json::parse(TOY_TREE));

    cli_result norm = run_cli("tree normalize --tree toy_tree.json");
    CHECK(norm.code == 0);
    CHECK(norm.out == normalize_tree(toy).to_json().dump(2) + "\n");

    cli_result mat = run_cli("tree materialize --tree toy_tree.json --out toy_graph.tsv");
    CHECK(mat.code == 0);
    CHECK(read_text_file(at("toy_graph.tsv")) == materialize(toy).to_tsv());
    REQUIRE(file_at("toy_graph.tsv.manifest.json"));
    json man = json::parse(read_text_file(at("toy_graph.tsv.manifest.json")));
    CHECK(man["tool"] == "cascadelab");
    CHECK(man["version"] == "1.0.0");
    CHECK(man["subcommand"] == "tree materialize");
    CHECK(man["outputs"][0] == "toy_graph.tsv");

    // single-child chains are spliced out
    put("chain.json", R"({"mode": "deterministic", "nodes": [
      {"id": 7, "weight": 0.1, "children": [3]},
      {"id": 3, "weight": 0.2, "children": [5, 6]},
      {"id": 5, "weight": 1.0, "children": null, "block_size": 2},
      {"id": 6, "weight": 1.0, "children": null, "block_size": 1}
    ]})");
    cli_result chain = run_cli("tree normalize --tree chain.json");
    CHECK(chain.code == 0);
    CHECK(json::parse(chain.out)["nodes"].size() == 3);

    put("stoch.json", STOCH_TREE);
    hierarchy_tree stoch = hierarchy_tree::from_json(json::parse(STOCH_TREE));
    cli_result samp = run_cli("tree sample --tree stoch.json --seed 5");
    CHECK(samp.code == 0);
    CHECK(samp.out == sample(stoch, 5).to_tsv());
    cli_result samp2 = run_cli("tree sample --tree stoch.json --seed 5");
    CHECK(samp2.out == samp.out);  // rerun-identical
    CHECK(run_cli("tree sample --tree stoch.json --seed 6").out != samp.out);

    // stdin works where a path is "-"
    cli_result viastdin = run_cli("tree materialize --tree -", TOY_TREE);
    CHECK(viastdin.code == 0);
    CHECK(viastdin.out == materialize(toy).to_tsv());
}

TEST_CASE("sigma: exact prints a bare decimal, estimate is thread-stable") {
    put("edge.tsv", EDGE_TSV);
    put("half.json", HALF_TEXT);
    cli_result exact = run_cli("sigma exact --graph edge.tsv --aseq half.json --seeds 0");
    CHECK(exact.code == 0);
    CHECK(exact.out == "1.5\n");

    // degenerate thresholds: estimate collapses to one deterministic cascade
    put("edge_th.tsv", "0\t0.4\n1\t0.4\n");
    cli_result est_deg =
        run_cli("sigma estimate --graph edge.tsv --thresholds edge_th.tsv --seeds 0 --reps 50");
    CHECK(est_deg.code == 0);
    json jd = json::parse(est_deg.out);
    CHECK(jd["mean"] == 2);
    CHECK(jd["stderr"] == 0);

    std::string est_args =
        "sigma estimate --graph edge.tsv --aseq half.json --seeds 0 --reps 4000 --seed 11";
    cli_result t1 = run_cli(est_args + " --threads 1");
    cli_result t4 = run_cli(est_args + " --threads 4");
    CHECK(t1.code == 0);
    CHECK(t1.out == t4.out);
    {
        cascade_instance inst;
        inst.graph = weighted_graph::from_tsv(EDGE_TSV);
        inst.influence = influence_spec::symmetric(seq({0, 0.5, 0.5}));
        inst.thresholds = threshold_spec::uniform01();
        sigma_estimate ref = estimate_sigma(inst, {0}, 4000, 11, 1);
        json jt = json::parse(t1.out);
        CHECK(jt["mean"].get<double>() == doctest::Approx(ref.mean).epsilon(1e-9));
        CHECK(jt["replications"] == 4000);
    }

    put("stoch.json", STOCH_TREE);
    cli_result pre = run_cli(
        "sigma pre-sampling --tree stoch.json --influence counting --seeds 0 --reps 30 --seed 3 "
        "--threads 4");
    CHECK(pre.code == 0);
    {
        hierarchy_tree stoch = hierarchy_tree::from_json(json::parse(STOCH_TREE));
        sigma_estimate ref = estimate_sigma_pre_sampling(
            stoch, influence_spec::counting(), threshold_spec::uniform01(), {0}, 30, 3, 1);
        json jp = json::parse(pre.out);
        CHECK(jp["mean"].get<double>() == doctest::Approx(ref.mean).epsilon(1e-9));
    }
}

TEST_CASE("dp-solve emits the plan the library reconstructs") {
    put("toy_tree.json", TOY_TREE);
    put("toy_theta.tsv", TOY_THETA);
    cli_result r = run_cli("dp-solve --tree toy_tree.json --thresholds toy_theta.tsv --k 2");
    CHECK(r.code == 0);
    json plan = json::parse(r.out);

    oneway_instance inst;
    inst.tree = normalize_tree(hierarchy_tree::from_json(json::parse(TOY_TREE)));
    inst.theta = threshold_spec::from_tsv(TOY_THETA, inst.tree.n_vertices).theta;
    inst.k = 2;
    dp_table table = dp_solve(inst);
    long long nu = table.best_nu(inst.tree);
    seed_plan ref = reconstruct(inst, table, nu);
    CHECK(plan["nu"] == nu);
    CHECK(plan["seeds"].get<std::vector<int>>() == ref.seeds);
    CHECK(plan["achieved"] == verify_plan(inst, ref));
    CHECK(plan["achieved"].get<long long>() >= nu);

    // the plan JSON round-trips through the library parser
    seed_plan back = seed_plan::from_json(plan);
    CHECK(back.seeds == ref.seeds);
    CHECK(back.signs == ref.signs);

    CHECK(run_cli("dp-solve --tree toy_tree.json --thresholds toy_theta.tsv --k 2 "
                  "--model chained")
              .code == 0);
    CHECK(run_cli("dp-solve --tree toy_tree.json --thresholds toy_theta.tsv --k -1").code == 2);
}

TEST_CASE("greedy and brute-force: exact oracle on the single-edge instance") {
    put("edge.tsv", EDGE_TSV);
    put("half.json", HALF_TEXT);
    cli_result g = run_cli("greedy --graph edge.tsv --aseq half.json --k 2 --exact");
    CHECK(g.code == 0);
    CHECK(g.out ==
          "step,vertex,marginal_mean,marginal_stderr,cumulative_mean\n"
          "1,0,1.5,0,1.5\n"
          "2,1,0.5,0,2\n");
    cli_result gj = run_cli("greedy --graph edge.tsv --aseq half.json --k 2 --exact --naive "
                            "--format json");
    CHECK(gj.code == 0);
    json rows = json::parse(gj.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0]["vertex"] == "0");
    CHECK(rows[1]["cumulative_mean"] == "2");

    cli_result b = run_cli("brute-force --graph edge.tsv --aseq half.json --k 1 --exact");
    CHECK(b.code == 0);
    json bj = json::parse(b.out);
    CHECK(bj["seeds"] == json::array({0}));
    CHECK(bj["sigma"] == 1.5);
}

TEST_CASE("gadget subcommands: fixpoints, build, measure") {
    put("fa.json", FA_TEXT);
    a_sequence FA = seq({0, 0.2, 0.9, 0.95});

    cli_result fx = run_cli("gadget fixpoints --aseq fa.json --delta 0.05");
    CHECK(fx.code == 0);
    CHECK(fx.out == find_fixed_points(choose_params(FA, 0.05), FA, 1e-9).to_json().dump(2) + "\n");

    cli_result fb = run_cli("gadget build --type filter --aseq fa.json --delta 0.3 --layers 2 "
                            "--out filt");
    CHECK(fb.code == 0);
    REQUIRE(file_at("filt.graph.tsv"));
    REQUIRE(file_at("filt.sidecar.json"));
    REQUIRE(file_at("filt.manifest.json"));
    gadget ref = build_filter(choose_params(FA, 0.3), 2, FA);
    CHECK(read_text_file(at("filt.graph.tsv")) == ref.graph.to_tsv());
    CHECK(read_text_file(at("filt.sidecar.json")) == ref.to_sidecar().dump(2) + "\n");

    std::string meas_args = "gadget measure --graph filt.graph.tsv --sidecar filt.sidecar.json "
                            "--probs 0.9 --trials 2000 --seed 3";
    cli_result m1 = run_cli(meas_args + " --threads 1");
    cli_result m4 = run_cli(meas_args + " --threads 4");
    CHECK(m1.code == 0);
    CHECK(m1.out == m4.out);
    measure_result mref = measure_gadget(ref, {0.9}, 2000, 3, 1);
    CHECK(json::parse(m1.out)["frequency"].get<double>() ==
          doctest::Approx(mref.frequency).epsilon(1e-12));

    cli_result rv = run_cli("gadget measure --graph filt.graph.tsv --sidecar filt.sidecar.json "
                            "--trials 500 --seed 4 --reverse");
    CHECK(rv.code == 0);
    CHECK(json::parse(rv.out)["trials"] == 500);

    // a1 = 0 tower: a dead input set keeps the output silent exactly
    put("az.json", AZ_TEXT);
    cli_result ab = run_cli("gadget build --type and_a1zero --aseq az.json --inputs 2 --out az");
    CHECK(ab.code == 0);
    cli_result dead = run_cli("gadget measure --graph az.graph.tsv --sidecar az.sidecar.json "
                              "--probs 0.0,1.0 --trials 2000 --seed 1 --threads 4");
    CHECK(dead.code == 0);
    CHECK(json::parse(dead.out)["frequency"] == 0);
}

TEST_CASE("reduce hbm: bundle files, witness runs, gap search, size guards") {
    put("vc_n2m4.json", VC_N2M4);
    put("vc_n3m5.json", VC_N3M5);

    cli_result rd = run_cli("reduce hbm --instance vc_n2m4.json --W 2 --M 8 --out n2m4");
    CHECK(rd.code == 0);
    REQUIRE(file_at("n2m4.tree.json"));
    REQUIRE(file_at("n2m4.graph.tsv"));
    REQUIRE(file_at("n2m4.sidecar.json"));
    json man = json::parse(read_text_file(at("n2m4.manifest.json")));
    CHECK(man["outputs"] == json::array({"n2m4.tree.json", "n2m4.graph.tsv", "n2m4.sidecar.json"}));
    json side = json::parse(read_text_file(at("n2m4.sidecar.json")));
    CHECK(side["kind"] == "hbm");

    // byte-identical on rerun
    std::string side_bytes = read_text_file(at("n2m4.sidecar.json"));
    CHECK(run_cli("reduce hbm --instance vc_n2m4.json --W 2 --M 8 --out n2m4").code == 0);
    CHECK(read_text_file(at("n2m4.sidecar.json")) == side_bytes);

    cli_result yes = run_cli("verify yes --bundle n2m4");
    CHECK(yes.code == 0);
    json yj = json::parse(yes.out);
    CHECK(yj["payoff_fraction"] == 1.0);
    CHECK(yj["b_round"] == 9);
    CHECK(yj["levels_ordered"] == true);
    CHECK(yj["windows"] == json::parse("[[2,3],[4,5],[6,7],[8,8]]"));

    CHECK(run_cli("reduce hbm --instance vc_n3m5.json --W 2 --M 8 --out n3m5").code == 0);
    cli_result no_ex = run_cli("verify no --bundle n3m5 --domain exclude-payoff");
    CHECK(no_ex.code == 0);
    json nx = json::parse(no_ex.out);
    CHECK(nx["best_payoff"] == 0);
    CHECK(nx["sets_tried"] == 14950);
    cli_result no_all = run_cli("verify no --bundle n3m5 --threads 4");
    CHECK(no_all.code == 0);
    json na = json::parse(no_all.out);
    CHECK(na["best_payoff"] == 7);
    CHECK(na["best_seeds"] == json::array({0, 1, 2, 6}));
    CHECK(na["sets_tried"] == 46376);
    cli_result no_h = run_cli("verify no --bundle n3m5 --mode heuristic --probes 40 --seed 2");
    CHECK(no_h.code == 0);
    CHECK(json::parse(no_h.out)["sets_tried"] == 41);

    // parameter resolution without a build, and the desk-size cap
    cli_result res = run_cli("reduce hbm --instance vc_n2m4.json --resolve-only");
    CHECK(res.code == 0);
    vc_instance vc = vc_instance::from_json(json::parse(VC_N2M4));
    CHECK(res.out == hbm_resolve_params(vc, hbm_params{}).dump(2) + "\n");
    CHECK(run_cli("reduce hbm --instance vc_n3m5.json --out big").code == 3);
}

TEST_CASE("reduce shbm: stochastic bundle, witness, sample regularity report") {
    put("vc_shbm.json", VC_SHBM);
    cli_result rd = run_cli("reduce shbm --instance vc_shbm.json --W 2 --M 64 --out surro");
    CHECK(rd.code == 0);
    REQUIRE(file_at("surro.tree.json"));
    REQUIRE(!file_at("surro.graph.tsv"));
    json side = json::parse(read_text_file(at("surro.sidecar.json")));
    CHECK(side["kind"] == "shbm");
    CHECK(side["params"]["N"] == 400);

    std::string yes_args = "verify yes --bundle surro --trials 6 --seed 9";
    cli_result y1 = run_cli(yes_args + " --threads 1");
    cli_result y4 = run_cli(yes_args + " --threads 4");
    CHECK(y1.code == 0);
    CHECK(y1.out == y4.out);

    cli_result gs = run_cli("verify good-sample --bundle surro --sample-seed 2026");
    CHECK(gs.code == 0);
    {
        reduction_bundle ref = build_shbm_reduction(vc_instance::from_json(json::parse(VC_SHBM)),
                                                    shbm_params{.W = 2, .M = 64});
        good_sample_report rep =
            check_good_sample(sample(ref.tree, 2026), ref, good_sample_options{});
        CHECK(gs.out == rep.to_json().dump(2) + "\n");
    }
}

TEST_CASE("reduce setcover: a1zero bundle round-trips through verify") {
    put("sc_desk.json", SC_DESK);
    put("az.json", AZ_TEXT);
    cli_result rd = run_cli("reduce setcover --instance sc_desk.json --aseq az.json "
                            "--variant a1zero --M2 1 --out azb");
    CHECK(rd.code == 0);
    REQUIRE(file_at("azb.graph.tsv"));
    REQUIRE(!file_at("azb.tree.json"));
    json side = json::parse(read_text_file(at("azb.sidecar.json")));
    CHECK(side["kind"] == "setcover_a1zero");

    std::string yes_args = "verify yes --bundle azb --trials 10 --seed 4";
    cli_result y1 = run_cli(yes_args + " --threads 1");
    cli_result y4 = run_cli(yes_args + " --threads 4");
    CHECK(y1.code == 0);
    CHECK(y1.out == y4.out);
    double frac = json::parse(y1.out)["payoff_fraction"].get<double>();
    CHECK(frac >= 0.0);
    CHECK(frac <= 1.0);

    // gap search refuses non-linear bundles
    cli_result no = run_cli("verify no --bundle azb");
    CHECK(no.code == 2);
}

TEST_CASE("output conventions: --out files get manifests, stdout does not") {
    put("fa.json", FA_TEXT);
    cli_result fx = run_cli("gadget fixpoints --aseq fa.json --delta 0.1 --out fx.json");
    CHECK(fx.code == 0);
    CHECK(fx.out.empty());
    REQUIRE(file_at("fx.json"));
    REQUIRE(file_at("fx.json.manifest.json"));
    json man = json::parse(read_text_file(at("fx.json.manifest.json")));
    CHECK(man["subcommand"] == "gadget fixpoints");
    CHECK(man["params"]["delta"] == 0.1);
    CHECK(!file_at("-.manifest.json"));

    // bench: one row per (N, k) point, timing borne on stderr
    cli_result bench = run_cli("bench dp --sizes 16,24 --ks 2 --reps 1 --seed 5");
    CHECK(bench.code == 0);
    CHECK(bench.out.substr(0, 12) == "N,k,seconds\n");
    CHECK(std::count(bench.out.begin(), bench.out.end(), '\n') == 3);
    CHECK(bench.err.find("bench dp: N=16") != std::string::npos);
}
