#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cascadelab/asequence.hpp"
#include "cascadelab/cascade.hpp"
#include "cascadelab/dp_oneway.hpp"
#include "cascadelab/errors.hpp"
#include "cascadelab/gadgets.hpp"
#include "cascadelab/graph.hpp"
#include "cascadelab/hierarchy.hpp"
#include "cascadelab/optimize.hpp"
#include "cascadelab/reductions.hpp"
#include "cascadelab/report.hpp"

namespace {

using namespace cascadelab;

int default_threads() {
    const char* env = std::getenv("CASCADELAB_THREADS");
    if (!env || !*env) return 1;
    std::string s(env);
    size_t pos = 0;
    int t = 0;
    try {
        t = std::stoi(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size() || t < 1) throw DomainError("bad CASCADELAB_THREADS value: " + s);
    return t;
}

long long parse_int_strict(const std::string& item) {
    size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(item, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != item.size()) throw DomainError("bad integer list entry: " + item);
    return v;
}

std::vector<long long> parse_ll_list(const std::string& text) {
    std::vector<long long> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(parse_int_strict(item));
    return out;
}

std::vector<vertex> parse_ids(const std::string& text) {
    std::vector<vertex> out;
    for (long long v : parse_ll_list(text)) out.push_back(vertex(v));
    return out;
}

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size()) throw DomainError("bad real list entry: " + item);
        out.push_back(v);
    }
    return out;
}

json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const std::exception& e) {
        throw IoError(what + ": " + e.what());
    }
}

a_sequence load_aseq(const std::string& path) {
    return a_sequence::from_json(parse_json_text(read_text_file(path), "a-sequence " + path));
}

hierarchy_tree load_tree(const std::string& path) {
    return hierarchy_tree::from_json(parse_json_text(read_text_file(path), "tree " + path));
}

weighted_graph load_graph(const std::string& path) {
    return weighted_graph::from_tsv(read_text_file(path));
}

// "auto" means symmetric when an a-sequence was given, linear otherwise.
influence_spec resolve_influence(const std::string& kind, const std::string& aseq_path) {
    if (kind == "linear") return influence_spec::linear();
    if (kind == "counting") return influence_spec::counting();
    if (kind == "symmetric" || (kind == "auto" && !aseq_path.empty())) {
        if (aseq_path.empty()) throw DomainError("symmetric influence needs --aseq");
        return influence_spec::symmetric(load_aseq(aseq_path));
    }
    return influence_spec::linear();
}

// Empty path = Uniform01 thresholds; otherwise a degenerate TSV.
threshold_spec resolve_thresholds(const std::string& path, vertex n) {
    if (path.empty()) return threshold_spec::uniform01();
    return threshold_spec::from_tsv(read_text_file(path), n);
}

// Doubles destined for ad-hoc JSON reports pass through the 12-digit format so
// CSV and JSON views of the same quantity agree.
json jreal(double x) { return json::parse(format_real(x)); }

// Primary-output writer: the manifest lands next to the file, never on stdout.
void emit(const std::string& out_path, const std::string& text, run_manifest m) {
    write_text_file(out_path, text);
    m.outputs.insert(m.outputs.begin(), out_path);
    write_manifest(m, out_path);
}

std::string sigma_text(const sigma_estimate& e) {
    json j{{"mean", jreal(e.mean)}, {"stderr", jreal(e.stderr_)}, {"replications", e.replications}};
    return j.dump(2) + "\n";
}

std::string measure_text(const measure_result& r) {
    json j{{"frequency", jreal(r.frequency)}, {"stderr", jreal(r.stderr_)}, {"trials", r.trials}};
    return j.dump(2) + "\n";
}

void write_gadget_files(const gadget& g, const std::string& prefix, run_manifest m) {
    std::string gp = prefix + ".graph.tsv", sp = prefix + ".sidecar.json";
    write_text_file(gp, g.graph.to_tsv());
    write_text_file(sp, g.to_sidecar().dump(2) + "\n");
    m.outputs = {gp, sp};
    write_manifest(m, prefix);
}

void write_bundle_files(const reduction_bundle& b, const std::string& prefix, run_manifest m) {
    std::vector<std::string> outs;
    if (!b.tree.nodes.empty()) {
        std::string p = prefix + ".tree.json";
        write_text_file(p, b.tree.to_json().dump(2) + "\n");
        outs.push_back(p);
    }
    if (b.instance.graph.n > 0) {
        std::string p = prefix + ".graph.tsv";
        write_text_file(p, b.instance.graph.to_tsv());
        outs.push_back(p);
    }
    std::string sp = prefix + ".sidecar.json";
    write_text_file(sp, b.to_sidecar().dump(2) + "\n");
    outs.push_back(sp);
    m.outputs = std::move(outs);
    write_manifest(m, prefix);
}

// Reads prefix.sidecar.json plus whichever of prefix.tree.json /
// prefix.graph.tsv exist; the sidecar validator rejects incoherent trios.
reduction_bundle load_bundle(const std::string& prefix, std::vector<std::string>& inputs) {
    std::string sp = prefix + ".sidecar.json";
    json side = parse_json_text(read_text_file(sp), "sidecar " + sp);
    inputs.push_back(sp);
    hierarchy_tree tree;
    weighted_graph graph;
    std::string tp = prefix + ".tree.json", gp = prefix + ".graph.tsv";
    if (std::filesystem::exists(tp)) {
        tree = load_tree(tp);
        inputs.push_back(tp);
    }
    if (std::filesystem::exists(gp)) {
        graph = load_graph(gp);
        inputs.push_back(gp);
    }
    return reduction_bundle::from_sidecar(side, std::move(tree), std::move(graph));
}

int run(int argc, char** argv) {
    CLI::App app{"cascade threshold-model toolkit"};
    app.set_version_flag("--version", "cascadelab 1.0.0");
    app.require_subcommand(1);
    const int threads_default = default_threads();

    // ---- tree ----------------------------------------------------------
    auto* tree_cmd = app.add_subcommand("tree", "hierarchy tree utilities");
    tree_cmd->require_subcommand(1);

    struct {
        std::string tree, out = "-";
    } tn;
    auto* tree_norm = tree_cmd->add_subcommand("normalize", "splice out single-child nodes");
    tree_norm->add_option("--tree", tn.tree, "tree JSON (- for stdin)")->required();
    tree_norm->add_option("--out", tn.out, "output path (- for stdout)");
    tree_norm->callback([&] {
        hierarchy_tree t = normalize_tree(load_tree(tn.tree));
        run_manifest m;
        m.subcommand = "tree normalize";
        m.inputs = {tn.tree};
        emit(tn.out, t.to_json().dump(2) + "\n", std::move(m));
    });

    struct {
        std::string tree, out = "-";
    } tm;
    auto* tree_mat = tree_cmd->add_subcommand("materialize", "expand a deterministic tree to an edge list");
    tree_mat->add_option("--tree", tm.tree, "tree JSON (- for stdin)")->required();
    tree_mat->add_option("--out", tm.out, "graph TSV path (- for stdout)");
    tree_mat->callback([&] {
        weighted_graph g = materialize(load_tree(tm.tree));
        run_manifest m;
        m.subcommand = "tree materialize";
        m.inputs = {tm.tree};
        emit(tm.out, g.to_tsv(), std::move(m));
    });

    struct {
        std::string tree, out = "-";
        uint64_t seed = 0;
    } ts;
    auto* tree_samp = tree_cmd->add_subcommand("sample", "draw one graph from a stochastic tree");
    tree_samp->add_option("--tree", ts.tree, "tree JSON (- for stdin)")->required();
    tree_samp->add_option("--seed", ts.seed, "master seed");
    tree_samp->add_option("--out", ts.out, "graph TSV path (- for stdout)");
    tree_samp->callback([&] {
        sampled_graph g = sample(load_tree(ts.tree), ts.seed);
        run_manifest m;
        m.subcommand = "tree sample";
        m.inputs = {ts.tree};
        m.seed = ts.seed;
        emit(ts.out, g.to_tsv(), std::move(m));
    });

    // ---- sigma ---------------------------------------------------------
    auto* sigma_cmd = app.add_subcommand("sigma", "expected cascade size");
    sigma_cmd->require_subcommand(1);

    struct sigma_opts {
        std::string graph, tree, aseq, thresholds, influence = "auto", seeds, out = "-";
        long long reps = 1000;
        uint64_t seed = 0;
        int threads = 1;
    };

    sigma_opts se;
    se.threads = threads_default;
    auto* sig_est = sigma_cmd->add_subcommand("estimate", "Monte Carlo sigma");
    sig_est->add_option("--graph", se.graph, "graph TSV")->required();
    sig_est->add_option("--aseq", se.aseq, "a-sequence JSON (symmetric influence)");
    sig_est->add_option("--influence", se.influence, "influence kind")
        ->check(CLI::IsMember({"auto", "linear", "counting", "symmetric"}));
    sig_est->add_option("--thresholds", se.thresholds, "threshold TSV (default Uniform01)");
    sig_est->add_option("--seeds", se.seeds, "comma-separated seed vertices");
    sig_est->add_option("--reps", se.reps, "replications");
    sig_est->add_option("--seed", se.seed, "master seed");
    sig_est->add_option("--threads", se.threads, "worker threads");
    sig_est->callback([&] {
        cascade_instance inst;
        inst.graph = load_graph(se.graph);
        inst.influence = resolve_influence(se.influence, se.aseq);
        inst.thresholds = resolve_thresholds(se.thresholds, inst.graph.n);
        sigma_estimate est =
            estimate_sigma(inst, parse_ids(se.seeds), se.reps, se.seed, se.threads);
        run_manifest m;
        m.subcommand = "sigma estimate";
        m.inputs = {se.graph};
        if (!se.aseq.empty()) m.inputs.push_back(se.aseq);
        if (!se.thresholds.empty()) m.inputs.push_back(se.thresholds);
        m.params = {{"influence", se.influence}, {"seeds", se.seeds}, {"reps", se.reps}};
        m.seed = se.seed;
        emit(se.out, sigma_text(est), std::move(m));
    });
    sig_est->add_option("--out", se.out, "output path (- for stdout)");

    sigma_opts sx;
    auto* sig_exact = sigma_cmd->add_subcommand("exact", "exact sigma (single cascade or bucket enumeration)");
    sig_exact->add_option("--graph", sx.graph, "graph TSV")->required();
    sig_exact->add_option("--aseq", sx.aseq, "a-sequence JSON (symmetric influence)");
    sig_exact->add_option("--influence", sx.influence, "influence kind")
        ->check(CLI::IsMember({"auto", "linear", "counting", "symmetric"}));
    sig_exact->add_option("--thresholds", sx.thresholds, "threshold TSV (default Uniform01)");
    sig_exact->add_option("--seeds", sx.seeds, "comma-separated seed vertices");
    sig_exact->add_option("--out", sx.out, "output path (- for stdout)");
    sig_exact->callback([&] {
        cascade_instance inst;
        inst.graph = load_graph(sx.graph);
        inst.influence = resolve_influence(sx.influence, sx.aseq);
        inst.thresholds = resolve_thresholds(sx.thresholds, inst.graph.n);
        double s = exact_sigma(inst, parse_ids(sx.seeds));
        run_manifest m;
        m.subcommand = "sigma exact";
        m.inputs = {sx.graph};
        if (!sx.aseq.empty()) m.inputs.push_back(sx.aseq);
        if (!sx.thresholds.empty()) m.inputs.push_back(sx.thresholds);
        m.params = {{"influence", sx.influence}, {"seeds", sx.seeds}};
        emit(sx.out, format_real(s) + "\n", std::move(m));
    });

    sigma_opts sp;
    sp.threads = threads_default;
    auto* sig_pre = sigma_cmd->add_subcommand("pre-sampling", "sigma with a fresh graph drawn per replication");
    sig_pre->add_option("--tree", sp.tree, "stochastic tree JSON")->required();
    sig_pre->add_option("--aseq", sp.aseq, "a-sequence JSON (symmetric influence)");
    sig_pre->add_option("--influence", sp.influence, "influence kind")
        ->check(CLI::IsMember({"auto", "linear", "counting", "symmetric"}));
    sig_pre->add_option("--thresholds", sp.thresholds, "threshold TSV (default Uniform01)");
    sig_pre->add_option("--seeds", sp.seeds, "comma-separated seed vertices");
    sig_pre->add_option("--reps", sp.reps, "replications");
    sig_pre->add_option("--seed", sp.seed, "master seed");
    sig_pre->add_option("--threads", sp.threads, "worker threads");
    sig_pre->add_option("--out", sp.out, "output path (- for stdout)");
    sig_pre->callback([&] {
        hierarchy_tree tree = load_tree(sp.tree);
        influence_spec inf = resolve_influence(sp.influence, sp.aseq);
        threshold_spec th = resolve_thresholds(sp.thresholds, tree.n_vertices);
        sigma_estimate est = estimate_sigma_pre_sampling(tree, inf, th, parse_ids(sp.seeds),
                                                         sp.reps, sp.seed, sp.threads);
        run_manifest m;
        m.subcommand = "sigma pre-sampling";
        m.inputs = {sp.tree};
        if (!sp.aseq.empty()) m.inputs.push_back(sp.aseq);
        if (!sp.thresholds.empty()) m.inputs.push_back(sp.thresholds);
        m.params = {{"influence", sp.influence}, {"seeds", sp.seeds}, {"reps", sp.reps}};
        m.seed = sp.seed;
        emit(sp.out, sigma_text(est), std::move(m));
    });

    // ---- dp-solve ------------------------------------------------------
    struct {
        std::string tree, thresholds, model = "plain", out = "-";
        int k = 0;
    } dp;
    auto* dp_cmd = app.add_subcommand("dp-solve", "optimal one-way seed plan on a deterministic tree");
    dp_cmd->add_option("--tree", dp.tree, "deterministic tree JSON")->required();
    dp_cmd->add_option("--thresholds", dp.thresholds, "threshold TSV")->required();
    dp_cmd->add_option("--k", dp.k, "seed budget")->required();
    dp_cmd->add_option("--model", dp.model, "leaf infection model")
        ->check(CLI::IsMember({"plain", "chained"}));
    dp_cmd->add_option("--out", dp.out, "output path (- for stdout)");
    dp_cmd->callback([&] {
        oneway_instance inst;
        inst.tree = normalize_tree(load_tree(dp.tree));
        inst.theta =
            threshold_spec::from_tsv(read_text_file(dp.thresholds), inst.tree.n_vertices).theta;
        inst.k = dp.k;
        leaf_model model = dp.model == "chained" ? leaf_model::chained : leaf_model::plain;
        dp_table table = dp_solve(inst, model);
        long long nu = table.best_nu(inst.tree);
        seed_plan plan = reconstruct(inst, table, nu);
        json j = plan.to_json();
        j["achieved"] = verify_plan(inst, plan);
        run_manifest m;
        m.subcommand = "dp-solve";
        m.inputs = {dp.tree, dp.thresholds};
        m.params = {{"k", dp.k}, {"model", dp.model}};
        emit(dp.out, j.dump(2) + "\n", std::move(m));
    });

    // ---- greedy --------------------------------------------------------
    struct {
        std::string graph, aseq, thresholds, influence = "auto", format = "csv", out = "-";
        int k = 1;
        long long reps = 1000;
        uint64_t seed = 0;
        bool exact = false, naive = false;
        int threads = 1;
    } gr;
    gr.threads = threads_default;
    auto* greedy_cmd = app.add_subcommand("greedy", "marginal-gain seed selection");
    greedy_cmd->add_option("--graph", gr.graph, "graph TSV")->required();
    greedy_cmd->add_option("--aseq", gr.aseq, "a-sequence JSON (symmetric influence)");
    greedy_cmd->add_option("--influence", gr.influence, "influence kind")
        ->check(CLI::IsMember({"auto", "linear", "counting", "symmetric"}));
    greedy_cmd->add_option("--thresholds", gr.thresholds, "threshold TSV (default Uniform01)");
    greedy_cmd->add_option("--k", gr.k, "seed budget")->required();
    greedy_cmd->add_option("--reps", gr.reps, "replications per estimate");
    greedy_cmd->add_option("--seed", gr.seed, "master seed");
    greedy_cmd->add_flag("--exact", gr.exact, "use the exact oracle instead of Monte Carlo");
    greedy_cmd->add_flag("--naive", gr.naive, "full candidate sweep per step (no lazy queue)");
    greedy_cmd->add_option("--threads", gr.threads, "worker threads");
    greedy_cmd->add_option("--format", gr.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    greedy_cmd->add_option("--out", gr.out, "output path (- for stdout)");
    greedy_cmd->callback([&] {
        cascade_instance inst;
        inst.graph = load_graph(gr.graph);
        inst.influence = resolve_influence(gr.influence, gr.aseq);
        inst.thresholds = resolve_thresholds(gr.thresholds, inst.graph.n);
        inst.k = gr.k;
        greedy_trace trace = greedy(inst, gr.reps, gr.seed, gr.exact, !gr.naive, gr.threads);
        report_rows rows;
        rows.header = {"step", "vertex", "marginal_mean", "marginal_stderr", "cumulative_mean"};
        for (const auto& s : trace.steps)
            rows.rows.push_back({std::to_string(s.step), std::to_string(s.v),
                                 format_real(s.marginal_mean), format_real(s.marginal_stderr),
                                 format_real(s.cumulative_mean)});
        run_manifest m;
        m.subcommand = "greedy";
        m.inputs = {gr.graph};
        if (!gr.aseq.empty()) m.inputs.push_back(gr.aseq);
        if (!gr.thresholds.empty()) m.inputs.push_back(gr.thresholds);
        m.params = {{"influence", gr.influence}, {"k", gr.k},          {"reps", gr.reps},
                    {"exact", gr.exact},         {"naive", gr.naive},  {"format", gr.format}};
        m.seed = gr.seed;
        std::string text = gr.format == "json" ? rows.to_json().dump(2) + "\n" : rows.to_csv();
        emit(gr.out, text, std::move(m));
    });

    // ---- brute-force ---------------------------------------------------
    struct {
        std::string graph, aseq, thresholds, influence = "auto", out = "-";
        int k = 1;
        long long reps = 1000, cap = 1'000'000;
        uint64_t seed = 0;
        bool exact = false;
        int threads = 1;
    } bf;
    bf.threads = threads_default;
    auto* bf_cmd = app.add_subcommand("brute-force", "exhaustive best seed set");
    bf_cmd->add_option("--graph", bf.graph, "graph TSV")->required();
    bf_cmd->add_option("--aseq", bf.aseq, "a-sequence JSON (symmetric influence)");
    bf_cmd->add_option("--influence", bf.influence, "influence kind")
        ->check(CLI::IsMember({"auto", "linear", "counting", "symmetric"}));
    bf_cmd->add_option("--thresholds", bf.thresholds, "threshold TSV (default Uniform01)");
    bf_cmd->add_option("--k", bf.k, "seed set size")->required();
    bf_cmd->add_option("--reps", bf.reps, "replications per estimate (ignored with --exact)");
    bf_cmd->add_option("--seed", bf.seed, "master seed");
    bf_cmd->add_flag("--exact", bf.exact, "use the exact oracle instead of Monte Carlo");
    bf_cmd->add_option("--cap", bf.cap, "combination cap");
    bf_cmd->add_option("--threads", bf.threads, "worker threads");
    bf_cmd->add_option("--out", bf.out, "output path (- for stdout)");
    bf_cmd->callback([&] {
        cascade_instance inst;
        inst.graph = load_graph(bf.graph);
        inst.influence = resolve_influence(bf.influence, bf.aseq);
        inst.thresholds = resolve_thresholds(bf.thresholds, inst.graph.n);
        inst.k = bf.k;
        auto [seeds, best] = brute_force(inst, bf.exact, bf.reps, bf.seed, bf.cap, bf.threads);
        json j{{"seeds", seeds}, {"sigma", jreal(best)}};
        run_manifest m;
        m.subcommand = "brute-force";
        m.inputs = {bf.graph};
        if (!bf.aseq.empty()) m.inputs.push_back(bf.aseq);
        if (!bf.thresholds.empty()) m.inputs.push_back(bf.thresholds);
        m.params = {{"influence", bf.influence},
                    {"k", bf.k},
                    {"reps", bf.reps},
                    {"exact", bf.exact},
                    {"cap", bf.cap}};
        m.seed = bf.seed;
        emit(bf.out, j.dump(2) + "\n", std::move(m));
    });

    // ---- gadget --------------------------------------------------------
    auto* gadget_cmd = app.add_subcommand("gadget", "probability gadget tools");
    gadget_cmd->require_subcommand(1);

    struct {
        std::string type, aseq, out;
        double alpha = 0.0, eps = 0.5, delta = 0.3, p0 = 0.0;
        double eps1 = 0.05, eps2 = 0.05;
        int layers = 1, inputs = 2, upsilon = 1, lambda0 = 0;
    } gb;
    auto* gad_build = gadget_cmd->add_subcommand("build", "construct a gadget (graph TSV + sidecar JSON)");
    gad_build->add_option("--type", gb.type, "gadget family")
        ->required()
        ->check(CLI::IsMember({"scaling", "filter", "and2", "and", "directed_edge", "and_a1zero"}));
    gad_build->add_option("--aseq", gb.aseq, "a-sequence JSON")->required();
    gad_build->add_option("--out", gb.out, "output prefix")->required();
    gad_build->add_option("--alpha", gb.alpha, "scaling factor (scaling)");
    gad_build->add_option("--eps", gb.eps, "tolerance (scaling) / leak bound (directed_edge)");
    gad_build->add_option("--delta", gb.delta, "separation parameter (filter, and2, and, directed_edge)");
    gad_build->add_option("--layers", gb.layers, "filter depth (filter, and2)");
    gad_build->add_option("--p0", gb.p0, "junction input level (and2, and)");
    gad_build->add_option("--eps1", gb.eps1, "false-side band (and)");
    gad_build->add_option("--eps2", gb.eps2, "true-side band (and)");
    gad_build->add_option("--inputs", gb.inputs, "input-set count (and, and_a1zero)");
    gad_build->add_option("--upsilon", gb.upsilon, "fan bound (directed_edge)");
    gad_build->add_option("--lambda0", gb.lambda0, "block fan-in (and_a1zero; 0 = derive)");
    gad_build->callback([&] {
        a_sequence a = load_aseq(gb.aseq);
        gadget g;
        json params;
        if (gb.type == "scaling") {
            g = build_scaling_down(gb.alpha, gb.eps, a);
            params = {{"alpha", gb.alpha}, {"eps", gb.eps}};
        } else if (gb.type == "filter") {
            g = build_filter(choose_params(a, gb.delta), gb.layers, a);
            params = {{"delta", gb.delta}, {"layers", gb.layers}};
        } else if (gb.type == "and2") {
            separation_params pr = choose_params(a, gb.delta);
            fixed_point_report fp = find_fixed_points(pr, a);
            and2_betas betas = choose_betas(gb.p0, fp.p1, fp.p2, a);
            g = build_and2(gb.p0, betas, build_filter(pr, gb.layers, a), a);
            params = {{"delta", gb.delta}, {"layers", gb.layers}, {"p0", gb.p0}};
        } else if (gb.type == "and") {
            g = build_and(gb.inputs, gb.p0, gb.eps1, gb.eps2, gb.delta, a);
            params = {{"inputs", gb.inputs}, {"p0", gb.p0},       {"eps1", gb.eps1},
                      {"eps2", gb.eps2},     {"delta", gb.delta}};
        } else if (gb.type == "directed_edge") {
            g = build_directed_edge(gb.upsilon, gb.eps, choose_params(a, gb.delta), a);
            params = {{"upsilon", gb.upsilon}, {"eps", gb.eps}, {"delta", gb.delta}};
        } else {
            int l0 = gb.lambda0 > 0 ? gb.lambda0 : find_lambda0(a);
            g = build_and_a1zero(gb.inputs, l0, a);
            params = {{"inputs", gb.inputs}, {"lambda0", l0}};
        }
        run_manifest m;
        m.subcommand = "gadget build";
        m.inputs = {gb.aseq};
        params["type"] = gb.type;
        m.params = std::move(params);
        write_gadget_files(g, gb.out, std::move(m));
    });

    struct {
        std::string graph, sidecar, probs, out = "-";
        long long trials = 10000;
        uint64_t seed = 0;
        bool reverse = false;
        int threads = 1;
    } gm;
    gm.threads = threads_default;
    auto* gad_meas = gadget_cmd->add_subcommand("measure", "Monte Carlo check of a gadget contract");
    gad_meas->add_option("--graph", gm.graph, "gadget graph TSV")->required();
    gad_meas->add_option("--sidecar", gm.sidecar, "gadget sidecar JSON")->required();
    gad_meas->add_option("--probs", gm.probs, "per-input-set firing probabilities (broadcasts a single value)");
    gad_meas->add_option("--trials", gm.trials, "Monte Carlo trials");
    gad_meas->add_option("--seed", gm.seed, "master seed");
    gad_meas->add_flag("--reverse", gm.reverse, "seed the output and count infected inputs");
    gad_meas->add_option("--threads", gm.threads, "worker threads");
    gad_meas->add_option("--out", gm.out, "output path (- for stdout)");
    gad_meas->callback([&] {
        gadget g = gadget::from_sidecar(
            parse_json_text(read_text_file(gm.sidecar), "sidecar " + gm.sidecar),
            load_graph(gm.graph));
        measure_result r;
        if (gm.reverse) {
            r = measure_reverse(g, gm.trials, gm.seed, gm.threads);
        } else {
            std::vector<double> probs = parse_real_list(gm.probs);
            if (probs.size() == 1 && g.input_sets.size() > 1)
                probs.assign(g.input_sets.size(), probs[0]);
            r = measure_gadget(g, probs, gm.trials, gm.seed, gm.threads);
        }
        run_manifest m;
        m.subcommand = "gadget measure";
        m.inputs = {gm.graph, gm.sidecar};
        m.params = {{"probs", gm.probs}, {"trials", gm.trials}, {"reverse", gm.reverse}};
        m.seed = gm.seed;
        emit(gm.out, measure_text(r), std::move(m));
    });

    struct {
        std::string aseq, out = "-";
        double delta = 0.05, tol = 1e-9;
    } gf;
    auto* gad_fix = gadget_cmd->add_subcommand("fixpoints", "fixed points of the separation map");
    gad_fix->add_option("--aseq", gf.aseq, "a-sequence JSON")->required();
    gad_fix->add_option("--delta", gf.delta, "separation parameter")->required();
    gad_fix->add_option("--tol", gf.tol, "bisection tolerance");
    gad_fix->add_option("--out", gf.out, "output path (- for stdout)");
    gad_fix->callback([&] {
        a_sequence a = load_aseq(gf.aseq);
        fixed_point_report rep = find_fixed_points(choose_params(a, gf.delta), a, gf.tol);
        run_manifest m;
        m.subcommand = "gadget fixpoints";
        m.inputs = {gf.aseq};
        m.params = {{"delta", gf.delta}, {"tol", gf.tol}};
        emit(gf.out, rep.to_json().dump(2) + "\n", std::move(m));
    });

    // ---- reduce --------------------------------------------------------
    auto* reduce_cmd = app.add_subcommand("reduce", "cover problems to cascade hardness instances");
    reduce_cmd->require_subcommand(1);

    struct {
        std::string instance, out;
        long long W = 0, M = 0;
        double delta = 0.0, epsilon = 0.5;
        bool resolve_only = false;
        std::string resolve_out = "-";
    } rh;
    auto* red_hbm = reduce_cmd->add_subcommand("hbm", "vertex cover to deterministic hierarchy");
    red_hbm->add_option("--instance", rh.instance, "vertex-cover JSON {n, edges, k}")->required();
    red_hbm->add_option("--out", rh.out, "output prefix (omit with --resolve-only)");
    red_hbm->add_option("--W", rh.W, "level width override (0 = n*m)");
    red_hbm->add_option("--M", rh.M, "payoff size override (0 = closed form)");
    red_hbm->add_option("--delta", rh.delta, "dyadic slack override (0 = derive)");
    red_hbm->add_option("--epsilon", rh.epsilon, "exponent in the default payoff size");
    red_hbm->add_flag("--resolve-only", rh.resolve_only, "print effective parameters, build nothing");
    red_hbm->callback([&] {
        vc_instance vc =
            vc_instance::from_json(parse_json_text(read_text_file(rh.instance), "vc " + rh.instance));
        hbm_params p{rh.W, rh.M, rh.delta, rh.epsilon};
        run_manifest m;
        m.subcommand = "reduce hbm";
        m.inputs = {rh.instance};
        m.params = {{"W", rh.W}, {"M", rh.M}, {"delta", rh.delta}, {"epsilon", rh.epsilon}};
        if (rh.resolve_only) {
            emit(rh.resolve_out, hbm_resolve_params(vc, p).dump(2) + "\n", std::move(m));
            return;
        }
        if (rh.out.empty()) throw DomainError("reduce hbm needs --out");
        write_bundle_files(build_hbm_reduction(vc, p), rh.out, std::move(m));
    });

    struct {
        std::string instance, out;
        long long W = 0, M = 0;
    } rs;
    auto* red_shbm = reduce_cmd->add_subcommand("shbm", "vertex cover to stochastic hierarchy");
    red_shbm->add_option("--instance", rs.instance, "vertex-cover JSON {n, edges, k}")->required();
    red_shbm->add_option("--out", rs.out, "output prefix")->required();
    red_shbm->add_option("--W", rs.W, "block width")->required();
    red_shbm->add_option("--M", rs.M, "payoff bundle size")->required();
    red_shbm->callback([&] {
        vc_instance vc =
            vc_instance::from_json(parse_json_text(read_text_file(rs.instance), "vc " + rs.instance));
        run_manifest m;
        m.subcommand = "reduce shbm";
        m.inputs = {rs.instance};
        m.params = {{"W", rs.W}, {"M", rs.M}};
        write_bundle_files(build_shbm_reduction(vc, shbm_params{rs.W, rs.M}), rs.out,
                           std::move(m));
    });

    struct {
        std::string instance, aseq, variant, out;
        double delta = 0.3, eps_shift = 0.0, edge_eps = 0.9;
        long long M1 = 8, M2 = 0, edge_upsilon = 1;
    } rc;
    auto* red_sc = reduce_cmd->add_subcommand("setcover", "set cover to a gadget-wired cascade");
    red_sc->add_option("--instance", rc.instance, "set-cover JSON {n, subsets, k}")->required();
    red_sc->add_option("--aseq", rc.aseq, "a-sequence JSON")->required();
    red_sc->add_option("--variant", rc.variant, "construction variant")
        ->required()
        ->check(CLI::IsMember({"directed", "undirected", "a1zero"}));
    red_sc->add_option("--out", rc.out, "output prefix")->required();
    red_sc->add_option("--delta", rc.delta, "separation parameter");
    red_sc->add_option("--eps-shift", rc.eps_shift, "active-band slack (0 = derive)");
    red_sc->add_option("--M1", rc.M1, "payoff bundle size per verification copy");
    red_sc->add_option("--M2", rc.M2, "verification copies (0 = n^2)");
    red_sc->add_option("--edge-upsilon", rc.edge_upsilon, "one-way link fan bound (undirected)");
    red_sc->add_option("--edge-eps", rc.edge_eps, "one-way link leak bound (undirected)");
    red_sc->callback([&] {
        sc_instance sc =
            sc_instance::from_json(parse_json_text(read_text_file(rc.instance), "sc " + rc.instance));
        a_sequence a = load_aseq(rc.aseq);
        setcover_variant variant = rc.variant == "directed"     ? setcover_variant::directed
                                   : rc.variant == "undirected" ? setcover_variant::undirected
                                                                : setcover_variant::a1zero;
        setcover_params p;
        p.delta = rc.delta;
        p.eps_shift = rc.eps_shift;
        p.M1 = rc.M1;
        p.M2 = rc.M2;
        p.edge_upsilon = rc.edge_upsilon;
        p.edge_eps = rc.edge_eps;
        run_manifest m;
        m.subcommand = "reduce setcover";
        m.inputs = {rc.instance, rc.aseq};
        m.params = {{"variant", rc.variant},   {"delta", rc.delta},
                    {"eps_shift", rc.eps_shift}, {"M1", rc.M1},
                    {"M2", rc.M2},             {"edge_upsilon", rc.edge_upsilon},
                    {"edge_eps", rc.edge_eps}};
        write_bundle_files(build_setcover_reduction(sc, variant, a, p), rc.out, std::move(m));
    });

    // ---- verify --------------------------------------------------------
    auto* verify_cmd = app.add_subcommand("verify", "check generated hardness bundles");
    verify_cmd->require_subcommand(1);

    struct {
        std::string bundle, out = "-";
        long long trials = 1000;
        uint64_t seed = 0;
        int threads = 1;
    } vy;
    vy.threads = threads_default;
    auto* ver_yes = verify_cmd->add_subcommand("yes", "run the prescribed witness strategy");
    ver_yes->add_option("--bundle", vy.bundle, "bundle prefix from reduce")->required();
    ver_yes->add_option("--trials", vy.trials, "Monte Carlo trials (stochastic bundles)");
    ver_yes->add_option("--seed", vy.seed, "master seed");
    ver_yes->add_option("--threads", vy.threads, "worker threads");
    ver_yes->add_option("--out", vy.out, "output path (- for stdout)");
    ver_yes->callback([&] {
        run_manifest m;
        m.subcommand = "verify yes";
        reduction_bundle b = load_bundle(vy.bundle, m.inputs);
        yes_report rep = verify_yes_strategy(b, vy.trials, vy.seed, vy.threads);
        m.params = {{"trials", vy.trials}};
        m.seed = vy.seed;
        emit(vy.out, rep.to_json().dump(2) + "\n", std::move(m));
    });

    struct {
        std::string bundle, mode = "exhaustive", domain = "all", out = "-";
        long long cap = 10'000'000, probes = 1000;
        uint64_t seed = 0;
        int threads = 1;
    } vn;
    vn.threads = threads_default;
    auto* ver_no = verify_cmd->add_subcommand("no", "search seed sets for payoff infections");
    ver_no->add_option("--bundle", vn.bundle, "bundle prefix from reduce")->required();
    ver_no->add_option("--mode", vn.mode, "search mode")
        ->check(CLI::IsMember({"exhaustive", "heuristic"}));
    ver_no->add_option("--domain", vn.domain, "seed pool")
        ->check(CLI::IsMember({"all", "exclude-payoff"}));
    ver_no->add_option("--cap", vn.cap, "exhaustive seed-set cap");
    ver_no->add_option("--probes", vn.probes, "heuristic probe count");
    ver_no->add_option("--seed", vn.seed, "master seed");
    ver_no->add_option("--threads", vn.threads, "worker threads");
    ver_no->add_option("--out", vn.out, "output path (- for stdout)");
    ver_no->callback([&] {
        run_manifest m;
        m.subcommand = "verify no";
        reduction_bundle b = load_bundle(vn.bundle, m.inputs);
        no_gap_options opt;
        opt.mode = vn.mode == "heuristic" ? no_gap_mode::heuristic : no_gap_mode::exhaustive;
        opt.domain = vn.domain == "exclude-payoff" ? no_gap_domain::exclude_payoff
                                                   : no_gap_domain::all;
        opt.cap = vn.cap;
        opt.probes = vn.probes;
        opt.seed = vn.seed;
        opt.threads = vn.threads;
        no_gap_report rep = verify_no_gap_small(b, opt);
        m.params = {{"mode", vn.mode}, {"domain", vn.domain}, {"cap", vn.cap},
                    {"probes", vn.probes}};
        m.seed = vn.seed;
        emit(vn.out, rep.to_json().dump(2) + "\n", std::move(m));
    });

    struct {
        std::string bundle, out = "-";
        uint64_t sample_seed = 0, seed = 0;
        long long pair_draws = 200;
    } vg;
    auto* ver_good = verify_cmd->add_subcommand("good-sample", "regularity check of one sampled graph");
    ver_good->add_option("--bundle", vg.bundle, "bundle prefix from reduce")->required();
    ver_good->add_option("--sample-seed", vg.sample_seed, "seed for the graph draw");
    ver_good->add_option("--pair-draws", vg.pair_draws, "random set pairs per clique");
    ver_good->add_option("--seed", vg.seed, "master seed for the checker's draws");
    ver_good->add_option("--out", vg.out, "output path (- for stdout)");
    ver_good->callback([&] {
        run_manifest m;
        m.subcommand = "verify good-sample";
        reduction_bundle b = load_bundle(vg.bundle, m.inputs);
        if (b.tree.nodes.empty())
            throw DomainError("bundle has no stochastic tree to sample");
        sampled_graph g = sample(b.tree, vg.sample_seed);
        good_sample_options opt;
        opt.pair_draws = vg.pair_draws;
        opt.seed = vg.seed;
        good_sample_report rep = check_good_sample(g, b, opt);
        m.params = {{"sample_seed", vg.sample_seed}, {"pair_draws", vg.pair_draws}};
        m.seed = vg.seed;
        emit(vg.out, rep.to_json().dump(2) + "\n", std::move(m));
    });

    // ---- bench ---------------------------------------------------------
    auto* bench_cmd = app.add_subcommand("bench", "timing sweeps");
    bench_cmd->require_subcommand(1);

    struct {
        std::string sizes = "50,100,200,400", ks = "5", format = "csv", out = "-";
        int reps = 3;
        uint64_t seed = 0;
    } bd;
    auto* bench_dp = bench_cmd->add_subcommand("dp", "dp-solve wall time over instance sizes");
    bench_dp->add_option("--sizes", bd.sizes, "comma-separated vertex counts");
    bench_dp->add_option("--ks", bd.ks, "comma-separated budgets");
    bench_dp->add_option("--reps", bd.reps, "repetitions per point (best is kept)");
    bench_dp->add_option("--seed", bd.seed, "instance seed");
    bench_dp->add_option("--format", bd.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    bench_dp->add_option("--out", bd.out, "output path (- for stdout)");
    bench_dp->callback([&] {
        report_rows rows;
        rows.header = {"N", "k", "seconds"};
        uint64_t idx = 0;
        for (long long N : parse_ll_list(bd.sizes))
            for (long long k : parse_ll_list(bd.ks)) {
                oneway_instance inst =
                    random_oneway_instance(vertex(N), int(k), bd.seed + idx++);
                double best = 0.0;
                for (int r = 0; r < bd.reps; ++r) {
                    auto t0 = std::chrono::steady_clock::now();
                    dp_solve(inst);
                    double dt = std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - t0)
                                    .count();
                    if (r == 0 || dt < best) best = dt;
                    std::fprintf(stderr, "bench dp: N=%lld k=%lld rep %d/%d %.3fs\n", N, k,
                                 r + 1, bd.reps, dt);
                }
                rows.rows.push_back(
                    {std::to_string(N), std::to_string(k), format_real(best)});
            }
        run_manifest m;
        m.subcommand = "bench dp";
        m.params = {{"sizes", bd.sizes}, {"ks", bd.ks}, {"reps", bd.reps}};
        m.seed = bd.seed;
        std::string text = bd.format == "json" ? rows.to_json().dump(2) + "\n" : rows.to_csv();
        emit(bd.out, text, std::move(m));
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // CLI11's own exit codes collapse onto the validation slot; help stays 0.
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const cascadelab::error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
