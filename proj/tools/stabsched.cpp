// Command-line front end. All real work lives in the core library's study
// module; this file only maps flags onto a StudyConfig and exceptions onto
// exit codes (0 ok, 1 bad input, 2 solver failure, 3 infeasible).

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stabsched/common.hpp"
#include "stabsched/study.hpp"

using namespace stabsched;

int main(int argc, char** argv) {
    // The config file seeds the defaults, so it must load before CLI11
    // assigns any flag the user passed on top of it.
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc)
            config_path = argv[i + 1];
        else if (a.rfind("--config=", 0) == 0)
            config_path = a.substr(9);
    }

    CLI::App app{"stability-constrained scheduling toolkit"};
    app.require_subcommand(1);

    StudyConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_study_config(config_path);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }

    std::string cfg_dummy, stab_str, si_str, qs_str;
    std::vector<int> j_vals;
    double tol = 0.0;

    app.add_option("--config", cfg_dummy, "JSON config file; flags override its values");
    app.add_option("--case", cfg.case_path, "network case file");
    app.add_option("--tree", cfg.tree_path, "scenario tree file (default: single chain)");
    app.add_option("--horizon", cfg.horizon,
                   "stages of the default chain; 0 = the case's full horizon");
    auto* stab_opt = app.add_option(
        "--stab", stab_str, "families to enforce: comma-set of fs,sss,scc,dv,vs,eq, or all/none");
    auto* si_opt = app.add_option("--si", si_str, "synthetic inertia from grid-forming IBRs")
                       ->check(CLI::IsMember({"on", "off"}));
    auto* qs_opt = app.add_option("--qsupport", qs_str, "reactive support from IBRs")
                       ->check(CLI::IsMember({"on", "off"}));
    app.add_option("--out", cfg.out_dir, "output directory");
    app.add_option("--seed", cfg.seed, "sampling seed");
    app.add_option("--threads", cfg.threads, "worker threads; 0 = STABSCHED_THREADS or hardware");
    app.add_flag("--deterministic", cfg.deterministic,
                 "byte-reproducible outputs: zero clocks, serialized work");
    app.add_option("--surrogates", cfg.surrogate_dir,
                   "fitted surrogate directory (default: <out>/surrogates)");
    app.add_option("--attach-j", cfg.attach_j, "cone size solve and price attach");
    auto* tol_opt = app.add_option("--tol", tol, "interior-point feasibility and gap tolerance");
    app.add_option("--gap-abs", cfg.bnb.gap_abs, "absolute commitment-search gap");
    app.add_option("--gap-rel", cfg.bnb.gap_rel, "relative commitment-search gap");
    app.add_option("--max-nodes", cfg.bnb.max_nodes, "commitment-search node limit");

    CLI::App* c_sample =
        app.add_subcommand("sample", "draw operating points and label them with the oracles");
    c_sample->add_option("--n", cfg.sample_count, "number of operating points");

    CLI::App* c_fit = app.add_subcommand("fit", "fit stability surrogates to sampled datasets");
    c_fit->add_option("--j", j_vals, "cone sizes to fit, e.g. 0,2,3")->delimiter(',');
    c_fit->add_option("--method", cfg.fit_method, "conservative or lsr");
    c_fit->add_option("--datasets", cfg.dataset_dir, "dataset directory (default: <out>)");

    CLI::App* c_solve =
        app.add_subcommand("solve", "solve the stability-constrained schedule");

    CLI::App* c_assess =
        app.add_subcommand("assess", "evaluate a schedule against the ground-truth oracles");
    c_assess->add_option("--solution", cfg.solution_path,
                         "solution file (default: <out>/solution.json)");

    CLI::App* c_sweep =
        app.add_subcommand("sweep", "trace security boundaries over the capacity plane");
    c_sweep->add_option("--sg-min", cfg.grid.sg_min, "synchronous capacity, lower edge");
    c_sweep->add_option("--sg-max", cfg.grid.sg_max, "synchronous capacity, upper edge");
    c_sweep->add_option("--gfl-min", cfg.grid.gfl_min, "grid-following capacity, lower edge");
    c_sweep->add_option("--gfl-max", cfg.grid.gfl_max, "grid-following capacity, upper edge");
    c_sweep->add_option("--sg-points", cfg.grid.sg_points, "rows in the capacity grid");
    c_sweep->add_option("--gfl-points", cfg.grid.gfl_points, "columns in the capacity grid");
    c_sweep->add_flag("--check-containment", cfg.check_containment,
                      "fail unless the equilibrium boundary stays inside small-signal");

    CLI::App* c_price =
        app.add_subcommand("price", "price each unit's stability contribution");
    c_price->add_flag("--per-hour", cfg.per_hour, "price hour by hour as well");

    for (CLI::App* sub : {c_sample, c_fit, c_solve, c_assess, c_sweep, c_price})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (stab_opt->count() > 0) cfg.stab = parse_stab_set(stab_str);
        if (si_opt->count() > 0) cfg.si_on = (si_str == "on");
        if (qs_opt->count() > 0) cfg.q_support_on = (qs_str == "on");
        if (tol_opt->count() > 0) cfg.solver.tol_feas = cfg.solver.tol_gap = tol;
        if (!j_vals.empty()) cfg.fit_j = j_vals;

        if (app.got_subcommand(c_sample)) return cmd_sample(cfg);
        if (app.got_subcommand(c_fit)) return cmd_fit(cfg);
        if (app.got_subcommand(c_solve)) return cmd_solve(cfg);
        if (app.got_subcommand(c_assess)) return cmd_assess(cfg);
        if (app.got_subcommand(c_sweep)) return cmd_sweep(cfg);
        if (app.got_subcommand(c_price)) return cmd_price(cfg);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 2;
    }
    return 0;
}
