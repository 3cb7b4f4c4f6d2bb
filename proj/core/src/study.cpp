#include "stabsched/study.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stabsched/case_io.hpp"
#include "stabsched/common.hpp"
#include "stabsched/dataset.hpp"
#include "stabsched/pricing.hpp"
#include "stabsched/scenario.hpp"
#include "stabsched/surrogate.hpp"
#include "stabsched/uc_model.hpp"

namespace stabsched {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<StabFamily, 6> kFamilies = {
    StabFamily::Frequency,     StabFamily::SmallSignal,      StabFamily::ShortCircuit,
    StabFamily::VoltageDip,    StabFamily::VoltageStability, StabFamily::Equilibrium,
};

void reject_unknown(const json& j, const char* where,
                    std::initializer_list<const char*> keys) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find_if(keys.begin(), keys.end(), [&](const char* k) {
                return it.key() == k;
            }) == keys.end())
            throw ValidationError(std::string("config: unknown key '") + it.key() +
                                  "' in " + where);
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << text;
    if (!out) throw ValidationError("write failed for '" + path + "'");
}

void ensure_dir(const std::string& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create directory '" + dir + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

/// Runs independent jobs on `threads` workers; order of execution is
/// unspecified, so callers must buffer results and emit them in fixed order.
/// A single worker degenerates to a plain in-order loop.
void run_jobs(std::vector<std::function<void()>>& jobs, int threads) {
    const int workers = std::min<int>(threads, int(jobs.size()));
    if (workers <= 1) {
        for (auto& job : jobs) job();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs.size());
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size()) return;
                try {
                    jobs[i]();
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string require_case(const StudyConfig& cfg) {
    if (cfg.case_path.empty())
        throw ValidationError("no case file given (--case or the config's \"case\")");
    return cfg.case_path;
}

std::string dataset_dir(const StudyConfig& cfg) {
    return cfg.dataset_dir.empty() ? cfg.out_dir : cfg.dataset_dir;
}

std::string surrogate_dir(const StudyConfig& cfg) {
    return cfg.surrogate_dir.empty() ? join_path(cfg.out_dir, "surrogates")
                                     : cfg.surrogate_dir;
}

BnbConfig make_bnb(const StudyConfig& cfg) {
    BnbConfig bnb = cfg.bnb;
    bnb.relax = cfg.solver;
    bnb.deterministic = bnb.deterministic || cfg.deterministic;
    return bnb;
}

void check_cone_size(int j) {
    if (j < 0 || j == 1)
        throw ValidationError("cone size " + std::to_string(j) +
                              " is not fittable (use 0 or >= 2)");
}

/// Case, tree, fitted surrogates, and the compiled scheduling model for the
/// solve and price commands. The model points into `net`, so the bundle is
/// heap-allocated and immovable.
struct BuiltStudy {
    NetworkCase net;
    ScenarioTree tree;
    UcModel model;
};

std::unique_ptr<BuiltStudy> build_study(const StudyConfig& cfg) {
    auto st = std::make_unique<BuiltStudy>();
    st->net = load_case(require_case(cfg));
    if (!cfg.tree_path.empty()) {
        st->tree = load_tree(cfg.tree_path);
    } else {
        const int T = cfg.horizon > 0 ? cfg.horizon : st->net.horizon();
        st->tree = single_chain(T);
    }

    std::vector<AttachedSurrogate> attached;
    const std::string sdir = surrogate_dir(cfg);
    for (StabFamily f : cfg.stab) {
        for (const SurrogateInstance& inst : surrogate_instances(st->net)) {
            if (inst.family != f) continue;
            const std::string path = join_path(
                sdir, instance_name(inst) + "_j" + std::to_string(cfg.attach_j) + ".json");
            if (!fs::exists(path))
                throw ValidationError("missing fitted surrogate '" + path +
                                      "'; run fit first");
            attached.push_back({inst, load_surrogate(path)});
        }
    }
    st->model = build_uc(st->net, st->tree, attached, {cfg.si_on, cfg.q_support_on});
    return st;
}

}  // namespace

std::vector<StabFamily> parse_stab_set(const std::string& text) {
    std::vector<StabFamily> out;
    if (text == "none" || text.empty()) return out;
    if (text == "all") {
        out.assign(kFamilies.begin(), kFamilies.end());
        return out;
    }
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string tag =
            text.substr(pos, comma == std::string::npos ? comma : comma - pos);
        const StabFamily f = family_from_tag(tag);
        if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

int resolve_threads(const StudyConfig& cfg) {
    if (cfg.deterministic) return 1;
    if (cfg.threads > 0) return cfg.threads;
    if (const char* env = std::getenv("STABSCHED_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v > 0) return int(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

// Config schema. Every key is optional; flags passed to the CLI override
// whatever the file set.
//
// {
//   "case": "cases/ne39.json", "tree": "cases/tree.json", "horizon": 24,
//   "stab": "fs,vs" | "all" | "none", "si": false, "qsupport": false,
//   "limits": {"gscr", "scc_pu", "dip_pu", "nadir_hz", "ss_hz", "rocof_hz_s"},
//   "solver": {"tol_feas", "tol_gap", "max_iters"},
//   "bnb": {"int_tol", "gap_abs", "gap_rel", "max_nodes"},
//   "seed": 1, "threads": 0, "deterministic": false, "out": ".",
//   "n": 5000, "j": [0, 2, 3], "method": "conservative",
//   "datasets": "...", "surrogates": "...", "attach_j": 2,
//   "solution": "runs/solution.json",
//   "grid": {"sg_min", "sg_max", "gfl_min", "gfl_max", "sg_points", "gfl_points"},
//   "check_containment": false, "per_hour": false
// }
StudyConfig parse_study_config(const std::string& json_text) {
    StudyConfig cfg;
    try {
        const json j = json::parse(json_text);
        if (!j.is_object()) throw ValidationError("config: document must be a JSON object");
        reject_unknown(j, "the config",
                       {"case", "tree", "horizon", "stab", "si", "qsupport", "limits",
                        "solver", "bnb", "seed", "threads", "deterministic", "out", "n",
                        "j", "method", "datasets", "surrogates", "attach_j", "solution",
                        "grid", "check_containment", "per_hour"});

        auto str = [&](const char* k, std::string& v) {
            if (j.contains(k)) v = j.at(k).get<std::string>();
        };
        auto num = [&](const json& o, const char* k, double& v) {
            if (o.contains(k)) v = o.at(k).get<double>();
        };
        auto integer = [&](const json& o, const char* k, int& v) {
            if (o.contains(k)) v = o.at(k).get<int>();
        };
        auto boolean = [&](const char* k, bool& v) {
            if (j.contains(k)) v = j.at(k).get<bool>();
        };

        str("case", cfg.case_path);
        str("tree", cfg.tree_path);
        integer(j, "horizon", cfg.horizon);
        if (j.contains("stab")) cfg.stab = parse_stab_set(j.at("stab").get<std::string>());
        boolean("si", cfg.si_on);
        boolean("qsupport", cfg.q_support_on);

        if (j.contains("limits")) {
            const json& o = j.at("limits");
            reject_unknown(o, "limits",
                           {"gscr", "scc_pu", "dip_pu", "nadir_hz", "ss_hz", "rocof_hz_s"});
            num(o, "gscr", cfg.limits.gscr);
            num(o, "scc_pu", cfg.limits.scc_pu);
            num(o, "dip_pu", cfg.limits.dip_pu);
            num(o, "nadir_hz", cfg.limits.nadir_hz);
            num(o, "ss_hz", cfg.limits.ss_hz);
            num(o, "rocof_hz_s", cfg.limits.rocof_hz_s);
        }
        if (j.contains("solver")) {
            const json& o = j.at("solver");
            reject_unknown(o, "solver", {"tol_feas", "tol_gap", "max_iters"});
            num(o, "tol_feas", cfg.solver.tol_feas);
            num(o, "tol_gap", cfg.solver.tol_gap);
            integer(o, "max_iters", cfg.solver.max_iters);
        }
        if (j.contains("bnb")) {
            const json& o = j.at("bnb");
            reject_unknown(o, "bnb", {"int_tol", "gap_abs", "gap_rel", "max_nodes"});
            num(o, "int_tol", cfg.bnb.int_tol);
            num(o, "gap_abs", cfg.bnb.gap_abs);
            num(o, "gap_rel", cfg.bnb.gap_rel);
            if (o.contains("max_nodes")) cfg.bnb.max_nodes = o.at("max_nodes").get<long>();
        }
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        integer(j, "threads", cfg.threads);
        boolean("deterministic", cfg.deterministic);
        str("out", cfg.out_dir);
        integer(j, "n", cfg.sample_count);
        if (j.contains("j")) {
            cfg.fit_j = j.at("j").get<std::vector<int>>();
            for (int jj : cfg.fit_j) check_cone_size(jj);
        }
        str("method", cfg.fit_method);
        str("datasets", cfg.dataset_dir);
        str("surrogates", cfg.surrogate_dir);
        integer(j, "attach_j", cfg.attach_j);
        str("solution", cfg.solution_path);
        if (j.contains("grid")) {
            const json& o = j.at("grid");
            reject_unknown(o, "grid", {"sg_min", "sg_max", "gfl_min", "gfl_max",
                                       "sg_points", "gfl_points"});
            num(o, "sg_min", cfg.grid.sg_min);
            num(o, "sg_max", cfg.grid.sg_max);
            num(o, "gfl_min", cfg.grid.gfl_min);
            num(o, "gfl_max", cfg.grid.gfl_max);
            integer(o, "sg_points", cfg.grid.sg_points);
            integer(o, "gfl_points", cfg.grid.gfl_points);
        }
        boolean("check_containment", cfg.check_containment);
        boolean("per_hour", cfg.per_hour);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }

    for (double lim : {cfg.limits.gscr, cfg.limits.scc_pu, cfg.limits.dip_pu,
                       cfg.limits.nadir_hz, cfg.limits.ss_hz, cfg.limits.rocof_hz_s})
        if (!(lim > 0.0)) throw ValidationError("config: stability limits must be positive");
    check_cone_size(cfg.attach_j);
    return cfg;
}

StudyConfig load_study_config(const std::string& path) {
    try {
        return parse_study_config(read_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

int cmd_sample(const StudyConfig& cfg) {
    if (cfg.sample_count < 1) throw ValidationError("sample: --n must be >= 1");
    const NetworkCase net = load_case(require_case(cfg));
    const std::vector<OperatingPoint> points = sample_operating_points(
        net, cfg.sample_count, cfg.seed, cfg.si_on, cfg.q_support_on);
    ensure_dir(cfg.out_dir);

    std::array<Dataset, kFamilies.size()> sets;
    std::vector<std::function<void()>> jobs;
    for (std::size_t i = 0; i < kFamilies.size(); ++i)
        jobs.push_back([&, i] { sets[i] = build_dataset(net, kFamilies[i], points, cfg.limits); });
    run_jobs(jobs, resolve_threads(cfg));

    for (std::size_t i = 0; i < kFamilies.size(); ++i) {
        const std::string path =
            join_path(cfg.out_dir, std::string(family_tag(kFamilies[i])) + ".csv");
        save_dataset(sets[i], path);
        std::printf("wrote %s (%d samples, %d metrics)\n", path.c_str(), sets[i].count(),
                    int(sets[i].metric_names.size()));
    }
    return 0;
}

int cmd_fit(const StudyConfig& cfg) {
    if (cfg.fit_j.empty()) throw ValidationError("fit: need at least one cone size in --j");
    for (int j : cfg.fit_j) check_cone_size(j);
    if (cfg.fit_method != "conservative" && cfg.fit_method != "lsr")
        throw ValidationError("fit: unknown method '" + cfg.fit_method + "'");

    const std::vector<StabFamily> fams =
        cfg.stab.empty() ? std::vector<StabFamily>(kFamilies.begin(), kFamilies.end())
                         : cfg.stab;
    const std::string ddir = dataset_dir(cfg);
    const std::string sdir = surrogate_dir(cfg);
    ensure_dir(cfg.out_dir);
    ensure_dir(sdir);

    struct Task {
        StabFamily family;
        const Dataset* data = nullptr;
        int metric = 0;
    };
    std::vector<std::unique_ptr<Dataset>> loaded;
    std::vector<Task> tasks;
    for (StabFamily f : fams) {
        const std::string path = join_path(ddir, std::string(family_tag(f)) + ".csv");
        if (!fs::exists(path))
            throw ValidationError("fit: missing dataset '" + path + "'; run sample first");
        loaded.push_back(std::make_unique<Dataset>(load_dataset(path)));
        for (int k = 0; k < int(loaded.back()->metric_names.size()); ++k)
            tasks.push_back({f, loaded.back().get(), k});
    }

    struct Fitted {
        std::vector<std::pair<std::string, SocSurrogate>> files;  // name -> model
        std::string rows;
    };
    std::vector<Fitted> results(tasks.size());
    std::vector<std::function<void()>> jobs;
    for (std::size_t ti = 0; ti < tasks.size(); ++ti)
        jobs.push_back([&, ti] {
            const Task& task = tasks[ti];
            const Dataset& d = *task.data;
            const std::string& name = d.metric_names[std::size_t(task.metric)];
            const SurrogateInstance inst = instance_from_name(name);
            const double g_lim = instance_limit(inst, cfg.limits);
            const Eigen::VectorXd g = d.G.col(task.metric);

            SocSurrogate prev;
            bool has_prev = false;
            for (int j : cfg.fit_j) {
                FitConfig fc;
                fc.solver = cfg.solver;
                if (has_prev && cfg.fit_method == "conservative") fc.warm_init = &prev;
                auto [model, rep] = cfg.fit_method == "conservative"
                                        ? fit_conservative(d.X, g, g_lim, j, fc)
                                        : fit_lsr(d.X, g, g_lim, j, fc);
                model.kind = name;
                model.feature_names = d.feature_names;

                char row[256];
                std::snprintf(row, sizeof row, "%s,%s,%s,%d,%d,%s,%d,%s,%s,%d,%s\n",
                              family_tag(task.family), name.c_str(), rep.method.c_str(), j,
                              rep.type1_count, format_double(rep.type1_err).c_str(),
                              rep.type2_count, format_double(rep.type2_err).c_str(),
                              format_double(rep.objective).c_str(), rep.iterations,
                              format_double(cfg.deterministic ? 0.0 : rep.wall_seconds).c_str());
                results[ti].rows += row;
                results[ti].files.emplace_back(name + "_j" + std::to_string(j) + ".json",
                                               model);
                prev = std::move(model);
                has_prev = true;
            }
        });
    run_jobs(jobs, resolve_threads(cfg));

    std::string report =
        "family,instance,method,j,type1_count,type1_err,type2_count,type2_err,"
        "objective,iterations,wall_seconds\n";
    int written = 0;
    for (const Fitted& r : results) {
        report += r.rows;
        for (const auto& [name, model] : r.files) {
            save_surrogate(model, join_path(sdir, name));
            ++written;
        }
    }
    const std::string report_path = join_path(cfg.out_dir, "fit_report.csv");
    write_file(report_path, report);
    std::printf("wrote %d surrogates under %s\n", written, sdir.c_str());
    std::printf("wrote %s\n", report_path.c_str());
    return 0;
}

int cmd_solve(const StudyConfig& cfg) {
    const std::unique_ptr<BuiltStudy> st = build_study(cfg);
    const BnbResult r = solve_mip(st->model.mip, make_bnb(cfg));
    const UcSolution sol = interpret_solution(st->model, r);

    ensure_dir(cfg.out_dir);
    const std::string sol_path = join_path(cfg.out_dir, "solution.json");
    write_file(sol_path, serialize_solution(st->net, sol));

    std::string csv = "case,status,objective,bound,gap,nodes,solves,wall_seconds\n";
    csv += sol.case_name + ',' + sol.status + ',';
    if (sol.feasible)
        csv += format_double(sol.objective) + ',' + format_double(sol.bound) + ',' +
               format_double(sol.gap);
    else
        csv += ",,";
    csv += ',' + std::to_string(sol.nodes) + ',' + std::to_string(sol.solves) + ',' +
           format_double(sol.wall_seconds) + '\n';
    write_file(join_path(cfg.out_dir, "cost_summary.csv"), csv);

    if (r.status == BnbStatus::Infeasible) {
        std::printf("infeasible; wrote %s\n", sol_path.c_str());
        return 3;
    }
    if (!r.found)
        throw SolverError(std::string("solve: search ended without a schedule (") +
                          to_string(r.status) + ")");
    std::printf("status %s objective %s gap %s; wrote %s\n", sol.status.c_str(),
                format_double(sol.objective).c_str(), format_double(sol.gap).c_str(),
                sol_path.c_str());
    return 0;
}

int cmd_assess(const StudyConfig& cfg) {
    const NetworkCase net = load_case(require_case(cfg));
    const std::string sol_path = cfg.solution_path.empty()
                                     ? join_path(cfg.out_dir, "solution.json")
                                     : cfg.solution_path;
    const UcSolution sol = parse_solution(read_file(sol_path), net);
    if (!sol.feasible || sol.states.empty())
        throw ValidationError("assess: '" + sol_path + "' carries no schedule");

    const ScenarioTree tree = cfg.tree_path.empty() ? single_chain(int(sol.commit.size()))
                                                    : load_tree(cfg.tree_path);
    if (tree.n_nodes() != int(sol.states.size()))
        throw ValidationError("assess: solution has " + std::to_string(sol.states.size()) +
                              " states but the tree has " + std::to_string(tree.n_nodes()) +
                              " nodes");
    std::vector<OperatingPoint> points;
    for (std::size_t n = 0; n < sol.states.size(); ++n) {
        const NodeState& state = sol.states[n];
        const TreeNode& node = tree.nodes[n];
        if (state.id != node.id || state.t != node.t)
            throw ValidationError("assess: solution states do not match the scenario tree");
        OperatingPoint pt;
        pt.x.assign(sol.commit[std::size_t(state.t)].begin(),
                    sol.commit[std::size_t(state.t)].end());
        pt.p = state.p;
        pt.q = state.q;
        pt.R = state.R;
        pt.p_w = state.pw;
        pt.demand_p = net.total_load_p(state.t) * node.demand_scale;
        pt.si_on = cfg.si_on;
        pt.q_support_on = cfg.q_support_on;
        points.push_back(std::move(pt));
    }

    const ViolationRates rates = assess_violations(net, points, cfg.limits);
    std::string csv = "family,rate,states\n";
    for (StabFamily f : kFamilies)
        csv += std::string(family_tag(f)) + ',' + format_double(rates.rate(f)) + ',' +
               std::to_string(rates.hours) + '\n';
    ensure_dir(cfg.out_dir);
    const std::string path = join_path(cfg.out_dir, "violation_rates.csv");
    write_file(path, csv);
    std::printf("wrote %s (%d states)\n", path.c_str(), rates.hours);
    return 0;
}

int cmd_sweep(const StudyConfig& cfg) {
    const NetworkCase net = load_case(require_case(cfg));
    std::vector<StabFamily> fams =
        cfg.stab.empty() ? std::vector<StabFamily>(kFamilies.begin(), kFamilies.end())
                         : cfg.stab;

    SweepGrid grid = cfg.grid;
    if (!(grid.sg_max > grid.sg_min)) {
        double sg_total = 0.0;
        for (const auto& g : net.generators) sg_total += g.p_max;
        grid.sg_min = 0.0;
        grid.sg_max = 1.5 * sg_total;
    }
    if (!(grid.gfl_max > grid.gfl_min)) {
        double gfl_total = 0.0;
        for (const auto& w : net.ibrs)
            if (w.kind == IbrKind::GridFollowing) gfl_total += w.p_capacity;
        grid.gfl_min = 0.0;
        grid.gfl_max = 1.5 * gfl_total;
    }

    // the containment check needs these two regardless of the selection
    std::vector<StabFamily> swept = fams;
    if (cfg.check_containment)
        for (StabFamily f : {StabFamily::SmallSignal, StabFamily::Equilibrium})
            if (std::find(swept.begin(), swept.end(), f) == swept.end())
                swept.push_back(f);

    std::vector<std::vector<BoundaryPoint>> curves(swept.size());
    std::vector<std::function<void()>> jobs;
    for (std::size_t i = 0; i < swept.size(); ++i)
        jobs.push_back([&, i] { curves[i] = sweep_boundary(net, swept[i], grid, cfg.limits); });
    run_jobs(jobs, resolve_threads(cfg));

    std::string csv = "family,gfl_capacity,sg_threshold,open\n";
    for (std::size_t i = 0; i < swept.size(); ++i) {
        if (std::find(fams.begin(), fams.end(), swept[i]) == fams.end()) continue;
        for (const BoundaryPoint& bp : curves[i]) {
            csv += std::string(family_tag(swept[i])) + ',' + format_double(bp.gfl_capacity) +
                   ',';
            if (!bp.open) csv += format_double(bp.sg_capacity);
            csv += bp.open ? ",1\n" : ",0\n";
        }
    }
    ensure_dir(cfg.out_dir);
    const std::string path = join_path(cfg.out_dir, "boundary.csv");
    write_file(path, csv);
    std::printf("wrote %s\n", path.c_str());

    if (!cfg.check_containment) return 0;

    const auto& sss = curves[std::size_t(
        std::find(swept.begin(), swept.end(), StabFamily::SmallSignal) - swept.begin())];
    const auto& eq = curves[std::size_t(
        std::find(swept.begin(), swept.end(), StabFamily::Equilibrium) - swept.begin())];
    std::string check = "gfl_capacity,eq_threshold,sss_threshold,contained\n";
    int violations = 0;
    for (std::size_t k = 0; k < eq.size(); ++k) {
        // equilibrium is contained when it never demands more synchronous
        // capacity than small-signal does at the same grid-following level
        const bool ok = eq[k].open || (!sss[k].open && eq[k].sg_capacity <=
                                                           sss[k].sg_capacity + 1e-9);
        if (!ok) ++violations;
        check += format_double(eq[k].gfl_capacity) + ',';
        if (!eq[k].open) check += format_double(eq[k].sg_capacity);
        check += ',';
        if (!sss[k].open) check += format_double(sss[k].sg_capacity);
        check += ok ? ",1\n" : ",0\n";
    }
    const std::string check_path = join_path(cfg.out_dir, "containment.csv");
    write_file(check_path, check);
    std::printf("wrote %s\n", check_path.c_str());
    if (violations > 0)
        throw ValidationError("sweep: equilibrium boundary escapes the small-signal "
                              "region at " +
                              std::to_string(violations) + " grid columns");
    std::printf("containment holds at all %d grid columns\n", int(eq.size()));
    return 0;
}

int cmd_price(const StudyConfig& cfg) {
    const std::unique_ptr<BuiltStudy> st = build_study(cfg);
    const BnbConfig bnb = make_bnb(cfg);
    const BnbResult base = solve_mip(st->model.mip, bnb);
    if (base.status == BnbStatus::Infeasible) {
        std::printf("base schedule infeasible; nothing to price\n");
        return 3;
    }
    if (!base.found)
        throw SolverError(std::string("price: base solve ended without a schedule (") +
                          to_string(base.status) + ")");

    PricingConfig pc;
    pc.bnb = bnb;
    pc.threads = resolve_threads(cfg);
    pc.deterministic = cfg.deterministic;
    pc.per_hour = cfg.per_hour;
    const PriceReport rep = price_all(st->model, base, pc);

    ensure_dir(cfg.out_dir);
    const UcSolution sol = interpret_solution(st->model, base);
    write_file(join_path(cfg.out_dir, "solution.json"), serialize_solution(st->net, sol));
    const std::string path = join_path(cfg.out_dir, "prices.csv");
    write_file(path, serialize_price_csv(rep));
    std::printf("priced %d entries at base objective %s; wrote %s\n",
                int(rep.entries.size()), format_double(rep.f_star).c_str(), path.c_str());
    return 0;
}

}  // namespace stabsched
