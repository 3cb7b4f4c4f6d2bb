#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "doctest.h"
#include "stabsched/branch_bound.hpp"
#include "stabsched/common.hpp"
#include "stabsched/uc_model.hpp"

using namespace stabsched;
using doctest::Approx;

namespace {

GeneratorRecord make_gen(std::string id, int bus, double p_min, double p_max, double marginal,
                         double no_load = 0.0, double startup = 0.0) {
    GeneratorRecord g;
    g.id = std::move(id);
    g.bus = bus;
    g.p_min = p_min;
    g.p_max = p_max;
    g.q_min = -1.0;
    g.q_max = 1.5;
    g.marginal_cost = marginal;
    g.no_load_cost = no_load;
    g.startup_cost = startup;
    g.inertia_h = 4.0;
    return g;
}

NetworkCase one_bus_case(const std::vector<double>& load_p) {
    NetworkCase c;
    c.name = "onebus";
    c.buses.push_back({1});
    LoadProfile ld;
    ld.bus = 1;
    ld.p = load_p;
    ld.q.assign(load_p.size(), 0.0);
    c.loads.push_back(ld);
    return c;
}

// Three buses in a chain with one generator feeding two loads; the cone
// relaxation is exact on radial networks under cost minimization, which makes
// an independent AC feasibility check possible.
NetworkCase radial3() {
    NetworkCase c;
    c.name = "radial3";
    c.buses.push_back({1});
    c.buses.push_back({2});
    c.buses.push_back({3});
    BranchRecord b1;
    b1.from = 1;
    b1.to = 2;
    b1.r = 0.01;
    b1.x = 0.08;
    b1.b_sh = 0.02;
    BranchRecord b2;
    b2.from = 2;
    b2.to = 3;
    b2.r = 0.02;
    b2.x = 0.10;
    b2.b_sh = 0.02;
    c.branches = {b1, b2};
    c.generators.push_back(make_gen("G1", 1, 0.1, 2.5, 40.0, 10.0, 100.0));
    LoadProfile l2;
    l2.bus = 2;
    l2.p = {0.8};
    l2.q = {0.2};
    LoadProfile l3;
    l3.bus = 3;
    l3.p = {0.5};
    l3.q = {0.1};
    c.loads = {l2, l3};
    c.finalize();
    return c;
}

// Objective recomputed from the named solution quantities and the tariff
// fields alone; must agree with the solver's objective.
double recompute_cost(const NetworkCase& net, const ScenarioTree& tree, const UcSolution& sol) {
    const double base = net.system.base_mva;
    double cost = 0.0;
    for (std::size_t t = 0; t < sol.commit.size(); ++t)
        for (std::size_t g = 0; g < net.generators.size(); ++g)
            cost += net.generators[g].startup_cost * sol.startup[t][g];
    for (std::size_t n = 0; n < sol.states.size(); ++n) {
        const NodeState& st = sol.states[n];
        const double wn = st.prob * st.dt;
        for (std::size_t g = 0; g < net.generators.size(); ++g) {
            cost += wn * net.generators[g].no_load_cost *
                    sol.commit[std::size_t(st.t)][g];
            cost += wn * net.generators[g].marginal_cost * base * st.p[g];
        }
        for (double s : st.shed) cost += wn * net.system.shed_cost * base * s;
    }
    return cost;
}

SolverResult resolve_commit(const UcModel& md, const std::vector<int>& pat) {
    ConeProgram prog = md.mip.base;
    for (std::size_t i = 0; i < md.mip.binaries.size(); ++i) {
        prog.h[md.mip.binaries[i].lb_row] = -double(pat[i]);
        prog.h[md.mip.binaries[i].ub_row] = double(pat[i]);
    }
    return solve(prog);
}

}  // namespace

TEST_CASE("radial case: tight cones, AC-feasible state, cost identity") {
    const NetworkCase net = radial3();
    const ScenarioTree tree = single_chain(1);
    const UcModel md = build_uc(net, tree, {});

    const BnbResult res = solve_mip(md.mip);
    REQUIRE(res.status == BnbStatus::Optimal);
    const UcSolution sol = interpret_solution(md, res);
    REQUIRE(sol.feasible);
    CHECK(sol.commit[0][0] == 1);
    CHECK(std::abs(sol.states[0].shed[0]) <= 1e-7);
    CHECK(std::abs(sol.states[0].shed[1]) <= 1e-7);

    const Eigen::VectorXd& x = res.incumbent.x;

    // cone tightness: c_ij^2 + s_ij^2 = c_ii c_jj on every branch
    for (int e = 0; e < md.ne; ++e) {
        const BranchRecord& br = net.branches[std::size_t(md.branch_ids[std::size_t(e)])];
        const double cii = x[md.cii_col(0, net.bus_of(br.from))];
        const double cjj = x[md.cii_col(0, net.bus_of(br.to))];
        const double cij = x[md.cij_[std::size_t(e)]];
        const double sij = x[md.sij_[std::size_t(e)]];
        CHECK(std::abs(cij * cij + sij * sij - cii * cjj) <= 2e-6);
    }

    // recover (V, theta) and check the AC power-flow equations directly
    std::vector<double> V(3), th(3, 0.0);
    for (int b = 0; b < 3; ++b) V[std::size_t(b)] = std::sqrt(x[md.cii_col(0, b)]);
    for (int e = 0; e < md.ne; ++e) {
        const BranchRecord& br = net.branches[std::size_t(md.branch_ids[std::size_t(e)])];
        const double cij = x[md.cij_[std::size_t(e)]];
        const double sij = x[md.sij_[std::size_t(e)]];
        th[std::size_t(net.bus_of(br.to))] =
            th[std::size_t(net.bus_of(br.from))] - std::atan2(sij, cij);
    }
    std::vector<double> inj_p(3, 0.0), inj_q(3, 0.0);
    for (int e = 0; e < md.ne; ++e) {
        const BranchRecord& br = net.branches[std::size_t(md.branch_ids[std::size_t(e)])];
        const int i = net.bus_of(br.from);
        const int j = net.bus_of(br.to);
        const double zsq = br.r * br.r + br.x * br.x;
        const double g = br.r / zsq;
        const double b = -br.x / zsq;
        const double tij = th[std::size_t(i)] - th[std::size_t(j)];
        const double vij = V[std::size_t(i)] * V[std::size_t(j)];
        inj_p[std::size_t(i)] += g * (V[std::size_t(i)] * V[std::size_t(i)] - vij * std::cos(tij)) -
                                 b * vij * std::sin(tij);
        inj_q[std::size_t(i)] += -b * (V[std::size_t(i)] * V[std::size_t(i)] - vij * std::cos(tij)) -
                                 g * vij * std::sin(tij) -
                                 br.b_sh / 2.0 * V[std::size_t(i)] * V[std::size_t(i)];
        inj_p[std::size_t(j)] += g * (V[std::size_t(j)] * V[std::size_t(j)] - vij * std::cos(tij)) +
                                 b * vij * std::sin(tij);
        inj_q[std::size_t(j)] += -b * (V[std::size_t(j)] * V[std::size_t(j)] - vij * std::cos(tij)) +
                                 g * vij * std::sin(tij) -
                                 br.b_sh / 2.0 * V[std::size_t(j)] * V[std::size_t(j)];
    }
    const UcSolution s2 = interpret_solution(md, res);
    std::vector<double> want_p = {s2.states[0].p[0], -0.8, -0.5};
    std::vector<double> want_q = {s2.states[0].q[0], -0.2, -0.1};
    for (int b = 0; b < 3; ++b) {
        CHECK(std::abs(inj_p[std::size_t(b)] - want_p[std::size_t(b)]) <= 2e-5);
        CHECK(std::abs(inj_q[std::size_t(b)] - want_q[std::size_t(b)]) <= 2e-5);
    }

    // generation exceeds load exactly by the line losses
    CHECK(sol.states[0].p[0] > 1.3);
    CHECK(sol.states[0].p[0] < 1.33);
    CHECK(recompute_cost(net, tree, sol) == Approx(sol.objective).epsilon(1e-6));
}

TEST_CASE("minimum up/down schedule matches the 64-pattern oracle") {
    const std::array<double, 6> load = {0.8, 0.1, 0.8, 0.8, 0.1, 0.8};
    NetworkCase net = one_bus_case({load.begin(), load.end()});
    GeneratorRecord g = make_gen("G1", 1, 0.3, 1.0, 30.0, 50.0, 700.0);
    g.min_up = 3;
    g.min_down = 2;
    net.generators.push_back(g);
    net.system.shed_cost = 40.0;
    net.finalize();
    const ScenarioTree tree = single_chain(6);
    const UcModel md = build_uc(net, tree, {});

    const double base = net.system.base_mva;
    auto pattern_ok = [&](unsigned mask) {
        int prev = 0;
        for (int t = 0; t < 6; ++t) {
            const int on = int(mask >> t & 1u);
            if (on && g.p_min > load[std::size_t(t)] + 1e-12) return false;  // overgeneration
            if (on && !prev)
                for (int s = t; s < std::min(6, t + g.min_up); ++s)
                    if (!(mask >> s & 1u)) return false;
            if (!on && prev)
                for (int s = t; s < std::min(6, t + g.min_down); ++s)
                    if (mask >> s & 1u) return false;
            prev = on;
        }
        return true;
    };
    auto pattern_cost = [&](unsigned mask) {
        double cost = 0.0;
        int prev = 0;
        for (int t = 0; t < 6; ++t) {
            const int on = int(mask >> t & 1u);
            if (on) {
                // marginal < shed cost, so the unit serves the whole load
                cost += g.no_load_cost + g.marginal_cost * base * load[std::size_t(t)];
                if (!prev) cost += g.startup_cost;
            } else {
                cost += net.system.shed_cost * base * load[std::size_t(t)];
            }
            prev = on;
        }
        return cost;
    };

    double best = std::numeric_limits<double>::infinity();
    unsigned best_mask = 0;
    for (unsigned mask = 0; mask < 64; ++mask) {
        // the compiled model must agree hour by hour with the simulation
        std::vector<int> pat(6);
        for (int t = 0; t < 6; ++t) pat[std::size_t(t)] = int(mask >> t & 1u);
        const SolverResult r = resolve_commit(md, pat);
        if (pattern_ok(mask)) {
            REQUIRE(r.status == SolveStatus::Optimal);
            CHECK(r.objective == Approx(pattern_cost(mask)).epsilon(1e-6));
            if (pattern_cost(mask) < best) {
                best = pattern_cost(mask);
                best_mask = mask;
            }
        } else {
            CHECK(r.status == SolveStatus::PrimalInfeasible);
        }
    }
    CHECK(best_mask == 0b100000u);  // only the last hour is worth committing

    const BnbResult res = solve_mip(md.mip);
    REQUIRE(res.status == BnbStatus::Optimal);
    CHECK(res.objective == Approx(best).epsilon(1e-6));
    for (int t = 0; t < 6; ++t)
        CHECK(res.pattern[std::size_t(t)] == int(best_mask >> t & 1u));

    const UcSolution sol = interpret_solution(md, res);
    CHECK(recompute_cost(net, tree, sol) == Approx(sol.objective).epsilon(1e-6));
    for (int t = 0; t < 5; ++t) {  // off hours carry no dispatch
        CHECK(std::abs(sol.states[std::size_t(t)].p[0]) <= 1e-7);
        CHECK(std::abs(sol.states[std::size_t(t)].q[0]) <= 1e-7);
        CHECK(std::abs(sol.states[std::size_t(t)].R[0]) <= 1e-7);
    }
}

TEST_CASE("startup indicators are the exact commitment edges") {
    NetworkCase net = one_bus_case({0.5, 0.5, 0.5});
    net.generators.push_back(make_gen("G1", 1, 0.1, 1.0, 30.0));
    net.system.shed_cost = 100.0;
    net.finalize();
    const UcModel md = build_uc(net, single_chain(3), {});

    const std::vector<int> pat = {0, 1, 1};
    const SolverResult r = resolve_commit(md, pat);
    REQUIRE(r.status == SolveStatus::Optimal);
    BnbResult shim;
    shim.status = BnbStatus::Optimal;
    shim.found = true;
    shim.objective = r.objective;
    shim.bound = r.objective;
    shim.pattern = pat;
    shim.incumbent = r;
    const UcSolution sol = interpret_solution(md, shim);
    CHECK(sol.commit == std::vector<std::vector<int>>{{0}, {1}, {1}});
    CHECK(sol.startup == std::vector<std::vector<int>>{{0}, {1}, {0}});
}

TEST_CASE("ramp limits shape startup, climbing, and shutdown") {
    SUBCASE("startup hour is capped and later hours climb at the ramp rate") {
        NetworkCase net = one_bus_case({0.25, 0.7});
        GeneratorRecord g = make_gen("G1", 1, 0.05, 1.0, 30.0);
        g.ramp_up = 0.3;
        g.ramp_down = 0.3;
        net.generators.push_back(g);
        net.system.shed_cost = 500.0;
        net.finalize();
        const UcModel md = build_uc(net, single_chain(2), {});
        const BnbResult res = solve_mip(md.mip);
        REQUIRE(res.status == BnbStatus::Optimal);
        const UcSolution sol = interpret_solution(md, res);
        REQUIRE(sol.commit == std::vector<std::vector<int>>{{1}, {1}});
        CHECK(sol.states[0].p[0] == Approx(0.25).epsilon(1e-5));
        // hour 1 is ramp-bound at 0.25 + 0.3; the remainder is shed
        CHECK(sol.states[1].p[0] == Approx(0.55).epsilon(1e-5));
        CHECK(sol.states[1].shed[0] == Approx(0.15).epsilon(1e-4));
    }
    SUBCASE("shutdown is limited to the single-hour ramp") {
        NetworkCase net = one_bus_case({0.5, 0.0});
        GeneratorRecord g = make_gen("G1", 1, 0.05, 1.0, 30.0);
        g.ramp_up = 0.8;
        g.ramp_down = 0.3;
        net.generators.push_back(g);
        net.system.shed_cost = 500.0;
        net.finalize();
        const UcModel md = build_uc(net, single_chain(2), {});
        const BnbResult res = solve_mip(md.mip);
        REQUIRE(res.status == BnbStatus::Optimal);
        const UcSolution sol = interpret_solution(md, res);
        REQUIRE(sol.commit == std::vector<std::vector<int>>{{1}, {0}});
        // hour 0 output must be low enough to shut down afterwards
        CHECK(sol.states[0].p[0] == Approx(0.3).epsilon(1e-4));
        CHECK(sol.states[0].shed[0] == Approx(0.2).epsilon(1e-4));
    }
}

TEST_CASE("forked tree: shared commitment, scenario-specific dispatch") {
    NetworkCase net = one_bus_case({0.6, 0.8});
    net.generators.push_back(make_gen("G1", 1, 0.1, 1.5, 35.0, 20.0, 50.0));
    IbrRecord w;
    w.id = "W1";
    w.bus = 1;
    w.p_capacity = 0.3;
    w.i_max_fault = 0.36;
    w.cf = {0.5, 0.5};
    net.ibrs.push_back(w);
    net.finalize();

    ScenarioTree tree;
    tree.nodes.push_back({"root", -1, 0, 1.0, 1.0, 1.0, 1.0});
    tree.nodes.push_back({"lo", 0, 1, 0.4, 1.0, 0.6, 1.2});
    tree.nodes.push_back({"hi", 0, 1, 0.6, 1.0, 1.4, 0.4});
    const UcModel md = build_uc(net, tree, {});

    const BnbResult res = solve_mip(md.mip);
    REQUIRE(res.status == BnbStatus::Optimal);
    const UcSolution sol = interpret_solution(md, res);
    REQUIRE(sol.feasible);
    REQUIRE(sol.commit.size() == 2);  // stages, not nodes
    CHECK(sol.states.size() == 3);

    // scenario dispatch differs while the commitment row is common
    CHECK(sol.states[1].p[0] + sol.states[1].pw[0] == Approx(0.6 * 0.8).epsilon(1e-4));
    CHECK(sol.states[2].p[0] + sol.states[2].pw[0] == Approx(0.8 * 1.4).epsilon(1e-4));
    CHECK(sol.states[1].p[0] != sol.states[2].p[0]);

    // wind is capped by availability, scenario scale, and nameplate
    CHECK(sol.states[1].pw[0] <= 0.5 * 1.2 * 0.3 + 1e-9);
    CHECK(sol.states[2].pw[0] <= 0.5 * 0.4 * 0.3 + 1e-9);

    CHECK(recompute_cost(net, tree, sol) == Approx(sol.objective).epsilon(1e-6));

    const OperatingPoint pt = operating_point(md, sol, 2);
    CHECK(pt.x[0] == 1.0);
    CHECK(pt.p[0] == sol.states[2].p[0]);
    CHECK(pt.p_w[0] == sol.states[2].pw[0]);
    CHECK(pt.demand_p == Approx(0.8 * 1.4));
}

TEST_CASE("attached surrogates bind the schedule") {
    NetworkCase net = one_bus_case({0.6});
    net.generators.push_back(make_gen("G1", 1, 0.0, 1.0, 30.0, 5.0));
    net.generators.push_back(make_gen("G2", 1, 0.0, 1.0, 60.0, 5.0));
    net.finalize();
    const ScenarioTree tree = single_chain(1);

    const BnbResult plain = solve_mip(build_uc(net, tree, {}).mip);
    REQUIRE(plain.status == BnbStatus::Optimal);

    // affine rule on commitments: x_G1 + x_G2 >= 1.5, i.e. both units on
    AttachedSurrogate both;
    both.where = {StabFamily::Frequency, -1};
    both.model.kind = "fs";
    both.model.j = 0;
    both.model.feature_names = {"x:G1", "x:G2"};
    both.model.A.resize(0, 2);
    both.model.b.resize(0);
    both.model.c = Eigen::Vector2d(1.0, 1.0);
    both.model.d = 0.0;
    both.model.g_lim = 1.5;

    // cone rule on dispatch: 0.25 (x_G1 + x_G2) >= |(p_G1, p_G2) - (0.5, 0.5)|
    AttachedSurrogate ball;
    ball.where = {StabFamily::ShortCircuit, 1};
    ball.model.kind = "scc_bus1";
    ball.model.j = 2;
    ball.model.feature_names = {"p:G1", "p:G2", "x:G1", "x:G2"};
    ball.model.A.setZero(2, 4);
    ball.model.A(0, 0) = 1.0;
    ball.model.A(1, 1) = 1.0;
    ball.model.b = Eigen::Vector2d(-0.5, -0.5);
    ball.model.c.setZero(4);
    ball.model.c[2] = 0.25;
    ball.model.c[3] = 0.25;
    ball.model.d = 0.0;
    ball.model.g_lim = 0.0;

    const UcModel md = build_uc(net, tree, {both, ball});
    CHECK(md.stab_spans.size() == 2);
    const BnbResult res = solve_mip(md.mip);
    REQUIRE(res.status == BnbStatus::Optimal);
    const UcSolution sol = interpret_solution(md, res);

    CHECK(sol.commit == std::vector<std::vector<int>>{{1, 1}});
    CHECK(res.objective >= plain.objective + 1.0);  // the rules cost real money

    // the enforced margins hold at the exported operating point
    const OperatingPoint pt = operating_point(md, sol, 0);
    const Eigen::Vector4d phi(pt.p[0], pt.p[1], pt.x[0], pt.x[1]);
    CHECK(ball.model.eval(phi) >= ball.model.g_lim - 1e-6);
    CHECK(pt.x[0] + pt.x[1] >= both.model.g_lim - 1e-9);

    // dispatch sits on the ball boundary: cheaper unit carries what it can
    const double dist = std::hypot(pt.p[0] - 0.5, pt.p[1] - 0.5);
    CHECK(dist <= 0.5 + 1e-6);
    CHECK(pt.p[0] + pt.p[1] == Approx(0.6).epsilon(1e-5));
    CHECK(pt.p[0] > pt.p[1]);
}

TEST_CASE("stability columns cover commitment, dispatch, and reserve") {
    NetworkCase net = one_bus_case({0.5, 0.5});
    net.generators.push_back(make_gen("G1", 1, 0.1, 1.0, 30.0));
    net.generators.push_back(make_gen("G2", 1, 0.1, 1.0, 40.0));
    net.finalize();
    const UcModel md = build_uc(net, single_chain(2), {});

    const std::vector<int> cols = md.stability_columns(1);
    CHECK(cols.size() == std::size_t(md.T + 2 * md.N));
    for (int t = 0; t < md.T; ++t)
        CHECK(std::count(cols.begin(), cols.end(), md.x_col(t, 1)) == 1);
    for (int n = 0; n < md.N; ++n) {
        CHECK(std::count(cols.begin(), cols.end(), md.p_col(n, 1)) == 1);
        CHECK(std::count(cols.begin(), cols.end(), md.r_col(n, 1)) == 1);
        CHECK(std::count(cols.begin(), cols.end(), md.q_col(n, 1)) == 0);
    }
}

TEST_CASE("solution files round-trip byte for byte") {
    NetworkCase net = one_bus_case({0.6, 0.8});
    net.generators.push_back(make_gen("G1", 1, 0.1, 1.5, 35.0, 20.0, 50.0));
    net.finalize();
    const ScenarioTree tree = single_chain(2);
    const UcModel md = build_uc(net, tree, {});
    const UcSolution sol = interpret_solution(md, solve_mip(md.mip));
    REQUIRE(sol.feasible);

    const std::string text = serialize_solution(net, sol);
    const UcSolution back = parse_solution(text, net);
    CHECK(serialize_solution(net, back) == text);
    CHECK(back.objective == sol.objective);
    CHECK(back.commit == sol.commit);
    CHECK(back.states.size() == sol.states.size());
    CHECK(back.states[1].p[0] == sol.states[1].p[0]);

    SUBCASE("junk text is rejected") {
        CHECK_THROWS_AS(parse_solution("not json", net), ValidationError);
    }
    SUBCASE("missing fields are rejected") {
        nlohmann::json j = nlohmann::json::parse(text);
        j.erase("gap");
        CHECK_THROWS_AS(parse_solution(j.dump(), net), ValidationError);
    }
    SUBCASE("non-binary commitment is rejected") {
        nlohmann::json j = nlohmann::json::parse(text);
        j["commit"]["G1"][0] = 2;
        CHECK_THROWS_AS(parse_solution(j.dump(), net), ValidationError);
    }
    SUBCASE("ragged commitment is rejected") {
        nlohmann::json j = nlohmann::json::parse(text);
        j["startup"]["G1"].push_back(0);
        CHECK_THROWS_AS(parse_solution(j.dump(), net), ValidationError);
    }
    SUBCASE("missing generator key is rejected") {
        nlohmann::json j = nlohmann::json::parse(text);
        j["states"][0]["p"].erase("G1");
        CHECK_THROWS_AS(parse_solution(j.dump(), net), ValidationError);
    }
}

TEST_CASE("model compilation rejects inconsistent inputs") {
    NetworkCase net = one_bus_case({0.5});
    net.generators.push_back(make_gen("G1", 1, 0.1, 1.0, 30.0));
    net.finalize();

    SUBCASE("tree longer than the load data") {
        CHECK_THROWS_AS(build_uc(net, single_chain(2), {}), ValidationError);
    }
    SUBCASE("unknown generator in a feature") {
        AttachedSurrogate s;
        s.where = {StabFamily::Frequency, -1};
        s.model.kind = "fs";
        s.model.j = 0;
        s.model.feature_names = {"x:NOPE"};
        s.model.A.resize(0, 1);
        s.model.b.resize(0);
        s.model.c = Eigen::VectorXd::Ones(1);
        s.model.d = 0.0;
        s.model.g_lim = 0.5;
        try {
            build_uc(net, single_chain(1), {s});
            FAIL("expected a validation error");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("unknown generator") != std::string::npos);
        }
    }
    SUBCASE("unresolvable feature name") {
        AttachedSurrogate s;
        s.where = {StabFamily::Frequency, -1};
        s.model.kind = "fs";
        s.model.j = 0;
        s.model.feature_names = {"volts:G1"};
        s.model.A.resize(0, 1);
        s.model.b.resize(0);
        s.model.c = Eigen::VectorXd::Ones(1);
        s.model.d = 0.0;
        s.model.g_lim = 0.5;
        try {
            build_uc(net, single_chain(1), {s});
            FAIL("expected a validation error");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("unresolvable") != std::string::npos);
        }
    }
}
