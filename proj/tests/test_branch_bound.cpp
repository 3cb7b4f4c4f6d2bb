#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "cone_builder.hpp"
#include "doctest.h"
#include "stabsched/branch_bound.hpp"
#include "stabsched/common.hpp"

using namespace stabsched;
using doctest::Approx;

namespace {

// Adds a 0/1 box around a variable and records the bound rows.
BinarySpec make_binary(detail::ConeBuilder& cb, int var) {
    detail::AffineRow lo;
    lo.add(var, 1.0);  // s = x
    detail::AffineRow hi;
    hi.rhs = 1.0;
    hi.add(var, -1.0);  // s = 1 - x
    BinarySpec bs;
    bs.col = var;
    bs.lb_row = cb.add_nonneg(lo);
    bs.ub_row = cb.add_nonneg(hi);
    return bs;
}

// max 10 x0 + 13 x1 + 7 x2 + 11 x3  s.t.  4 x0 + 6 x1 + 3 x2 + 5 x3 <= 10.
// The LP relaxation is fractional (greedy by ratio splits an item).
constexpr std::array<double, 4> kValue = {10.0, 13.0, 7.0, 11.0};
constexpr std::array<double, 4> kWeight = {4.0, 6.0, 3.0, 5.0};
constexpr double kCapacity = 10.0;

MiConeProgram knapsack() {
    detail::ConeBuilder cb;
    MiConeProgram mip;
    std::vector<int> xs;
    for (std::size_t i = 0; i < kValue.size(); ++i)
        xs.push_back(cb.add_var("x" + std::to_string(i), -kValue[i]));
    for (int v : xs) mip.binaries.push_back(make_binary(cb, v));
    detail::AffineRow cap;
    cap.rhs = kCapacity;
    for (std::size_t i = 0; i < kWeight.size(); ++i) cap.add(xs[i], -kWeight[i]);
    cb.add_nonneg(cap);
    mip.base = cb.finish();
    return mip;
}

// Facility-style MISOCP with a closed-form restriction value:
//   min  sum c_i x_i + |B x - t|_2
//   s.t. sum a_i x_i >= 7,  x binary
// y = B x is carried through equality rows and the norm through one SOC.
constexpr int kNx = 12;

double site_cost(int i) { return 0.7 * double(i % 5 + 1) + 0.3 * double(i % 3) + 0.001 * double(i); }
double site_cover(int i) { return double(1 + i % 4); }
double mix(int k, int i) { return 0.25 * double((k + 1) * (i + 3) % 7 - 3); }
const Eigen::Vector3d kTarget(1.0, -2.0, 0.5);

MiConeProgram facility() {
    detail::ConeBuilder cb;
    MiConeProgram mip;
    std::vector<int> xs;
    for (int i = 0; i < kNx; ++i) xs.push_back(cb.add_var("x" + std::to_string(i), site_cost(i)));
    for (int v : xs) mip.binaries.push_back(make_binary(cb, v));

    std::vector<int> ys;
    for (int k = 0; k < 3; ++k) {
        ys.push_back(cb.add_var("y" + std::to_string(k)));
        detail::AffineRow eq;  // y_k - sum B_ki x_i = 0
        eq.add(ys.back(), 1.0);
        for (int i = 0; i < kNx; ++i) eq.add(xs[std::size_t(i)], -mix(k, i));
        cb.add_eq(eq);
    }
    const int u = cb.add_var("u", 1.0);

    detail::AffineRow cover;
    cover.rhs = -7.0;
    for (int i = 0; i < kNx; ++i) cover.add(xs[std::size_t(i)], site_cover(i));
    cb.add_nonneg(cover);

    std::vector<detail::AffineRow> soc(4);
    soc[0].add(u, 1.0);
    for (int k = 0; k < 3; ++k) {
        soc[std::size_t(k) + 1].rhs = -kTarget[k];
        soc[std::size_t(k) + 1].add(ys[std::size_t(k)], 1.0);
    }
    cb.add_soc(std::move(soc));

    mip.base = cb.finish();
    return mip;
}

double facility_value(unsigned mask) {
    double cover = 0.0, cost = 0.0;
    Eigen::Vector3d y = Eigen::Vector3d::Zero();
    for (int i = 0; i < kNx; ++i) {
        if (!(mask >> i & 1u)) continue;
        cover += site_cover(i);
        cost += site_cost(i);
        for (int k = 0; k < 3; ++k) y[k] += mix(k, i);
    }
    if (cover < 7.0) return std::numeric_limits<double>::infinity();
    return cost + (y - kTarget).norm();
}

// Applies a 0/1 pattern to a copy of the program and solves it cold, exactly
// the way the search builds incumbents.
SolverResult resolve_pattern(const MiConeProgram& mip, const std::vector<int>& pat,
                             const SolverConfig& scfg = {}) {
    ConeProgram prog = mip.base;
    for (std::size_t i = 0; i < mip.binaries.size(); ++i) {
        prog.h[mip.binaries[i].lb_row] = -double(pat[i]);
        prog.h[mip.binaries[i].ub_row] = double(pat[i]);
    }
    return solve(prog, scfg);
}

}  // namespace

TEST_CASE("knapsack optimum matches 16-pattern enumeration") {
    const MiConeProgram mip = knapsack();
    mip.validate();

    double best = 0.0;
    unsigned best_mask = 0;
    for (unsigned mask = 0; mask < 16; ++mask) {
        double w = 0.0, v = 0.0;
        for (int i = 0; i < 4; ++i)
            if (mask >> i & 1u) {
                w += kWeight[std::size_t(i)];
                v += kValue[std::size_t(i)];
            }
        if (w <= kCapacity && -v < best) {
            best = -v;
            best_mask = mask;
        }
    }
    CHECK(best == -23.0);  // items 0 and 1

    const BnbResult res = solve_mip(mip);
    REQUIRE(res.status == BnbStatus::Optimal);
    REQUIRE(res.found);
    CHECK(res.objective == Approx(best).epsilon(1e-7));
    CHECK(res.gap() <= 1e-6);
    REQUIRE(res.pattern.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(res.pattern[std::size_t(i)] == int(best_mask >> i & 1u));
}

TEST_CASE("re-solving the returned pattern reproduces the incumbent bit for bit") {
    const MiConeProgram mip = knapsack();
    const BnbResult res = solve_mip(mip);
    REQUIRE(res.found);

    const SolverResult again = resolve_pattern(mip, res.pattern);
    REQUIRE(again.status == SolveStatus::Optimal);
    CHECK(again.objective == res.objective);
    CHECK((again.x - res.incumbent.x).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("facility cone program matches 4096-pattern enumeration") {
    const MiConeProgram mip = facility();
    mip.validate();

    double best = std::numeric_limits<double>::infinity();
    unsigned best_mask = 0;
    for (unsigned mask = 0; mask < (1u << kNx); ++mask) {
        const double v = facility_value(mask);
        if (v < best) {
            best = v;
            best_mask = mask;
        }
    }
    REQUIRE(std::isfinite(best));

    BnbConfig cfg;
    cfg.deterministic = true;
    const BnbResult res = solve_mip(mip, cfg);
    REQUIRE(res.status == BnbStatus::Optimal);
    CHECK(res.objective == Approx(best).epsilon(1e-6));
    for (int i = 0; i < kNx; ++i) CHECK(res.pattern[std::size_t(i)] == int(best_mask >> i & 1u));

    // the incumbent respects integrality well inside the branching tolerance
    for (int i = 0; i < kNx; ++i) {
        const double xi = res.incumbent.x[mip.binaries[std::size_t(i)].col];
        CHECK(std::abs(xi - double(res.pattern[std::size_t(i)])) <= 1e-6);
    }

    // sanity: no runaway re-exploration (a full tree would be 2^13 - 1 nodes)
    CHECK(res.nodes < (1l << 13));
    CHECK(res.solves >= res.nodes);
    CHECK(res.wall_seconds == 0.0);
}

TEST_CASE("child relaxations never undercut the parent bound") {
    const MiConeProgram mip = facility();
    const SolverResult root = solve(mip.base);
    REQUIRE(root.status == SolveStatus::Optimal);

    int ibr = -1;
    double worst = 0.0;
    for (std::size_t i = 0; i < mip.binaries.size(); ++i) {
        const double v = root.x[mip.binaries[i].col];
        const double dist = std::abs(v - std::round(v));
        if (dist > worst) {
            worst = dist;
            ibr = int(i);
        }
    }
    REQUIRE(ibr >= 0);  // the relaxation must be fractional for this to test anything
    REQUIRE(worst > 1e-6);

    for (int v = 0; v <= 1; ++v) {
        ConeProgram child = mip.base;
        child.h[mip.binaries[std::size_t(ibr)].lb_row] = -double(v);
        child.h[mip.binaries[std::size_t(ibr)].ub_row] = double(v);
        const SolverResult r = solve(child);
        REQUIRE(r.status == SolveStatus::Optimal);
        CHECK(r.objective >= root.objective - 1e-7);
    }
}

TEST_CASE("all-pattern infeasibility is reported as infeasible") {
    detail::ConeBuilder cb;
    MiConeProgram mip;
    const int x0 = cb.add_var("x0");
    const int x1 = cb.add_var("x1");
    mip.binaries.push_back(make_binary(cb, x0));
    mip.binaries.push_back(make_binary(cb, x1));
    detail::AffineRow eq;  // x0 + x1 = 1.5: feasible fractionally, never integrally
    eq.rhs = -1.5;
    eq.add(x0, 1.0);
    eq.add(x1, 1.0);
    cb.add_eq(eq);
    mip.base = cb.finish();

    const BnbResult res = solve_mip(mip);
    CHECK(res.status == BnbStatus::Infeasible);
    CHECK_FALSE(res.found);
    CHECK(res.gap() == std::numeric_limits<double>::infinity());
}

TEST_CASE("node limit stops the search and reports honest bounds") {
    const MiConeProgram mip = facility();
    BnbConfig cfg;
    cfg.max_nodes = 1;
    const BnbResult res = solve_mip(mip, cfg);
    CHECK(res.status == BnbStatus::NodeLimit);
    if (res.found) CHECK(res.bound <= res.objective);
}

TEST_CASE("search without binaries degenerates to one cone solve") {
    detail::ConeBuilder cb;
    MiConeProgram mip;
    const int t = cb.add_var("t", 1.0);
    std::vector<detail::AffineRow> soc(3);
    soc[0].add(t, 1.0);
    soc[1].rhs = 1.0;
    soc[2].rhs = 2.0;
    cb.add_soc(std::move(soc));
    mip.base = cb.finish();

    const BnbResult res = solve_mip(mip);
    REQUIRE(res.status == BnbStatus::Optimal);
    CHECK(res.found);
    CHECK(res.pattern.empty());
    CHECK(res.objective == Approx(std::sqrt(5.0)).epsilon(1e-7));
}

TEST_CASE("repeated runs are bit-identical") {
    const MiConeProgram mip = facility();
    BnbConfig cfg;
    cfg.deterministic = true;
    const BnbResult a = solve_mip(mip, cfg);
    const BnbResult b = solve_mip(mip, cfg);
    CHECK(a.objective == b.objective);
    CHECK(a.bound == b.bound);
    CHECK(a.pattern == b.pattern);
    CHECK(a.nodes == b.nodes);
    CHECK(a.solves == b.solves);
    CHECK((a.incumbent.x - b.incumbent.x).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("pattern repair hooks into the rounding heuristic only") {
    const MiConeProgram mip = knapsack();

    BnbConfig deny;
    deny.repair = [](std::vector<int>&) { return false; };
    const BnbResult blocked = solve_mip(mip, deny);

    int calls = 0;
    BnbConfig fix;
    fix.repair = [&calls](std::vector<int>& pat) {
        ++calls;
        // drop items until the hand-checked capacity holds
        double w = 0.0;
        for (std::size_t i = 0; i < pat.size(); ++i) w += pat[i] ? kWeight[i] : 0.0;
        for (std::size_t i = pat.size(); i-- > 0 && w > kCapacity;)
            if (pat[i]) {
                pat[i] = 0;
                w -= kWeight[i];
            }
        return true;
    };
    const BnbResult repaired = solve_mip(mip, fix);

    CHECK(calls > 0);
    REQUIRE(blocked.status == BnbStatus::Optimal);
    REQUIRE(repaired.status == BnbStatus::Optimal);
    CHECK(blocked.objective == Approx(-23.0).epsilon(1e-7));
    CHECK(repaired.objective == Approx(-23.0).epsilon(1e-7));
}

TEST_CASE("malformed binary specs are rejected") {
    SUBCASE("column out of range") {
        MiConeProgram mip = knapsack();
        mip.binaries[0].col = 99;
        CHECK_THROWS_AS(mip.validate(), ValidationError);
    }
    SUBCASE("column listed twice") {
        MiConeProgram mip = knapsack();
        mip.binaries[1].col = mip.binaries[0].col;
        CHECK_THROWS_AS(mip.validate(), ValidationError);
    }
    SUBCASE("bound row shared between binaries") {
        MiConeProgram mip = knapsack();
        mip.binaries[1].lb_row = mip.binaries[0].lb_row;
        CHECK_THROWS_AS(mip.validate(), ValidationError);
    }
    SUBCASE("swapped bound rows have the wrong signs") {
        MiConeProgram mip = knapsack();
        std::swap(mip.binaries[0].lb_row, mip.binaries[0].ub_row);
        CHECK_THROWS_AS(mip.validate(), ValidationError);
    }
    SUBCASE("capacity row is not a plain bound") {
        MiConeProgram mip = knapsack();
        mip.binaries[2].ub_row = mip.base.m() - 1;  // the knapsack row
        CHECK_THROWS_AS(mip.validate(), ValidationError);
    }
    SUBCASE("SOC row is not an orthant row") {
        MiConeProgram mip = facility();
        mip.binaries[0].lb_row = mip.base.m() - 4;  // first SOC row
        CHECK_THROWS_AS(mip.validate(), ValidationError);
    }
}
