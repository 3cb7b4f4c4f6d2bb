#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "stabsched/common.hpp"
#include "stabsched/pricing.hpp"

using namespace stabsched;
using doctest::Approx;

namespace {

GeneratorRecord make_gen(std::string id, double p_max, double marginal, double no_load = 0.0) {
    GeneratorRecord g;
    g.id = std::move(id);
    g.bus = 1;
    g.p_min = 0.0;
    g.p_max = p_max;
    g.q_min = -1.0;
    g.q_max = 1.0;
    g.marginal_cost = marginal;
    g.no_load_cost = no_load;
    g.inertia_h = 4.0;
    return g;
}

NetworkCase one_bus_case(const std::vector<double>& load_p) {
    NetworkCase c;
    c.name = "onebus";
    // keep the cost scales close together so price differences come out sharp
    c.system.shed_cost = 300.0;
    c.buses.push_back({1});
    LoadProfile ld;
    ld.bus = 1;
    ld.p = load_p;
    ld.q.assign(load_p.size(), 0.0);
    c.loads.push_back(ld);
    return c;
}

AttachedSurrogate commit_rule(double g_lim) {
    AttachedSurrogate s;
    s.where = {StabFamily::Frequency, -1};
    s.model.kind = "fs";
    s.model.j = 0;
    s.model.feature_names = {"x:G1", "x:G2"};
    s.model.A.resize(0, 2);
    s.model.b.resize(0);
    s.model.c = Eigen::Vector2d(1.0, 1.0);
    s.model.d = 0.0;
    s.model.g_lim = g_lim;
    return s;
}

// a ceiling on G1's dispatch: -p_G1 >= -0.5
AttachedSurrogate dispatch_ceiling() {
    AttachedSurrogate s;
    s.where = {StabFamily::VoltageStability, 1};
    s.model.kind = "vs_bus1";
    s.model.j = 0;
    s.model.feature_names = {"p:G1"};
    s.model.A.resize(0, 1);
    s.model.b.resize(0);
    s.model.c = Eigen::VectorXd::Constant(1, -1.0);
    s.model.d = 0.0;
    s.model.g_lim = -0.5;
    return s;
}

std::vector<std::string> csv_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos) {
            out.push_back(line.substr(pos));
            return out;
        }
        out.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
}

}  // namespace

TEST_CASE("commitment rule prices: hand-computed difference of optima") {
    NetworkCase net = one_bus_case({0.6});
    net.generators.push_back(make_gen("G1", 1.0, 30.0, 5.0));
    net.generators.push_back(make_gen("G2", 1.0, 60.0, 5.0));
    net.finalize();
    // at least one unit must be committed; G1 alone is the cheap way
    const UcModel md = build_uc(net, single_chain(1), {commit_rule(0.5)});

    const BnbResult base = solve_mip(md.mip);
    REQUIRE(base.status == BnbStatus::Optimal);
    CHECK(base.objective == Approx(1805.0).epsilon(1e-8));  // no-load + 0.6 pu at 30/MWh

    PricingConfig cfg;
    cfg.deterministic = true;
    const PriceReport rep = price_all(md, base, cfg);
    CHECK(rep.f_star == base.objective);
    CHECK(rep.base_status == "optimal");
    REQUIRE(rep.entries.size() == 2);

    // without G1's contribution the rule forces G2 on: one extra no-load cost
    const PriceEntry& e1 = rep.entries[0];
    CHECK(e1.unit == "G1");
    CHECK(e1.status == "ok");
    REQUIRE(e1.priced);
    CHECK(e1.mu == Approx(5.0).epsilon(1e-6));
    CHECK(e1.mu == e1.f_star_g - e1.f_star);  // stored identity, no recomputation
    CHECK(e1.hour == -1);
    CHECK_FALSE(e1.negative);

    // G2 was never needed: zeroing it leaves the optimum where it was
    const PriceEntry& e2 = rep.entries[1];
    CHECK(e2.unit == "G2");
    REQUIRE(e2.priced);
    CHECK(std::abs(e2.mu) <= 5e-6);
    CHECK(e2.gap_bound <= 5e-6);
}

TEST_CASE("a unit whose removal kills feasibility is indispensable") {
    NetworkCase net = one_bus_case({0.6});
    net.generators.push_back(make_gen("G1", 1.0, 30.0, 5.0));
    net.generators.push_back(make_gen("G2", 1.0, 60.0, 5.0));
    net.finalize();
    // both units are required: x1 + x2 >= 1.5
    const UcModel md = build_uc(net, single_chain(1), {commit_rule(1.5)});

    const BnbResult base = solve_mip(md.mip);
    REQUIRE(base.status == BnbStatus::Optimal);
    CHECK(base.objective == Approx(1810.0).epsilon(1e-8));

    PricingConfig cfg;
    cfg.deterministic = true;
    const PriceReport rep = price_all(md, base, cfg);
    REQUIRE(rep.entries.size() == 2);
    for (const PriceEntry& e : rep.entries) {
        CHECK(e.status == "indispensable");
        CHECK_FALSE(e.priced);
        CHECK(e.f_star == base.objective);  // the base side is still reported
    }
}

TEST_CASE("zeroing columns is surgical and idempotent") {
    NetworkCase net = one_bus_case({0.6});
    net.generators.push_back(make_gen("G1", 1.0, 30.0, 5.0));
    net.generators.push_back(make_gen("G2", 1.0, 60.0, 5.0));
    net.finalize();
    const UcModel md = build_uc(net, single_chain(1), {commit_rule(0.5)});

    const MiConeProgram once = zero_unit_columns(md, "G1");
    const MiConeProgram twice = zero_unit_columns(md, "G1");  // same input, same output
    CHECK((once.base.G - twice.base.G).norm() == 0.0);
    CHECK(once.base.G.nonZeros() == twice.base.G.nonZeros());

    // everything except surrogate rows of G is bitwise untouched
    CHECK((once.base.A - md.mip.base.A).norm() == 0.0);
    CHECK(once.base.h == md.mip.base.h);
    CHECK(once.base.c == md.mip.base.c);
    REQUIRE(md.stab_spans.size() == 1);
    const int span_row = md.stab_spans[0].row;
    Eigen::MatrixXd dg = Eigen::MatrixXd(once.base.G) - Eigen::MatrixXd(md.mip.base.G);
    dg.row(span_row).setZero();
    CHECK(dg.norm() == 0.0);

    // the span row lost exactly G1's commitment coefficient
    CHECK(Eigen::MatrixXd(once.base.G)(span_row, md.x_col(0, 0)) == 0.0);
    CHECK(Eigen::MatrixXd(once.base.G)(span_row, md.x_col(0, 1)) != 0.0);

    CHECK_THROWS_AS(zero_unit_columns(md, "NOPE"), ValidationError);
}

TEST_CASE("grid-forming IBRs are priced, grid-following are not") {
    NetworkCase net = one_bus_case({0.6});
    net.generators.push_back(make_gen("G1", 1.0, 60.0));
    IbrRecord gfm;
    gfm.id = "W1";
    gfm.bus = 1;
    gfm.kind = IbrKind::GridForming;
    gfm.p_capacity = 0.5;
    gfm.i_max_fault = 0.6;
    gfm.cf = {1.0};
    IbrRecord gfl = gfm;
    gfl.id = "W2";
    gfl.kind = IbrKind::GridFollowing;
    gfl.p_capacity = 0.3;
    net.ibrs = {gfm, gfl};
    net.finalize();

    CHECK(priceable_units(net) == std::vector<std::string>{"G1", "W1"});
    const UcModel md = build_uc(net, single_chain(1), {});
    CHECK_THROWS_AS(zero_unit_columns(md, "W2"), ValidationError);

    // no attached surrogate binds, so every price is exactly zero: the
    // modified problems are bit-identical to the base problem
    const BnbResult base = solve_mip(md.mip);
    REQUIRE(base.status == BnbStatus::Optimal);
    PricingConfig cfg;
    cfg.deterministic = true;
    const PriceReport rep = price_all(md, base, cfg);
    REQUIRE(rep.entries.size() == 2);
    CHECK(rep.entries[0].unit == "G1");
    CHECK(rep.entries[1].unit == "W1");
    for (const PriceEntry& e : rep.entries) {
        REQUIRE(e.priced);
        CHECK(e.mu == 0.0);
        CHECK(e.status == "ok");
    }
}

TEST_CASE("per-hour decomposition and the negative-price warning") {
    NetworkCase net = one_bus_case({0.3, 0.9});
    net.generators.push_back(make_gen("G1", 1.0, 30.0));
    net.generators.push_back(make_gen("G2", 1.0, 60.0));
    net.finalize();
    // the ceiling on G1 binds only in the heavy hour
    const UcModel md = build_uc(net, single_chain(2), {dispatch_ceiling()});

    const BnbResult base = solve_mip(md.mip);
    REQUIRE(base.status == BnbStatus::Optimal);
    CHECK(base.objective == Approx(4800.0).epsilon(1e-7));

    PricingConfig cfg;
    cfg.deterministic = true;

    SUBCASE("full horizon: removing a ceiling lowers cost and is flagged") {
        const PriceReport rep = price_all(md, base, cfg);
        REQUIRE(rep.entries.size() == 2);
        CHECK(rep.entries[0].mu == Approx(-1200.0).epsilon(1e-6));
        CHECK(rep.entries[0].negative);
        CHECK(rep.entries[1].mu == 0.0);  // G1-only rule: G2's problem is bit-identical
        CHECK_FALSE(rep.entries[1].negative);
    }

    SUBCASE("hourly prices localize the binding hour") {
        cfg.per_hour = true;
        const PriceReport rep = price_all(md, base, cfg);
        REQUIRE(rep.entries.size() == 4);  // unit-major: (G1,0) (G1,1) (G2,0) (G2,1)
        CHECK(rep.entries[0].hour == 0);
        CHECK(rep.entries[1].hour == 1);
        CHECK(std::abs(rep.entries[0].mu) <= 5e-6);
        CHECK(rep.entries[1].mu == Approx(-1200.0).epsilon(1e-6));
        CHECK(rep.entries[1].negative);
        CHECK(std::abs(rep.entries[2].mu) <= 5e-6);
        CHECK(std::abs(rep.entries[3].mu) <= 5e-6);
        // hourly decomposition recovers the full-horizon price here
        CHECK(rep.entries[0].mu + rep.entries[1].mu == Approx(-1200.0).epsilon(1e-5));
        for (const PriceEntry& e : rep.entries) CHECK(e.f_star == Approx(4800.0).epsilon(1e-7));
    }

    SUBCASE("parallel re-solves match the sequential ones bitwise") {
        const PriceReport seq = price_all(md, base, cfg);
        PricingConfig par;
        par.threads = 4;
        par.bnb.deterministic = true;  // zero wall clocks; order still free
        const PriceReport parr = price_all(md, base, par);
        REQUIRE(parr.entries.size() == seq.entries.size());
        for (std::size_t i = 0; i < seq.entries.size(); ++i) {
            CHECK(parr.entries[i].unit == seq.entries[i].unit);
            CHECK(parr.entries[i].mu == seq.entries[i].mu);
            CHECK(parr.entries[i].f_star_g == seq.entries[i].f_star_g);
            CHECK(parr.entries[i].status == seq.entries[i].status);
        }
    }
}

TEST_CASE("price report CSV carries exact values and statuses") {
    NetworkCase net = one_bus_case({0.3, 0.9});
    net.generators.push_back(make_gen("G1", 1.0, 30.0));
    net.generators.push_back(make_gen("G2", 1.0, 60.0));
    net.finalize();
    const UcModel md = build_uc(net, single_chain(2), {dispatch_ceiling()});
    const BnbResult base = solve_mip(md.mip);
    REQUIRE(base.found);
    PricingConfig cfg;
    cfg.deterministic = true;
    const PriceReport rep = price_all(md, base, cfg);

    const std::string csv = serialize_price_csv(rep);
    CHECK(csv.substr(0, csv.find('\n')) ==
          "unit,bus,hour,f_star,f_star_g,mu,gap_bound,status,warning");

    std::vector<std::string> lines;
    for (std::size_t pos = 0; pos < csv.size();) {
        const std::size_t nl = csv.find('\n', pos);
        lines.push_back(csv.substr(pos, nl - pos));
        pos = nl + 1;
    }
    REQUIRE(lines.size() == 3);

    const std::vector<std::string> row = csv_fields(lines[1]);
    REQUIRE(row.size() == 9);
    CHECK(row[0] == "G1");
    CHECK(row[1] == "1");
    CHECK(row[2] == "all");
    // full-precision round trip: parsing the CSV recovers the stored doubles
    CHECK(std::strtod(row[3].c_str(), nullptr) == rep.entries[0].f_star);
    CHECK(std::strtod(row[4].c_str(), nullptr) == rep.entries[0].f_star_g);
    CHECK(std::strtod(row[5].c_str(), nullptr) == rep.entries[0].mu);
    CHECK(row[7] == "ok");
    CHECK(row[8] == "negative");

    // an unpriced unit leaves the numeric fields empty
    NetworkCase net2 = one_bus_case({0.6});
    net2.generators.push_back(make_gen("G1", 1.0, 30.0, 5.0));
    net2.generators.push_back(make_gen("G2", 1.0, 60.0, 5.0));
    net2.finalize();
    const UcModel md2 = build_uc(net2, single_chain(1), {commit_rule(1.5)});
    const BnbResult base2 = solve_mip(md2.mip);
    const PriceReport rep2 = price_all(md2, base2, cfg);
    const std::string csv2 = serialize_price_csv(rep2);
    const std::size_t first_nl = csv2.find('\n');
    const std::vector<std::string> row2 =
        csv_fields(csv2.substr(first_nl + 1, csv2.find('\n', first_nl + 1) - first_nl - 1));
    REQUIRE(row2.size() == 9);
    CHECK(row2[4].empty());
    CHECK(row2[5].empty());
    CHECK(row2[6].empty());
    CHECK(row2[7] == "indispensable");
}
