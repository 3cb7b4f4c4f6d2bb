#include "stabsched/pricing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <thread>

#include "stabsched/common.hpp"

namespace stabsched {

namespace {

struct UnitRef {
    std::string id;
    int bus = 0;
};

std::vector<UnitRef> unit_refs(const NetworkCase& net) {
    std::vector<UnitRef> units;
    for (const GeneratorRecord& g : net.generators) units.push_back({g.id, g.bus});
    for (const IbrRecord& w : net.ibrs)
        if (w.kind == IbrKind::GridForming) units.push_back({w.id, w.bus});
    return units;
}

/// Runs jobs on up to `threads` workers; sequential when deterministic. The
/// first exception thrown by any job is rethrown here after all workers join.
void run_jobs(std::vector<std::function<void()>>& jobs, int threads, bool deterministic) {
    std::size_t workers = deterministic ? 1 : std::size_t(std::max(threads, 0));
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, jobs.size());
    if (workers <= 1) {
        for (auto& job : jobs) job();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t k = 0; k < workers; ++k)
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
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

PriceEntry make_entry(const UnitRef& u, int hour, double f_base, double base_gap,
                      const BnbResult& r) {
    PriceEntry e;
    e.unit = u.id;
    e.bus = u.bus;
    e.hour = hour;
    e.f_star = f_base;
    switch (r.status) {
        case BnbStatus::Optimal: e.status = "ok"; break;
        case BnbStatus::Infeasible: e.status = "indispensable"; break;
        case BnbStatus::NodeLimit: e.status = "node-limit"; break;
    }
    if (r.found) {
        e.priced = true;
        e.f_star_g = r.objective;
        e.mu = r.objective - f_base;
        e.gap_bound = std::abs(base_gap) + std::abs(r.gap());
        e.negative = e.mu < -e.gap_bound;
    }
    return e;
}

}  // namespace

std::vector<std::string> priceable_units(const NetworkCase& net) {
    std::vector<std::string> ids;
    for (const UnitRef& u : unit_refs(net)) ids.push_back(u.id);
    return ids;
}

MiConeProgram zero_unit_columns(const UcModel& model, const std::string& unit, int hour) {
    const NetworkCase& net = *model.net;
    std::vector<int> cols;
    bool known = false;
    for (std::size_t g = 0; g < net.generators.size(); ++g)
        if (net.generators[g].id == unit) {
            cols = model.stability_columns(int(g));
            known = true;
            break;
        }
    if (!known)
        for (std::size_t w = 0; w < net.ibrs.size(); ++w)
            if (net.ibrs[w].id == unit) {
                if (net.ibrs[w].kind != IbrKind::GridForming)
                    throw ValidationError("pricing: unit '" + unit +
                                          "' is grid-following and provides no priced service");
                for (int n = 0; n < model.N; ++n) cols.push_back(model.pw_col(n, int(w)));
                known = true;
                break;
            }
    if (!known) throw ValidationError("pricing: unknown unit '" + unit + "'");

    MiConeProgram out = model.mip;
    std::vector<char> in_span(std::size_t(out.base.m()), 0);
    for (const UcModel::StabSpan& sp : model.stab_spans) {
        if (hour >= 0 && model.tree.nodes[std::size_t(sp.node)].t != hour) continue;
        for (int r = 0; r < sp.dim; ++r) in_span[std::size_t(sp.row + r)] = 1;
    }
    std::vector<char> owned(std::size_t(out.base.n), 0);
    for (int c : cols) owned[std::size_t(c)] = 1;
    for (int c = 0; c < out.base.G.outerSize(); ++c) {
        if (!owned[std::size_t(c)]) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(out.base.G, c); it; ++it)
            if (in_span[std::size_t(it.row())]) it.valueRef() = 0.0;
    }
    out.base.G.prune(0.0);
    return out;
}

PriceReport price_all(const UcModel& model, const BnbResult& base, const PricingConfig& cfg) {
    if (!base.found)
        throw ValidationError("pricing: the base schedule has no incumbent to price against");

    PriceReport rep;
    rep.f_star = base.objective;
    rep.base_status = to_string(base.status);
    rep.config = cfg;

    BnbConfig bnb = cfg.bnb;
    bnb.deterministic = bnb.deterministic || cfg.deterministic;

    const std::vector<UnitRef> units = unit_refs(*model.net);
    std::vector<std::function<void()>> jobs;

    if (!cfg.per_hour) {
        rep.entries.resize(units.size());
        for (std::size_t i = 0; i < units.size(); ++i)
            jobs.push_back([&, i] {
                MiConeProgram prog = zero_unit_columns(model, units[i].id);
                const BnbResult r = solve_mip(prog, bnb);
                rep.entries[i] = make_entry(units[i], -1, base.objective, base.gap(), r);
            });
        run_jobs(jobs, cfg.threads, cfg.deterministic);
        return rep;
    }

    // per-hour decomposition: commitments outside the priced stage are pinned
    // to the base pattern, so every hourly difference is taken around the
    // same schedule
    std::vector<int> stage_of(model.mip.binaries.size(), 0);
    {
        std::vector<int> col_stage(std::size_t(model.mip.base.n), -1);
        for (int t = 0; t < model.T; ++t)
            for (int g = 0; g < model.ng; ++g) col_stage[std::size_t(model.x_col(t, g))] = t;
        for (std::size_t i = 0; i < model.mip.binaries.size(); ++i)
            stage_of[i] = col_stage[std::size_t(model.mip.binaries[i].col)];
    }
    auto pin_outside = [&](MiConeProgram& prog, int t) {
        for (std::size_t i = 0; i < prog.binaries.size(); ++i) {
            if (stage_of[i] == t) continue;
            const double v = double(base.pattern[i]);
            prog.base.h[prog.binaries[i].lb_row] = -v;
            prog.base.h[prog.binaries[i].ub_row] = v;
        }
    };

    std::vector<BnbResult> hour_base(std::size_t(model.T));
    for (int t = 0; t < model.T; ++t)
        jobs.push_back([&, t] {
            MiConeProgram prog = model.mip;
            pin_outside(prog, t);
            hour_base[std::size_t(t)] = solve_mip(prog, bnb);
            if (!hour_base[std::size_t(t)].found)
                throw SolverError("pricing: hourly base re-solve lost the base schedule at stage " +
                                  std::to_string(t));
        });
    run_jobs(jobs, cfg.threads, cfg.deterministic);

    jobs.clear();
    rep.entries.resize(units.size() * std::size_t(model.T));
    for (std::size_t i = 0; i < units.size(); ++i)
        for (int t = 0; t < model.T; ++t)
            jobs.push_back([&, i, t] {
                MiConeProgram prog = zero_unit_columns(model, units[i].id, t);
                pin_outside(prog, t);
                const BnbResult r = solve_mip(prog, bnb);
                const BnbResult& hb = hour_base[std::size_t(t)];
                rep.entries[i * std::size_t(model.T) + std::size_t(t)] =
                    make_entry(units[i], t, hb.objective, hb.gap(), r);
            });
    run_jobs(jobs, cfg.threads, cfg.deterministic);
    return rep;
}

std::string serialize_price_csv(const PriceReport& rep) {
    std::string out = "unit,bus,hour,f_star,f_star_g,mu,gap_bound,status,warning\n";
    char buf[64];
    const auto num = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const PriceEntry& e : rep.entries) {
        out += e.unit;
        out += ',';
        out += std::to_string(e.bus);
        out += ',';
        out += e.hour < 0 ? std::string("all") : std::to_string(e.hour);
        out += ',';
        out += num(e.f_star);
        out += ',';
        if (e.priced) {
            out += num(e.f_star_g);
            out += ',';
            out += num(e.mu);
            out += ',';
            out += num(e.gap_bound);
        } else {
            out += ",,";
        }
        out += ',';
        out += e.status;
        out += ',';
        if (e.negative) out += "negative";
        out += '\n';
    }
    return out;
}

}  // namespace stabsched
