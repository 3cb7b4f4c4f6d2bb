#include "stabsched/branch_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <string>
#include <utility>

#include "stabsched/common.hpp"

namespace stabsched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
    std::vector<signed char> fix;  // per binary: -1 free, otherwise 0/1
    double bound = -kInf;          // parent relaxation objective
    int depth = 0;
    long seq = 0;
    std::shared_ptr<const WarmStart> hint;  // parent iterate, shared by siblings
};

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

const char* to_string(BnbStatus s) {
    switch (s) {
        case BnbStatus::Optimal: return "optimal";
        case BnbStatus::Infeasible: return "infeasible";
        case BnbStatus::NodeLimit: return "node-limit";
    }
    return "?";
}

double BnbResult::gap() const { return found ? objective - bound : kInf; }

void MiConeProgram::validate() const {
    base.validate();
    const int l = (!base.cones.empty() && base.cones.front().tag == ConeTag::NonNegative)
                      ? base.cones.front().dim
                      : 0;
    const Eigen::SparseMatrix<double, Eigen::RowMajor> Gr(base.G);

    std::vector<char> col_used(std::size_t(base.n), 0);
    std::vector<char> row_used(std::size_t(base.m()), 0);
    for (std::size_t k = 0; k < binaries.size(); ++k) {
        const BinarySpec& bs = binaries[k];
        const std::string tag = "binary " + std::to_string(k) + ": ";
        if (bs.col < 0 || bs.col >= base.n)
            throw ValidationError(tag + "column " + std::to_string(bs.col) + " out of range");
        if (col_used[std::size_t(bs.col)]++)
            throw ValidationError(tag + "column " + std::to_string(bs.col) + " listed twice");

        auto check_row = [&](int row, double want) {
            if (row < 0 || row >= l)
                throw ValidationError(tag + "row " + std::to_string(row) +
                                      " is not an orthant row");
            if (row_used[std::size_t(row)]++)
                throw ValidationError(tag + "row " + std::to_string(row) +
                                      " shared with another bound");
            int nnz = 0;
            double coeff = 0.0;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Gr, row); it;
                 ++it) {
                ++nnz;
                if (it.col() == bs.col) coeff = it.value();
            }
            if (nnz != 1 || coeff != want)
                throw ValidationError(tag + "row " + std::to_string(row) +
                                      " is not a plain bound on column " +
                                      std::to_string(bs.col));
        };
        check_row(bs.lb_row, -1.0);
        check_row(bs.ub_row, 1.0);
    }
}

BnbResult solve_mip(const MiConeProgram& input, const BnbConfig& cfg) {
    input.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const int nb = int(input.binaries.size());

    BnbResult res;

    ConeProgram work = input.base;
    const Eigen::VectorXd h0 = input.base.h;

    auto apply_fixes = [&](const std::vector<signed char>& fix) {
        work.h = h0;
        for (int i = 0; i < nb; ++i) {
            if (fix[std::size_t(i)] < 0) continue;
            const BinarySpec& bs = input.binaries[std::size_t(i)];
            work.h[bs.lb_row] = -double(fix[std::size_t(i)]);
            work.h[bs.ub_row] = double(fix[std::size_t(i)]);
        }
    };

    // Node relaxation. One retry on numerical failure: cold when the first
    // attempt was warm, otherwise with stiffer regularization.
    auto relax_solve = [&](const std::vector<signed char>& fix, const WarmStart* hint) {
        apply_fixes(fix);
        ++res.solves;
        SolverResult r = hint ? solve_warm(work, *hint, cfg.relax) : solve(work, cfg.relax);
        if (r.status == SolveStatus::NumericalLimit || r.status == SolveStatus::IterationLimit) {
            SolverConfig retry = cfg.relax;
            if (!hint) retry.static_reg *= 100.0;
            ++res.solves;
            r = solve(work, retry);
        }
        return r;
    };

    double inc = kInf;
    auto prune_eps = [&] {
        return std::max(cfg.gap_abs, cfg.gap_rel * std::max(1.0, std::abs(inc)));
    };

    enum class Try { Improved, NotBetter, Infeasible, Failed };

    // Restriction with every binary pinned. Always cold, so the incumbent is
    // reproducible from the pattern alone.
    auto try_pattern = [&](std::vector<int> pat, bool use_repair) {
        if (use_repair && cfg.repair && !cfg.repair(pat)) return Try::Infeasible;
        if (int(pat.size()) != nb) return Try::Infeasible;
        std::vector<signed char> fix(static_cast<std::size_t>(nb));
        for (int i = 0; i < nb; ++i)
            fix[std::size_t(i)] = pat[std::size_t(i)] > 0 ? 1 : 0;
        apply_fixes(fix);
        ++res.solves;
        SolverResult r = solve(work, cfg.relax);
        if (r.status == SolveStatus::NumericalLimit || r.status == SolveStatus::IterationLimit) {
            SolverConfig retry = cfg.relax;
            retry.static_reg *= 100.0;
            ++res.solves;
            r = solve(work, retry);
        }
        if (r.status == SolveStatus::PrimalInfeasible) return Try::Infeasible;
        if (r.status != SolveStatus::Optimal) return Try::Failed;
        if (!res.found || r.objective < inc) {
            inc = r.objective;
            res.found = true;
            res.objective = r.objective;
            res.pattern.assign(std::size_t(nb), 0);
            for (int i = 0; i < nb; ++i) res.pattern[std::size_t(i)] = int(fix[std::size_t(i)]);
            res.incumbent = std::move(r);
            return Try::Improved;
        }
        return Try::NotBetter;
    };

    auto emit_log = [&] {
        if (!cfg.log) return;
        std::fprintf(stderr, "bnb nodes=%ld bound=%.9e incumbent=%.9e gap=%.3e time=%.3f\n",
                     res.nodes, res.bound, res.found ? inc : kInf,
                     res.found ? inc - res.bound : kInf,
                     cfg.deterministic ? 0.0 : elapsed_since(t0));
    };

    std::vector<Node> open;
    long seq = 0;
    {
        Node root;
        root.fix.assign(std::size_t(nb), static_cast<signed char>(-1));
        root.seq = seq++;
        open.push_back(std::move(root));
    }

    bool node_limit = false;
    bool proven = false;

    while (!open.empty()) {
        if (res.nodes >= cfg.max_nodes) {
            node_limit = true;
            break;
        }

        // Selection: plunge depth-first until an incumbent exists, then pop
        // the best bound (oldest node on ties, for determinism).
        std::size_t pick = open.size() - 1;
        if (res.found) {
            pick = 0;
            for (std::size_t i = 1; i < open.size(); ++i)
                if (open[i].bound < open[pick].bound ||
                    (open[i].bound == open[pick].bound && open[i].seq < open[pick].seq))
                    pick = i;
        }
        Node node = std::move(open[pick]);
        open.erase(open.begin() + long(pick));

        if (res.found) {
            // popped in best-bound order, so this node's bound is the global
            // lower bound right now
            res.bound = std::max(res.bound, std::min(node.bound, inc));
            if (node.bound >= inc - prune_eps()) {
                proven = true;
                break;
            }
        }

        ++res.nodes;
        SolverResult r = relax_solve(node.fix, node.hint.get());
        if (r.status == SolveStatus::PrimalInfeasible) continue;
        if (r.status == SolveStatus::DualInfeasible)
            throw SolverError("branch and bound: relaxation is unbounded");
        if (r.status != SolveStatus::Optimal)
            throw SolverError(std::string("branch and bound: node relaxation stopped with "
                                          "status ") +
                              to_string(r.status));

        const double node_bound = std::max(node.bound, r.objective);
        if (res.found && node_bound >= inc - prune_eps()) continue;

        // branching candidate: most fractional free binary, lowest index wins
        int ibr = -1;
        double worst = cfg.int_tol;
        for (int i = 0; i < nb; ++i) {
            if (node.fix[std::size_t(i)] >= 0) continue;
            const double v = r.x[input.binaries[std::size_t(i)].col];
            const double dist = std::abs(v - std::round(v));
            if (dist > worst) {
                worst = dist;
                ibr = i;
            }
        }

        auto rounded_pattern = [&] {
            std::vector<int> pat(static_cast<std::size_t>(nb));
            for (int i = 0; i < nb; ++i) {
                const signed char f = node.fix[std::size_t(i)];
                pat[std::size_t(i)] =
                    f >= 0 ? int(f)
                           : (r.x[input.binaries[std::size_t(i)].col] >= 0.5 ? 1 : 0);
            }
            return pat;
        };

        if (ibr < 0) {
            // integral relaxation: the pattern is already feasible, no repair
            if (try_pattern(rounded_pattern(), false) == Try::Failed)
                throw SolverError("branch and bound: restriction solve failed numerically");
            if (res.nodes % 50 == 0) emit_log();
            continue;
        }

        // rounding heuristic while hunting for a first incumbent
        if (!res.found && node.depth % 8 == 0) {
            try_pattern(rounded_pattern(), true);
            if (res.found && node_bound >= inc - prune_eps()) continue;
        }

        auto hint = std::make_shared<WarmStart>();
        hint->x = r.x;
        hint->y = r.y;
        hint->z = r.z;
        hint->s = r.s;
        const signed char pref =
            r.x[input.binaries[std::size_t(ibr)].col] >= 0.5 ? 1 : 0;

        Node away;
        away.fix = node.fix;
        away.fix[std::size_t(ibr)] = static_cast<signed char>(1 - pref);
        away.bound = node_bound;
        away.depth = node.depth + 1;
        away.seq = seq++;
        away.hint = hint;

        Node toward;
        toward.fix = std::move(node.fix);
        toward.fix[std::size_t(ibr)] = pref;
        toward.bound = node_bound;
        toward.depth = node.depth + 1;
        toward.seq = seq++;
        toward.hint = std::move(hint);

        open.push_back(std::move(away));
        open.push_back(std::move(toward));  // popped first while plunging

        if (res.nodes % 50 == 0) emit_log();
    }

    if (node_limit) {
        res.status = BnbStatus::NodeLimit;
        double lo = kInf;
        for (const Node& nd : open) lo = std::min(lo, nd.bound);
        res.bound = std::min(lo, res.found ? inc : kInf);
    } else if (res.found) {
        res.status = BnbStatus::Optimal;
        if (!proven) res.bound = inc;  // open set drained
    } else {
        res.status = BnbStatus::Infeasible;
        res.bound = kInf;
    }
    res.wall_seconds = cfg.deterministic ? 0.0 : elapsed_since(t0);
    emit_log();
    return res;
}

}  // namespace stabsched
