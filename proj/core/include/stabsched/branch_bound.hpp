#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stabsched/conic.hpp"

namespace stabsched {

// ============================================================================
// Branch and bound over a conic relaxation.
//
// A mixed-integer cone program is a ConeProgram plus a list of columns that
// must take 0/1 values. Each binary column carries a pair of orthant rows in
// G that encode its variable bounds; the search fixes a binary by rewriting
// the right-hand side of those two rows, so no new rows or columns are ever
// added while branching.
//
// Bound-row convention (what ConeBuilder::add_nonneg produces):
//   lb_row:  slack = x - lb,  G(lb_row, col) = -1,  h(lb_row) = -lb
//   ub_row:  slack = ub - x,  G(ub_row, col) = +1,  h(ub_row) = +ub
// Both rows must touch no other column.
// ============================================================================

struct BinarySpec {
    int col = -1;     ///< variable column in the base program
    int lb_row = -1;  ///< orthant row holding the lower bound
    int ub_row = -1;  ///< orthant row holding the upper bound
};

struct MiConeProgram {
    ConeProgram base;
    std::vector<BinarySpec> binaries;

    /// Checks the base program plus the bound-row convention above
    /// (row/column ranges, +-1 coefficients, single nonzero per bound row,
    /// no column listed twice). Throws ValidationError.
    void validate() const;
};

enum class BnbStatus {
    Optimal,     ///< incumbent proven optimal within the gap tolerances
    Infeasible,  ///< every leaf infeasible
    NodeLimit,   ///< stopped on max_nodes; incumbent may exist
};

const char* to_string(BnbStatus s);

struct BnbConfig {
    SolverConfig relax;      ///< per-node interior-point settings
    double int_tol = 1e-6;   ///< |x - round(x)| below this counts as integral
    double gap_abs = 1e-9;   ///< prune/stop when incumbent - bound <= gap_abs
    double gap_rel = 1e-9;   ///< ...or <= gap_rel * max(1, |incumbent|)
    long max_nodes = 200000;
    bool deterministic = false;  ///< zero wall-clock fields in result and log
    bool log = false;            ///< progress lines on stderr
    /// Optional repair of a rounded 0/1 pattern before the heuristic
    /// restriction solve (e.g. to restore scheduling rules). Return false to
    /// discard the candidate. Must be deterministic.
    std::function<bool(std::vector<int>&)> repair;
};

struct BnbResult {
    BnbStatus status = BnbStatus::Infeasible;
    bool found = false;          ///< an incumbent exists
    double objective = 0.0;      ///< incumbent objective; meaningless without one
    double bound = 0.0;          ///< global lower bound at termination
    std::vector<int> pattern;    ///< incumbent 0/1 values, one per BinarySpec
    SolverResult incumbent;      ///< restriction solve behind the incumbent
    long nodes = 0;              ///< relaxations processed
    long solves = 0;             ///< conic solves including heuristics
    double wall_seconds = 0.0;

    bool has_incumbent() const { return found; }
    double gap() const;  ///< incumbent - bound, +inf without an incumbent
};

/// Solves the mixed-integer cone program. Node relaxations are warm-started
/// from the parent along depth-first plunges; every incumbent comes from a
/// cold restriction solve with all binaries fixed, so re-solving the returned
/// pattern reproduces the incumbent exactly. Branching picks the most
/// fractional binary (lowest index on ties); the search plunges depth-first
/// until the first incumbent, then switches to best-bound. Throws SolverError
/// when a node relaxation fails numerically even after a cold retry, and
/// ValidationError for a malformed program.
BnbResult solve_mip(const MiConeProgram& prog, const BnbConfig& cfg = {});

}  // namespace stabsched
