#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

namespace stabsched {

// ============================================================================
// Standard form
//
//   minimize    c'x
//   subject to  A x = b
//               G x + s = h,   s in K
//
// K is a product of one nonnegative orthant block followed by second-order
// cone blocks: K = R+^l x Q_{q1} x ... x Q_{qN}, where
// Q_q = {(t, u) in R x R^{q-1} : t >= |u|_2}. Cone dimensions must partition
// the rows of G exactly. Variable bounds are expressed as orthant rows.
// ============================================================================

enum class ConeTag { NonNegative, SecondOrder };

struct ConeBlock {
    ConeTag tag = ConeTag::NonNegative;
    int dim = 0;
};

struct ConeProgram {
    int n = 0;  ///< number of variables
    Eigen::VectorXd c;
    Eigen::SparseMatrix<double> A;  ///< p x n equality block
    Eigen::VectorXd b;
    Eigen::SparseMatrix<double> G;  ///< m x n cone block
    Eigen::VectorXd h;
    std::vector<ConeBlock> cones;
    std::vector<std::string> var_names;  ///< optional, size n when present

    int p() const { return int(A.rows()); }
    int m() const { return int(G.rows()); }

    /// Checks dimension consistency and the cone partition. Throws ValidationError.
    void validate() const;

    /// Writes the program in the plain-text debug format:
    ///   conic-program v1
    ///   n <n> p <p> m <m>
    ///   c <idx> <val>            (one line per structural nonzero)
    ///   A <row> <col> <val>
    ///   b <idx> <val>
    ///   G <row> <col> <val>
    ///   h <idx> <val>
    ///   cone nn|soc <dim>        (in slack order)
    ///   end
    /// Values are shortest round-trip decimals; indices are zero-based.
    void dump(std::ostream& os) const;
};

enum class SolveStatus {
    Optimal,
    PrimalInfeasible,  ///< certificate in (y, z)
    DualInfeasible,    ///< certificate in (x, s)
    NumericalLimit,
    IterationLimit,
};

const char* to_string(SolveStatus s);

struct SolverConfig {
    double tol_feas = 1e-8;
    double tol_gap = 1e-8;
    int max_iters = 200;
    double static_reg = 1e-9;   ///< quasidefinite shift on the KKT system
    int refine_steps = 8;       ///< iterative-refinement cap; sweeps stop early once
                                ///< the residual hits roundoff or stops contracting
    int dense_var_limit = 2000; ///< dense normal equations up to this many variables
    int dense_row_limit = 6000; ///< ...and at most this many constraint rows
    bool equilibrate = true;    ///< Ruiz scaling of [A; G]
    bool verbose = false;
};

struct IterateStat {
    double pcost = 0, dcost = 0, pres = 0, dres = 0, gap = 0, mu = 0, step = 0;
};

struct SolverResult {
    SolveStatus status = SolveStatus::NumericalLimit;
    double objective = 0.0;  ///< c'x at the returned primal point
    Eigen::VectorXd x;
    Eigen::VectorXd y;  ///< equality multipliers
    Eigen::VectorXd z;  ///< cone multipliers
    Eigen::VectorXd s;  ///< cone slacks
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double duality_gap = 0.0;
    std::vector<IterateStat> trace;  ///< one entry per iteration, deterministic
};

/// Interior-point state carried between related solves. Produced by every
/// successful solve; feeding it back starts the next solve near that point.
struct WarmStart {
    Eigen::VectorXd x, y, z, s;
};

/// Solves the program with a homogeneous self-dual interior-point method.
/// Deterministic: identical inputs and config produce identical iterates.
SolverResult solve(const ConeProgram& prog, const SolverConfig& cfg = {});

/// Same, starting from a previous point. A hint of mismatched dimension is
/// ignored (equivalent to a cold start); the reached optimum agrees with the
/// cold solve within tolerances.
SolverResult solve_warm(const ConeProgram& prog, const WarmStart& hint,
                        const SolverConfig& cfg = {});

}  // namespace stabsched
