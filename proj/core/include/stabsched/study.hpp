#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stabsched/branch_bound.hpp"
#include "stabsched/conic.hpp"
#include "stabsched/features.hpp"
#include "stabsched/oracles.hpp"

namespace stabsched {

// ============================================================================
// Study orchestration
//
// One StudyConfig drives the whole pipeline; the command-line binary is a
// thin flag-to-field mapping over this module, so every command can also be
// exercised in-process by tests. Each command reads its inputs, writes its
// outputs under out_dir, and returns a process exit code:
//
//   0  success
//   1  validation error (bad config or input data)
//   2  solver failure
//   3  model proven infeasible
//
// Codes 1 and 2 are raised as ValidationError / SolverError and mapped by the
// caller; code 3 is returned directly, after writing the solution file that
// records the infeasibility.
//
// Determinism contract: with `deterministic` set, a rerun with the same
// config and inputs produces byte-identical output files. Wall-clock fields
// are zeroed, parallel work is ordered or serialized, and all randomness is
// seeded from `seed`.
// ============================================================================

struct StudyConfig {
    std::string case_path;
    std::string tree_path;  ///< optional; a single chain over `horizon` otherwise
    int horizon = 24;       ///< stages of the default chain; 0 = the case's full horizon

    std::vector<StabFamily> stab;  ///< families enforced by solve/price and swept by sweep
    bool si_on = false;            ///< count synthetic inertia in frequency metrics
    bool q_support_on = false;     ///< count reactive support in voltage margins
    StabilityLimits limits;

    SolverConfig solver;  ///< per-relaxation interior-point settings
    BnbConfig bnb;        ///< commitment search settings (relax is overwritten by `solver`)
    std::uint64_t seed = 1;
    int threads = 0;             ///< 0 = STABSCHED_THREADS, then hardware parallelism
    bool deterministic = false;  ///< reproducible bytes: zero clocks, ordered work
    std::string out_dir = ".";

    // sample
    int sample_count = 5000;

    // fit
    std::vector<int> fit_j = {0, 2, 3};       ///< cone sizes, fitted in this order
    std::string fit_method = "conservative";  ///< or "lsr"
    std::string dataset_dir;                  ///< default: out_dir

    // solve / price
    std::string surrogate_dir;  ///< default: <out_dir>/surrogates
    int attach_j = 2;           ///< which fitted cone size solve and price attach

    // assess
    std::string solution_path;  ///< default: <out_dir>/solution.json

    // sweep
    SweepGrid grid;  ///< zero-width axes are auto-sized from the case capacities
    bool check_containment = false;  ///< verify eq is dominated by sss (exit 1 if not)

    // price
    bool per_hour = false;
};

/// Parses a JSON config document whose keys mirror the fields above (see the
/// schema comment in the implementation). Unknown keys are rejected so typos
/// fail loudly. Flags are meant to override the file: the CLI parses the file
/// first, then assigns any flag the user passed.
StudyConfig parse_study_config(const std::string& json_text);
StudyConfig load_study_config(const std::string& path);

/// Comma-separated family tags, or "all" / "none". Order-stable, deduplicated.
std::vector<StabFamily> parse_stab_set(const std::string& text);

/// Thread budget: explicit config value, else STABSCHED_THREADS, else
/// hardware parallelism. Deterministic mode always answers 1.
int resolve_threads(const StudyConfig& cfg);

/// Samples operating points and writes one oracle-labeled dataset per
/// constraint family: <out_dir>/<tag>.csv for fs, sss, scc, dv, vs, eq.
int cmd_sample(const StudyConfig& cfg);

/// Fits surrogates for every instance of the selected families (all six when
/// `stab` is empty) at each cone size in fit_j, warm-starting each fit from
/// the previous size. Writes <surrogate_dir>/<instance>_j<j>.json and a
/// <out_dir>/fit_report.csv with per-fit error counts, mean relative errors,
/// and timings.
int cmd_fit(const StudyConfig& cfg);

/// Builds and solves the scheduling problem with the selected families'
/// fitted surrogates attached. Writes <out_dir>/solution.json and
/// <out_dir>/cost_summary.csv. Returns 3 when the model is infeasible.
int cmd_solve(const StudyConfig& cfg);

/// Evaluates a solved schedule against the ground-truth oracles and writes
/// <out_dir>/violation_rates.csv: the fraction of node states where each
/// family crosses its limit. The solution must carry a feasible schedule.
int cmd_assess(const StudyConfig& cfg);

/// Sweeps the (synchronous, grid-following) capacity plane and writes the
/// security boundary of every selected family to <out_dir>/boundary.csv.
/// With check_containment set, also verifies that the equilibrium boundary
/// never requires more synchronous capacity than the small-signal boundary
/// (open equilibrium columns pass; an open small-signal column with a closed
/// equilibrium crossing fails), writing the per-column verdicts to
/// <out_dir>/containment.csv; a failed check is a validation error.
int cmd_sweep(const StudyConfig& cfg);

/// Solves the base schedule, then prices every generator and grid-forming
/// IBR by marginal re-solves (hourly when per_hour is set). Writes
/// <out_dir>/prices.csv. Returns 3 when the base model is infeasible.
int cmd_price(const StudyConfig& cfg);

}  // namespace stabsched
