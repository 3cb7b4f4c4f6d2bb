#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "stabsched/case.hpp"
#include "stabsched/features.hpp"

namespace stabsched {

// ============================================================================
// Ground-truth stability oracles
//
// Closed-form stand-ins for detailed dynamic studies; every oracle is a pure
// deterministic function of (case, operating point). Each formula is isolated
// behind this interface so a higher-fidelity replacement is a drop-in.
// ============================================================================

/// Screening limits. Margins are oriented so "value >= limit" is secure.
struct StabilityLimits {
    double gscr = 2.5;        ///< minimum generalized short-circuit ratio
    double scc_pu = 20.0;     ///< minimum fault current at monitored buses
    double dip_pu = 0.15;     ///< maximum post-fault voltage dip
    double nadir_hz = 0.8;    ///< maximum frequency-nadir deviation
    double ss_hz = 0.5;       ///< maximum steady-state deviation
    double rocof_hz_s = 0.5;  ///< maximum rate of change of frequency
};

struct FrequencyMetrics {
    double rocof = 0.0;        ///< Hz/s
    double f_ss_dev = 0.0;     ///< Hz
    double f_nadir_dev = 0.0;  ///< Hz
    bool any_online = false;
};

/// Post-outage frequency metrics for the loss of the largest online unit.
/// Inertia aggregates online synchronous units; with the SI flag set,
/// synthetic-inertia IBRs add in proportion to their unloaded headroom.
/// No online unit leaves any_online false and the metrics at a large sentinel.
FrequencyMetrics eval_frequency(const NetworkCase& c, const OperatingPoint& pt);

/// Combined frequency margin: min over the three metrics of 1 - value/limit.
/// Positive is secure; clamped below at -10 (also the no-online-unit value).
double fs_margin(const FrequencyMetrics& m, const StabilityLimits& lim);

/// Generalized short-circuit ratio: minimum eigenvalue of diag(P)^-1 B_red,
/// the susceptance Laplacian Kron-reduced onto injecting grid-following buses
/// with online-SG and dispatching grid-forming buses grounded. Returns 0 with
/// no grounded sources and a large sentinel with no injecting GFL bus.
double eval_gscr(const NetworkCase& c, const OperatingPoint& pt);

/// Three-phase fault current at fault_bus (external id), pu: the source
/// network's Thevenin current plus droop-limited online GFL contributions
/// scaled by their current-divider factors.
double eval_scc(const NetworkCase& c, const OperatingPoint& pt, int fault_bus);

/// Voltage dip per bus (internal index) for a fault at fault_bus, pu in [0,1].
Eigen::VectorXd eval_post_fault_voltage(const NetworkCase& c, const OperatingPoint& pt,
                                        int fault_bus);

/// Static transfer-capability margin at an IBR bus: k_q V_th^2/(2 X_th) - P,
/// where k_q > 1 when reactive support is on.
double eval_vs_margin(const NetworkCase& c, const OperatingPoint& pt, int ibr_bus);

/// PLL equilibrium-existence margin at an IBR bus: 1 - P X_th / V_th^2.
double eval_eq_margin(const NetworkCase& c, const OperatingPoint& pt, int ibr_bus);

/// Reference fault location used by the voltage-dip family: the first bus
/// flagged monitor_scc, falling back to the first bus.
int reference_fault_bus(const NetworkCase& c);

/// Secure-side limit of one surrogate instance (dv margins are negated dips,
/// so its limit is -dip_pu).
double instance_limit(const SurrogateInstance& inst, const StabilityLimits& lim);

/// Oracle margin g of one instance at an operating point, oriented so
/// g >= instance_limit is secure.
double instance_margin(const NetworkCase& c, const SurrogateInstance& inst,
                       const OperatingPoint& pt, const StabilityLimits& lim);

/// Latin-hypercube sample of operating states: stratified commitments,
/// dispatch and reserve within unit limits, IBR injections within nameplate
/// capacity, demand in [0.5, 1.5) of the hour-0 load. Deterministic per seed.
std::vector<OperatingPoint> sample_operating_points(const NetworkCase& c, int count,
                                                    std::uint64_t seed, bool si_on = false,
                                                    bool q_support_on = false);

// ---------------------------------------------------------------------------
// Capacity-plane boundary sweeps
// ---------------------------------------------------------------------------

struct SweepGrid {
    double sg_min = 0.0, sg_max = 0.0;    ///< total synchronous capacity, pu
    double gfl_min = 0.0, gfl_max = 0.0;  ///< total grid-following capacity, pu
    int sg_points = 50;
    int gfl_points = 50;
};

struct BoundaryPoint {
    double gfl_capacity = 0.0;
    double sg_capacity = 0.0;  ///< threshold; NaN when open
    bool open = false;         ///< no crossing inside the scanned range
};

/// For each grid column (GFL capacity), the smallest synchronous capacity at
/// which every instance of the family is secure, linearly interpolated
/// between bracketing grid rows. All units online, GFL at full output.
std::vector<BoundaryPoint> sweep_boundary(const NetworkCase& c, StabFamily family,
                                          const SweepGrid& grid,
                                          const StabilityLimits& lim = {});

// ---------------------------------------------------------------------------
// Schedule assessment
// ---------------------------------------------------------------------------

struct ViolationRates {
    double fs = 0, sss = 0, scc = 0, dv = 0, vs = 0, eq = 0;
    int hours = 0;

    double rate(StabFamily f) const;
};

/// Fraction of hours where any instance of each family crosses its limit.
ViolationRates assess_violations(const NetworkCase& c,
                                 const std::vector<OperatingPoint>& hourly,
                                 const StabilityLimits& lim = {});

}  // namespace stabsched
