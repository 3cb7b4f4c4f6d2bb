#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace stabsched {

// All electrical quantities are per-unit on system.base_mva unless a field
// name says otherwise. Costs are in currency units (£): no_load_cost £/h,
// marginal_cost £/MWh, startup_cost £ per start, shed_cost £/MWh.

struct BusRecord {
    int id = 0;
    double v_min = 0.94;
    double v_max = 1.06;
    double base_kv = 345.0;
    bool monitor_scc = false;  ///< include in short-circuit level assessment
    bool monitor_dv = false;   ///< include in post-fault voltage dip assessment
};

struct BranchRecord {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_sh = 0.0;   ///< total line charging susceptance
    double s_max = 0.0;  ///< apparent-power rating, pu; 0 disables the rating cone
    bool in_service = true;
};

struct GeneratorRecord {
    std::string id;
    int bus = 0;
    double p_min = 0.0, p_max = 0.0;
    double q_min = 0.0, q_max = 0.0;
    double ramp_up = 0.0, ramp_down = 0.0;  ///< pu per hour
    double r_max = 0.0;                     ///< frequency-reserve capability, pu
    double inertia_h = 0.0;                 ///< s, on the unit's own MVA base (= p_max)
    double internal_reactance = 0.2;        ///< subtransient, pu on system base
    double no_load_cost = 0.0;
    double marginal_cost = 0.0;
    double startup_cost = 0.0;
    int startup_time = 0;  ///< h, informational (lead time, not modelled as a constraint)
    int min_up = 0;        ///< h
    int min_down = 0;      ///< h
};

enum class IbrKind { GridForming, GridFollowing };

struct IbrRecord {
    std::string id;
    int bus = 0;
    IbrKind kind = IbrKind::GridFollowing;
    double p_capacity = 0.0;   ///< pu
    double i_max_fault = 0.0;  ///< fault-current ceiling, pu on system base
    bool provides_synthetic_inertia = false;
    bool provides_reactive_support = false;
    double synthetic_h = 0.0;     ///< s, on the unit's own MVA base
    std::vector<double> cf;       ///< per-hour availability factor; empty means 1.0
};

struct LoadProfile {
    int bus = 0;
    std::vector<double> p;  ///< pu per hour
    std::vector<double> q;
};

struct SystemParams {
    double base_mva = 100.0;
    double f0 = 50.0;
    double load_damping_pct = 0.5;  ///< % of hourly demand per Hz
    double shed_cost = 30000.0;     ///< £/MWh of unserved energy (30 k£/MWh default)
};

struct NetworkCase {
    std::string name;
    SystemParams system;
    std::vector<BusRecord> buses;
    std::vector<BranchRecord> branches;
    std::vector<GeneratorRecord> generators;
    std::vector<IbrRecord> ibrs;
    std::vector<LoadProfile> loads;

    // Derived indexing, rebuilt by finalize(). bus_index maps external bus id
    // to a contiguous internal index; attachment sets are per internal bus.
    std::unordered_map<int, int> bus_index;
    std::vector<std::vector<int>> gens_at_bus;
    std::vector<std::vector<int>> ibrs_at_bus;
    std::vector<std::vector<int>> loads_at_bus;

    int n_buses() const { return int(buses.size()); }
    int horizon() const;

    /// Internal index of an external bus id; throws ValidationError if unknown.
    int bus_of(int external_id) const;

    /// Total active demand (pu) at hour t across all load buses.
    double total_load_p(int t) const;

    /// Availability factor of IBR w at hour t (1.0 when no profile given).
    double ibr_cf(int ibr, int t) const;

    /// Rebuilds derived indexing and validates cross-references, uniqueness,
    /// profile lengths, and parameter sanity. Throws ValidationError.
    void finalize();
};

/// Scales every IBR's capacity (and with it the fault-current ceiling) so the
/// fleet totals `total_capacity_pu`, preserving the existing shares.
void scale_ibr_capacity(NetworkCase& c, double total_capacity_pu);

}  // namespace stabsched
