#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "stabsched/case.hpp"

namespace stabsched {

// ============================================================================
// Constraint families and feature maps
//
// Feature names are a contract shared by three consumers: dataset export
// (columns), surrogate files (feature_names), and the scheduling model
// (attachment resolves each name to an affine expression of model variables).
//
//   x:<gen id>     commitment (0/1)
//   p:<gen id>     active dispatch, pu
//   R:<gen id>     frequency reserve, pu
//   pw:<ibr id>    IBR active injection, pu
//   cap:<ibr id>   deliverable fault current, pu: i_max_fault * p_w / capacity
//   demand_total   total active demand snapshot, pu
// ============================================================================

enum class StabFamily { Frequency, SmallSignal, ShortCircuit, VoltageDip, VoltageStability, Equilibrium };

/// Short tag used in flags, filenames, and CSV headers: fs, sss, scc, dv, vs, eq.
const char* family_tag(StabFamily f);

/// Inverse of family_tag. Throws ValidationError on an unknown tag.
StabFamily family_from_tag(const std::string& tag);

/// A sampled or scheduled system state, the domain of every oracle.
struct OperatingPoint {
    std::vector<double> x;    ///< commitment per generator, 0 or 1
    std::vector<double> p;    ///< active dispatch per generator, pu
    std::vector<double> q;    ///< reactive dispatch per generator, pu
    std::vector<double> R;    ///< frequency reserve per generator, pu
    std::vector<double> p_w;  ///< active injection per IBR, pu
    double demand_p = 0.0;    ///< total active demand, pu
    bool si_on = false;           ///< synthetic inertia counted in frequency metrics
    bool q_support_on = false;    ///< reactive support counted in voltage margins
};

/// Ordered feature names for one constraint family on a given case.
std::vector<std::string> feature_names(const NetworkCase& c, StabFamily f);

/// Feature vector of an operating point, ordered as feature_names.
Eigen::VectorXd feature_values(const NetworkCase& c, StabFamily f, const OperatingPoint& pt);

/// One fitted-surrogate instance: a family plus the monitored bus it guards.
/// bus is an external id; -1 marks the system-wide instances (fs, sss).
struct SurrogateInstance {
    StabFamily family;
    int bus = -1;
};

/// Instance set for a case: fs and sss system-wide, scc/dv per monitored bus,
/// vs/eq per bus hosting a grid-following IBR.
std::vector<SurrogateInstance> surrogate_instances(const NetworkCase& c);

/// Stable instance name: "fs", "sss", or "<tag>_bus<id>".
std::string instance_name(const SurrogateInstance& inst);

/// Inverse of instance_name. Throws ValidationError on a malformed name.
SurrogateInstance instance_from_name(const std::string& name);

}  // namespace stabsched
