#pragma once

#include <string>

#include "stabsched/case.hpp"

namespace stabsched {

// JSON case schema (all quantities per-unit on system.base_mva):
//
// {
//   "name": "...",                         optional
//   "system":  {"base_mva", "f0", "load_damping_pct", "shed_cost"},
//   "buses":   [{"id", "v_min", "v_max", "base_kv", "monitor_scc", "monitor_dv"}],
//   "branches":[{"from", "to", "r", "x", "b_sh", "s_max", "in_service"}],
//   "generators":[{"id", "bus", "p_min", "p_max", "q_min", "q_max",
//                  "ramp_up", "ramp_down", "r_max", "inertia_h",
//                  "internal_reactance", "no_load_cost", "marginal_cost",
//                  "startup_cost", "startup_time", "min_up", "min_down"}],
//   "ibrs":    [{"id", "bus", "kind": "grid_forming"|"grid_following",
//                "p_capacity", "i_max_fault", "provides_synthetic_inertia",
//                "provides_reactive_support", "synthetic_h", "cf": [...]}],
//   "loads":   {"<bus id>": [[p, q], [p, q], ...]}   one pair per hour
// }
//
// Unknown keys are rejected; missing optional keys take the record defaults.

/// Parses and validates a case document. Throws ValidationError with a
/// line/column position for syntax errors and a field path for semantic ones.
NetworkCase parse_case(const std::string& json_text);

/// Loads a case from a file path.
NetworkCase load_case(const std::string& path);

/// Serializes a case. parse_case(serialize_case(c)) reproduces every field
/// bit-exactly; numeric values survive the round trip unchanged.
std::string serialize_case(const NetworkCase& c);

}  // namespace stabsched
