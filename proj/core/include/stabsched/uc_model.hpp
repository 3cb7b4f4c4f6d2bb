#pragma once

#include <string>
#include <vector>

#include "stabsched/branch_bound.hpp"
#include "stabsched/case.hpp"
#include "stabsched/features.hpp"
#include "stabsched/scenario.hpp"
#include "stabsched/surrogate.hpp"

namespace stabsched {

// ============================================================================
// Scheduling model
//
// Multi-stage stochastic unit commitment over a scenario tree.
// Commitment x and startup z live per (stage, generator) and are shared by
// every node of the stage; dispatch, reserve, wind, shedding, and the network
// image live per node. The AC network enters through the second-order-cone
// branch-flow relaxation on (c_ii, c_ij, s_ij); stability limits enter as one
// cone block per (node, attached surrogate), each resolving feature names to
// affine expressions of the model variables.
//
// Conventions: every unit is off before the first stage (cold start), so
// z_0 = x_0; minimum up/down times count stages. Load shedding is always
// available at system.shed_cost, which keeps well-posed cases feasible and
// makes scarcity explicit in the objective.
// ============================================================================

struct UcFlags {
    bool si_on = false;         ///< recorded into exported operating points
    bool q_support_on = false;  ///< likewise; surrogates carry the actual effect
};

/// A fitted stability boundary attached to the schedule: enforce
/// margin(features) >= g_lim at every node.
struct AttachedSurrogate {
    SurrogateInstance where;
    SocSurrogate model;
};

struct UcModel {
    MiConeProgram mip;
    const NetworkCase* net = nullptr;  ///< not owned; must outlive the model
    ScenarioTree tree;
    UcFlags flags;
    std::vector<AttachedSurrogate> attached;

    int T = 0;   ///< stages
    int N = 0;   ///< tree nodes
    int ng = 0;  ///< generators
    int nw = 0;  ///< IBRs
    int nb = 0;  ///< buses
    int nl = 0;  ///< load profiles
    int ne = 0;  ///< in-service branches

    // column lookup, flattened row-major over the leading index
    std::vector<int> x_, z_;      ///< [t * ng + g]
    std::vector<int> p_, q_, r_;  ///< [n * ng + g]
    std::vector<int> pw_;         ///< [n * nw + w]
    std::vector<int> shed_;       ///< [n * nl + l], load-profile order
    std::vector<int> cii_;        ///< [n * nb + b]
    std::vector<int> cij_, sij_;  ///< [n * ne + e]
    std::vector<int> branch_ids;  ///< e -> index into net->branches

    int x_col(int t, int g) const { return x_[std::size_t(t) * std::size_t(ng) + std::size_t(g)]; }
    int z_col(int t, int g) const { return z_[std::size_t(t) * std::size_t(ng) + std::size_t(g)]; }
    int p_col(int n, int g) const { return p_[std::size_t(n) * std::size_t(ng) + std::size_t(g)]; }
    int q_col(int n, int g) const { return q_[std::size_t(n) * std::size_t(ng) + std::size_t(g)]; }
    int r_col(int n, int g) const { return r_[std::size_t(n) * std::size_t(ng) + std::size_t(g)]; }
    int pw_col(int n, int w) const { return pw_[std::size_t(n) * std::size_t(nw) + std::size_t(w)]; }
    int shed_col(int n, int l) const { return shed_[std::size_t(n) * std::size_t(nl) + std::size_t(l)]; }
    int cii_col(int n, int b) const { return cii_[std::size_t(n) * std::size_t(nb) + std::size_t(b)]; }

    /// One G row span per (node, attached surrogate): the cone block that
    /// enforces that surrogate at that node. dim = 1 for an affine surrogate.
    struct StabSpan {
        int row = 0;
        int dim = 0;
        int node = 0;
        int surr = 0;
    };
    std::vector<StabSpan> stab_spans;

    /// Columns through which generator g can enter stability rows: its
    /// commitment, dispatch, and reserve variables across all stages/nodes.
    std::vector<int> stability_columns(int g) const;
};

/// Compiles the scheduling model. The case must be finalized; the tree is
/// validated here. Requires tree.stages() <= case horizon. Every attached
/// surrogate must validate and resolve all of its feature names on this case.
/// Throws ValidationError.
UcModel build_uc(const NetworkCase& net, const ScenarioTree& tree,
                 const std::vector<AttachedSurrogate>& surrogates, const UcFlags& flags = {});

/// Per-node state of a solved schedule, in case element order.
struct NodeState {
    std::string id;
    int t = 0;
    double prob = 1.0;
    double dt = 1.0;
    std::vector<double> p, q, R;  ///< per generator
    std::vector<double> pw;       ///< per IBR
    std::vector<double> shed;     ///< per load profile
    std::vector<double> v;        ///< per bus, voltage magnitude
};

struct UcSolution {
    std::string case_name;
    std::string status;  ///< branch-and-bound status string
    bool feasible = false;
    double objective = 0.0;
    double bound = 0.0;
    double gap = 0.0;
    long nodes = 0;
    long solves = 0;
    double wall_seconds = 0.0;
    std::vector<std::vector<int>> commit;   ///< [t][g]
    std::vector<std::vector<int>> startup;  ///< [t][g]
    std::vector<NodeState> states;          ///< per tree node
};

/// Unpacks a branch-and-bound result into named schedule quantities.
/// Commitment and startup are rounded to exact 0/1.
UcSolution interpret_solution(const UcModel& model, const BnbResult& bnb);

/// Operating point seen by the stability oracles at one tree node.
OperatingPoint operating_point(const UcModel& model, const UcSolution& sol, int node);

/// JSON round trip for solution files. Serialization is byte-stable; parsing
/// validates shapes against the case and rejects junk. Wall-clock and search
/// counters round-trip unchanged.
std::string serialize_solution(const NetworkCase& net, const UcSolution& sol);
UcSolution parse_solution(const std::string& json_text, const NetworkCase& net);

}  // namespace stabsched
