#pragma once

#include <string>
#include <vector>

namespace stabsched {

// ============================================================================
// Scenario trees
//
// A tree node represents one stage of one scenario branch. Commitments are
// shared across all nodes at a stage (nonanticipativity); dispatch is
// per-node. Deterministic studies use a single chain. Trees are inputs; no
// construction from forecast quantiles is provided.
// ============================================================================

struct TreeNode {
    std::string id;
    int parent = -1;  ///< index into nodes; -1 marks the root
    int t = 0;        ///< stage index, root at 0
    double prob = 1.0;  ///< absolute probability of reaching this node
    double dt = 1.0;    ///< stage duration in hours
    double demand_scale = 1.0;  ///< multiplier on the hour-t load profile
    double wind_scale = 1.0;    ///< multiplier on the hour-t IBR availability
};

struct ScenarioTree {
    std::vector<TreeNode> nodes;  ///< topological order: parents precede children

    int n_nodes() const { return int(nodes.size()); }

    /// Number of stages T; node stages cover 0..T-1.
    int stages() const;

    std::vector<int> at_stage(int t) const;
    std::vector<int> children(int node) const;

    /// Checks topological order, stage links (child stage = parent stage + 1),
    /// probability consistency (root 1, siblings sum to their parent), strictly
    /// positive dt, and that every leaf sits at the final stage. Throws
    /// ValidationError.
    void validate() const;
};

/// Deterministic tree: one node per stage, probability 1, uniform step.
ScenarioTree single_chain(int horizon, double dt = 1.0);

/// Parses {"nodes": [{id, parent, t, prob, dt, demand_scale, wind_scale}, ...]}.
/// Missing per-node fields take the defaults above; the result is validated.
ScenarioTree parse_tree(const std::string& json_text);
ScenarioTree load_tree(const std::string& path);
std::string serialize_tree(const ScenarioTree& tree);

}  // namespace stabsched
