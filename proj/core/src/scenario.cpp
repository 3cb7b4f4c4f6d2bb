#include "stabsched/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "stabsched/common.hpp"

namespace stabsched {

using nlohmann::json;

int ScenarioTree::stages() const {
    int last = -1;
    for (const auto& n : nodes) last = std::max(last, n.t);
    return last + 1;
}

std::vector<int> ScenarioTree::at_stage(int t) const {
    std::vector<int> out;
    for (int i = 0; i < n_nodes(); ++i)
        if (nodes[i].t == t) out.push_back(i);
    return out;
}

std::vector<int> ScenarioTree::children(int node) const {
    std::vector<int> out;
    for (int i = 0; i < n_nodes(); ++i)
        if (nodes[i].parent == node) out.push_back(i);
    return out;
}

void ScenarioTree::validate() const {
    if (nodes.empty()) throw ValidationError("tree: no nodes");

    constexpr double kProbTol = 1e-9;
    std::unordered_set<std::string> ids;
    int roots = 0;
    for (int i = 0; i < n_nodes(); ++i) {
        const TreeNode& n = nodes[i];
        const std::string where = "tree node '" + n.id + "'";
        if (n.id.empty()) throw ValidationError("tree: node " + std::to_string(i) + " has no id");
        if (!ids.insert(n.id).second) throw ValidationError(where + ": duplicate id");
        if (!(n.prob > 0.0)) throw ValidationError(where + ": probability must be positive");
        if (!(n.dt > 0.0)) throw ValidationError(where + ": dt must be positive");
        if (n.demand_scale < 0.0 || n.wind_scale < 0.0)
            throw ValidationError(where + ": scales must be nonnegative");
        if (n.parent < 0) {
            ++roots;
            if (n.t != 0) throw ValidationError(where + ": root must be at stage 0");
            if (std::abs(n.prob - 1.0) > kProbTol)
                throw ValidationError(where + ": root probability must be 1");
        } else {
            if (n.parent >= i)
                throw ValidationError(where + ": parent must precede the node");
            if (n.t != nodes[n.parent].t + 1)
                throw ValidationError(where + ": stage must be parent stage + 1");
        }
    }
    if (roots != 1) throw ValidationError("tree: expected exactly one root");

    const int T = stages();
    for (int i = 0; i < n_nodes(); ++i) {
        const auto kids = children(i);
        if (kids.empty()) {
            if (nodes[i].t != T - 1)
                throw ValidationError("tree node '" + nodes[i].id +
                                      "': leaf before the final stage");
            continue;
        }
        double sum = 0.0;
        for (int k : kids) sum += nodes[k].prob;
        if (std::abs(sum - nodes[i].prob) > kProbTol)
            throw ValidationError("tree node '" + nodes[i].id +
                                  "': child probabilities do not sum to the parent's");
    }
}

ScenarioTree single_chain(int horizon, double dt) {
    if (horizon < 1) throw ValidationError("tree: horizon must be >= 1");
    ScenarioTree tree;
    tree.nodes.reserve(horizon);
    for (int t = 0; t < horizon; ++t) {
        TreeNode n;
        n.id = "t" + std::to_string(t);
        n.parent = t - 1;
        n.t = t;
        n.dt = dt;
        tree.nodes.push_back(std::move(n));
    }
    tree.validate();
    return tree;
}

ScenarioTree parse_tree(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("tree JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array())
        throw ValidationError("tree JSON: expected {\"nodes\": [...]}");

    ScenarioTree tree;
    int idx = 0;
    for (const json& jn : doc["nodes"]) {
        const std::string where = "tree nodes[" + std::to_string(idx) + "]";
        if (!jn.is_object()) throw ValidationError(where + ": must be an object");
        for (auto it = jn.begin(); it != jn.end(); ++it) {
            static const char* allowed[] = {"id", "parent", "t", "prob", "dt",
                                            "demand_scale", "wind_scale"};
            bool ok = false;
            for (const char* k : allowed)
                if (it.key() == k) { ok = true; break; }
            if (!ok) throw ValidationError(where + ": unknown key '" + it.key() + "'");
        }
        TreeNode n;
        n.id = jn.value("id", "n" + std::to_string(idx));
        n.parent = jn.value("parent", -1);
        n.t = jn.value("t", 0);
        n.prob = jn.value("prob", 1.0);
        n.dt = jn.value("dt", 1.0);
        n.demand_scale = jn.value("demand_scale", 1.0);
        n.wind_scale = jn.value("wind_scale", 1.0);
        tree.nodes.push_back(std::move(n));
        ++idx;
    }
    tree.validate();
    return tree;
}

ScenarioTree load_tree(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open tree file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_tree(ss.str());
}

std::string serialize_tree(const ScenarioTree& tree) {
    json doc;
    doc["nodes"] = json::array();
    for (const auto& n : tree.nodes)
        doc["nodes"].push_back({{"id", n.id},
                                {"parent", n.parent},
                                {"t", n.t},
                                {"prob", n.prob},
                                {"dt", n.dt},
                                {"demand_scale", n.demand_scale},
                                {"wind_scale", n.wind_scale}});
    return doc.dump(2) + "\n";
}

}  // namespace stabsched
