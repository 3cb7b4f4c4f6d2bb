#include "stabsched/case_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stabsched/common.hpp"

namespace stabsched {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ValidationError(where + ": " + what);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok) fail(where, "unknown key '" + it.key() + "'");
    }
}

double get_num(const json& j, const std::string& where, const char* key,
               double dflt, bool required = false) {
    auto it = j.find(key);
    if (it == j.end()) {
        if (required) fail(where, std::string("missing key '") + key + "'");
        return dflt;
    }
    if (!it->is_number()) fail(where, std::string("'") + key + "' must be a number");
    return it->get<double>();
}

int get_int(const json& j, const std::string& where, const char* key,
            int dflt, bool required = false) {
    auto it = j.find(key);
    if (it == j.end()) {
        if (required) fail(where, std::string("missing key '") + key + "'");
        return dflt;
    }
    if (!it->is_number_integer()) fail(where, std::string("'") + key + "' must be an integer");
    return it->get<int>();
}

bool get_bool(const json& j, const std::string& where, const char* key, bool dflt) {
    auto it = j.find(key);
    if (it == j.end()) return dflt;
    if (!it->is_boolean()) fail(where, std::string("'") + key + "' must be a boolean");
    return it->get<bool>();
}

std::string get_str(const json& j, const std::string& where, const char* key,
                    const std::string& dflt, bool required = false) {
    auto it = j.find(key);
    if (it == j.end()) {
        if (required) fail(where, std::string("missing key '") + key + "'");
        return dflt;
    }
    if (!it->is_string()) fail(where, std::string("'") + key + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

NetworkCase parse_case(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("case JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("case JSON: top level must be an object");
    check_keys(doc, "case", {"name", "system", "buses", "branches", "generators", "ibrs", "loads"});

    NetworkCase c;
    c.name = get_str(doc, "case", "name", "");

    if (doc.contains("system")) {
        const json& s = doc["system"];
        check_keys(s, "system", {"base_mva", "f0", "load_damping_pct", "shed_cost"});
        c.system.base_mva = get_num(s, "system", "base_mva", c.system.base_mva);
        c.system.f0 = get_num(s, "system", "f0", c.system.f0);
        c.system.load_damping_pct = get_num(s, "system", "load_damping_pct", c.system.load_damping_pct);
        c.system.shed_cost = get_num(s, "system", "shed_cost", c.system.shed_cost);
    }

    if (!doc.contains("buses") || !doc["buses"].is_array())
        throw ValidationError("case: 'buses' array is required");
    int idx = 0;
    for (const json& jb : doc["buses"]) {
        const std::string where = "buses[" + std::to_string(idx++) + "]";
        check_keys(jb, where, {"id", "v_min", "v_max", "base_kv", "monitor_scc", "monitor_dv"});
        BusRecord b;
        b.id = get_int(jb, where, "id", 0, true);
        b.v_min = get_num(jb, where, "v_min", b.v_min);
        b.v_max = get_num(jb, where, "v_max", b.v_max);
        b.base_kv = get_num(jb, where, "base_kv", b.base_kv);
        b.monitor_scc = get_bool(jb, where, "monitor_scc", false);
        b.monitor_dv = get_bool(jb, where, "monitor_dv", false);
        c.buses.push_back(b);
    }

    idx = 0;
    for (const json& jb : doc.value("branches", json::array())) {
        const std::string where = "branches[" + std::to_string(idx++) + "]";
        check_keys(jb, where, {"from", "to", "r", "x", "b_sh", "s_max", "in_service"});
        BranchRecord br;
        br.from = get_int(jb, where, "from", 0, true);
        br.to = get_int(jb, where, "to", 0, true);
        br.r = get_num(jb, where, "r", 0.0);
        br.x = get_num(jb, where, "x", 0.0, true);
        br.b_sh = get_num(jb, where, "b_sh", 0.0);
        br.s_max = get_num(jb, where, "s_max", 0.0);
        br.in_service = get_bool(jb, where, "in_service", true);
        c.branches.push_back(br);
    }

    idx = 0;
    for (const json& jg : doc.value("generators", json::array())) {
        const std::string where = "generators[" + std::to_string(idx++) + "]";
        check_keys(jg, where,
                   {"id", "bus", "p_min", "p_max", "q_min", "q_max", "ramp_up", "ramp_down",
                    "r_max", "inertia_h", "internal_reactance", "no_load_cost", "marginal_cost",
                    "startup_cost", "startup_time", "min_up", "min_down"});
        GeneratorRecord g;
        g.id = get_str(jg, where, "id", "", true);
        g.bus = get_int(jg, where, "bus", 0, true);
        g.p_min = get_num(jg, where, "p_min", 0.0);
        g.p_max = get_num(jg, where, "p_max", 0.0, true);
        g.q_min = get_num(jg, where, "q_min", 0.0);
        g.q_max = get_num(jg, where, "q_max", 0.0);
        g.ramp_up = get_num(jg, where, "ramp_up", g.p_max);
        g.ramp_down = get_num(jg, where, "ramp_down", g.p_max);
        g.r_max = get_num(jg, where, "r_max", 0.0);
        g.inertia_h = get_num(jg, where, "inertia_h", 0.0);
        g.internal_reactance = get_num(jg, where, "internal_reactance", g.internal_reactance);
        g.no_load_cost = get_num(jg, where, "no_load_cost", 0.0);
        g.marginal_cost = get_num(jg, where, "marginal_cost", 0.0);
        g.startup_cost = get_num(jg, where, "startup_cost", 0.0);
        g.startup_time = get_int(jg, where, "startup_time", 0);
        g.min_up = get_int(jg, where, "min_up", 0);
        g.min_down = get_int(jg, where, "min_down", 0);
        c.generators.push_back(g);
    }

    idx = 0;
    for (const json& jw : doc.value("ibrs", json::array())) {
        const std::string where = "ibrs[" + std::to_string(idx++) + "]";
        check_keys(jw, where,
                   {"id", "bus", "kind", "p_capacity", "i_max_fault", "provides_synthetic_inertia",
                    "provides_reactive_support", "synthetic_h", "cf"});
        IbrRecord w;
        w.id = get_str(jw, where, "id", "", true);
        w.bus = get_int(jw, where, "bus", 0, true);
        const std::string kind = get_str(jw, where, "kind", "grid_following");
        if (kind == "grid_forming") w.kind = IbrKind::GridForming;
        else if (kind == "grid_following") w.kind = IbrKind::GridFollowing;
        else fail(where, "kind must be grid_forming or grid_following");
        w.p_capacity = get_num(jw, where, "p_capacity", 0.0, true);
        w.i_max_fault = get_num(jw, where, "i_max_fault", 0.0);
        w.provides_synthetic_inertia = get_bool(jw, where, "provides_synthetic_inertia", false);
        w.provides_reactive_support = get_bool(jw, where, "provides_reactive_support", false);
        w.synthetic_h = get_num(jw, where, "synthetic_h", 0.0);
        if (jw.contains("cf")) {
            if (!jw["cf"].is_array()) fail(where, "'cf' must be an array");
            for (const json& v : jw["cf"]) {
                if (!v.is_number()) fail(where, "'cf' entries must be numbers");
                w.cf.push_back(v.get<double>());
            }
        }
        c.ibrs.push_back(w);
    }

    if (doc.contains("loads")) {
        const json& jl = doc["loads"];
        if (!jl.is_object()) throw ValidationError("case: 'loads' must be an object keyed by bus id");
        for (auto it = jl.begin(); it != jl.end(); ++it) {
            const std::string where = "loads['" + it.key() + "']";
            LoadProfile l;
            try {
                l.bus = std::stoi(it.key());
            } catch (...) {
                fail(where, "key must be a bus id");
            }
            if (!it->is_array()) fail(where, "value must be an array of [p, q] pairs");
            for (const json& pair : *it) {
                if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
                    !pair[1].is_number())
                    fail(where, "each hour must be a [p, q] pair");
                l.p.push_back(pair[0].get<double>());
                l.q.push_back(pair[1].get<double>());
            }
            c.loads.push_back(std::move(l));
        }
        // object iteration order is alphabetic in nlohmann; keep bus order instead
        std::sort(c.loads.begin(), c.loads.end(),
                  [](const LoadProfile& a, const LoadProfile& b) { return a.bus < b.bus; });
    }

    c.finalize();
    return c;
}

NetworkCase load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open case file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

std::string serialize_case(const NetworkCase& c) {
    json doc;
    if (!c.name.empty()) doc["name"] = c.name;
    doc["system"] = {{"base_mva", c.system.base_mva},
                     {"f0", c.system.f0},
                     {"load_damping_pct", c.system.load_damping_pct},
                     {"shed_cost", c.system.shed_cost}};
    doc["buses"] = json::array();
    for (const auto& b : c.buses)
        doc["buses"].push_back({{"id", b.id},
                                {"v_min", b.v_min},
                                {"v_max", b.v_max},
                                {"base_kv", b.base_kv},
                                {"monitor_scc", b.monitor_scc},
                                {"monitor_dv", b.monitor_dv}});
    doc["branches"] = json::array();
    for (const auto& br : c.branches)
        doc["branches"].push_back({{"from", br.from},
                                   {"to", br.to},
                                   {"r", br.r},
                                   {"x", br.x},
                                   {"b_sh", br.b_sh},
                                   {"s_max", br.s_max},
                                   {"in_service", br.in_service}});
    doc["generators"] = json::array();
    for (const auto& g : c.generators)
        doc["generators"].push_back({{"id", g.id},
                                     {"bus", g.bus},
                                     {"p_min", g.p_min},
                                     {"p_max", g.p_max},
                                     {"q_min", g.q_min},
                                     {"q_max", g.q_max},
                                     {"ramp_up", g.ramp_up},
                                     {"ramp_down", g.ramp_down},
                                     {"r_max", g.r_max},
                                     {"inertia_h", g.inertia_h},
                                     {"internal_reactance", g.internal_reactance},
                                     {"no_load_cost", g.no_load_cost},
                                     {"marginal_cost", g.marginal_cost},
                                     {"startup_cost", g.startup_cost},
                                     {"startup_time", g.startup_time},
                                     {"min_up", g.min_up},
                                     {"min_down", g.min_down}});
    doc["ibrs"] = json::array();
    for (const auto& w : c.ibrs) {
        json jw = {{"id", w.id},
                   {"bus", w.bus},
                   {"kind", w.kind == IbrKind::GridForming ? "grid_forming" : "grid_following"},
                   {"p_capacity", w.p_capacity},
                   {"i_max_fault", w.i_max_fault},
                   {"provides_synthetic_inertia", w.provides_synthetic_inertia},
                   {"provides_reactive_support", w.provides_reactive_support},
                   {"synthetic_h", w.synthetic_h}};
        if (!w.cf.empty()) jw["cf"] = w.cf;
        doc["ibrs"].push_back(std::move(jw));
    }
    doc["loads"] = json::object();
    for (const auto& l : c.loads) {
        json hours = json::array();
        for (std::size_t t = 0; t < l.p.size(); ++t)
            hours.push_back(json::array({l.p[t], l.q[t]}));
        doc["loads"][std::to_string(l.bus)] = std::move(hours);
    }
    return doc.dump(2) + "\n";
}

}  // namespace stabsched
