#include "stabsched/features.hpp"

#include <algorithm>
#include <set>

#include "stabsched/common.hpp"

namespace stabsched {

const char* family_tag(StabFamily f) {
    switch (f) {
        case StabFamily::Frequency: return "fs";
        case StabFamily::SmallSignal: return "sss";
        case StabFamily::ShortCircuit: return "scc";
        case StabFamily::VoltageDip: return "dv";
        case StabFamily::VoltageStability: return "vs";
        case StabFamily::Equilibrium: return "eq";
    }
    return "?";
}

StabFamily family_from_tag(const std::string& tag) {
    if (tag == "fs") return StabFamily::Frequency;
    if (tag == "sss") return StabFamily::SmallSignal;
    if (tag == "scc") return StabFamily::ShortCircuit;
    if (tag == "dv") return StabFamily::VoltageDip;
    if (tag == "vs") return StabFamily::VoltageStability;
    if (tag == "eq") return StabFamily::Equilibrium;
    throw ValidationError("unknown constraint family '" + tag + "'");
}

std::vector<std::string> feature_names(const NetworkCase& c, StabFamily f) {
    std::vector<std::string> names;
    for (const auto& g : c.generators) names.push_back("x:" + g.id);
    switch (f) {
        case StabFamily::Frequency:
            for (const auto& g : c.generators) names.push_back("p:" + g.id);
            for (const auto& g : c.generators) names.push_back("R:" + g.id);
            for (const auto& w : c.ibrs) names.push_back("pw:" + w.id);
            names.push_back("demand_total");
            break;
        case StabFamily::SmallSignal:
        case StabFamily::VoltageStability:
        case StabFamily::Equilibrium:
            for (const auto& w : c.ibrs) names.push_back("pw:" + w.id);
            break;
        case StabFamily::ShortCircuit:
        case StabFamily::VoltageDip:
            for (const auto& w : c.ibrs) names.push_back("cap:" + w.id);
            break;
    }
    return names;
}

Eigen::VectorXd feature_values(const NetworkCase& c, StabFamily f, const OperatingPoint& pt) {
    const int ng = int(c.generators.size());
    const int nw = int(c.ibrs.size());
    if (int(pt.x.size()) != ng || int(pt.p.size()) != ng || int(pt.R.size()) != ng ||
        int(pt.p_w.size()) != nw)
        throw ValidationError("operating point does not match the case unit sets");

    std::vector<double> vals;
    for (int g = 0; g < ng; ++g) vals.push_back(pt.x[g]);
    switch (f) {
        case StabFamily::Frequency:
            for (int g = 0; g < ng; ++g) vals.push_back(pt.p[g]);
            for (int g = 0; g < ng; ++g) vals.push_back(pt.R[g]);
            for (int w = 0; w < nw; ++w) vals.push_back(pt.p_w[w]);
            vals.push_back(pt.demand_p);
            break;
        case StabFamily::SmallSignal:
        case StabFamily::VoltageStability:
        case StabFamily::Equilibrium:
            for (int w = 0; w < nw; ++w) vals.push_back(pt.p_w[w]);
            break;
        case StabFamily::ShortCircuit:
        case StabFamily::VoltageDip:
            for (int w = 0; w < nw; ++w) {
                const auto& rec = c.ibrs[w];
                const double ratio = rec.p_capacity > 0 ? pt.p_w[w] / rec.p_capacity : 0.0;
                vals.push_back(rec.i_max_fault * ratio);
            }
            break;
    }
    return Eigen::Map<Eigen::VectorXd>(vals.data(), long(vals.size()));
}

std::vector<SurrogateInstance> surrogate_instances(const NetworkCase& c) {
    std::vector<SurrogateInstance> out;
    out.push_back({StabFamily::Frequency, -1});
    out.push_back({StabFamily::SmallSignal, -1});
    for (const auto& b : c.buses)
        if (b.monitor_scc) out.push_back({StabFamily::ShortCircuit, b.id});
    for (const auto& b : c.buses)
        if (b.monitor_dv) out.push_back({StabFamily::VoltageDip, b.id});
    std::set<int> gfl_buses;
    for (const auto& w : c.ibrs)
        if (w.kind == IbrKind::GridFollowing) gfl_buses.insert(w.bus);
    for (int bus : gfl_buses) out.push_back({StabFamily::VoltageStability, bus});
    for (int bus : gfl_buses) out.push_back({StabFamily::Equilibrium, bus});
    return out;
}

std::string instance_name(const SurrogateInstance& inst) {
    std::string name = family_tag(inst.family);
    if (inst.bus >= 0) name += "_bus" + std::to_string(inst.bus);
    return name;
}

SurrogateInstance instance_from_name(const std::string& name) {
    const std::size_t sep = name.find("_bus");
    if (sep == std::string::npos) return {family_from_tag(name), -1};
    SurrogateInstance inst{family_from_tag(name.substr(0, sep)), -1};
    const std::string tail = name.substr(sep + 4);
    std::size_t used = 0;
    int bus = -1;
    try {
        bus = std::stoi(tail, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (tail.empty() || used != tail.size() || bus < 0)
        throw ValidationError("malformed surrogate instance name '" + name + "'");
    inst.bus = bus;
    return inst;
}

}  // namespace stabsched
