#include "stabsched/case.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "stabsched/common.hpp"

namespace stabsched {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    // shortest representation that parses back to the same bits
    for (int prec = 1; prec <= 17; ++prec) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double Rng::normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

int NetworkCase::horizon() const {
    int h = 0;
    for (const auto& l : loads) h = std::max(h, int(l.p.size()));
    return h;
}

int NetworkCase::bus_of(int external_id) const {
    auto it = bus_index.find(external_id);
    if (it == bus_index.end())
        throw ValidationError("unknown bus id " + std::to_string(external_id));
    return it->second;
}

double NetworkCase::total_load_p(int t) const {
    double s = 0.0;
    for (const auto& l : loads)
        if (t < int(l.p.size())) s += l.p[t];
    return s;
}

double NetworkCase::ibr_cf(int ibr, int t) const {
    const auto& w = ibrs[std::size_t(ibr)];
    if (w.cf.empty()) return 1.0;
    if (t < 0 || t >= int(w.cf.size()))
        throw ValidationError("ibr " + w.id + ": no availability for hour " + std::to_string(t));
    return w.cf[std::size_t(t)];
}

void NetworkCase::finalize() {
    bus_index.clear();
    for (int i = 0; i < int(buses.size()); ++i) {
        const auto& b = buses[std::size_t(i)];
        if (!bus_index.emplace(b.id, i).second)
            throw ValidationError("duplicate bus id " + std::to_string(b.id));
        if (!(b.v_min > 0.0) || !(b.v_max >= b.v_min))
            throw ValidationError("bus " + std::to_string(b.id) + ": bad voltage band");
    }
    if (buses.empty()) throw ValidationError("case has no buses");
    if (!(system.base_mva > 0.0)) throw ValidationError("base_mva must be positive");
    if (!(system.f0 > 0.0)) throw ValidationError("f0 must be positive");

    for (const auto& br : branches) {
        bus_of(br.from);
        bus_of(br.to);
        if (br.from == br.to)
            throw ValidationError("branch " + std::to_string(br.from) + "-" +
                                  std::to_string(br.to) + " is a self-loop");
        if (br.in_service && br.r == 0.0 && br.x == 0.0)
            throw ValidationError("branch " + std::to_string(br.from) + "-" +
                                  std::to_string(br.to) + " has zero impedance");
    }

    std::set<std::string> unit_ids;
    for (const auto& g : generators) {
        bus_of(g.bus);
        if (g.id.empty()) throw ValidationError("generator with empty id");
        if (!unit_ids.insert(g.id).second)
            throw ValidationError("duplicate unit id " + g.id);
        if (!(g.p_max >= g.p_min) || g.p_min < 0.0)
            throw ValidationError("generator " + g.id + ": bad active-power limits");
        if (!(g.q_max >= g.q_min))
            throw ValidationError("generator " + g.id + ": bad reactive-power limits");
        if (g.r_max < 0.0 || g.inertia_h < 0.0 || g.min_up < 0 || g.min_down < 0)
            throw ValidationError("generator " + g.id + ": negative parameter");
        if (!(g.internal_reactance > 0.0))
            throw ValidationError("generator " + g.id + ": internal_reactance must be positive");
    }
    const int hz = horizon();
    for (const auto& w : ibrs) {
        bus_of(w.bus);
        if (w.id.empty()) throw ValidationError("ibr with empty id");
        if (!unit_ids.insert(w.id).second)
            throw ValidationError("duplicate unit id " + w.id);
        if (w.p_capacity < 0.0 || w.i_max_fault < 0.0 || w.synthetic_h < 0.0)
            throw ValidationError("ibr " + w.id + ": negative parameter");
        if (!w.cf.empty() && int(w.cf.size()) < hz)
            throw ValidationError("ibr " + w.id + ": availability profile shorter than horizon");
        for (double f : w.cf)
            if (f < 0.0 || f > 1.0)
                throw ValidationError("ibr " + w.id + ": availability outside [0,1]");
    }
    std::set<int> load_buses;
    for (const auto& l : loads) {
        bus_of(l.bus);
        if (!load_buses.insert(l.bus).second)
            throw ValidationError("duplicate load profile for bus " + std::to_string(l.bus));
        if (l.p.size() != l.q.size())
            throw ValidationError("load at bus " + std::to_string(l.bus) +
                                  ": p/q profile lengths differ");
        if (int(l.p.size()) != hz)
            throw ValidationError("load at bus " + std::to_string(l.bus) +
                                  ": profile length differs from horizon");
    }

    gens_at_bus.assign(buses.size(), {});
    ibrs_at_bus.assign(buses.size(), {});
    loads_at_bus.assign(buses.size(), {});
    for (int k = 0; k < int(generators.size()); ++k)
        gens_at_bus[std::size_t(bus_of(generators[std::size_t(k)].bus))].push_back(k);
    for (int k = 0; k < int(ibrs.size()); ++k)
        ibrs_at_bus[std::size_t(bus_of(ibrs[std::size_t(k)].bus))].push_back(k);
    for (int k = 0; k < int(loads.size()); ++k)
        loads_at_bus[std::size_t(bus_of(loads[std::size_t(k)].bus))].push_back(k);
}

void scale_ibr_capacity(NetworkCase& c, double total_capacity_pu) {
    double total = 0.0;
    for (const auto& w : c.ibrs) total += w.p_capacity;
    if (!(total > 0.0)) throw ValidationError("cannot scale: zero installed IBR capacity");
    const double f = total_capacity_pu / total;
    for (auto& w : c.ibrs) {
        w.p_capacity *= f;
        w.i_max_fault *= f;
    }
}

}  // namespace stabsched
