#include "stabsched/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "stabsched/admittance.hpp"
#include "stabsched/common.hpp"

namespace stabsched {

namespace {

// Stand-in model constants, kept in one place. kDroop is the GFL fault
// current gain per pu of voltage dip; kDeliveryTime the primary-reserve
// delivery window; kReserveDeliveryHz the deviation at which reserve is
// fully delivered; kQSupportGain the loadability uplift from reactive
// support. kMarginFloor caps how insecure a reported margin can get so
// datasets stay bounded.
constexpr double kVPre = 1.0;
constexpr double kDroop = 2.0;
constexpr double kDeliveryTime = 10.0;      // s
constexpr double kReserveDeliveryHz = 0.5;  // Hz
constexpr double kQSupportGain = 1.25;
constexpr double kMarginFloor = -10.0;
constexpr double kVacuousGscr = 1e3;
constexpr double kHugeDeviation = 1e6;
constexpr double kOnThreshold = 0.5;
constexpr double kInjectionEps = 1e-9;

void check_point(const NetworkCase& c, const OperatingPoint& pt) {
    if (pt.x.size() != c.generators.size() || pt.p.size() != c.generators.size() ||
        pt.R.size() != c.generators.size() || pt.p_w.size() != c.ibrs.size())
        throw ValidationError("operating point does not match the case unit sets");
}

/// Fault-study network: bus admittance augmented with source shunts for
/// online synchronous units (subtransient reactance) and dispatching
/// grid-forming IBRs (current ceiling scaled by loading).
class AugmentedNetwork {
public:
    AugmentedNetwork(const NetworkCase& c, const OperatingPoint& pt) : n_(c.n_buses()) {
        Eigen::SparseMatrix<std::complex<double>> Y = build_admittance(c).Y;
        for (std::size_t g = 0; g < c.generators.size(); ++g) {
            if (pt.x[g] < kOnThreshold) continue;
            const auto& rec = c.generators[g];
            Y.coeffRef(c.bus_of(rec.bus), c.bus_of(rec.bus)) +=
                std::complex<double>(0.0, -1.0 / rec.internal_reactance);
            has_sources_ = true;
        }
        for (std::size_t w = 0; w < c.ibrs.size(); ++w) {
            const auto& rec = c.ibrs[w];
            if (rec.kind != IbrKind::GridForming) continue;
            if (rec.p_capacity <= 0.0 || pt.p_w[w] <= kInjectionEps) continue;
            const double loading = std::min(1.0, pt.p_w[w] / rec.p_capacity);
            Y.coeffRef(c.bus_of(rec.bus), c.bus_of(rec.bus)) +=
                std::complex<double>(0.0, -rec.i_max_fault * loading);
            has_sources_ = true;
        }
        if (!has_sources_) return;
        Y.makeCompressed();
        lu_.compute(Y);
        if (lu_.info() != Eigen::Success)
            throw SolverError("fault-network factorization failed");
    }

    bool has_sources() const { return has_sources_; }

    /// Column f of the augmented impedance matrix, Z[:, f].
    Eigen::VectorXcd impedance_column(int f) const {
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n_);
        e[f] = 1.0;
        return lu_.solve(e);
    }

private:
    int n_;
    bool has_sources_ = false;
    Eigen::SparseLU<Eigen::SparseMatrix<std::complex<double>>> lu_;
};

double total_ibr_injection_at(const NetworkCase& c, const OperatingPoint& pt, int internal_bus) {
    double p = 0.0;
    for (int w : c.ibrs_at_bus[std::size_t(internal_bus)]) p += pt.p_w[std::size_t(w)];
    return p;
}

/// Thevenin impedance magnitude at a bus; false when no source grounds the
/// network (the magnitude is then meaningless).
bool thevenin_impedance(const NetworkCase& c, const OperatingPoint& pt, int internal_bus,
                        double& x_th) {
    AugmentedNetwork net(c, pt);
    if (!net.has_sources()) return false;
    const Eigen::VectorXcd col = net.impedance_column(internal_bus);
    x_th = std::abs(col[internal_bus]);
    return true;
}

double fallback_demand(const NetworkCase& c) {
    double d = c.horizon() >= 1 ? c.total_load_p(0) : 0.0;
    if (d > 0.0) return d;
    for (const auto& g : c.generators) d += g.p_max;
    return d;
}

}  // namespace

FrequencyMetrics eval_frequency(const NetworkCase& c, const OperatingPoint& pt) {
    check_point(c, pt);
    const double base = c.system.base_mva;

    FrequencyMetrics m;
    double outage_mw = 0.0;   // reference incident: loss of the largest online unit
    double inertia = 0.0;     // MW s / Hz
    double reserve_mw = 0.0;
    for (std::size_t g = 0; g < c.generators.size(); ++g) {
        if (pt.x[g] < kOnThreshold) continue;
        m.any_online = true;
        const auto& rec = c.generators[g];
        outage_mw = std::max(outage_mw, rec.p_max * base);
        inertia += 2.0 * rec.inertia_h * rec.p_max * base / c.system.f0;
        reserve_mw += pt.R[g] * base;
    }
    if (!m.any_online) {
        m.rocof = m.f_ss_dev = m.f_nadir_dev = kHugeDeviation;
        return m;
    }
    if (pt.si_on) {
        for (std::size_t w = 0; w < c.ibrs.size(); ++w) {
            const auto& rec = c.ibrs[w];
            if (!rec.provides_synthetic_inertia) continue;
            const double headroom = std::max(0.0, rec.p_capacity - pt.p_w[w]);
            inertia += 2.0 * rec.synthetic_h * headroom * base / c.system.f0;
        }
    }
    const double damping = c.system.load_damping_pct / 100.0 * pt.demand_p * base;  // MW/Hz
    const double reserve_hz = reserve_mw / kReserveDeliveryHz;                      // MW/Hz

    m.rocof = inertia > 1e-12 ? outage_mw / inertia : kHugeDeviation;
    m.f_ss_dev =
        damping + reserve_hz > 1e-12 ? outage_mw / (damping + reserve_hz) : kHugeDeviation;
    if (inertia > 1e-12 && reserve_mw > 1e-12) {
        const double swing = outage_mw * outage_mw * kDeliveryTime / (4.0 * inertia * reserve_mw);
        m.f_nadir_dev = std::max(swing, m.f_ss_dev);
    } else {
        m.f_nadir_dev = kHugeDeviation;
    }
    return m;
}

double fs_margin(const FrequencyMetrics& m, const StabilityLimits& lim) {
    if (!m.any_online) return kMarginFloor;
    const double margin = std::min({1.0 - m.rocof / lim.rocof_hz_s, 1.0 - m.f_ss_dev / lim.ss_hz,
                                    1.0 - m.f_nadir_dev / lim.nadir_hz});
    return std::max(kMarginFloor, margin);
}

double eval_gscr(const NetworkCase& c, const OperatingPoint& pt) {
    check_point(c, pt);
    const int n = c.n_buses();
    std::vector<char> grounded(std::size_t(n), 0);
    bool any_ground = false;
    for (std::size_t g = 0; g < c.generators.size(); ++g)
        if (pt.x[g] >= kOnThreshold) {
            grounded[std::size_t(c.bus_of(c.generators[g].bus))] = 1;
            any_ground = true;
        }
    for (std::size_t w = 0; w < c.ibrs.size(); ++w)
        if (c.ibrs[w].kind == IbrKind::GridForming && pt.p_w[w] > kInjectionEps) {
            grounded[std::size_t(c.bus_of(c.ibrs[w].bus))] = 1;
            any_ground = true;
        }
    if (!any_ground) return 0.0;

    std::vector<double> inj(std::size_t(n), 0.0);
    for (std::size_t w = 0; w < c.ibrs.size(); ++w)
        if (c.ibrs[w].kind == IbrKind::GridFollowing)
            inj[std::size_t(c.bus_of(c.ibrs[w].bus))] += pt.p_w[w];

    std::vector<int> follow, interior;
    for (int i = 0; i < n; ++i) {
        if (grounded[std::size_t(i)]) continue;
        if (inj[std::size_t(i)] > kInjectionEps)
            follow.push_back(i);
        else
            interior.push_back(i);
    }
    if (follow.empty()) return kVacuousGscr;

    const Eigen::MatrixXd B = Eigen::MatrixXd(build_susceptance(c));
    const int nf = int(follow.size());
    const int no = int(interior.size());
    Eigen::MatrixXd bff(nf, nf), bfo(nf, no), boo(no, no);
    for (int i = 0; i < nf; ++i)
        for (int j = 0; j < nf; ++j) bff(i, j) = B(follow[std::size_t(i)], follow[std::size_t(j)]);
    for (int i = 0; i < nf; ++i)
        for (int j = 0; j < no; ++j)
            bfo(i, j) = B(follow[std::size_t(i)], interior[std::size_t(j)]);
    for (int i = 0; i < no; ++i)
        for (int j = 0; j < no; ++j)
            boo(i, j) = B(interior[std::size_t(i)], interior[std::size_t(j)]);

    Eigen::MatrixXd reduced = bff;
    if (no > 0) reduced -= bfo * boo.ldlt().solve(bfo.transpose());

    Eigen::VectorXd scale(nf);
    for (int i = 0; i < nf; ++i) scale[i] = 1.0 / std::sqrt(inj[std::size_t(follow[std::size_t(i)])]);
    Eigen::MatrixXd pencil = scale.asDiagonal() * reduced * scale.asDiagonal();
    pencil = 0.5 * (pencil + pencil.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pencil, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

double eval_scc(const NetworkCase& c, const OperatingPoint& pt, int fault_bus) {
    check_point(c, pt);
    const int f = c.bus_of(fault_bus);
    AugmentedNetwork net(c, pt);

    if (!net.has_sources()) {
        // No voltage source anywhere: whatever the grid-following fleet
        // injects is collected at the fault.
        double total = 0.0;
        for (std::size_t w = 0; w < c.ibrs.size(); ++w) {
            const auto& rec = c.ibrs[w];
            if (rec.kind != IbrKind::GridFollowing) continue;
            if (rec.p_capacity <= 0.0 || pt.p_w[w] <= kInjectionEps) continue;
            const double loading = std::min(1.0, pt.p_w[w] / rec.p_capacity);
            total += std::min(rec.i_max_fault, kDroop * kVPre) * loading;
        }
        return total;
    }

    const Eigen::VectorXcd zf = net.impedance_column(f);
    const double zff = std::abs(zf[f]);
    if (zff < 1e-12) return kHugeDeviation;
    double total = kVPre / zff;
    for (std::size_t w = 0; w < c.ibrs.size(); ++w) {
        const auto& rec = c.ibrs[w];
        if (rec.kind != IbrKind::GridFollowing) continue;
        if (rec.p_capacity <= 0.0 || pt.p_w[w] <= kInjectionEps) continue;
        const double loading = std::min(1.0, pt.p_w[w] / rec.p_capacity);
        const double divider = std::min(1.0, std::abs(zf[c.bus_of(rec.bus)]) / zff);
        const double dip = kVPre * divider;
        total += divider * std::min(rec.i_max_fault, kDroop * dip) * loading;
    }
    return total;
}

Eigen::VectorXd eval_post_fault_voltage(const NetworkCase& c, const OperatingPoint& pt,
                                        int fault_bus) {
    check_point(c, pt);
    const int n = c.n_buses();
    const int f = c.bus_of(fault_bus);
    AugmentedNetwork net(c, pt);
    Eigen::VectorXd dv(n);
    if (!net.has_sources()) {
        dv.setConstant(kVPre);
        return dv;
    }
    const Eigen::VectorXcd zf = net.impedance_column(f);
    for (int i = 0; i < n; ++i) {
        const std::complex<double> post = kVPre * (1.0 - zf[i] / zf[f]);
        dv[i] = std::clamp(kVPre - std::abs(post), 0.0, kVPre);
    }
    return dv;
}

double eval_vs_margin(const NetworkCase& c, const OperatingPoint& pt, int ibr_bus) {
    check_point(c, pt);
    const int i = c.bus_of(ibr_bus);
    const double p_inj = total_ibr_injection_at(c, pt, i);
    double x_th = 0.0;
    if (!thevenin_impedance(c, pt, i, x_th)) return std::max(kMarginFloor, -p_inj);
    const double gain = pt.q_support_on ? kQSupportGain : 1.0;
    const double loadability = gain * kVPre * kVPre / (2.0 * x_th);
    return std::max(kMarginFloor, loadability - p_inj);
}

double eval_eq_margin(const NetworkCase& c, const OperatingPoint& pt, int ibr_bus) {
    check_point(c, pt);
    const int i = c.bus_of(ibr_bus);
    const double p_inj = total_ibr_injection_at(c, pt, i);
    double x_th = 0.0;
    if (!thevenin_impedance(c, pt, i, x_th))
        return p_inj > kInjectionEps ? kMarginFloor : 0.0;
    return std::max(kMarginFloor, 1.0 - p_inj * x_th / (kVPre * kVPre));
}

int reference_fault_bus(const NetworkCase& c) {
    for (const auto& b : c.buses)
        if (b.monitor_scc) return b.id;
    if (c.buses.empty()) throw ValidationError("case has no buses");
    return c.buses.front().id;
}

double instance_limit(const SurrogateInstance& inst, const StabilityLimits& lim) {
    switch (inst.family) {
        case StabFamily::Frequency: return 0.0;
        case StabFamily::SmallSignal: return lim.gscr;
        case StabFamily::ShortCircuit: return lim.scc_pu;
        case StabFamily::VoltageDip: return -lim.dip_pu;
        case StabFamily::VoltageStability: return 0.0;
        case StabFamily::Equilibrium: return 0.0;
    }
    return 0.0;
}

double instance_margin(const NetworkCase& c, const SurrogateInstance& inst,
                       const OperatingPoint& pt, const StabilityLimits& lim) {
    switch (inst.family) {
        case StabFamily::Frequency: return fs_margin(eval_frequency(c, pt), lim);
        case StabFamily::SmallSignal: return eval_gscr(c, pt);
        case StabFamily::ShortCircuit: return eval_scc(c, pt, inst.bus);
        case StabFamily::VoltageDip: {
            const Eigen::VectorXd dv = eval_post_fault_voltage(c, pt, reference_fault_bus(c));
            return -dv[c.bus_of(inst.bus)];
        }
        case StabFamily::VoltageStability: return eval_vs_margin(c, pt, inst.bus);
        case StabFamily::Equilibrium: return eval_eq_margin(c, pt, inst.bus);
    }
    throw ValidationError("unknown constraint family");
}

std::vector<OperatingPoint> sample_operating_points(const NetworkCase& c, int count,
                                                    std::uint64_t seed, bool si_on,
                                                    bool q_support_on) {
    if (count < 1) throw ValidationError("sample count must be >= 1");
    const int ng = int(c.generators.size());
    const int nw = int(c.ibrs.size());
    const int ndims = 4 * ng + nw + 1;

    // Latin hypercube: per dimension, one stratum per sample in shuffled
    // order, jittered uniformly within the stratum.
    Rng rng(seed);
    Eigen::MatrixXd V(count, ndims);
    std::vector<int> perm(static_cast<std::size_t>(count));
    for (int d = 0; d < ndims; ++d) {
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        for (int i = 0; i < count; ++i)
            V(i, d) = (perm[std::size_t(i)] + rng.uniform()) / count;
    }

    const double base_demand = fallback_demand(c);
    std::vector<OperatingPoint> out;
    out.reserve(std::size_t(count));
    for (int i = 0; i < count; ++i) {
        OperatingPoint pt;
        pt.x.resize(std::size_t(ng));
        pt.p.resize(std::size_t(ng));
        pt.q.resize(std::size_t(ng));
        pt.R.resize(std::size_t(ng));
        pt.p_w.resize(std::size_t(nw));
        for (int g = 0; g < ng; ++g) {
            const auto& rec = c.generators[std::size_t(g)];
            const bool on = V(i, g) >= 0.5;
            pt.x[std::size_t(g)] = on ? 1.0 : 0.0;
            if (!on) {
                pt.p[std::size_t(g)] = pt.q[std::size_t(g)] = pt.R[std::size_t(g)] = 0.0;
                continue;
            }
            pt.p[std::size_t(g)] = rec.p_min + V(i, ng + g) * (rec.p_max - rec.p_min);
            pt.q[std::size_t(g)] = rec.q_min + V(i, 2 * ng + g) * (rec.q_max - rec.q_min);
            pt.R[std::size_t(g)] =
                V(i, 3 * ng + g) * std::min(rec.r_max, rec.p_max - pt.p[std::size_t(g)]);
        }
        for (int w = 0; w < nw; ++w)
            pt.p_w[std::size_t(w)] = V(i, 4 * ng + w) * c.ibrs[std::size_t(w)].p_capacity;
        pt.demand_p = (0.5 + V(i, 4 * ng + nw)) * base_demand;
        pt.si_on = si_on;
        pt.q_support_on = q_support_on;
        out.push_back(std::move(pt));
    }
    return out;
}

namespace {

/// Worst margin-over-limit across a family's instances; the crossing signal
/// for sweeps and assessment.
double family_slack(const NetworkCase& c, StabFamily family, const OperatingPoint& pt,
                    const StabilityLimits& lim) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& inst : surrogate_instances(c)) {
        if (inst.family != family) continue;
        worst = std::min(worst, instance_margin(c, inst, pt, lim) - instance_limit(inst, lim));
    }
    return worst;
}

}  // namespace

std::vector<BoundaryPoint> sweep_boundary(const NetworkCase& c, StabFamily family,
                                          const SweepGrid& grid, const StabilityLimits& lim) {
    if (grid.sg_points < 2 || grid.gfl_points < 2)
        throw ValidationError("sweep grid needs at least 2 points per axis");
    if (!(grid.sg_max >= grid.sg_min) || !(grid.gfl_max >= grid.gfl_min))
        throw ValidationError("sweep grid range inverted");

    double sg_base = 0.0, gfl_base = 0.0;
    for (const auto& g : c.generators) sg_base += g.p_max;
    for (const auto& w : c.ibrs)
        if (w.kind == IbrKind::GridFollowing) gfl_base += w.p_capacity;
    if (!(sg_base > 0.0) || !(gfl_base > 0.0))
        throw ValidationError("sweep needs both synchronous and grid-following capacity");

    bool any_instance = false;
    for (const auto& inst : surrogate_instances(c))
        if (inst.family == family) { any_instance = true; break; }
    if (!any_instance) return {};  // nothing ever crosses

    const double demand = fallback_demand(c);
    std::vector<BoundaryPoint> out;
    for (int j = 0; j < grid.gfl_points; ++j) {
        const double gfl_cap =
            grid.gfl_min + (grid.gfl_max - grid.gfl_min) * j / (grid.gfl_points - 1);
        const double wind_factor = gfl_cap / gfl_base;

        double prev_sg = 0.0, prev_slack = 0.0;
        bool prev_valid = false;
        BoundaryPoint bp;
        bp.gfl_capacity = gfl_cap;
        bp.open = true;
        bp.sg_capacity = std::numeric_limits<double>::quiet_NaN();
        for (int i = 0; i < grid.sg_points; ++i) {
            const double sg_cap =
                grid.sg_min + (grid.sg_max - grid.sg_min) * i / (grid.sg_points - 1);
            const double sg_factor = sg_cap / sg_base;

            NetworkCase scaled = c;
            for (auto& g : scaled.generators) {
                g.p_max *= sg_factor;
                g.p_min *= sg_factor;
                g.r_max *= sg_factor;
                // impedance on the system base falls as the machine grows
                g.internal_reactance =
                    sg_factor > 1e-9 ? g.internal_reactance / sg_factor : 1e9;
            }
            for (auto& w : scaled.ibrs) {
                if (w.kind != IbrKind::GridFollowing) continue;
                w.p_capacity *= wind_factor;
                w.i_max_fault *= wind_factor;
            }

            OperatingPoint pt;
            pt.x.assign(scaled.generators.size(), 1.0);
            pt.q.assign(scaled.generators.size(), 0.0);
            for (const auto& g : scaled.generators) {
                pt.p.push_back(0.5 * (g.p_min + g.p_max));
                pt.R.push_back(std::min(g.r_max, 0.5 * (g.p_max - g.p_min)));
            }
            for (const auto& w : scaled.ibrs) pt.p_w.push_back(w.p_capacity);
            pt.demand_p = demand;

            const double slack = family_slack(scaled, family, pt, lim);
            if (slack >= 0.0) {
                if (i == 0) {
                    bp.sg_capacity = sg_cap;  // boundary at or below the scanned range
                } else if (prev_valid) {
                    bp.sg_capacity =
                        prev_sg - prev_slack * (sg_cap - prev_sg) / (slack - prev_slack);
                }
                bp.open = false;
                break;
            }
            prev_sg = sg_cap;
            prev_slack = slack;
            prev_valid = true;
        }
        out.push_back(bp);
    }
    return out;
}

double ViolationRates::rate(StabFamily f) const {
    switch (f) {
        case StabFamily::Frequency: return fs;
        case StabFamily::SmallSignal: return sss;
        case StabFamily::ShortCircuit: return scc;
        case StabFamily::VoltageDip: return dv;
        case StabFamily::VoltageStability: return vs;
        case StabFamily::Equilibrium: return eq;
    }
    return 0.0;
}

ViolationRates assess_violations(const NetworkCase& c, const std::vector<OperatingPoint>& hourly,
                                 const StabilityLimits& lim) {
    ViolationRates rates;
    rates.hours = int(hourly.size());
    if (hourly.empty()) return rates;
    int viol[6] = {0, 0, 0, 0, 0, 0};
    const StabFamily fams[6] = {StabFamily::Frequency,       StabFamily::SmallSignal,
                                StabFamily::ShortCircuit,    StabFamily::VoltageDip,
                                StabFamily::VoltageStability, StabFamily::Equilibrium};
    for (const auto& pt : hourly)
        for (int k = 0; k < 6; ++k)
            if (family_slack(c, fams[k], pt, lim) < 0.0) ++viol[k];
    rates.fs = double(viol[0]) / rates.hours;
    rates.sss = double(viol[1]) / rates.hours;
    rates.scc = double(viol[2]) / rates.hours;
    rates.dv = double(viol[3]) / rates.hours;
    rates.vs = double(viol[4]) / rates.hours;
    rates.eq = double(viol[5]) / rates.hours;
    return rates;
}

}  // namespace stabsched
