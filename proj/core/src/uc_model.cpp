#include "stabsched/uc_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cone_builder.hpp"
#include "stabsched/common.hpp"

namespace stabsched {

using nlohmann::json;

namespace {

struct Term {
    int col = -1;       // -1 marks a pure constant
    double coeff = 0.0;
    double constant = 0.0;
};

std::string bracket(const std::string& kind, const std::string& a, const std::string& b) {
    return kind + "[" + a + "," + b + "]";
}

}  // namespace

std::vector<int> UcModel::stability_columns(int g) const {
    std::vector<int> cols;
    cols.reserve(std::size_t(T) + 2 * std::size_t(N));
    for (int t = 0; t < T; ++t) cols.push_back(x_col(t, g));
    for (int n = 0; n < N; ++n) {
        cols.push_back(p_col(n, g));
        cols.push_back(r_col(n, g));
    }
    return cols;
}

UcModel build_uc(const NetworkCase& net, const ScenarioTree& tree,
                 const std::vector<AttachedSurrogate>& surrogates, const UcFlags& flags) {
    tree.validate();
    if (net.n_buses() == 0) throw ValidationError("scheduling model: case has no buses");
    if (tree.stages() > net.horizon())
        throw ValidationError("scheduling model: tree has " + std::to_string(tree.stages()) +
                              " stages but the case provides only " +
                              std::to_string(net.horizon()) + " hours of load data");
    for (const AttachedSurrogate& s : surrogates) s.model.validate();

    UcModel md;
    md.net = &net;
    md.tree = tree;
    md.flags = flags;
    md.attached = surrogates;
    md.T = tree.stages();
    md.N = tree.n_nodes();
    md.ng = int(net.generators.size());
    md.nw = int(net.ibrs.size());
    md.nb = net.n_buses();
    md.nl = int(net.loads.size());
    for (std::size_t e = 0; e < net.branches.size(); ++e)
        if (net.branches[e].in_service) md.branch_ids.push_back(int(e));
    md.ne = int(md.branch_ids.size());

    std::unordered_map<std::string, int> gen_of, ibr_of;
    for (int g = 0; g < md.ng; ++g) gen_of[net.generators[std::size_t(g)].id] = g;
    for (int w = 0; w < md.nw; ++w) ibr_of[net.ibrs[std::size_t(w)].id] = w;

    detail::ConeBuilder cb;
    const double base = net.system.base_mva;

    // --- variables ------------------------------------------------------
    // Commitment first, stage-major, so branching ties break on the earliest
    // stage and then on generator order.
    md.x_.resize(std::size_t(md.T) * std::size_t(md.ng));
    md.z_.resize(std::size_t(md.T) * std::size_t(md.ng));
    for (int t = 0; t < md.T; ++t)
        for (int g = 0; g < md.ng; ++g)
            md.x_[std::size_t(t) * std::size_t(md.ng) + std::size_t(g)] = cb.add_var(
                bracket("x", std::to_string(t), net.generators[std::size_t(g)].id));
    for (int t = 0; t < md.T; ++t)
        for (int g = 0; g < md.ng; ++g)
            md.z_[std::size_t(t) * std::size_t(md.ng) + std::size_t(g)] =
                cb.add_var(bracket("z", std::to_string(t), net.generators[std::size_t(g)].id),
                           net.generators[std::size_t(g)].startup_cost);

    md.p_.resize(std::size_t(md.N) * std::size_t(md.ng));
    md.q_.resize(std::size_t(md.N) * std::size_t(md.ng));
    md.r_.resize(std::size_t(md.N) * std::size_t(md.ng));
    md.pw_.resize(std::size_t(md.N) * std::size_t(md.nw));
    md.shed_.resize(std::size_t(md.N) * std::size_t(md.nl));
    md.cii_.resize(std::size_t(md.N) * std::size_t(md.nb));
    md.cij_.resize(std::size_t(md.N) * std::size_t(md.ne));
    md.sij_.resize(std::size_t(md.N) * std::size_t(md.ne));

    for (int n = 0; n < md.N; ++n) {
        const TreeNode& node = tree.nodes[std::size_t(n)];
        const double wn = node.prob * node.dt;  // expected hours through this node
        for (int g = 0; g < md.ng; ++g) {
            const GeneratorRecord& gen = net.generators[std::size_t(g)];
            md.p_[std::size_t(n) * std::size_t(md.ng) + std::size_t(g)] =
                cb.add_var(bracket("p", node.id, gen.id), wn * gen.marginal_cost * base);
            md.q_[std::size_t(n) * std::size_t(md.ng) + std::size_t(g)] =
                cb.add_var(bracket("q", node.id, gen.id));
            md.r_[std::size_t(n) * std::size_t(md.ng) + std::size_t(g)] =
                cb.add_var(bracket("R", node.id, gen.id));
            cb.add_cost(md.x_col(node.t, g), wn * gen.no_load_cost);
        }
        for (int w = 0; w < md.nw; ++w)
            md.pw_[std::size_t(n) * std::size_t(md.nw) + std::size_t(w)] =
                cb.add_var(bracket("pw", node.id, net.ibrs[std::size_t(w)].id));
        for (int l = 0; l < md.nl; ++l)
            md.shed_[std::size_t(n) * std::size_t(md.nl) + std::size_t(l)] = cb.add_var(
                bracket("shed", node.id, std::to_string(net.loads[std::size_t(l)].bus)),
                wn * net.system.shed_cost * base);
        for (int b = 0; b < md.nb; ++b)
            md.cii_[std::size_t(n) * std::size_t(md.nb) + std::size_t(b)] = cb.add_var(
                bracket("cii", node.id, std::to_string(net.buses[std::size_t(b)].id)));
        for (int e = 0; e < md.ne; ++e) {
            md.cij_[std::size_t(n) * std::size_t(md.ne) + std::size_t(e)] =
                cb.add_var(bracket("cij", node.id, "b" + std::to_string(md.branch_ids[std::size_t(e)])));
            md.sij_[std::size_t(n) * std::size_t(md.ne) + std::size_t(e)] =
                cb.add_var(bracket("sij", node.id, "b" + std::to_string(md.branch_ids[std::size_t(e)])));
        }
    }

    // --- commitment logic -------------------------------------------------
    for (int t = 0; t < md.T; ++t)
        for (int g = 0; g < md.ng; ++g) {
            detail::AffineRow lo;
            lo.add(md.x_col(t, g), 1.0);
            detail::AffineRow hi;
            hi.rhs = 1.0;
            hi.add(md.x_col(t, g), -1.0);
            BinarySpec bs;
            bs.col = md.x_col(t, g);
            bs.lb_row = cb.add_nonneg(lo);
            bs.ub_row = cb.add_nonneg(hi);
            md.mip.binaries.push_back(bs);
        }

    for (int t = 0; t < md.T; ++t)
        for (int g = 0; g < md.ng; ++g) {
            const int z = md.z_col(t, g);
            const int x = md.x_col(t, g);
            detail::AffineRow zlo;
            zlo.add(z, 1.0);
            cb.add_nonneg(zlo);
            detail::AffineRow zhi;
            zhi.rhs = 1.0;
            zhi.add(z, -1.0);
            cb.add_nonneg(zhi);

            // z_t >= x_t - x_{t-1}, z_t <= x_t, z_t <= 1 - x_{t-1}; together
            // with the boxes these pin z to the exact startup indicator even
            // at zero startup cost (units are off before the first stage)
            detail::AffineRow def;
            def.add(z, 1.0);
            def.add(x, -1.0);
            if (t > 0) def.add(md.x_col(t - 1, g), 1.0);
            cb.add_nonneg(def);
            detail::AffineRow cap1;
            cap1.add(x, 1.0);
            cap1.add(z, -1.0);
            cb.add_nonneg(cap1);
            if (t > 0) {
                detail::AffineRow cap2;
                cap2.rhs = 1.0;
                cap2.add(md.x_col(t - 1, g), -1.0);
                cap2.add(z, -1.0);
                cb.add_nonneg(cap2);
            }
        }

    // minimum up/down windows over startups
    for (int t = 0; t < md.T; ++t)
        for (int g = 0; g < md.ng; ++g) {
            const GeneratorRecord& gen = net.generators[std::size_t(g)];
            if (gen.min_up >= 2) {
                detail::AffineRow up;  // sum of recent startups <= x_t
                up.add(md.x_col(t, g), 1.0);
                for (int s = std::max(0, t - gen.min_up + 1); s <= t; ++s)
                    up.add(md.z_col(s, g), -1.0);
                cb.add_nonneg(up);
            }
            if (gen.min_down >= 2) {
                detail::AffineRow dn;  // no restart within min_down of a shutdown
                dn.rhs = 1.0;
                if (t - gen.min_down >= 0) dn.add(md.x_col(t - gen.min_down, g), -1.0);
                for (int s = std::max(0, t - gen.min_down + 1); s <= t; ++s)
                    dn.add(md.z_col(s, g), -1.0);
                cb.add_nonneg(dn);
            }
        }

    // --- dispatch boxes and ramps ----------------------------------------
    for (int n = 0; n < md.N; ++n) {
        const TreeNode& node = tree.nodes[std::size_t(n)];
        for (int g = 0; g < md.ng; ++g) {
            const GeneratorRecord& gen = net.generators[std::size_t(g)];
            const int x = md.x_col(node.t, g);
            detail::AffineRow pmin;  // p >= p_min x
            pmin.add(md.p_col(n, g), 1.0);
            pmin.add(x, -gen.p_min);
            cb.add_nonneg(pmin);
            detail::AffineRow head;  // p + R <= p_max x
            head.add(x, gen.p_max);
            head.add(md.p_col(n, g), -1.0);
            head.add(md.r_col(n, g), -1.0);
            cb.add_nonneg(head);
            detail::AffineRow qmin;  // q >= q_min x
            qmin.add(md.q_col(n, g), 1.0);
            qmin.add(x, -gen.q_min);
            cb.add_nonneg(qmin);
            detail::AffineRow qmax;  // q <= q_max x
            qmax.add(x, gen.q_max);
            qmax.add(md.q_col(n, g), -1.0);
            cb.add_nonneg(qmax);
            detail::AffineRow rlo;  // R >= 0
            rlo.add(md.r_col(n, g), 1.0);
            cb.add_nonneg(rlo);
            detail::AffineRow rhi;  // R <= r_max x
            rhi.add(x, gen.r_max);
            rhi.add(md.r_col(n, g), -1.0);
            cb.add_nonneg(rhi);

            // ramping against the parent node; a nonpositive rate means the
            // unit is not ramp-limited
            const int par = node.parent;
            const double su = gen.ramp_up > 0.0
                                  ? std::min(gen.p_max, std::max(gen.p_min, gen.ramp_up * node.dt))
                                  : gen.p_max;
            const double sd = gen.ramp_down > 0.0
                                  ? std::min(gen.p_max, std::max(gen.p_min, gen.ramp_down * node.dt))
                                  : gen.p_max;
            if (gen.ramp_up > 0.0) {
                detail::AffineRow up;  // p_n - p_par <= RU dt x_par + SU z_t
                up.add(md.p_col(n, g), -1.0);
                up.add(md.z_col(node.t, g), su);
                if (par >= 0) {
                    up.add(md.p_col(par, g), 1.0);
                    up.add(md.x_col(tree.nodes[std::size_t(par)].t, g), gen.ramp_up * node.dt);
                }
                cb.add_nonneg(up);
            }
            if (gen.ramp_down > 0.0 && par >= 0) {
                // p_par - p_n <= RD dt x_t + SD (z_t - x_t + x_par)
                detail::AffineRow dn;
                dn.add(md.p_col(n, g), 1.0);
                dn.add(md.p_col(par, g), -1.0);
                dn.add(md.x_col(node.t, g), gen.ramp_down * node.dt - sd);
                dn.add(md.z_col(node.t, g), sd);
                dn.add(md.x_col(tree.nodes[std::size_t(par)].t, g), sd);
                cb.add_nonneg(dn);
            }
        }
        for (int w = 0; w < md.nw; ++w) {
            const IbrRecord& ibr = net.ibrs[std::size_t(w)];
            detail::AffineRow lo;
            lo.add(md.pw_col(n, w), 1.0);
            cb.add_nonneg(lo);
            detail::AffineRow hi;
            hi.rhs = std::max(0.0, net.ibr_cf(w, node.t) * node.wind_scale * ibr.p_capacity);
            hi.add(md.pw_col(n, w), -1.0);
            cb.add_nonneg(hi);
        }
        for (int l = 0; l < md.nl; ++l) {
            const double demand =
                std::max(0.0, net.loads[std::size_t(l)].p[std::size_t(node.t)] * node.demand_scale);
            detail::AffineRow lo;
            lo.add(md.shed_col(n, l), 1.0);
            cb.add_nonneg(lo);
            detail::AffineRow hi;
            hi.rhs = demand;
            hi.add(md.shed_col(n, l), -1.0);
            cb.add_nonneg(hi);
        }
        for (int b = 0; b < md.nb; ++b) {
            const BusRecord& bus = net.buses[std::size_t(b)];
            detail::AffineRow lo;
            lo.rhs = -bus.v_min * bus.v_min;
            lo.add(md.cii_col(n, b), 1.0);
            cb.add_nonneg(lo);
            detail::AffineRow hi;
            hi.rhs = bus.v_max * bus.v_max;
            hi.add(md.cii_col(n, b), -1.0);
            cb.add_nonneg(hi);
        }
    }

    // --- network ----------------------------------------------------------
    // Branch-flow SOC relaxation on (c_ii, c_ij, s_ij) with the series
    // admittance y = g + jb of each in-service branch:
    //   P_ij = g (c_ii - c_ij) - b s_ij
    //   Q_ij = -b (c_ii - c_ij) - g s_ij - (b_sh / 2) c_ii
    //   c_ij^2 + s_ij^2 <= c_ii c_jj
    for (int n = 0; n < md.N; ++n) {
        const TreeNode& node = tree.nodes[std::size_t(n)];
        std::vector<detail::AffineRow> bal_p(std::size_t(md.nb));
        std::vector<detail::AffineRow> bal_q(std::size_t(md.nb));
        for (int b = 0; b < md.nb; ++b) {
            for (int g : net.gens_at_bus[std::size_t(b)]) {
                bal_p[std::size_t(b)].add(md.p_col(n, g), 1.0);
                bal_q[std::size_t(b)].add(md.q_col(n, g), 1.0);
            }
            for (int w : net.ibrs_at_bus[std::size_t(b)])
                bal_p[std::size_t(b)].add(md.pw_col(n, w), 1.0);
            for (int l : net.loads_at_bus[std::size_t(b)]) {
                bal_p[std::size_t(b)].add(md.shed_col(n, l), 1.0);
                bal_p[std::size_t(b)].rhs -=
                    net.loads[std::size_t(l)].p[std::size_t(node.t)] * node.demand_scale;
                bal_q[std::size_t(b)].rhs -=
                    net.loads[std::size_t(l)].q[std::size_t(node.t)] * node.demand_scale;
            }
        }

        for (int e = 0; e < md.ne; ++e) {
            const BranchRecord& br = net.branches[std::size_t(md.branch_ids[std::size_t(e)])];
            const int bi = net.bus_of(br.from);
            const int bj = net.bus_of(br.to);
            const double zsq = br.r * br.r + br.x * br.x;
            const double gse = br.r / zsq;
            const double bse = -br.x / zsq;
            const double bsh2 = br.b_sh / 2.0;
            const int ci = md.cii_col(n, bi);
            const int cj = md.cii_col(n, bj);
            const int cc = md.cij_[std::size_t(n) * std::size_t(md.ne) + std::size_t(e)];
            const int ss = md.sij_[std::size_t(n) * std::size_t(md.ne) + std::size_t(e)];

            // net withdrawal of the branch at each end
            bal_p[std::size_t(bi)].add(ci, -gse);
            bal_p[std::size_t(bi)].add(cc, gse);
            bal_p[std::size_t(bi)].add(ss, bse);
            bal_q[std::size_t(bi)].add(ci, bse + bsh2);
            bal_q[std::size_t(bi)].add(cc, -bse);
            bal_q[std::size_t(bi)].add(ss, gse);

            bal_p[std::size_t(bj)].add(cj, -gse);
            bal_p[std::size_t(bj)].add(cc, gse);
            bal_p[std::size_t(bj)].add(ss, -bse);
            bal_q[std::size_t(bj)].add(cj, bse + bsh2);
            bal_q[std::size_t(bj)].add(cc, -bse);
            bal_q[std::size_t(bj)].add(ss, -gse);

            detail::AffineRow cpos;  // small-angle side of the relaxation
            cpos.add(cc, 1.0);
            cb.add_nonneg(cpos);

            std::vector<detail::AffineRow> cone(4);
            cone[0].add(ci, 1.0);
            cone[0].add(cj, 1.0);
            cone[1].add(cc, 2.0);
            cone[2].add(ss, 2.0);
            cone[3].add(ci, 1.0);
            cone[3].add(cj, -1.0);
            cb.add_soc(std::move(cone));

            if (br.s_max > 0.0) {
                std::vector<detail::AffineRow> fwd(3);
                fwd[0].rhs = br.s_max;
                fwd[1].add(ci, gse);
                fwd[1].add(cc, -gse);
                fwd[1].add(ss, -bse);
                fwd[2].add(ci, -bse - bsh2);
                fwd[2].add(cc, bse);
                fwd[2].add(ss, -gse);
                cb.add_soc(std::move(fwd));
                std::vector<detail::AffineRow> rev(3);
                rev[0].rhs = br.s_max;
                rev[1].add(cj, gse);
                rev[1].add(cc, -gse);
                rev[1].add(ss, bse);
                rev[2].add(cj, -bse - bsh2);
                rev[2].add(cc, bse);
                rev[2].add(ss, gse);
                cb.add_soc(std::move(rev));
            }
        }

        for (int b = 0; b < md.nb; ++b) {
            cb.add_eq(std::move(bal_p[std::size_t(b)]));
            cb.add_eq(std::move(bal_q[std::size_t(b)]));
        }
    }

    // --- stability surrogates ----------------------------------------------
    // One cone block per (node, surrogate), appended last so the rows form
    // recognizable spans; the marginal-unit analysis rewrites exactly these.
    struct PendingSpan {
        bool soc = false;
        int idx = 0;  // orthant row or SOC ordinal
        int node = 0;
        int surr = 0;
    };
    std::vector<PendingSpan> pending;

    for (int n = 0; n < md.N; ++n) {
        const TreeNode& node = tree.nodes[std::size_t(n)];
        for (std::size_t si = 0; si < surrogates.size(); ++si) {
            const SocSurrogate& m = surrogates[si].model;
            const int nf = int(m.feature_names.size());
            std::vector<Term> terms(static_cast<std::size_t>(nf));
            for (int k = 0; k < nf; ++k) {
                const std::string& name = m.feature_names[std::size_t(k)];
                Term& tm = terms[std::size_t(k)];
                const auto split = name.find(':');
                const std::string head = name.substr(0, split);
                const std::string id =
                    split == std::string::npos ? std::string() : name.substr(split + 1);
                auto gen_at = [&](const std::string& gid) {
                    const auto it = gen_of.find(gid);
                    if (it == gen_of.end())
                        throw ValidationError("surrogate " + m.kind + ": unknown generator '" +
                                              gid + "' in feature '" + name + "'");
                    return it->second;
                };
                auto ibr_at = [&](const std::string& wid) {
                    const auto it = ibr_of.find(wid);
                    if (it == ibr_of.end())
                        throw ValidationError("surrogate " + m.kind + ": unknown IBR '" + wid +
                                              "' in feature '" + name + "'");
                    return it->second;
                };
                if (name == "demand_total") {
                    tm.constant = net.total_load_p(node.t) * node.demand_scale;
                } else if (head == "x") {
                    tm.col = md.x_col(node.t, gen_at(id));
                    tm.coeff = 1.0;
                } else if (head == "p") {
                    tm.col = md.p_col(n, gen_at(id));
                    tm.coeff = 1.0;
                } else if (head == "R") {
                    tm.col = md.r_col(n, gen_at(id));
                    tm.coeff = 1.0;
                } else if (head == "pw") {
                    tm.col = md.pw_col(n, ibr_at(id));
                    tm.coeff = 1.0;
                } else if (head == "cap") {
                    const int w = ibr_at(id);
                    const IbrRecord& ibr = net.ibrs[std::size_t(w)];
                    if (ibr.p_capacity > 0.0) {
                        tm.col = md.pw_col(n, w);
                        tm.coeff = ibr.i_max_fault / ibr.p_capacity;
                    }
                } else {
                    throw ValidationError("surrogate " + m.kind + ": unresolvable feature '" +
                                          name + "'");
                }
            }

            detail::AffineRow headrow;  // c'phi + d - g_lim >= |A phi + b|
            headrow.rhs = m.d - m.g_lim;
            for (int k = 0; k < nf; ++k) {
                headrow.rhs += m.c[k] * terms[std::size_t(k)].constant;
                if (terms[std::size_t(k)].col >= 0)
                    headrow.add(terms[std::size_t(k)].col, m.c[k] * terms[std::size_t(k)].coeff);
            }
            PendingSpan span;
            span.node = n;
            span.surr = int(si);
            if (m.j == 0) {
                span.soc = false;
                span.idx = cb.add_nonneg(std::move(headrow));
            } else {
                std::vector<detail::AffineRow> block;
                block.push_back(std::move(headrow));
                for (int r = 0; r < m.j; ++r) {
                    detail::AffineRow tail;
                    tail.rhs = m.b[r];
                    for (int k = 0; k < nf; ++k) {
                        tail.rhs += m.A(r, k) * terms[std::size_t(k)].constant;
                        if (terms[std::size_t(k)].col >= 0)
                            tail.add(terms[std::size_t(k)].col,
                                     m.A(r, k) * terms[std::size_t(k)].coeff);
                    }
                    block.push_back(std::move(tail));
                }
                span.soc = true;
                span.idx = cb.add_soc(std::move(block));
            }
            pending.push_back(span);
        }
    }

    md.mip.base = cb.finish();
    for (const PendingSpan& ps : pending) {
        UcModel::StabSpan span;
        span.row = ps.soc ? cb.soc_first_row(ps.idx) : ps.idx;
        span.dim = ps.soc ? surrogates[std::size_t(ps.surr)].model.j + 1 : 1;
        span.node = ps.node;
        span.surr = ps.surr;
        md.stab_spans.push_back(span);
    }
    md.mip.validate();
    return md;
}

UcSolution interpret_solution(const UcModel& md, const BnbResult& bnb) {
    UcSolution sol;
    sol.case_name = md.net->name;
    sol.status = to_string(bnb.status);
    sol.feasible = bnb.found;
    sol.nodes = bnb.nodes;
    sol.solves = bnb.solves;
    sol.wall_seconds = bnb.wall_seconds;
    if (!bnb.found) return sol;

    sol.objective = bnb.objective;
    sol.bound = bnb.bound;
    sol.gap = bnb.gap();
    const Eigen::VectorXd& x = bnb.incumbent.x;

    auto bit = [&](int col) { return x[col] >= 0.5 ? 1 : 0; };
    sol.commit.assign(std::size_t(md.T), std::vector<int>(std::size_t(md.ng), 0));
    sol.startup.assign(std::size_t(md.T), std::vector<int>(std::size_t(md.ng), 0));
    for (int t = 0; t < md.T; ++t)
        for (int g = 0; g < md.ng; ++g) {
            sol.commit[std::size_t(t)][std::size_t(g)] = bit(md.x_col(t, g));
            sol.startup[std::size_t(t)][std::size_t(g)] = bit(md.z_col(t, g));
        }

    sol.states.resize(std::size_t(md.N));
    for (int n = 0; n < md.N; ++n) {
        const TreeNode& node = md.tree.nodes[std::size_t(n)];
        NodeState& st = sol.states[std::size_t(n)];
        st.id = node.id;
        st.t = node.t;
        st.prob = node.prob;
        st.dt = node.dt;
        st.p.resize(std::size_t(md.ng));
        st.q.resize(std::size_t(md.ng));
        st.R.resize(std::size_t(md.ng));
        for (int g = 0; g < md.ng; ++g) {
            st.p[std::size_t(g)] = x[md.p_col(n, g)];
            st.q[std::size_t(g)] = x[md.q_col(n, g)];
            st.R[std::size_t(g)] = x[md.r_col(n, g)];
        }
        st.pw.resize(std::size_t(md.nw));
        for (int w = 0; w < md.nw; ++w) st.pw[std::size_t(w)] = x[md.pw_col(n, w)];
        st.shed.resize(std::size_t(md.nl));
        for (int l = 0; l < md.nl; ++l) st.shed[std::size_t(l)] = x[md.shed_col(n, l)];
        st.v.resize(std::size_t(md.nb));
        for (int b = 0; b < md.nb; ++b)
            st.v[std::size_t(b)] = std::sqrt(std::max(0.0, x[md.cii_col(n, b)]));
    }
    return sol;
}

OperatingPoint operating_point(const UcModel& md, const UcSolution& sol, int node) {
    if (node < 0 || node >= md.N || !sol.feasible)
        throw ValidationError("operating_point: no dispatch for node " + std::to_string(node));
    const NodeState& st = sol.states[std::size_t(node)];
    OperatingPoint pt;
    pt.x.resize(std::size_t(md.ng));
    for (int g = 0; g < md.ng; ++g)
        pt.x[std::size_t(g)] = double(sol.commit[std::size_t(st.t)][std::size_t(g)]);
    pt.p = st.p;
    pt.q = st.q;
    pt.R = st.R;
    pt.p_w = st.pw;
    pt.demand_p =
        md.net->total_load_p(st.t) * md.tree.nodes[std::size_t(node)].demand_scale;
    pt.si_on = md.flags.si_on;
    pt.q_support_on = md.flags.q_support_on;
    return pt;
}

std::string serialize_solution(const NetworkCase& net, const UcSolution& sol) {
    json j;
    j["case"] = sol.case_name;
    j["status"] = sol.status;
    j["feasible"] = sol.feasible;
    j["objective"] = sol.objective;
    j["bound"] = sol.bound;
    j["gap"] = sol.gap;
    j["nodes"] = sol.nodes;
    j["solves"] = sol.solves;
    j["wall_seconds"] = sol.wall_seconds;

    json commit = json::object();
    json startup = json::object();
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        json cg = json::array();
        json sg = json::array();
        for (std::size_t t = 0; t < sol.commit.size(); ++t) {
            cg.push_back(sol.commit[t][g]);
            sg.push_back(sol.startup[t][g]);
        }
        commit[net.generators[g].id] = std::move(cg);
        startup[net.generators[g].id] = std::move(sg);
    }
    j["commit"] = std::move(commit);
    j["startup"] = std::move(startup);

    json states = json::array();
    for (const NodeState& st : sol.states) {
        json s;
        s["id"] = st.id;
        s["t"] = st.t;
        s["prob"] = st.prob;
        s["dt"] = st.dt;
        json p = json::object(), q = json::object(), R = json::object();
        for (std::size_t g = 0; g < net.generators.size(); ++g) {
            p[net.generators[g].id] = st.p[g];
            q[net.generators[g].id] = st.q[g];
            R[net.generators[g].id] = st.R[g];
        }
        s["p"] = std::move(p);
        s["q"] = std::move(q);
        s["R"] = std::move(R);
        json pw = json::object();
        for (std::size_t w = 0; w < net.ibrs.size(); ++w) pw[net.ibrs[w].id] = st.pw[w];
        s["pw"] = std::move(pw);
        json shed = json::object();
        for (std::size_t l = 0; l < net.loads.size(); ++l)
            shed[std::to_string(net.loads[l].bus)] = st.shed[l];
        s["shed"] = std::move(shed);
        json v = json::object();
        for (std::size_t b = 0; b < net.buses.size(); ++b)
            v[std::to_string(net.buses[b].id)] = st.v[b];
        s["v"] = std::move(v);
        states.push_back(std::move(s));
    }
    j["states"] = std::move(states);
    return j.dump(2) + "\n";
}

UcSolution parse_solution(const std::string& text, const NetworkCase& net) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("solution json: ") + e.what());
    }
    try {
        UcSolution sol;
        sol.case_name = j.at("case").get<std::string>();
        sol.status = j.at("status").get<std::string>();
        sol.feasible = j.at("feasible").get<bool>();
        sol.objective = j.at("objective").get<double>();
        sol.bound = j.at("bound").get<double>();
        sol.gap = j.at("gap").get<double>();
        sol.nodes = j.at("nodes").get<long>();
        sol.solves = j.at("solves").get<long>();
        sol.wall_seconds = j.at("wall_seconds").get<double>();

        const json& commit = j.at("commit");
        const json& startup = j.at("startup");
        std::size_t T = 0;
        if (!net.generators.empty() && commit.contains(net.generators.front().id))
            T = commit.at(net.generators.front().id).size();
        sol.commit.assign(T, std::vector<int>(net.generators.size(), 0));
        sol.startup.assign(T, std::vector<int>(net.generators.size(), 0));
        for (std::size_t g = 0; g < net.generators.size(); ++g) {
            const json& cg = commit.at(net.generators[g].id);
            const json& sg = startup.at(net.generators[g].id);
            if (cg.size() != T || sg.size() != T)
                throw ValidationError("solution json: ragged commitment for generator " +
                                      net.generators[g].id);
            for (std::size_t t = 0; t < T; ++t) {
                const int cv = cg.at(t).get<int>();
                const int sv = sg.at(t).get<int>();
                if ((cv != 0 && cv != 1) || (sv != 0 && sv != 1))
                    throw ValidationError("solution json: commitment values must be 0 or 1");
                sol.commit[t][g] = cv;
                sol.startup[t][g] = sv;
            }
        }

        for (const json& s : j.at("states")) {
            NodeState st;
            st.id = s.at("id").get<std::string>();
            st.t = s.at("t").get<int>();
            if (st.t < 0 || std::size_t(st.t) >= std::max<std::size_t>(T, 1))
                throw ValidationError("solution json: state stage out of range");
            st.prob = s.at("prob").get<double>();
            st.dt = s.at("dt").get<double>();
            for (const auto& gen : net.generators) {
                st.p.push_back(s.at("p").at(gen.id).get<double>());
                st.q.push_back(s.at("q").at(gen.id).get<double>());
                st.R.push_back(s.at("R").at(gen.id).get<double>());
            }
            for (const auto& ibr : net.ibrs)
                st.pw.push_back(s.at("pw").at(ibr.id).get<double>());
            for (const auto& load : net.loads)
                st.shed.push_back(s.at("shed").at(std::to_string(load.bus)).get<double>());
            for (const auto& bus : net.buses)
                st.v.push_back(s.at("v").at(std::to_string(bus.id)).get<double>());
            sol.states.push_back(std::move(st));
        }
        return sol;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("solution json: ") + e.what());
    }
}

}  // namespace stabsched
