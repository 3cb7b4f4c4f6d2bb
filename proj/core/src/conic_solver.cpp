#include "stabsched/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "cone_ops.hpp"
#include "stabsched/common.hpp"

namespace stabsched {

namespace {

using detail::Layout;
using detail::Scaling;
using detail::Vec;
using detail::kInf;

// ============================================================================
// KKT solvers for [0 A' G'; A 0 0; G 0 -W^2], regularized quasidefinitely
// ============================================================================

class KktBase {
public:
    virtual ~KktBase() = default;
    virtual bool factor(const Layout& lay, const Scaling& sc) = 0;
    // solves for (dx, dy, dz) given a stacked rhs, in place
    virtual void raw_solve(Vec& xyz) const = 0;
};

/// Dense normal equations: eliminate dz, then dy via a Schur complement.
class KktDense : public KktBase {
public:
    KktDense(const ConeProgram& pr, double reg) : pr_(pr), reg_(reg) {
        Ad_ = Eigen::MatrixXd(pr.A);
        Gd_ = Eigen::MatrixXd(pr.G);
    }

    bool factor(const Layout& lay, const Scaling& sc) override {
        lay_ = &lay;
        sc_ = &sc;
        const int n = pr_.n;
        Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n);
        if (lay.l > 0) {
            Eigen::MatrixXd go = Gd_.topRows(lay.l);
            phi.noalias() =
                go.transpose() * sc.w_orth.cwiseAbs2().cwiseInverse().asDiagonal() * go;
        }
        // SOC rows: (W^2)^{-1} = eta^{-2} (2 (J wbar)(J wbar)' - J)
        for (std::size_t k = 0; k < lay.socs.size(); ++k) {
            const auto [off, d] = lay.socs[k];
            const auto& w = sc.socs[k].wbar;
            const double ie2 = 1.0 / (sc.socs[k].eta * sc.socs[k].eta);
            Eigen::MatrixXd gb = Gd_.middleRows(off, d);
            Vec jw = w;
            jw.tail(d - 1) = -w.tail(d - 1);
            Vec u = gb.transpose() * jw;
            phi.noalias() += ie2 * 2.0 * u * u.transpose();
            phi.noalias() -= ie2 * (gb.row(0).transpose() * gb.row(0));
            phi.noalias() += ie2 * (gb.bottomRows(d - 1).transpose() * gb.bottomRows(d - 1));
        }
        // near convergence the scaling is extreme; grow the shift until the
        // factorization goes through and let refinement absorb the error
        double reg = reg_;
        for (int attempt = 0; attempt < 4; ++attempt, reg *= 1e3) {
            Eigen::MatrixXd phir = phi;
            phir.diagonal().array() += reg;
            phi_llt_.compute(phir);
            if (phi_llt_.info() != Eigen::Success) continue;
            if (pr_.p() > 0) {
                Eigen::MatrixXd schur = Ad_ * phi_llt_.solve(Ad_.transpose());
                schur.diagonal().array() += reg;
                schur_llt_.compute(schur);
                if (schur_llt_.info() != Eigen::Success) continue;
            }
            return true;
        }
        return false;
    }

    void raw_solve(Vec& xyz) const override {
        const int n = pr_.n, p = pr_.p(), m = pr_.m();
        Vec bx = xyz.head(n), by = xyz.segment(n, p), bz = xyz.tail(m);
        Vec f = bx + Gd_.transpose() * apply_W2inv(bz);
        Vec dy(p);
        if (p > 0) dy = schur_llt_.solve(Ad_ * phi_llt_.solve(f) - by);
        Vec dx = phi_llt_.solve(p > 0 ? Vec(f - Ad_.transpose() * dy) : f);
        Vec dz = apply_W2inv(Vec(Gd_ * dx - bz));
        xyz.head(n) = dx;
        xyz.segment(n, p) = dy;
        xyz.tail(m) = dz;
    }

private:
    Vec apply_W2inv(const Vec& v) const {
        const Layout& lay = *lay_;
        const Scaling& sc = *sc_;
        Vec r(lay.dim);
        r.head(lay.l) = v.head(lay.l).cwiseQuotient(sc.w_orth.cwiseAbs2());
        for (std::size_t k = 0; k < lay.socs.size(); ++k) {
            const auto [off, d] = lay.socs[k];
            const auto& w = sc.socs[k].wbar;
            const double ie2 = 1.0 / (sc.socs[k].eta * sc.socs[k].eta);
            Vec jw = w;
            jw.tail(d - 1) = -w.tail(d - 1);
            const double jv = jw[0] * v[off] + jw.tail(d - 1).dot(v.segment(off + 1, d - 1));
            r[off] = ie2 * (2.0 * jw[0] * jv - v[off]);
            r.segment(off + 1, d - 1) =
                ie2 * (2.0 * jv * jw.tail(d - 1) + v.segment(off + 1, d - 1));
        }
        return r;
    }

    const ConeProgram& pr_;
    double reg_;
    Eigen::MatrixXd Ad_, Gd_;
    const Layout* lay_ = nullptr;
    const Scaling* sc_ = nullptr;
    Eigen::LLT<Eigen::MatrixXd> phi_llt_;
    Eigen::LLT<Eigen::MatrixXd> schur_llt_;
};

/// Sparse LDL' on the full quasidefinite KKT matrix. The sparsity pattern is
/// analyzed once; only the scaling-block values change between factorizations.
class KktSparse : public KktBase {
public:
    KktSparse(const ConeProgram& pr, double reg) : pr_(pr), reg_(reg) {
        const int n = pr.n, p = pr.p();
        dim_ = n + p + pr.m();
        base_.reserve(std::size_t(pr.A.nonZeros() + pr.G.nonZeros()) * 2 + std::size_t(dim_));
        for (int j = 0; j < pr.A.outerSize(); ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(pr.A, j); it; ++it) {
                base_.emplace_back(n + int(it.row()), int(it.col()), it.value());
                base_.emplace_back(int(it.col()), n + int(it.row()), it.value());
            }
        for (int j = 0; j < pr.G.outerSize(); ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(pr.G, j); it; ++it) {
                base_.emplace_back(n + p + int(it.row()), int(it.col()), it.value());
                base_.emplace_back(int(it.col()), n + p + int(it.row()), it.value());
            }
    }

    bool factor(const Layout& lay, const Scaling& sc) override {
        const int n = pr_.n, p = pr_.p();
        double reg = reg_;
        for (int attempt = 0; attempt < 4; ++attempt, reg *= 1e3) {
            std::vector<Eigen::Triplet<double>> trip = base_;
            for (int i = 0; i < n; ++i) trip.emplace_back(i, i, reg);
            for (int i = 0; i < p; ++i) trip.emplace_back(n + i, n + i, -reg);
            for (int i = 0; i < lay.l; ++i) {
                const double w2 = sc.w_orth[i] * sc.w_orth[i];
                trip.emplace_back(n + p + i, n + p + i, -w2 - reg);
            }
            for (std::size_t k = 0; k < lay.socs.size(); ++k) {
                const auto [off, d] = lay.socs[k];
                const auto& w = sc.socs[k].wbar;
                const double e2 = sc.socs[k].eta * sc.socs[k].eta;
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) {
                        const double jab = (a == b) ? (a == 0 ? 1.0 : -1.0) : 0.0;
                        double v = -e2 * (2.0 * w[a] * w[b] - jab);
                        if (a == b) v -= reg;
                        trip.emplace_back(n + p + off + a, n + p + off + b, v);
                    }
            }
            Eigen::SparseMatrix<double> K(dim_, dim_);
            K.setFromTriplets(trip.begin(), trip.end());
            if (!analyzed_) {
                ldlt_.analyzePattern(K);
                analyzed_ = true;
            }
            ldlt_.factorize(K);
            if (ldlt_.info() == Eigen::Success) {
                Vec probe = Vec::Ones(dim_);
                Vec sol = ldlt_.solve(probe);
                if (sol.allFinite()) return true;
            }
        }
        return false;
    }

    void raw_solve(Vec& xyz) const override { xyz = ldlt_.solve(xyz); }

private:
    const ConeProgram& pr_;
    double reg_;
    int dim_ = 0;
    std::vector<Eigen::Triplet<double>> base_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
    bool analyzed_ = false;
};

// ============================================================================
// Solver driver
// ============================================================================

struct Work {
    const ConeProgram* pr = nullptr;
    Layout lay;
    Vec e;  // cone unit element

    /// Unregularized KKT operator, used for iterative refinement.
    Vec apply_khat(const Vec& u, const Scaling& sc) const {
        const int n = pr->n, p = pr->p(), m = pr->m();
        Vec r(n + p + m);
        const auto x = u.head(n);
        const auto y = u.segment(n, p);
        const auto z = u.tail(m);
        r.head(n) = pr->A.transpose() * y + pr->G.transpose() * z;
        r.segment(n, p) = pr->A * x;
        r.tail(m) = pr->G * x - detail::apply_W2(lay, sc, z);
        return r;
    }
};

Vec kkt_solve(const Work& wk, KktBase& kkt, const Scaling& sc, const Vec& rhs, int refine) {
    Vec u = rhs;
    kkt.raw_solve(u);
    // Refinement against the unregularized operator absorbs both the static
    // shift and factorization roundoff, which matters once the scaling turns
    // extreme near convergence. Stop when the residual reaches noise level or
    // the contraction fizzles; past that point further sweeps only churn.
    const double floor = 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    double prev = std::numeric_limits<double>::infinity();
    for (int r = 0; r < refine; ++r) {
        Vec res = rhs - wk.apply_khat(u, sc);
        const double rn = res.lpNorm<Eigen::Infinity>();
        if (rn <= floor || rn >= 0.5 * prev) break;
        prev = rn;
        kkt.raw_solve(res);
        u += res;
    }
    return u;
}

struct Point {
    Vec x, y, z, s;
    double tau = 1.0, kappa = 1.0;
};

/// Ruiz equilibration of the stacked [A; G] system. SOC row blocks share one
/// scale factor so cone membership of slacks is preserved.
struct Equilibration {
    Vec row_a, row_g, col;  // multiplicative factors applied to the data
};

Equilibration equilibrate(ConeProgram& pr, const Layout& lay, int passes) {
    const int n = pr.n, p = pr.p(), m = pr.m();
    Equilibration eq;
    eq.row_a = Vec::Ones(p);
    eq.row_g = Vec::Ones(m);
    eq.col = Vec::Ones(n);
    for (int pass = 0; pass < passes; ++pass) {
        Vec ra = Vec::Zero(p), rg = Vec::Zero(m), cc = Vec::Zero(n);
        for (int j = 0; j < pr.A.outerSize(); ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(pr.A, j); it; ++it) {
                const double a = std::abs(it.value());
                ra[it.row()] = std::max(ra[it.row()], a);
                cc[it.col()] = std::max(cc[it.col()], a);
            }
        for (int j = 0; j < pr.G.outerSize(); ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(pr.G, j); it; ++it) {
                const double a = std::abs(it.value());
                rg[it.row()] = std::max(rg[it.row()], a);
                cc[it.col()] = std::max(cc[it.col()], a);
            }
        for (auto [off, d] : lay.socs) {
            const double mx = rg.segment(off, d).maxCoeff();
            rg.segment(off, d).setConstant(mx);
        }
        auto factor = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; };
        Vec fa = ra.unaryExpr(factor), fg = rg.unaryExpr(factor), fc = cc.unaryExpr(factor);
        pr.A = fa.asDiagonal() * pr.A * fc.asDiagonal();
        pr.G = fg.asDiagonal() * pr.G * fc.asDiagonal();
        pr.b = pr.b.cwiseProduct(fa);
        pr.h = pr.h.cwiseProduct(fg);
        pr.c = pr.c.cwiseProduct(fc);
        eq.row_a = eq.row_a.cwiseProduct(fa);
        eq.row_g = eq.row_g.cwiseProduct(fg);
        eq.col = eq.col.cwiseProduct(fc);
    }
    return eq;
}

void bring_to_interior(const Layout& lay, const Vec& e, Vec& v) {
    const double m = detail::cone_margin(lay, v);
    if (m <= 0.0) v += (1.0 - m) * e;
}

SolverResult run_ipm(const ConeProgram& input, const SolverConfig& cfg, const WarmStart* hint) {
    input.validate();

    ConeProgram pr = input;  // equilibration mutates a copy
    Work wk;
    wk.pr = &pr;
    wk.lay = detail::make_layout(pr.cones);
    detail::unit_element(wk.lay, wk.e);
    Equilibration eq;
    if (cfg.equilibrate) {
        eq = equilibrate(pr, wk.lay, 3);
    } else {
        eq.row_a = Vec::Ones(pr.p());
        eq.row_g = Vec::Ones(pr.m());
        eq.col = Vec::Ones(pr.n);
    }

    // Costs can dwarf the constraint data by many orders of magnitude (load
    // shedding is priced far above energy), which wrecks the embedding's
    // conditioning. Solve with a normalized objective; duals scale back up.
    const double cscale = std::max(1.0, pr.c.lpNorm<Eigen::Infinity>());
    pr.c /= cscale;

    const int n = pr.n, p = pr.p(), m = pr.m();
    const double bnorm = pr.b.size() ? pr.b.norm() : 0.0;
    const double hnorm = pr.h.size() ? pr.h.norm() : 0.0;
    const double cnorm = pr.c.norm();

    SolverResult res;
    res.x = Vec::Zero(n);
    res.y = Vec::Zero(p);
    res.z = Vec::Zero(m);
    res.s = Vec::Zero(m);

    if (m == 0 && p == 0) {
        res.status = pr.c.isZero(0) ? SolveStatus::Optimal : SolveStatus::DualInfeasible;
        return res;
    }

    std::unique_ptr<KktBase> kkt;
    const bool dense = n <= cfg.dense_var_limit && (m + p) <= cfg.dense_row_limit &&
                       double(n) * double(m + p) <= 2e6;
    if (dense)
        kkt = std::make_unique<KktDense>(pr, cfg.static_reg);
    else
        kkt = std::make_unique<KktSparse>(pr, cfg.static_reg);

    Point pt;
    pt.x.setZero(n);
    pt.y.setZero(p);
    pt.z.setZero(m);
    pt.s.setZero(m);
    const Scaling id_sc = detail::compute_nt(wk.lay, wk.e, wk.e);  // W = identity
    const bool have_warm = hint != nullptr && hint->x.size() == n && hint->y.size() == p &&
                           hint->z.size() == m && hint->s.size() == m;
    if (have_warm) {
        pt.x = hint->x.cwiseQuotient(eq.col);
        pt.y = hint->y.cwiseQuotient(eq.row_a) / cscale;
        pt.s = hint->s.cwiseProduct(eq.row_g);
        pt.z = hint->z.cwiseQuotient(eq.row_g) / cscale;
        const double shift = 1e-4 * (1.0 + std::max(m ? pt.s.lpNorm<Eigen::Infinity>() : 0.0,
                                                    m ? pt.z.lpNorm<Eigen::Infinity>() : 0.0));
        pt.s += (std::max(0.0, -detail::cone_margin(wk.lay, pt.s)) + shift) * wk.e;
        pt.z += (std::max(0.0, -detail::cone_margin(wk.lay, pt.z)) + shift) * wk.e;
        pt.tau = 1.0;
        pt.kappa = std::max(1e-8, (pt.s.dot(pt.z)) / double(wk.lay.degree + 1));
    } else {
        if (!kkt->factor(wk.lay, id_sc)) throw SolverError("initial KKT factorization failed");
        Vec rhs1(n + p + m);
        rhs1.head(n).setZero();
        rhs1.segment(n, p) = pr.b;
        rhs1.tail(m) = pr.h;
        Vec u = kkt_solve(wk, *kkt, id_sc, rhs1, cfg.refine_steps);
        pt.x = u.head(n);
        pt.s = -u.tail(m);
        Vec rhs2(n + p + m);
        rhs2.setZero();
        rhs2.head(n) = -pr.c;
        Vec v = kkt_solve(wk, *kkt, id_sc, rhs2, cfg.refine_steps);
        pt.y = v.segment(n, p);
        pt.z = v.tail(m);
        bring_to_interior(wk.lay, wk.e, pt.s);
        bring_to_interior(wk.lay, wk.e, pt.z);
    }

    auto xi = [&](const Vec& u) {
        return pr.c.dot(u.head(n)) + pr.b.dot(u.segment(n, p)) + pr.h.dot(u.tail(m));
    };

    double best_score = kInf;
    double best_pres = kInf, best_dres = kInf, best_gap = kInf;
    Point best = pt;
    int stall = 0;
    SolveStatus status = SolveStatus::IterationLimit;

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        // residuals of the homogeneous embedding
        const Vec rx = pr.A.transpose() * pt.y + pr.G.transpose() * pt.z + pr.c * pt.tau;
        const Vec ry = pr.A * pt.x - pr.b * pt.tau;
        const Vec rz = pt.s + pr.G * pt.x - pr.h * pt.tau;
        const double rtau = pt.kappa + pr.c.dot(pt.x) + pr.b.dot(pt.y) + pr.h.dot(pt.z);
        const double mu = (pt.s.dot(pt.z) + pt.tau * pt.kappa) / double(wk.lay.degree + 1);

        const double pcost = pr.c.dot(pt.x) / pt.tau;
        const double dcost = -(pr.b.dot(pt.y) + pr.h.dot(pt.z)) / pt.tau;
        const double pres =
            std::max(ry.norm() / (1.0 + bnorm), rz.norm() / (1.0 + hnorm)) / pt.tau;
        const double dres = rx.norm() / (1.0 + cnorm) / pt.tau;
        const double absgap = pt.s.dot(pt.z) / (pt.tau * pt.tau);
        const double relgap = absgap / std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));

        res.trace.push_back({pcost, dcost, pres, dres, absgap, mu, 0.0});
        res.iterations = iter;
        if (cfg.verbose)
            std::fprintf(stderr, "it %3d  pcost % .6e  gap %.3e  pres %.3e  dres %.3e  mu %.3e\n",
                         iter, pcost, absgap, pres, dres, mu);

        const double score = std::max({pres, dres, relgap});
        if (score < best_score) {
            best_score = score;
            best_pres = pres;
            best_dres = dres;
            best_gap = std::min(absgap, relgap);
            best = pt;
        }

        if (pres <= cfg.tol_feas && dres <= cfg.tol_feas &&
            (absgap <= cfg.tol_gap || relgap <= cfg.tol_gap)) {
            status = SolveStatus::Optimal;
            best = pt;
            break;
        }
        const double nu = -(pr.b.dot(pt.y) + pr.h.dot(pt.z));
        if (nu > 0.0) {
            const double cert = (pr.A.transpose() * pt.y + pr.G.transpose() * pt.z).norm() / nu;
            if (cert <= cfg.tol_feas * std::max(1.0, cnorm) &&
                detail::cone_margin(wk.lay, pt.z) >= -1e-10 * (1.0 + pt.z.norm())) {
                status = SolveStatus::PrimalInfeasible;
                best = pt;
                best.y /= nu;
                best.z /= nu;
                break;
            }
        }
        const double chi = -pr.c.dot(pt.x);
        if (chi > 0.0) {
            const double cert = std::max((pr.A * pt.x).norm(), (pr.G * pt.x + pt.s).norm()) / chi;
            if (cert <= cfg.tol_feas * std::max(1.0, std::max(bnorm, hnorm)) &&
                detail::cone_margin(wk.lay, pt.s) >= -1e-10 * (1.0 + pt.s.norm())) {
                status = SolveStatus::DualInfeasible;
                best = pt;
                best.x /= chi;
                best.s /= chi;
                break;
            }
        }

        Scaling sc = detail::compute_nt(wk.lay, pt.s, pt.z);
        if (!kkt->factor(wk.lay, sc)) {
            status = SolveStatus::NumericalLimit;
            break;
        }

        Vec rhs_static(n + p + m);
        rhs_static.head(n) = -pr.c;
        rhs_static.segment(n, p) = pr.b;
        rhs_static.tail(m) = pr.h;
        const Vec u1 = kkt_solve(wk, *kkt, sc, rhs_static, cfg.refine_steps);
        const double denom = xi(u1) - pt.kappa / pt.tau;
        if (!std::isfinite(denom) || denom == 0.0) {
            status = SolveStatus::NumericalLimit;
            break;
        }

        auto direction = [&](const Vec& d1, const Vec& d2, const Vec& d3, double dtau_rhs,
                             const Vec& dc, double dkap_rhs, Vec& dx, Vec& dy, Vec& dz, Vec& ds,
                             double& dtau, double& dkap) {
            const Vec v = detail::jordan_div(wk.lay, sc.lambda, dc);
            Vec rhs(n + p + m);
            rhs.head(n) = d1;
            rhs.segment(n, p) = d2;
            rhs.tail(m) = d3 - detail::apply_W(wk.lay, sc, v);
            const Vec u2 = kkt_solve(wk, *kkt, sc, rhs, cfg.refine_steps);
            dtau = (dtau_rhs - dkap_rhs / pt.tau - xi(u2)) / denom;
            dx = u2.head(n) + dtau * u1.head(n);
            dy = u2.segment(n, p) + dtau * u1.segment(n, p);
            dz = u2.tail(m) + dtau * u1.tail(m);
            ds = detail::apply_W(wk.lay, sc, Vec(v - detail::apply_W(wk.lay, sc, dz)));
            dkap = (dkap_rhs - pt.kappa * dtau) / pt.tau;
        };

        // affine (predictor) direction
        const Vec lam2 = detail::jordan_prod(wk.lay, sc.lambda, sc.lambda);
        Vec dxa, dya, dza, dsa;
        double dtaua, dkapa;
        direction(-rx, -ry, -rz, -rtau, Vec(-lam2), -pt.tau * pt.kappa, dxa, dya, dza, dsa, dtaua,
                  dkapa);

        double amax = std::min(detail::cone_step_max(wk.lay, pt.s, dsa),
                               detail::cone_step_max(wk.lay, pt.z, dza));
        if (dtaua < 0.0) amax = std::min(amax, -pt.tau / dtaua);
        if (dkapa < 0.0) amax = std::min(amax, -pt.kappa / dkapa);
        const double alpha_aff = std::min(1.0, 0.999 * amax);
        const double mu_aff = ((pt.s + alpha_aff * dsa).dot(pt.z + alpha_aff * dza) +
                               (pt.tau + alpha_aff * dtaua) * (pt.kappa + alpha_aff * dkapa)) /
                              double(wk.lay.degree + 1);
        const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

        // combined direction with Mehrotra correction
        const Vec corr = detail::jordan_prod(wk.lay, detail::apply_Winv(wk.lay, sc, dsa),
                                             detail::apply_W(wk.lay, sc, dza));
        const Vec dc = sigma * mu * wk.e - lam2 - corr;
        const double dkap_rhs = sigma * mu - pt.tau * pt.kappa - dtaua * dkapa;
        Vec dx, dy, dz, ds;
        double dtau, dkap;
        const double rs = -(1.0 - sigma);
        direction(Vec(rs * rx), Vec(rs * ry), Vec(rs * rz), rs * rtau, dc, dkap_rhs, dx, dy, dz,
                  ds, dtau, dkap);

        amax = std::min(detail::cone_step_max(wk.lay, pt.s, ds),
                        detail::cone_step_max(wk.lay, pt.z, dz));
        if (dtau < 0.0) amax = std::min(amax, -pt.tau / dtau);
        if (dkap < 0.0) amax = std::min(amax, -pt.kappa / dkap);
        double alpha = std::min(1.0, 0.99 * amax);

        if (alpha < 1e-8) {
            // the corrector can corrupt the direction near the numerical
            // floor; a pure centering step often restores progress
            const Vec dc_center = Vec(mu * wk.e - lam2);
            direction(Vec(Vec::Zero(n)), Vec(Vec::Zero(p)), Vec(Vec::Zero(m)), 0.0, dc_center,
                      mu - pt.tau * pt.kappa, dx, dy, dz, ds, dtau, dkap);
            amax = std::min(detail::cone_step_max(wk.lay, pt.s, ds),
                            detail::cone_step_max(wk.lay, pt.z, dz));
            if (dtau < 0.0) amax = std::min(amax, -pt.tau / dtau);
            if (dkap < 0.0) amax = std::min(amax, -pt.kappa / dkap);
            alpha = std::min(1.0, 0.99 * amax);
        }
        res.trace.back().step = alpha;

        if (alpha < 1e-8) {
            if (++stall >= 2) {
                status = SolveStatus::NumericalLimit;
                break;
            }
        } else {
            stall = 0;
        }

        pt.x += alpha * dx;
        pt.y += alpha * dy;
        pt.z += alpha * dz;
        pt.s += alpha * ds;
        pt.tau += alpha * dtau;
        pt.kappa += alpha * dkap;
        if (!std::isfinite(pt.tau) || !std::isfinite(pt.kappa) || pt.tau <= 0.0) {
            status = SolveStatus::NumericalLimit;
            break;
        }
    }

    // Centering can break down once mu reaches the regularization floor; that
    // must not discard an iterate that had already met (a small multiple of)
    // the requested tolerances before the breakdown.
    if ((status == SolveStatus::NumericalLimit || status == SolveStatus::IterationLimit) &&
        best_pres <= 100.0 * cfg.tol_feas && best_dres <= 100.0 * cfg.tol_feas &&
        best_gap <= 100.0 * cfg.tol_gap)
        status = SolveStatus::Optimal;

    // map back to original coordinates
    res.status = status;
    if (status == SolveStatus::PrimalInfeasible) {
        res.y = best.y.cwiseProduct(eq.row_a);
        res.z = best.z.cwiseProduct(eq.row_g);
        return res;
    }
    if (status == SolveStatus::DualInfeasible) {
        res.x = best.x.cwiseProduct(eq.col);
        res.s = best.s.cwiseQuotient(eq.row_g);
        res.objective = input.c.dot(res.x);
        return res;
    }
    res.x = (best.x / best.tau).cwiseProduct(eq.col);
    res.y = (cscale * best.y / best.tau).cwiseProduct(eq.row_a);
    res.z = (cscale * best.z / best.tau).cwiseProduct(eq.row_g);
    res.s = (best.s / best.tau).cwiseQuotient(eq.row_g);
    res.objective = input.c.dot(res.x);
    res.primal_residual = std::max(
        input.b.size() ? (input.A * res.x - input.b).lpNorm<Eigen::Infinity>() : 0.0,
        input.h.size() ? (input.G * res.x + res.s - input.h).lpNorm<Eigen::Infinity>() : 0.0);
    res.dual_residual = (input.A.transpose() * res.y + input.G.transpose() * res.z + input.c)
                            .lpNorm<Eigen::Infinity>();
    res.duality_gap = res.s.dot(res.z);
    return res;
}

}  // namespace

void ConeProgram::validate() const {
    if (n < 0) throw ValidationError("conic program: negative variable count");
    if (c.size() != n) throw ValidationError("conic program: objective length mismatch");
    if (A.rows() > 0 && A.cols() != n)
        throw ValidationError("conic program: equality block column count mismatch");
    if (b.size() != A.rows()) throw ValidationError("conic program: equality rhs length mismatch");
    if (G.rows() > 0 && G.cols() != n)
        throw ValidationError("conic program: cone block column count mismatch");
    if (h.size() != G.rows()) throw ValidationError("conic program: cone rhs length mismatch");
    int total = 0;
    bool soc_seen = false;
    for (const auto& cb : cones) {
        if (cb.dim <= 0) throw ValidationError("conic program: nonpositive cone dimension");
        if (cb.tag == ConeTag::SecondOrder) {
            soc_seen = true;
            if (cb.dim < 2) throw ValidationError("conic program: SOC dimension < 2");
        } else if (soc_seen) {
            throw ValidationError("conic program: orthant block after SOC block");
        }
        total += cb.dim;
    }
    if (total != G.rows())
        throw ValidationError("conic program: cone dimensions do not partition the slack vector");
    if (!var_names.empty() && int(var_names.size()) != n)
        throw ValidationError("conic program: variable name count mismatch");
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::PrimalInfeasible: return "primal-infeasible";
        case SolveStatus::DualInfeasible: return "dual-infeasible";
        case SolveStatus::NumericalLimit: return "numerical-limit";
        case SolveStatus::IterationLimit: return "iteration-limit";
    }
    return "unknown";
}

void ConeProgram::dump(std::ostream& os) const {
    os << "conic-program v1\n";
    os << "n " << n << " p " << p() << " m " << m() << "\n";
    for (int i = 0; i < n; ++i)
        if (c[i] != 0.0) os << "c " << i << " " << format_double(c[i]) << "\n";
    for (int j = 0; j < A.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it)
            os << "A " << it.row() << " " << it.col() << " " << format_double(it.value()) << "\n";
    for (int i = 0; i < b.size(); ++i)
        if (b[i] != 0.0) os << "b " << i << " " << format_double(b[i]) << "\n";
    for (int j = 0; j < G.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(G, j); it; ++it)
            os << "G " << it.row() << " " << it.col() << " " << format_double(it.value()) << "\n";
    for (int i = 0; i < h.size(); ++i)
        if (h[i] != 0.0) os << "h " << i << " " << format_double(h[i]) << "\n";
    for (const auto& cb : cones)
        os << "cone " << (cb.tag == ConeTag::NonNegative ? "nn" : "soc") << " " << cb.dim << "\n";
    os << "end\n";
}

SolverResult solve(const ConeProgram& prog, const SolverConfig& cfg) {
    return run_ipm(prog, cfg, nullptr);
}

SolverResult solve_warm(const ConeProgram& prog, const WarmStart& hint, const SolverConfig& cfg) {
    return run_ipm(prog, cfg, &hint);
}

}  // namespace stabsched
