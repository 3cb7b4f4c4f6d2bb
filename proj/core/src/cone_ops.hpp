// Internal Jordan-algebra and Nesterov-Todd scaling kernels shared by the
// interior-point solver and its tests. Not installed.
#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stabsched/common.hpp"
#include "stabsched/conic.hpp"

namespace stabsched::detail {

using Vec = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Layout {
    int l = 0;                              // orthant size
    std::vector<std::pair<int, int>> socs;  // (offset, dim)
    int dim = 0;
    int degree = 0;  // l + number of SOC blocks
};

inline Layout make_layout(const std::vector<ConeBlock>& cones) {
    Layout lay;
    int off = 0;
    bool soc_seen = false;
    for (const auto& c : cones) {
        if (c.tag == ConeTag::NonNegative) {
            if (soc_seen) throw ValidationError("orthant block must precede SOC blocks");
            lay.l += c.dim;
        } else {
            soc_seen = true;
            if (c.dim < 2) throw ValidationError("SOC block must have dimension >= 2");
            lay.socs.emplace_back(off, c.dim);
        }
        off += c.dim;
    }
    lay.dim = off;
    lay.degree = lay.l + int(lay.socs.size());
    return lay;
}

inline void unit_element(const Layout& lay, Vec& e) {
    e.setZero(lay.dim);
    e.head(lay.l).setOnes();
    for (auto [off, d] : lay.socs) e[off] = 1.0;
}

inline double cone_margin(const Layout& lay, const Vec& v) {
    double m = kInf;
    for (int i = 0; i < lay.l; ++i) m = std::min(m, v[i]);
    for (auto [off, d] : lay.socs)
        m = std::min(m, v[off] - v.segment(off + 1, d - 1).norm());
    return m;
}

/// sup {a : v + a*dv stays in the cone}; kInf when unbounded.
inline double cone_step_max(const Layout& lay, const Vec& v, const Vec& dv) {
    double amax = kInf;
    for (int i = 0; i < lay.l; ++i)
        if (dv[i] < 0.0) amax = std::min(amax, -v[i] / dv[i]);
    for (auto [off, d] : lay.socs) {
        const double v0 = v[off], d0 = dv[off];
        const auto v1 = v.segment(off + 1, d - 1);
        const auto d1 = dv.segment(off + 1, d - 1);
        const double c2 = d0 * d0 - d1.squaredNorm();
        const double c1 = v0 * d0 - v1.dot(d1);
        const double c0 = v0 * v0 - v1.squaredNorm();
        // roots of c2 a^2 + 2 c1 a + c0 = 0
        const double disc = c1 * c1 - c2 * c0;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            double r1, r2;
            if (c2 != 0.0) {
                const double q = -(c1 + (c1 >= 0 ? sq : -sq));
                r1 = q / c2;
                r2 = (q != 0.0) ? c0 / q : kInf;
            } else if (c1 != 0.0) {
                r1 = -c0 / (2.0 * c1);
                r2 = kInf;
            } else {
                r1 = r2 = kInf;
            }
            for (double r : {r1, r2})
                if (r > 0.0 && v0 + r * d0 >= 0.0) amax = std::min(amax, r);
        }
        if (d0 < 0.0) amax = std::min(amax, -v0 / d0);
    }
    return amax;
}

inline Vec jordan_prod(const Layout& lay, const Vec& a, const Vec& b) {
    Vec r(lay.dim);
    r.head(lay.l) = a.head(lay.l).cwiseProduct(b.head(lay.l));
    for (auto [off, d] : lay.socs) {
        const auto a1 = a.segment(off + 1, d - 1);
        const auto b1 = b.segment(off + 1, d - 1);
        r[off] = a[off] * b[off] + a1.dot(b1);
        r.segment(off + 1, d - 1) = a[off] * b1 + b[off] * a1;
    }
    return r;
}

/// Solves lambda o u = w for u.
inline Vec jordan_div(const Layout& lay, const Vec& lambda, const Vec& w) {
    Vec u(lay.dim);
    u.head(lay.l) = w.head(lay.l).cwiseQuotient(lambda.head(lay.l));
    for (auto [off, d] : lay.socs) {
        const double l0 = lambda[off];
        const auto l1 = lambda.segment(off + 1, d - 1);
        const double det = l0 * l0 - l1.squaredNorm();
        const double u0 = (l0 * w[off] - l1.dot(w.segment(off + 1, d - 1))) / det;
        u[off] = u0;
        u.segment(off + 1, d - 1) = (w.segment(off + 1, d - 1) - u0 * l1) / l0;
    }
    return u;
}

/// Nesterov-Todd scaling for s, z in the cone interior: W z = W^{-1} s = lambda.
struct Scaling {
    Vec w_orth;  // sqrt(s_i / z_i)
    struct Soc {
        double eta;
        Vec wbar;  // wbar' J wbar = 1
    };
    std::vector<Soc> socs;
    Vec lambda;
};

inline Vec apply_W(const Layout& lay, const Scaling& sc, const Vec& v) {
    Vec r(lay.dim);
    r.head(lay.l) = sc.w_orth.cwiseProduct(v.head(lay.l));
    for (std::size_t k = 0; k < lay.socs.size(); ++k) {
        const auto [off, d] = lay.socs[k];
        const auto& w = sc.socs[k].wbar;
        const double eta = sc.socs[k].eta;
        const double v0 = v[off];
        const auto v1 = v.segment(off + 1, d - 1);
        const double wv = w.tail(d - 1).dot(v1);
        r[off] = eta * (w[0] * v0 + wv);
        r.segment(off + 1, d - 1) =
            eta * (v0 * w.tail(d - 1) + v1 + (wv / (1.0 + w[0])) * w.tail(d - 1));
    }
    return r;
}

inline Vec apply_Winv(const Layout& lay, const Scaling& sc, const Vec& v) {
    Vec r(lay.dim);
    r.head(lay.l) = v.head(lay.l).cwiseQuotient(sc.w_orth);
    for (std::size_t k = 0; k < lay.socs.size(); ++k) {
        const auto [off, d] = lay.socs[k];
        const auto& w = sc.socs[k].wbar;
        const double eta = sc.socs[k].eta;
        const double v0 = v[off];
        const auto v1 = v.segment(off + 1, d - 1);
        const double wv = w.tail(d - 1).dot(v1);
        r[off] = (w[0] * v0 - wv) / eta;
        r.segment(off + 1, d - 1) =
            (-v0 * w.tail(d - 1) + v1 + (wv / (1.0 + w[0])) * w.tail(d - 1)) / eta;
    }
    return r;
}

inline Vec apply_W2(const Layout& lay, const Scaling& sc, const Vec& v) {
    Vec r(lay.dim);
    r.head(lay.l) = sc.w_orth.cwiseAbs2().cwiseProduct(v.head(lay.l));
    for (std::size_t k = 0; k < lay.socs.size(); ++k) {
        const auto [off, d] = lay.socs[k];
        const auto& w = sc.socs[k].wbar;
        const double e2 = sc.socs[k].eta * sc.socs[k].eta;
        // W^2 = eta^2 (2 wbar wbar' - J)
        const double wv = w[0] * v[off] + w.tail(d - 1).dot(v.segment(off + 1, d - 1));
        r[off] = e2 * (2.0 * w[0] * wv - v[off]);
        r.segment(off + 1, d - 1) =
            e2 * (2.0 * wv * w.tail(d - 1) + v.segment(off + 1, d - 1));
    }
    return r;
}

inline Scaling compute_nt(const Layout& lay, const Vec& s, const Vec& z) {
    Scaling sc;
    sc.w_orth = (s.head(lay.l).cwiseQuotient(z.head(lay.l))).cwiseSqrt();
    sc.lambda.resize(lay.dim);
    sc.lambda.head(lay.l) = (s.head(lay.l).cwiseProduct(z.head(lay.l))).cwiseSqrt();
    sc.socs.reserve(lay.socs.size());
    for (auto [off, d] : lay.socs) {
        const double sres = s[off] * s[off] - s.segment(off + 1, d - 1).squaredNorm();
        const double zres = z[off] * z[off] - z.segment(off + 1, d - 1).squaredNorm();
        Vec sbar = s.segment(off, d) / std::sqrt(sres);
        Vec zbar = z.segment(off, d) / std::sqrt(zres);
        const double gamma =
            std::sqrt((1.0 + sbar[0] * zbar[0] + sbar.tail(d - 1).dot(zbar.tail(d - 1))) / 2.0);
        Vec wbar(d);
        wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
        wbar.tail(d - 1) = (sbar.tail(d - 1) - zbar.tail(d - 1)) / (2.0 * gamma);
        Scaling::Soc blk;
        blk.eta = std::pow(sres / zres, 0.25);
        blk.wbar = std::move(wbar);
        sc.socs.push_back(std::move(blk));
    }
    // lambda on the SOC blocks comes from the W action itself
    if (!lay.socs.empty()) {
        Vec lam = apply_W(lay, sc, z);
        for (auto [off, d] : lay.socs) sc.lambda.segment(off, d) = lam.segment(off, d);
    }
    return sc;
}

}  // namespace stabsched::detail
