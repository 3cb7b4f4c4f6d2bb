#include "stabsched/surrogate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "stabsched/common.hpp"
#include "cone_builder.hpp"

namespace stabsched {

using nlohmann::json;

// ============================================================================
// Model
// ============================================================================

double SocSurrogate::eval(const Eigen::VectorXd& X) const {
    if (X.size() != c.size())
        throw ValidationError("surrogate '" + kind + "': feature vector has " +
                              std::to_string(X.size()) + " entries, expected " +
                              std::to_string(c.size()));
    double v = c.dot(X) + d;
    if (j > 0) v -= (A * X + b).norm();
    return v;
}

void SocSurrogate::validate() const {
    const long n = long(feature_names.size());
    if (n == 0) throw ValidationError("surrogate '" + kind + "': no features");
    if (j < 0 || j == 1)
        throw ValidationError("surrogate '" + kind + "': j must be 0 or >= 2");
    if (c.size() != n)
        throw ValidationError("surrogate '" + kind + "': c has wrong length");
    if (A.rows() != j || (j > 0 && A.cols() != n))
        throw ValidationError("surrogate '" + kind + "': A must be j x n_features");
    if (b.size() != j)
        throw ValidationError("surrogate '" + kind + "': b has wrong length");
    if (!std::isfinite(d) || !std::isfinite(g_lim) || !c.allFinite() ||
        (j > 0 && (!A.allFinite() || !b.allFinite())))
        throw ValidationError("surrogate '" + kind + "': non-finite parameter");
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
        if (feature_names[i].empty())
            throw ValidationError("surrogate '" + kind + "': empty feature name");
        for (std::size_t k = i + 1; k < feature_names.size(); ++k)
            if (feature_names[i] == feature_names[k])
                throw ValidationError("surrogate '" + kind + "': duplicate feature '" +
                                      feature_names[i] + "'");
    }
}

// ============================================================================
// JSON I/O
// ============================================================================

std::string serialize_surrogate(const SocSurrogate& s) {
    s.validate();
    json out;
    out["kind"] = s.kind;
    out["j"] = s.j;
    out["feature_names"] = s.feature_names;
    json rows = json::array();
    for (int r = 0; r < s.j; ++r) {
        json row = json::array();
        for (long k = 0; k < s.A.cols(); ++k) row.push_back(s.A(r, k));
        rows.push_back(std::move(row));
    }
    out["A"] = std::move(rows);
    json bv = json::array();
    for (int r = 0; r < s.j; ++r) bv.push_back(s.b[r]);
    out["b"] = std::move(bv);
    json cv = json::array();
    for (long k = 0; k < s.c.size(); ++k) cv.push_back(s.c[k]);
    out["c"] = std::move(cv);
    out["d"] = s.d;
    out["g_lim"] = s.g_lim;
    return out.dump(2) + "\n";
}

SocSurrogate parse_surrogate(const std::string& json_text) {
    json in;
    try {
        in = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("surrogate: invalid JSON: ") + e.what());
    }
    if (!in.is_object()) throw ValidationError("surrogate: top level must be an object");
    static const char* kKeys[] = {"kind", "j", "feature_names", "A", "b", "c", "d", "g_lim"};
    for (auto it = in.begin(); it != in.end(); ++it) {
        bool ok = false;
        for (const char* k : kKeys)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw ValidationError("surrogate: unknown key '" + it.key() + "'");
    }
    for (const char* k : kKeys)
        if (!in.contains(k)) throw ValidationError(std::string("surrogate: missing key '") + k + "'");

    auto num = [&](const json& v, const char* where) -> double {
        if (!v.is_number()) throw ValidationError(std::string("surrogate: ") + where + " must be a number");
        return v.get<double>();
    };
    SocSurrogate s;
    if (!in["kind"].is_string()) throw ValidationError("surrogate: 'kind' must be a string");
    s.kind = in["kind"].get<std::string>();
    if (!in["j"].is_number_integer()) throw ValidationError("surrogate: 'j' must be an integer");
    s.j = in["j"].get<int>();
    if (!in["feature_names"].is_array()) throw ValidationError("surrogate: 'feature_names' must be an array");
    for (const auto& f : in["feature_names"]) {
        if (!f.is_string()) throw ValidationError("surrogate: feature names must be strings");
        s.feature_names.push_back(f.get<std::string>());
    }
    const long n = long(s.feature_names.size());
    if (!in["c"].is_array() || long(in["c"].size()) != n)
        throw ValidationError("surrogate: 'c' must be an array of one weight per feature");
    s.c.resize(n);
    for (long k = 0; k < n; ++k) s.c[k] = num(in["c"][std::size_t(k)], "c entries");
    s.d = num(in["d"], "'d'");
    s.g_lim = num(in["g_lim"], "'g_lim'");
    if (!in["A"].is_array() || int(in["A"].size()) != std::max(s.j, 0))
        throw ValidationError("surrogate: 'A' must have j rows");
    s.A.resize(s.j, n);
    for (int r = 0; r < s.j; ++r) {
        const auto& row = in["A"][std::size_t(r)];
        if (!row.is_array() || long(row.size()) != n)
            throw ValidationError("surrogate: each row of 'A' needs one entry per feature");
        for (long k = 0; k < n; ++k) s.A(r, k) = num(row[std::size_t(k)], "A entries");
    }
    if (!in["b"].is_array() || int(in["b"].size()) != std::max(s.j, 0))
        throw ValidationError("surrogate: 'b' must have j entries");
    s.b.resize(s.j);
    for (int r = 0; r < s.j; ++r) s.b[r] = num(in["b"][std::size_t(r)], "b entries");
    s.validate();
    return s;
}

SocSurrogate load_surrogate(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open surrogate file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_surrogate(buf.str());
}

void save_surrogate(const SocSurrogate& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write surrogate file: " + path);
    out << serialize_surrogate(s);
}

// ============================================================================
// Partition
// ============================================================================

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

double default_band(const Eigen::VectorXd& g) {
    std::vector<double> v(g.data(), g.data() + g.size());
    const double med = median_of(v);
    for (double& x : v) x = std::abs(x - med);
    double spread = 1.4826 * median_of(v);  // consistent with a normal sd
    if (spread <= 1e-12) {
        const double mean = g.size() ? g.mean() : 0.0;
        spread = std::sqrt((g.array() - mean).square().sum() / std::max<long>(g.size(), 1));
    }
    return std::max(0.1 * spread, 1e-9 * (1.0 + std::abs(med)));
}

SamplePartition partition_samples(const Eigen::VectorXd& g, double g_lim,
                                  double band_halfwidth) {
    if (!(band_halfwidth > 0.0)) throw ValidationError("band halfwidth must be positive");
    if (!g.allFinite()) throw ValidationError("labels contain non-finite values");
    SamplePartition part;
    part.band_halfwidth = band_halfwidth;
    for (long i = 0; i < g.size(); ++i) {
        if (g[i] < g_lim) part.insecure.push_back(int(i));
        if (std::abs(g[i] - g_lim) <= band_halfwidth) part.band.push_back(int(i));
        if (g[i] >= g_lim + band_halfwidth) part.deep.push_back(int(i));
    }
    return part;
}

// ============================================================================
// Fitting helpers
// ============================================================================

namespace {

struct Scaling {
    Eigen::VectorXd mu, s;  // feature shift / scale
    double g_lim = 0.0;
    double s_g = 1.0;  // label scale
};

Scaling make_scaling(const Eigen::MatrixXd& X, const Eigen::VectorXd& g, double g_lim) {
    Scaling sc;
    sc.g_lim = g_lim;
    const long N = X.rows(), n = X.cols();
    sc.mu = X.colwise().mean();
    sc.s.resize(n);
    for (long k = 0; k < n; ++k) {
        const double var = (X.col(k).array() - sc.mu[k]).square().sum() / double(N);
        sc.s[k] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    const double gm = g.mean();
    const double gv = (g.array() - gm).square().sum() / double(N);
    sc.s_g = gv > 1e-24 ? std::sqrt(gv) : 1.0;
    return sc;
}

Eigen::MatrixXd internal_features(const Eigen::MatrixXd& X, const Scaling& sc) {
    return (X.rowwise() - sc.mu.transpose()).array().rowwise() / sc.s.transpose().array();
}

Eigen::VectorXd internal_labels(const Eigen::VectorXd& g, const Scaling& sc) {
    return (g.array() - sc.g_lim) / sc.s_g;
}

// Internal parameter vector layout: c (n), d, A row-major (j*n), b (j).
struct Theta {
    Eigen::VectorXd v;
    long n = 0;
    int j = 0;

    static long size(long n, int j) { return n + 1 + long(j) * (n + 1); }

    double c(long k) const { return v[k]; }
    double d() const { return v[n]; }
    double A(int r, long k) const { return v[n + 1 + long(r) * n + k]; }
    double b(int r) const { return v[n + 1 + long(j) * n + r]; }

    Eigen::VectorXd cone_arg(const Eigen::VectorXd& x) const {
        Eigen::VectorXd u(j);
        for (int r = 0; r < j; ++r) {
            double acc = b(r);
            for (long k = 0; k < n; ++k) acc += A(r, k) * x[k];
            u[r] = acc;
        }
        return u;
    }

    double model(const Eigen::VectorXd& x) const {
        double val = d();
        for (long k = 0; k < n; ++k) val += c(k) * x[k];
        if (j > 0) val -= cone_arg(x).norm();
        return val;
    }
};

SocSurrogate externalize(const Theta& th, const Scaling& sc) {
    SocSurrogate s;
    s.j = th.j;
    const long n = th.n;
    s.c.resize(n);
    for (long k = 0; k < n; ++k) s.c[k] = sc.s_g * th.c(k) / sc.s[k];
    double d = th.d();
    for (long k = 0; k < n; ++k) d -= th.c(k) * sc.mu[k] / sc.s[k];
    s.d = sc.s_g * d + sc.g_lim;
    s.A.resize(th.j, n);
    s.b.resize(th.j);
    for (int r = 0; r < th.j; ++r) {
        double br = th.b(r);
        for (long k = 0; k < n; ++k) {
            s.A(r, k) = sc.s_g * th.A(r, k) / sc.s[k];
            br -= th.A(r, k) * sc.mu[k] / sc.s[k];
        }
        s.b[r] = sc.s_g * br;
    }
    s.g_lim = sc.g_lim;
    return s;
}

Theta internalize(const SocSurrogate& src, int j, const Scaling& sc) {
    const long n = src.c.size();
    Theta th;
    th.n = n;
    th.j = j;
    th.v = Eigen::VectorXd::Zero(Theta::size(n, j));
    for (long k = 0; k < n; ++k) th.v[k] = sc.s[k] * src.c[k] / sc.s_g;
    double d = (src.c.dot(sc.mu) + src.d - sc.g_lim) / sc.s_g;
    th.v[n] = d;
    const int rows = std::min(j, src.j);
    for (int r = 0; r < rows; ++r) {
        double br = src.b[r];
        for (long k = 0; k < n; ++k) {
            th.v[n + 1 + long(r) * n + k] = sc.s[k] * src.A(r, k) / sc.s_g;
            br += src.A(r, k) * sc.mu[k];
        }
        th.v[n + 1 + long(j) * n + r] = br / sc.s_g;
    }
    return th;
}

void check_fit_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& g, int j) {
    if (X.rows() == 0 || X.cols() == 0) throw ValidationError("fit: empty sample matrix");
    if (g.size() != X.rows()) throw ValidationError("fit: label count does not match sample count");
    if (!X.allFinite() || !g.allFinite()) throw ValidationError("fit: non-finite training data");
    if (j < 0 || j == 1) throw ValidationError("fit: j must be 0 or >= 2");
}

// Objective set: the band when it is non-empty, otherwise the samples nearest
// the limit, so the fit always has something to pull the boundary toward.
std::vector<int> objective_set(const SamplePartition& part, const Eigen::VectorXd& g,
                               double g_lim, std::string* note) {
    if (!part.band.empty()) return part.band;
    const long N = g.size();
    std::vector<int> idx(static_cast<std::size_t>(N));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        const double da = std::abs(g[a] - g_lim), db = std::abs(g[b] - g_lim);
        if (da != db) return da < db;
        return a < b;
    });
    const std::size_t k = std::min<std::size_t>(idx.size(), std::max<std::size_t>(10, idx.size() / 10));
    idx.resize(k);
    if (note && !note->empty()) *note += "; ";
    if (note) *note += "band empty, fitted against the " + std::to_string(k) + " samples nearest the limit";
    return idx;
}

double band_objective(const SocSurrogate& s, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& g, const std::vector<int>& set) {
    double acc = 0.0;
    for (int i : set) {
        const double r = g[i] - s.eval(X.row(i).transpose());
        acc += r * r;
    }
    return acc;
}

}  // namespace

// ============================================================================
// Error evaluation
// ============================================================================

FitReport evaluate_errors(const SocSurrogate& s, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& g) {
    if (g.size() != X.rows()) throw ValidationError("evaluate: label count does not match sample count");
    FitReport rep;
    double e1 = 0.0, e2 = 0.0;
    int n1 = 0, n2 = 0;
    for (long i = 0; i < X.rows(); ++i) {
        const double pred = s.eval(X.row(i).transpose());
        const bool pred_secure = pred >= s.g_lim;
        const bool truly_secure = g[i] >= s.g_lim;
        if (pred_secure && !truly_secure) {
            ++rep.type1_count;
            if (std::abs(g[i]) > 1e-12) { e1 += (pred - g[i]) / g[i]; ++n1; }
        } else if (!pred_secure && truly_secure) {
            ++rep.type2_count;
            if (std::abs(g[i]) > 1e-12) { e2 += (pred - g[i]) / g[i]; ++n2; }
        }
    }
    rep.type1_err = n1 ? e1 / n1 : 0.0;
    rep.type2_err = n2 ? e2 / n2 : 0.0;
    return rep;
}

// ============================================================================
// Least-squares baseline
// ============================================================================

namespace {

// Affine least squares in internal coordinates; shared by both fitters.
Theta affine_ls(const Eigen::MatrixXd& Xi, const Eigen::VectorXd& gi, std::string* note) {
    const long N = Xi.rows(), n = Xi.cols();
    Eigen::MatrixXd M(N, n + 1);
    M.leftCols(n) = Xi;
    M.col(n).setOnes();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
    Theta th;
    th.n = n;
    th.j = 0;
    if (qr.rank() == n + 1) {
        th.v = qr.solve(gi);
    } else {
        if (note && !note->empty()) *note += "; ";
        if (note) *note += "rank-deficient features, ridge applied";
        Eigen::MatrixXd H = M.transpose() * M;
        H.diagonal().array() += 1e-8 * std::max(1.0, H.diagonal().maxCoeff());
        th.v = H.ldlt().solve(M.transpose() * gi);
    }
    return th;
}

}  // namespace

std::pair<SocSurrogate, FitReport> fit_lsr(const Eigen::MatrixXd& X, const Eigen::VectorXd& g,
                                           double g_lim, int j, const FitConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    check_fit_inputs(X, g, j);
    const long N = X.rows(), n = X.cols();

    FitReport rep;
    rep.method = "lsr";

    const Scaling sc = make_scaling(X, g, g_lim);
    const Eigen::MatrixXd Xi = internal_features(X, sc);
    const Eigen::VectorXd gi = internal_labels(g, sc);

    Theta th = affine_ls(Xi, gi, &rep.note);
    rep.iterations = 1;

    if (j >= 2) {
        // Levenberg-Marquardt on r = gi - model(theta), seeded from the affine
        // fit with a small cone offset so the norm term has a gradient.
        Theta cur;
        cur.n = n;
        cur.j = j;
        cur.v = Eigen::VectorXd::Zero(Theta::size(n, j));
        cur.v.head(n + 1) = th.v;
        // asymmetric seed: identical rows would keep their gradients identical
        // and pin the search to a one-dimensional kink
        for (int r = 0; r < j; ++r) {
            for (long k = 0; k < n; ++k)
                cur.v[n + 1 + long(r) * n + k] = 0.02 * double((r * 31 + k * 17) % 5 - 2);
            cur.v[n + 1 + long(j) * n + r] = 0.1 * (r + 1);
        }

        const long np = cur.v.size();
        auto residuals = [&](const Theta& t, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
            r.resize(N);
            if (J) J->setZero(N, np);
            for (long i = 0; i < N; ++i) {
                const Eigen::VectorXd x = Xi.row(i).transpose();
                const Eigen::VectorXd u = t.cone_arg(x);
                const double nu = u.norm();
                r[i] = gi[i] - (t.v.head(n).dot(x) + t.v[n] - nu);
                if (!J) continue;
                J->row(i).head(n) = -x.transpose();
                (*J)(i, n) = -1.0;
                if (nu > 1e-12) {
                    for (int rr = 0; rr < j; ++rr) {
                        const double w = u[rr] / nu;
                        for (long k = 0; k < n; ++k) (*J)(i, n + 1 + long(rr) * n + k) = w * x[k];
                        (*J)(i, n + 1 + long(j) * n + rr) = w;
                    }
                }
            }
        };

        Eigen::VectorXd r;
        Eigen::MatrixXd J;
        residuals(cur, r, &J);
        double F = r.squaredNorm();
        double lambda = 1e-3;
        int iters = 0;
        for (; iters < 200; ++iters) {
            const Eigen::VectorXd grad = J.transpose() * r;
            if (grad.lpNorm<Eigen::Infinity>() < 1e-10 * std::max(1.0, F)) break;
            Eigen::MatrixXd H = J.transpose() * J;
            const Eigen::VectorXd diag = H.diagonal().cwiseMax(1e-12);
            bool accepted = false;
            for (int tries = 0; tries < 20; ++tries) {
                Eigen::MatrixXd Hd = H;
                Hd.diagonal() += lambda * diag;
                const Eigen::VectorXd step = -Hd.ldlt().solve(grad);
                Theta trial = cur;
                trial.v += step;
                Eigen::VectorXd rt;
                residuals(trial, rt, nullptr);
                const double Ft = rt.squaredNorm();
                if (Ft < F) {
                    cur = trial;
                    const double drop = F - Ft;
                    F = Ft;
                    residuals(cur, r, &J);
                    lambda = std::max(lambda / 3.0, 1e-12);
                    accepted = true;
                    if (drop <= 1e-12 * std::max(1.0, F)) iters = 200;
                    break;
                }
                lambda *= 10.0;
                if (lambda > 1e12) break;
            }
            if (!accepted) break;
        }
        rep.iterations = std::min(iters + 1, 200);
        th = cur;
    }

    SocSurrogate s = externalize(th, sc);
    const double band = cfg.band_halfwidth > 0 ? cfg.band_halfwidth : default_band(g);
    const SamplePartition part = partition_samples(g, g_lim, band);
    const std::vector<int> obj_set = objective_set(part, g, g_lim, nullptr);

    FitReport errs = evaluate_errors(s, X, g);
    rep.type1_count = errs.type1_count;
    rep.type1_err = errs.type1_err;
    rep.type2_count = errs.type2_count;
    rep.type2_err = errs.type2_err;
    rep.objective = band_objective(s, X, g, obj_set);
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(s), std::move(rep)};
}

// ============================================================================
// Conservative fit
// ============================================================================

namespace {

// Direction vectors for the linearized norm terms; zero when the cone
// argument vanishes (a valid under-estimate since v'u <= |u| for |v| <= 1).
Eigen::VectorXd safe_direction(const Eigen::VectorXd& u) {
    const double nu = u.norm();
    if (nu < 1e-12) return Eigen::VectorXd::Zero(u.size());
    return u / nu;
}

}  // namespace

std::pair<SocSurrogate, FitReport> fit_conservative(const Eigen::MatrixXd& X,
                                                    const Eigen::VectorXd& g, double g_lim,
                                                    int j, const FitConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    check_fit_inputs(X, g, j);
    const long N = X.rows(), n = X.cols();

    FitReport rep;
    rep.method = "conservative";

    const double band = cfg.band_halfwidth > 0 ? cfg.band_halfwidth : default_band(g);
    const SamplePartition part = partition_samples(g, g_lim, band);

    // An insecure and a deeply secure sample with identical features make the
    // hard constraints contradictory; report the pair instead of solving.
    {
        std::vector<int> order(static_cast<std::size_t>(N));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            for (long k = 0; k < n; ++k) {
                if (X(a, k) != X(b, k)) return X(a, k) < X(b, k);
            }
            return a < b;
        });
        auto cls = [&](int i) {
            if (g[i] < g_lim) return 1;
            if (g[i] >= g_lim + band) return 3;
            return 2;
        };
        for (std::size_t q = 0; q + 1 < order.size(); ++q) {
            std::size_t e = q;
            while (e + 1 < order.size() && X.row(order[e + 1]) == X.row(order[q])) ++e;
            if (e > q) {
                int lo = -1, hi = -1;
                for (std::size_t w = q; w <= e; ++w) {
                    if (cls(order[w]) == 1 && lo < 0) lo = order[w];
                    if (cls(order[w]) == 3 && hi < 0) hi = order[w];
                }
                if (lo >= 0 && hi >= 0)
                    throw ValidationError(
                        "conservative fit infeasible: insecure sample " + std::to_string(lo) +
                        " and secure sample " + std::to_string(hi) + " have identical features");
            }
            q = e;
        }
    }

    const std::vector<int> obj_set = objective_set(part, g, g_lim, &rep.note);

    const Scaling sc = make_scaling(X, g, g_lim);
    const Eigen::MatrixXd Xi = internal_features(X, sc);
    const Eigen::VectorXd gi = internal_labels(g, sc);
    const double eps_strict = (1e-6 * std::abs(g_lim) + 1e-9) / sc.s_g;

    const long ntheta = Theta::size(n, j);
    const long nb = long(obj_set.size());

    // Linearization points, one per sample that appears in a linearized row.
    std::vector<Eigen::VectorXd> vhat(std::size_t(N), Eigen::VectorXd::Zero(j));
    Theta init;
    init.n = n;
    init.j = j;
    init.v = Eigen::VectorXd::Zero(ntheta);
    if (cfg.warm_init) {
        if (cfg.warm_init->c.size() != n)
            throw ValidationError("fit: warm start has a different feature count");
        init = internalize(*cfg.warm_init, j, sc);
        if (j > 0)
            for (long i = 0; i < N; ++i)
                vhat[std::size_t(i)] = safe_direction(init.cone_arg(Xi.row(i).transpose()));
    }
    if (j >= 2 &&
        !(cfg.warm_init && cfg.warm_init->j >= 2 && cfg.warm_init->A.cwiseAbs().sum() > 0.0)) {
        // All-zero directions reduce the first iteration to an affine
        // separation; seed them from the unconstrained cone fit instead. A
        // zero-A warm start stays feasible because its linearized terms vanish
        // regardless of the directions.
        FitConfig lc;
        lc.band_halfwidth = band;
        const Theta seed = internalize(fit_lsr(X, g, g_lim, j, lc).first, j, sc);
        for (long i = 0; i < N; ++i)
            vhat[std::size_t(i)] = safe_direction(seed.cone_arg(Xi.row(i).transpose()));
    }

    auto build = [&]() {
        detail::ConeBuilder bld;
        // theta block
        for (long k = 0; k < n; ++k) bld.add_var("c" + std::to_string(k));
        bld.add_var("d");
        for (int r = 0; r < j; ++r)
            for (long k = 0; k < n; ++k)
                bld.add_var("A" + std::to_string(r) + "_" + std::to_string(k));
        for (int r = 0; r < j; ++r) bld.add_var("b" + std::to_string(r));
        // per-sample residual epigraphs
        std::vector<int> tvar(static_cast<std::size_t>(nb));
        std::vector<int> evar(static_cast<std::size_t>(nb));
        for (long q = 0; q < nb; ++q) {
            tvar[std::size_t(q)] = bld.add_var("t" + std::to_string(q));
            evar[std::size_t(q)] = bld.add_var("e" + std::to_string(q), 1.0);
        }
        const int rho = bld.add_var("rho", cfg.ridge);

        const long idx_d = n;
        auto idx_A = [&](int r, long k) { return int(n + 1 + long(r) * n + k); };
        auto idx_b = [&](int r) { return int(n + 1 + long(j) * n + r); };

        // |theta|^2 <= rho keeps flat directions pinned
        {
            std::vector<detail::AffineRow> rows;
            detail::AffineRow head;
            head.rhs = 1.0;
            head.add(rho, 1.0);
            rows.push_back(std::move(head));
            for (long k = 0; k < ntheta; ++k) {
                detail::AffineRow rw;
                rw.add(int(k), 2.0);
                rows.push_back(std::move(rw));
            }
            detail::AffineRow tail;
            tail.rhs = -1.0;
            tail.add(rho, 1.0);
            rows.push_back(std::move(tail));
            bld.add_soc(std::move(rows));
        }

        auto cone_tail_rows = [&](const Eigen::VectorXd& x) {
            std::vector<detail::AffineRow> rows;
            for (int r = 0; r < j; ++r) {
                detail::AffineRow rw;
                for (long k = 0; k < n; ++k) rw.add(idx_A(r, k), x[k]);
                rw.add(idx_b(r), 1.0);
                rows.push_back(std::move(rw));
            }
            return rows;
        };

        for (long q = 0; q < nb; ++q) {
            const int i = obj_set[std::size_t(q)];
            const Eigen::VectorXd x = Xi.row(i).transpose();
            // |A x + b| <= t + c'x + d - gamma  (over-prediction bound)
            detail::AffineRow head;
            head.rhs = -gi[i];
            head.add(tvar[std::size_t(q)], 1.0);
            for (long k = 0; k < n; ++k) head.add(int(k), x[k]);
            head.add(int(idx_d), 1.0);
            if (j == 0) {
                bld.add_nonneg(std::move(head));
            } else {
                std::vector<detail::AffineRow> rows;
                rows.push_back(std::move(head));
                for (auto& rw : cone_tail_rows(x)) rows.push_back(std::move(rw));
                bld.add_soc(std::move(rows));
            }
            // c'x + d - v'(A x + b) - gamma <= t  (under-prediction bound,
            // linearized; tighter than the true concave constraint)
            detail::AffineRow low;
            low.rhs = gi[i];
            low.add(tvar[std::size_t(q)], 1.0);
            for (long k = 0; k < n; ++k) low.add(int(k), -x[k]);
            low.add(int(idx_d), -1.0);
            const Eigen::VectorXd& v = vhat[std::size_t(i)];
            for (int r = 0; r < j; ++r) {
                if (v[r] == 0.0) continue;
                for (long k = 0; k < n; ++k) low.add(idx_A(r, k), v[r] * x[k]);
                low.add(idx_b(r), v[r]);
            }
            bld.add_nonneg(std::move(low));
            // t^2 <= e
            std::vector<detail::AffineRow> epi(3);
            epi[0].rhs = 1.0;
            epi[0].add(evar[std::size_t(q)], 1.0);
            epi[1].add(tvar[std::size_t(q)], 2.0);
            epi[2].rhs = -1.0;
            epi[2].add(evar[std::size_t(q)], 1.0);
            bld.add_soc(std::move(epi));
        }

        // insecure samples must stay insecure: model <= -eps via the same
        // linearized upper bound on the model
        for (int i : part.insecure) {
            const Eigen::VectorXd x = Xi.row(i).transpose();
            detail::AffineRow rw;
            rw.rhs = -eps_strict;
            for (long k = 0; k < n; ++k) rw.add(int(k), -x[k]);
            rw.add(int(idx_d), -1.0);
            const Eigen::VectorXd& v = vhat[std::size_t(i)];
            for (int r = 0; r < j; ++r) {
                if (v[r] == 0.0) continue;
                for (long k = 0; k < n; ++k) rw.add(idx_A(r, k), v[r] * x[k]);
                rw.add(idx_b(r), v[r]);
            }
            bld.add_nonneg(std::move(rw));
        }

        // deeply secure samples must stay secure: |A x + b| <= c'x + d
        for (int i : part.deep) {
            const Eigen::VectorXd x = Xi.row(i).transpose();
            detail::AffineRow head;
            for (long k = 0; k < n; ++k) head.add(int(k), x[k]);
            head.add(int(idx_d), 1.0);
            if (j == 0) {
                bld.add_nonneg(std::move(head));
            } else {
                std::vector<detail::AffineRow> rows;
                rows.push_back(std::move(head));
                for (auto& rw : cone_tail_rows(x)) rows.push_back(std::move(rw));
                bld.add_soc(std::move(rows));
            }
        }

        return bld.finish();
    };

    auto true_objective = [&](const Theta& th) {
        double acc = cfg.ridge * th.v.squaredNorm();
        for (int i : obj_set) {
            const double r = gi[i] - th.model(Xi.row(i).transpose());
            acc += r * r;
        }
        return acc;
    };

    Theta best = init;
    double f_best = std::numeric_limits<double>::infinity();
    if (cfg.warm_init) f_best = true_objective(init);

    SolverConfig scfg = cfg.solver;
    WarmStart hint;
    bool have_hint = false;
    double f_prev = std::numeric_limits<double>::infinity();
    int iters = 0;
    for (int it = 0; it < std::max(cfg.max_ccp_iters, 1); ++it) {
        const ConeProgram prog = build();
        SolverResult res = have_hint ? solve_warm(prog, hint, scfg) : solve(prog, scfg);
        if (res.status == SolveStatus::PrimalInfeasible)
            throw ValidationError(
                "conservative fit infeasible: the insecure and secure training samples cannot "
                "be separated by this model; widen the band or add cone rows");
        if (res.status != SolveStatus::Optimal) {
            if (it == 0) {
                SolverConfig retry = scfg;
                retry.static_reg = scfg.static_reg * 100;
                res = solve(prog, retry);
                if (res.status != SolveStatus::Optimal)
                    throw SolverError(std::string("conservative fit: solver stopped with status ") +
                                      to_string(res.status));
            } else {
                if (!rep.note.empty()) rep.note += "; ";
                rep.note += "stopped early on a numerical limit";
                ++iters;
                break;
            }
        }
        hint = WarmStart{res.x, res.y, res.z, res.s};
        have_hint = true;

        Theta th;
        th.n = n;
        th.j = j;
        th.v = res.x.head(ntheta);
        const double f = true_objective(th);
        ++iters;
        if (f < f_best) {
            f_best = f;
            best = th;
        }
        if (j == 0) break;
        if (it > 0 && std::abs(f_prev - f) <= cfg.ccp_tol * std::max(1.0, std::abs(f_prev))) break;
        f_prev = f;
        for (long i = 0; i < N; ++i)
            vhat[std::size_t(i)] = safe_direction(th.cone_arg(Xi.row(i).transpose()));
    }
    rep.iterations = iters;

    SocSurrogate s = externalize(best, sc);

    // Solver tolerances can leave a whisker of slack on the hard rows; shift
    // the intercept until every insecure training sample is classified as
    // such when evaluated in the original units.
    bool shifted = false;
    for (int round = 0; round < 10; ++round) {
        double worst = -std::numeric_limits<double>::infinity();
        for (int i : part.insecure)
            worst = std::max(worst, s.eval(X.row(i).transpose()) - g_lim);
        if (part.insecure.empty() || worst < 0) break;
        s.d -= worst + 1e-9 * (1.0 + std::abs(g_lim));
        shifted = true;
    }
    if (shifted) {
        if (!rep.note.empty()) rep.note += "; ";
        rep.note += "intercept shifted for strict conservatism";
    }

    FitReport errs = evaluate_errors(s, X, g);
    rep.type1_count = errs.type1_count;
    rep.type1_err = errs.type1_err;
    rep.type2_count = errs.type2_count;
    rep.type2_err = errs.type2_err;
    rep.objective = band_objective(s, X, g, obj_set);
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(s), std::move(rep)};
}

}  // namespace stabsched
