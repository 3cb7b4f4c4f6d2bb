#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stabsched/conic.hpp"

namespace stabsched {

/// Second-order-cone security model
///
///   g~(X) = c'X + d - |A X + b|,   operating point secure when g~ >= g_lim.
///
/// j is the number of rows of A; j = 0 degenerates to an affine model. The
/// concave shape lets the model under-estimate the true metric everywhere it
/// matters, which is what makes a conservative fit possible.
struct SocSurrogate {
    std::string kind;  ///< instance label, e.g. "scc_bus12"
    int j = 0;
    std::vector<std::string> feature_names;
    Eigen::MatrixXd A;  ///< j x n_features
    Eigen::VectorXd b;  ///< j
    Eigen::VectorXd c;  ///< n_features
    double d = 0.0;
    double g_lim = 0.0;

    double eval(const Eigen::VectorXd& X) const;
    void validate() const;
};

std::string serialize_surrogate(const SocSurrogate& s);
SocSurrogate parse_surrogate(const std::string& json_text);
SocSurrogate load_surrogate(const std::string& path);
void save_surrogate(const SocSurrogate& s, const std::string& path);

/// Sample indices split around the security limit. A sample can appear in
/// both `insecure` and `band` when it lies just below the limit.
struct SamplePartition {
    std::vector<int> insecure;  ///< g < g_lim
    std::vector<int> band;      ///< |g - g_lim| <= halfwidth
    std::vector<int> deep;      ///< g >= g_lim + halfwidth
    double band_halfwidth = 0.0;
};

/// Default band halfwidth: a tenth of the robust (median-deviation based)
/// spread of the labels.
double default_band(const Eigen::VectorXd& g);

SamplePartition partition_samples(const Eigen::VectorXd& g, double g_lim,
                                  double band_halfwidth);

struct FitConfig {
    /// <= 0 means use default_band(g).
    double band_halfwidth = -1.0;
    int max_ccp_iters = 100;
    /// Relative objective decrease below which the outer loop stops.
    double ccp_tol = 1e-6;
    /// Weight of the parameter-norm term that pins down flat directions.
    double ridge = 1e-8;
    /// Optional warm start, typically the fit for a smaller j. Non-owning;
    /// must outlive the call. Seeding with the previous j keeps the fit
    /// objective non-increasing as j grows.
    const SocSurrogate* warm_init = nullptr;
    SolverConfig solver;
};

struct FitReport {
    std::string method;      ///< "conservative" or "lsr"
    int type1_count = 0;     ///< samples called secure that are insecure
    double type1_err = 0.0;  ///< mean (g~ - g)/g over those samples
    int type2_count = 0;     ///< samples called insecure that are secure
    double type2_err = 0.0;
    double objective = 0.0;  ///< sum of squared residuals on the band set
    int iterations = 0;
    double wall_seconds = 0.0;
    std::string note;
};

/// Plain least-squares fit of g~ to all samples. Baseline only: nothing
/// stops it from misclassifying in either direction.
std::pair<SocSurrogate, FitReport> fit_lsr(const Eigen::MatrixXd& X,
                                           const Eigen::VectorXd& g, double g_lim,
                                           int j, const FitConfig& cfg = {});

/// Conservative fit: minimizes squared residuals over the band samples
/// subject to g~ < g_lim on every insecure training sample (so the training
/// type-1 count is zero by construction) and g~ >= g_lim on every sample at
/// least a band above the limit. Throws ValidationError when those
/// constraints cannot hold, e.g. when an insecure and a deeply secure sample
/// share identical features.
std::pair<SocSurrogate, FitReport> fit_conservative(const Eigen::MatrixXd& X,
                                                    const Eigen::VectorXd& g,
                                                    double g_lim, int j,
                                                    const FitConfig& cfg = {});

/// Classification counts and mean relative errors of a fitted model on a
/// labeled set. Leaves method/objective/iterations untouched.
FitReport evaluate_errors(const SocSurrogate& s, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& g);

}  // namespace stabsched
