#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "stabsched/common.hpp"
#include "stabsched/surrogate.hpp"

using namespace stabsched;
using doctest::Approx;

namespace {

SocSurrogate hand_model() {
    SocSurrogate s;
    s.kind = "scc_bus2";
    s.j = 2;
    s.feature_names = {"x:G1", "cap:W1"};
    s.A.resize(2, 2);
    s.A << 1.0, 0.0, 0.0, 2.0;
    s.b.resize(2);
    s.b << 0.1, -0.2;
    s.c.resize(2);
    s.c << 1.0, 0.0;
    s.d = 0.5;
    s.g_lim = 1.0;
    return s;
}

// uniform samples over a box, deterministic
Eigen::MatrixXd box_samples(int n, double lo, double hi, std::uint64_t seed, int dim = 2) {
    Rng rng(seed);
    Eigen::MatrixXd X(n, dim);
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < dim; ++d) X(i, d) = rng.uniform(lo, hi);
    return X;
}

}  // namespace

TEST_CASE("surrogate evaluation arithmetic") {
    const SocSurrogate s = hand_model();
    Eigen::VectorXd X(2);
    X << 2.0, 1.0;
    // 2 + 0.5 - |(2.1, 1.8)|
    CHECK(s.eval(X) == Approx(2.5 - std::sqrt(7.65)));

    SocSurrogate affine = s;
    affine.j = 0;
    affine.A.resize(0, 2);
    affine.b.resize(0);
    CHECK(affine.eval(X) == Approx(2.5));

    Eigen::VectorXd wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(s.eval(wrong), ValidationError);
}

TEST_CASE("surrogate json round trip is byte stable") {
    const SocSurrogate s = hand_model();
    const std::string text = serialize_surrogate(s);
    const SocSurrogate back = parse_surrogate(text);
    CHECK(back.kind == s.kind);
    CHECK(back.j == s.j);
    CHECK(back.feature_names == s.feature_names);
    CHECK(back.A == s.A);
    CHECK(back.b == s.b);
    CHECK(back.c == s.c);
    CHECK(back.d == s.d);
    CHECK(back.g_lim == s.g_lim);
    CHECK(serialize_surrogate(back) == text);
}

TEST_CASE("surrogate parser rejects malformed files") {
    const std::string good = serialize_surrogate(hand_model());
    CHECK_THROWS_AS(parse_surrogate("nope"), ValidationError);
    CHECK_THROWS_AS(parse_surrogate("[1,2]"), ValidationError);

    auto corrupt = [&](const std::string& from, const std::string& to) {
        std::string t = good;
        const auto pos = t.find(from);
        REQUIRE(pos != std::string::npos);
        t.replace(pos, from.size(), to);
        return t;
    };
    // missing key
    CHECK_THROWS_AS(parse_surrogate(corrupt("\"g_lim\"", "\"glim\"")), ValidationError);
    // j = 1 is not a valid shape
    CHECK_THROWS_AS(parse_surrogate(corrupt("\"j\": 2", "\"j\": 1")), ValidationError);
    // A row count no longer matches j
    CHECK_THROWS_AS(parse_surrogate(corrupt("\"j\": 2", "\"j\": 3")), ValidationError);
    // wrong type
    CHECK_THROWS_AS(parse_surrogate(corrupt("\"d\": 0.5", "\"d\": \"x\"")), ValidationError);
}

TEST_CASE("partition splits around the limit") {
    Eigen::VectorXd g(3);
    g << -1.0, 0.05, 2.0;
    const SamplePartition part = partition_samples(g, 0.1, 0.1);
    CHECK(part.insecure == std::vector<int>{0, 1});
    CHECK(part.band == std::vector<int>{1});
    CHECK(part.deep == std::vector<int>{2});
    CHECK(part.band_halfwidth == 0.1);
    CHECK_THROWS_AS(partition_samples(g, 0.1, 0.0), ValidationError);
}

TEST_CASE("default band uses the robust spread") {
    Eigen::VectorXd g(5);
    g << 0.0, 1.0, 2.0, 3.0, 4.0;
    // median 2, MAD 1
    CHECK(default_band(g) == Approx(0.1 * 1.4826));
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(4, 7.0);
    CHECK(default_band(flat) > 0.0);  // degenerate labels still give a usable band
}

TEST_CASE("evaluate_errors counts both error types") {
    SocSurrogate s;
    s.kind = "t";
    s.j = 0;
    s.feature_names = {"f"};
    s.A.resize(0, 1);
    s.b.resize(0);
    s.c.resize(1);
    s.c << 1.0;
    s.d = 0.0;
    s.g_lim = 1.0;  // prediction = feature value

    Eigen::MatrixXd X(4, 1);
    X << 2.0, 0.5, 2.0, 0.5;
    Eigen::VectorXd g(4);
    g << 0.5, 2.0, 2.0, 0.5;  // rows 0 and 1 are misclassified
    const FitReport rep = evaluate_errors(s, X, g);
    CHECK(rep.type1_count == 1);
    CHECK(rep.type2_count == 1);
    CHECK(rep.type1_err == Approx((2.0 - 0.5) / 0.5));
    CHECK(rep.type2_err == Approx((0.5 - 2.0) / 2.0));
}

TEST_CASE("conservative fit recovers an affine boundary") {
    const int N = 150;
    const Eigen::MatrixXd X = box_samples(N, -2.0, 2.0, 11);
    Eigen::VectorXd g(N);
    for (int i = 0; i < N; ++i) g[i] = 2.0 * X(i, 0) - X(i, 1) + 3.0;
    const double g_lim = 3.0;

    auto [s, rep] = fit_conservative(X, g, g_lim, 0);
    CHECK(rep.method == "conservative");
    CHECK(rep.type1_count == 0);
    CHECK(rep.objective < 1e-4);
    CHECK(rep.iterations >= 1);
    CHECK(s.j == 0);
    CHECK(s.g_lim == g_lim);
    // the learned gradient should be close to the generator
    CHECK(s.c[0] == Approx(2.0).epsilon(0.05));
    CHECK(s.c[1] == Approx(-1.0).epsilon(0.05));

    // determinism: the whole artifact is reproducible
    auto [s2, rep2] = fit_conservative(X, g, g_lim, 0);
    s.kind = s2.kind = "k";
    s.feature_names = s2.feature_names = {"a", "b"};
    CHECK(serialize_surrogate(s) == serialize_surrogate(s2));
    CHECK(rep2.type1_count == 0);
}

TEST_CASE("cone rows capture a circular boundary an affine model cannot") {
    // g = 2 - |X - (1,1)|: the secure region is a disk, exactly a j=2 shape
    const int N = 220;
    const Eigen::MatrixXd X = box_samples(N, -1.0, 3.0, 5);
    Eigen::VectorXd g(N);
    for (int i = 0; i < N; ++i) {
        const double dx = X(i, 0) - 1.0, dy = X(i, 1) - 1.0;
        g[i] = 2.0 - std::sqrt(dx * dx + dy * dy);
    }
    const double g_lim = 1.0;

    // a hyperplane cannot keep the outside of the disk insecure and the
    // inside secure at the same time
    CHECK_THROWS_AS(fit_conservative(X, g, g_lim, 0), ValidationError);

    auto [s, rep] = fit_conservative(X, g, g_lim, 2);
    CHECK(rep.type1_count == 0);
    CHECK(rep.type2_count <= 2);
    CHECK(rep.objective < 1e-3);

    // the recovered model reproduces the oracle away from the training set
    Eigen::VectorXd probe(2);
    probe << 1.5, 0.5;
    const double truth = 2.0 - std::sqrt(0.25 + 0.25);
    CHECK(s.eval(probe) == Approx(truth).epsilon(0.05));
}

TEST_CASE("chained fits never lose ground as the cone grows") {
    // monotone but curved labels keep every shape feasible
    const int N = 180;
    const Eigen::MatrixXd X = box_samples(N, -1.5, 1.5, 23);
    Eigen::VectorXd g(N);
    for (int i = 0; i < N; ++i) {
        const double u = X(i, 0) + 2.0 * X(i, 1);
        g[i] = u * u * u / 10.0;
    }
    const double g_lim = 0.05;

    auto [s0, r0] = fit_conservative(X, g, g_lim, 0);
    FitConfig cfg2;
    cfg2.warm_init = &s0;
    auto [s2, r2] = fit_conservative(X, g, g_lim, 2, cfg2);
    FitConfig cfg3;
    cfg3.warm_init = &s2;
    auto [s3, r3] = fit_conservative(X, g, g_lim, 3, cfg3);

    CHECK(r0.type1_count == 0);
    CHECK(r2.type1_count == 0);
    CHECK(r3.type1_count == 0);
    CHECK(r2.objective <= r0.objective + 1e-9);
    CHECK(r3.objective <= r2.objective + 1e-9);
}

TEST_CASE("identical features with contradictory labels are reported") {
    Eigen::MatrixXd X(4, 2);
    X << 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 2.0, 2.0;
    Eigen::VectorXd g(4);
    g << -1.0, 1.5, 5.0, 1.6;  // rows 0 and 2 collide across the limit
    FitConfig cfg;
    cfg.band_halfwidth = 0.5;
    CHECK_THROWS_WITH_AS(fit_conservative(X, g, 1.0, 0, cfg),
                         doctest::Contains("identical features"), ValidationError);
}

TEST_CASE("least-squares baseline fits tightly on its own terms") {
    const int N = 120;
    const Eigen::MatrixXd X = box_samples(N, -2.0, 2.0, 31);
    Eigen::VectorXd g(N);
    for (int i = 0; i < N; ++i) g[i] = 0.5 * X(i, 0) + X(i, 1) - 0.25;

    auto [s, rep] = fit_lsr(X, g, 0.0, 0);
    CHECK(rep.method == "lsr");
    CHECK(rep.type1_count == 0);
    CHECK(rep.type2_count == 0);
    CHECK(s.c[0] == Approx(0.5));
    CHECK(s.c[1] == Approx(1.0));
    CHECK(s.d == Approx(-0.25));

    // the cone variant must at least match the affine residual on disk data
    Eigen::VectorXd gd(N);
    for (int i = 0; i < N; ++i) {
        const double dx = X(i, 0) - 0.5, dy = X(i, 1) + 0.5;
        gd[i] = 1.5 - std::sqrt(dx * dx + dy * dy);
    }
    auto [sa, ra] = fit_lsr(X, gd, 0.5, 0);
    auto [sc, rc] = fit_lsr(X, gd, 0.5, 2);
    double rms_a = 0.0, rms_c = 0.0;
    for (int i = 0; i < N; ++i) {
        const double ea = gd[i] - sa.eval(X.row(i).transpose());
        const double ec = gd[i] - sc.eval(X.row(i).transpose());
        rms_a += ea * ea;
        rms_c += ec * ec;
    }
    CHECK(rms_c < 0.2 * rms_a);

    CHECK_THROWS_AS(fit_lsr(X, g, 0.0, 1), ValidationError);
    CHECK_THROWS_AS(fit_lsr(Eigen::MatrixXd(), g, 0.0, 0), ValidationError);
}

TEST_CASE("feature scaling does not change the learned boundary") {
    const int N = 140;
    const Eigen::MatrixXd X = box_samples(N, 0.0, 1.0, 41);
    Eigen::VectorXd g(N);
    for (int i = 0; i < N; ++i) g[i] = X(i, 0) + X(i, 1);
    Eigen::MatrixXd Xs = X;
    Xs.col(0) *= 1000.0;  // rescale one feature

    auto [s, r] = fit_conservative(X, g, 1.0, 0);
    auto [ss, rs] = fit_conservative(Xs, g, 1.0, 0);
    CHECK(rs.type1_count == 0);
    // same classification everywhere
    int disagree = 0;
    for (int i = 0; i < N; ++i) {
        const bool a = s.eval(X.row(i).transpose()) >= 1.0;
        const bool b = ss.eval(Xs.row(i).transpose()) >= 1.0;
        if (a != b) ++disagree;
    }
    CHECK(disagree <= 1);
}
