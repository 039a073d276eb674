#include <doctest.h>

#include <cmath>

#include "tri/dataset.hpp"
#include "tri/errors.hpp"
#include "tri/glm.hpp"
#include "tri/rng.hpp"
#include "tri/stats.hpp"

using namespace tri;

namespace {

Dataset random_regression_data(int n, std::uint64_t seed, bool binary_response) {
    Rng rng(seed);
    Eigen::VectorXd x1(n), x2(n), y(n);
    for (int i = 0; i < n; ++i) {
        x1[i] = rng.normal();
        x2[i] = rng.normal(0.5, 1.5);
        const double eta = 0.3 + 0.8 * x1[i] - 0.4 * x2[i];
        y[i] = binary_response ? rng.bernoulli(expit(eta)) : eta + rng.normal(0, 0.7);
    }
    std::set<std::string> flags = {};
    if (binary_response) flags.insert("Y");
    return Dataset({"X1", "X2", "Y"}, {x1, x2, y}, flags);
}

}  // namespace

TEST_CASE("linear fit interpolates exact data") {
    Eigen::VectorXd x(4), y(4);
    x << -1, 0, 1, 2;
    y = 2.0 + 3.0 * x.array();
    const Dataset d({"X", "Y"}, {x, y}, {});
    const GLMFit fit = fit_glm(d, "Y", {"X"}, GLMFamily::Linear);
    CHECK(fit.coefficients[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fit.coefficients[1] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(fit.converged);
}

TEST_CASE("linear fit matches the normal-equations oracle") {
    const Dataset d = random_regression_data(500, 21, false);
    const GLMFit fit = fit_glm(d, "Y", {"X1", "X2"}, GLMFamily::Linear);

    const Eigen::MatrixXd x = design_matrix(d, {"X1", "X2"});
    const Eigen::VectorXd oracle =
        (x.transpose() * x).ldlt().solve(x.transpose() * d.column("Y"));
    for (int j = 0; j < 3; ++j) {
        CHECK(fit.coefficients[j] == doctest::Approx(oracle[j]).epsilon(1e-8));
    }
}

TEST_CASE("perfectly separated logistic data does not converge") {
    const int n = 80;
    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = i < n / 2 ? -1.0 - 0.01 * i : 1.0 + 0.01 * i;
        y[i] = i < n / 2 ? 0.0 : 1.0;
    }
    const Dataset d({"X", "Y"}, {x, y}, {"Y"});
    CHECK_THROWS_AS(fit_glm(d, "Y", {"X"}, GLMFamily::Logistic), NonConvergenceError);
}

TEST_CASE("rank-deficient designs are rejected") {
    Rng rng(5);
    const int n = 60;
    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = rng.normal();
    }
    const Dataset d({"X", "XCOPY", "Y"}, {x, x, y}, {});
    CHECK_THROWS_AS(fit_glm(d, "Y", {"X", "XCOPY"}, GLMFamily::Linear), SingularDesignError);
}

TEST_CASE("unit observation weights reproduce the unweighted fit") {
    const Dataset d = random_regression_data(300, 9, true);
    const GLMFit plain = fit_glm(d, "Y", {"X1", "X2"}, GLMFamily::Logistic);
    const GLMFit weighted =
        fit_glm(d, "Y", {"X1", "X2"}, GLMFamily::Logistic, Eigen::VectorXd::Ones(d.n()));
    CHECK((plain.coefficients - weighted.coefficients).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(weighted.obs_weights_used);

    CHECK_THROWS_AS(
        fit_glm(d, "Y", {"X1"}, GLMFamily::Logistic, Eigen::VectorXd::Zero(d.n())),
        DomainError);
    CHECK_THROWS_AS(fit_glm(d, "Y", {"X1"}, GLMFamily::Logistic, Eigen::VectorXd::Ones(5)),
                    DomainError);
}

TEST_CASE("zero-coefficient logistic fit predicts one half everywhere") {
    const Dataset d = random_regression_data(20, 2, true);
    GLMFit fit;
    fit.family = GLMFamily::Logistic;
    fit.coefficients = Eigen::VectorXd::Zero(3);
    fit.predictor_names = {"X1", "X2"};
    const Eigen::VectorXd p = predict_mean(fit, d);
    CHECK((p.array() == 0.5).all());
}

TEST_CASE("override substitutes a constant column before evaluation") {
    const Dataset d = random_regression_data(100, 14, true);
    const GLMFit fit = fit_glm(d, "Y", {"X1", "X2"}, GLMFamily::Logistic);

    const Eigen::VectorXd via_override = predict_mean(fit, d, {{"X1", 1.0}});
    const Dataset forced({"X1", "X2", "Y"},
                         {Eigen::VectorXd::Ones(d.n()), d.column("X2"), d.column("Y")}, {"Y"});
    const Eigen::VectorXd via_data = predict_mean(fit, forced);
    CHECK((via_override - via_data).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(predict_mean(fit, Dataset({"X1"}, {d.column("X1")}, {})), DomainError);
}

TEST_CASE("logistic score equation balances predictions and responses") {
    Rng rng(33);
    const Dataset d = random_regression_data(800, 17, true);
    Eigen::VectorXd w(d.n());
    for (Eigen::Index i = 0; i < d.n(); ++i) w[i] = rng.uniform(0.5, 2.0);
    const GLMFit fit = fit_glm(d, "Y", {"X1", "X2"}, GLMFamily::Logistic, w);
    const Eigen::VectorXd p = predict_mean(fit, d);
    CHECK((p.array() > 0.0).all());
    CHECK((p.array() < 1.0).all());
    // Intercept score component: weighted mean prediction = weighted mean response.
    const double lhs = (w.array() * p.array()).sum() / w.sum();
    const double rhs = (w.array() * d.column("Y").array()).sum() / w.sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    CHECK(fit.converged);
    CHECK(fit.iterations <= 100);
}

TEST_CASE("logistic response must be binary-flagged") {
    const Dataset d = random_regression_data(100, 3, false);
    CHECK_THROWS_AS(fit_glm(d, "Y", {"X1"}, GLMFamily::Logistic), DomainError);
}

TEST_CASE("intercept-only fits work for both families") {
    const Dataset d = random_regression_data(150, 8, true);
    const GLMFit logistic = fit_glm(d, "Y", {}, GLMFamily::Logistic);
    CHECK(predict_mean(logistic, d)[0] == doctest::Approx(d.column("Y").mean()).epsilon(1e-8));
    const GLMFit linear = fit_glm(d, "X1", {}, GLMFamily::Linear);
    CHECK(linear.coefficients[0] == doctest::Approx(d.column("X1").mean()).epsilon(1e-10));
}

TEST_CASE("probability clipping counts events") {
    Eigen::VectorXd p(5);
    p << 1e-15, 0.2, 0.5, 1.0 - 1e-15, 0.8;
    int clips = 0;
    const Eigen::VectorXd q = clip_probabilities(p, 1e-12, 1.0 - 1e-12, clips);
    CHECK(clips == 2);
    CHECK(q[0] == 1e-12);
    CHECK(q[3] == 1.0 - 1e-12);
    CHECK(q[2] == 0.5);
}
