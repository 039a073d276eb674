#include <doctest.h>

#include <cmath>

#include "tri/errors.hpp"
#include "tri/inference.hpp"
#include "tri/rng.hpp"
#include "tri/simulation.hpp"
#include "tri/stats.hpp"
#include "tri/validity.hpp"

using namespace tri;

namespace {

ModelSpec backdoor_model(std::vector<std::string> adjustment, std::string label = "bd") {
    ModelSpec m;
    m.kind = ModelKind::Backdoor;
    m.label = std::move(label);
    m.treatment = "A";
    m.outcome = "Y";
    m.anchor = "Z";
    m.adjustment = std::move(adjustment);
    return m;
}

/// Dataset whose estimates are the same on every resample: Y is an exact
/// linear function, so the plug-in fits interpolate it and the anchor
/// coefficient is exactly zero.
Dataset deterministic_outcome_data(int n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd z(n), a(n), c(n), y(n);
    for (int i = 0; i < n; ++i) {
        z[i] = rng.bernoulli(0.5);
        a[i] = rng.bernoulli(0.5);
        c[i] = rng.normal();
        y[i] = 2.0 * a[i] + 3.0 * c[i];
    }
    return Dataset({"Z", "A", "C", "Y"}, {z, a, c, y}, {"Z", "A"});
}

}  // namespace

TEST_CASE("wald reduces to the single-model formula at beta = 0") {
    // Hand-built estimates isolate the K = 1 algebra: gamma = (0, w1).
    Rng rng(21);
    const int n = 400;
    Eigen::VectorXd phi_psi(n), phi_beta(n);
    for (int i = 0; i < n; ++i) {
        phi_psi[i] = rng.normal(0, 1.3);
        phi_beta[i] = rng.normal(0, 0.6);
    }
    phi_psi.array() -= phi_psi.mean();
    phi_beta.array() -= phi_beta.mean();

    ModelEstimates est;
    est.betas.push_back({0.0, phi_beta, EstimationMethod::InfluenceFunction, 0, false});
    est.psis.push_back({1.8, phi_psi, EstimationMethod::InfluenceFunction, 0, false});

    const KernelConfig cfg = auto_lambda(0.1, n);
    const auto res = wald_ci({backdoor_model({"C"})}, est, cfg, 0.05);

    const double w1 = gaussian_kernel(0.0, 0.1) / (cfg.lambda + gaussian_kernel(0.0, 0.1));
    const double sd_n = std::sqrt(phi_psi.squaredNorm() / n);  // divisor-n sd
    CHECK(res.psi_combined == doctest::Approx(w1 * 1.8).epsilon(1e-12));
    CHECK(*res.se == doctest::Approx(w1 * sd_n / std::sqrt(double(n))).epsilon(1e-12));
    CHECK(res.ci->first < res.psi_combined);
    CHECK(res.ci->second > res.psi_combined);
    CHECK(res.inference_branch == InferenceBranch::Wald);
    CHECK_FALSE(res.variance_clamped);
}

TEST_CASE("wald demands influence values and names the offender") {
    const Dataset d = generate_s2(1000, Scenario::S2_both_ok, 3);
    const auto models = scenario_models(Scenario::S2_both_ok);
    CHECK_THROWS_AS(estimate_models(d, models, EstimatorRoute::InfluenceFunction),
                    BranchMismatchError);

    ModelEstimates plugin_only;
    plugin_only.betas.push_back({0.1, std::nullopt, EstimationMethod::PluginParametric, 0, false});
    plugin_only.psis.push_back({1.0, std::nullopt, EstimationMethod::PluginParametric, 0, false});
    try {
        wald_ci({backdoor_model({"C"}, "the-culprit")}, plugin_only, KernelConfig{0.1, 0.0}, 0.05);
        FAIL("expected BranchMismatchError");
    } catch (const BranchMismatchError& e) {
        CHECK(std::string(e.what()).find("the-culprit") != std::string::npos);
    }
}

TEST_CASE("wald on scenario-1 data covers and never clamps") {
    const Dataset d = generate_s1(3000, Scenario::S1_eps71, 8);
    const auto models = scenario_models(Scenario::S1_eps71);
    const auto est = estimate_models(d, models, EstimatorRoute::InfluenceFunction);
    const auto res = wald_ci(models, est, auto_lambda(0.1, 3000), 0.05);
    CHECK(res.per_model.size() == 3);
    CHECK(*res.se > 0.0);
    CHECK_FALSE(res.variance_clamped);
    CHECK(res.ci->first <= res.psi_combined);
    CHECK(res.psi_combined <= res.ci->second);
    for (const auto& row : res.per_model) {
        CHECK(row.psi_ci.has_value());
        CHECK(row.ci_method == "wald-if");
    }
    // Combined point matches the weighted sum identity.
    double acc = 0.0;
    for (const auto& row : res.per_model) acc += row.weight * row.psi;
    CHECK(res.psi_combined == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("bootstrap percentile interval is deterministic and collapses on constants") {
    const Dataset d = deterministic_outcome_data(300, 5);
    const std::vector<ModelSpec> models = {backdoor_model({"C"})};
    InferenceConfig icfg;
    icfg.branch = InferenceBranch::Bootstrap;
    icfg.bootstrap_B = 100;
    icfg.seed = 99;

    const auto res = bootstrap_ci(d, models, auto_lambda(0.1, 300), icfg);
    const auto res2 = bootstrap_ci(d, models, auto_lambda(0.1, 300), icfg);
    CHECK(res.ci->first == res2.ci->first);
    CHECK(res.ci->second == res2.ci->second);
    CHECK(res.dropped_replicates == 0);

    // Every resample interpolates Y exactly: psi* is constant at (w)(2).
    const double w = gaussian_kernel(0.0, 0.1) / (1.0 / 300 + gaussian_kernel(0.0, 0.1));
    CHECK(res.ci->first == doctest::Approx(res.ci->second).epsilon(1e-12));
    CHECK(res.ci->first == doctest::Approx(2.0 * w).epsilon(1e-9));
    CHECK(res.per_model[0].ci_method == "bootstrap-percentile");

    InferenceConfig different = icfg;
    different.seed = 100;
    const auto res3 = bootstrap_ci(d, models, auto_lambda(0.1, 300), different);
    CHECK(res3.ci->first == doctest::Approx(res.ci->first).epsilon(1e-9));
}

TEST_CASE("bootstrap point estimate comes from the full sample") {
    const Dataset d = generate_s2(500, Scenario::S2_both_ok, 44);
    const auto models = scenario_models(Scenario::S2_both_ok);
    const KernelConfig cfg = auto_lambda(0.1, 500);
    InferenceConfig icfg;
    icfg.branch = InferenceBranch::Bootstrap;
    icfg.bootstrap_B = 100;
    icfg.seed = 4;
    const auto boot = bootstrap_ci(d, models, cfg, icfg);
    const auto point = combine_point(models, estimate_models(d, models, EstimatorRoute::Plugin), cfg);
    CHECK(boot.psi_combined == point.psi_combined);
    for (std::size_t k = 0; k < models.size(); ++k) {
        CHECK(boot.per_model[k].psi == point.per_model[k].psi);
        CHECK(boot.per_model[k].beta == point.per_model[k].beta);
    }
}

TEST_CASE("bootstrap drops failing replicates and flags instability") {
    // One solitary nonzero row in column R: resamples that miss it have a
    // constant regressor and fail with SingularDesignError.
    Rng rng(41);
    const int n = 300;
    Eigen::VectorXd z(n), a(n), r(n), y(n);
    for (int i = 0; i < n; ++i) {
        z[i] = rng.bernoulli(0.5);
        a[i] = rng.bernoulli(0.5);
        r[i] = 0.0;
        y[i] = rng.normal(a[i], 1.0);
    }
    r[7] = 1.0;
    const Dataset d({"Z", "A", "R", "Y"}, {z, a, r, y}, {"Z", "A"});
    const std::vector<ModelSpec> models = {backdoor_model({"R"})};
    InferenceConfig icfg;
    icfg.branch = InferenceBranch::Bootstrap;
    icfg.bootstrap_B = 200;
    icfg.seed = 17;
    CHECK_THROWS_AS(bootstrap_ci(d, models, auto_lambda(0.1, n), icfg), UnstableBootstrapError);
}

TEST_CASE("branch preconditions are validated") {
    const Dataset d = deterministic_outcome_data(300, 6);
    const std::vector<ModelSpec> models = {backdoor_model({"C"})};
    InferenceConfig icfg;  // Wald branch
    CHECK_THROWS_AS(bootstrap_ci(d, models, KernelConfig{0.1, 0.0}, icfg), DomainError);
    CHECK_THROWS_AS(subsample_ci(d, models, KernelConfig{0.1, 0.0}, icfg), DomainError);

    icfg.branch = InferenceBranch::Bootstrap;
    icfg.bootstrap_B = 50;  // below the floor
    CHECK_THROWS_AS(bootstrap_ci(d, models, KernelConfig{0.1, 0.0}, icfg), ValidationError);
    icfg.bootstrap_B = 100;
    icfg.alpha = 0.7;
    CHECK_THROWS_AS(bootstrap_ci(d, models, KernelConfig{0.1, 0.0}, icfg), ValidationError);
}

TEST_CASE("subsampling: replicate size, both intervals, degenerate collapse") {
    const Dataset d = deterministic_outcome_data(5000, 7);
    const std::vector<ModelSpec> models = {backdoor_model({"C"})};
    InferenceConfig icfg;
    icfg.branch = InferenceBranch::Subsample;
    icfg.subsample_b = 100;
    icfg.seed = 23;

    const auto res = subsample_ci(d, models, auto_lambda(0.1, 5000), icfg);
    CHECK(res.subsample_m == 910);  // floor(5000^0.8)
    REQUIRE(res.ci.has_value());
    REQUIRE(res.ci_rescaled.has_value());

    // Constant estimator: the literal interval collapses onto the replicate
    // value and the rescaled one onto the full-sample point.
    const double w_m = gaussian_kernel(0.0, 0.1) / (1.0 / 910 + gaussian_kernel(0.0, 0.1));
    CHECK(res.ci->first == doctest::Approx(res.ci->second).epsilon(1e-12));
    CHECK(res.ci->first == doctest::Approx(2.0 * w_m).epsilon(1e-9));
    CHECK(res.ci_rescaled->first == doctest::Approx(res.ci_rescaled->second).epsilon(1e-9));
    CHECK(res.per_model[0].ci_method == "subsample-percentile");

    const Dataset small = deterministic_outcome_data(150, 8);
    CHECK_THROWS_AS(subsample_ci(small, models, KernelConfig{0.1, 0.0}, icfg), DomainError);
}

TEST_CASE("subsample interval covers on scenario-1 data") {
    // Conservative floor: the literal percentile interval at m << n is wide.
    const double theta = 0.123848;
    int covered = 0;
    const int trials = 20;
    ScenarioConfig cfg = default_scenario_config(Scenario::S1_eps71, 1000, trials, 31);
    cfg.inference.branch = InferenceBranch::Subsample;
    cfg.inference.subsample_b = 100;
    cfg.oracle_n = 1000000;
    const auto models = scenario_models(Scenario::S1_eps71);
    for (int t = 0; t < trials; ++t) {
        const Dataset d = generate_s1(1000, Scenario::S1_eps71, stream_seed(31, "sub", t));
        InferenceConfig icfg = cfg.inference;
        icfg.seed = stream_seed(31, "sub-i", t);
        const auto res = subsample_ci(d, models, auto_lambda(0.1, 1000), icfg);
        covered += res.ci->first <= theta && theta <= res.ci->second;
    }
    CHECK(covered >= int(0.85 * trials));
}

TEST_CASE("wald interval width shrinks like one over root n") {
    double width_small = 0.0, width_large = 0.0;
    const int trials = 12;
    const auto models = scenario_models(Scenario::S1_eps71);
    for (int t = 0; t < trials; ++t) {
        const Dataset d5 = generate_s1(5000, Scenario::S1_eps71, stream_seed(77, "w5", t));
        const auto r5 = wald_ci(models, estimate_models(d5, models, EstimatorRoute::InfluenceFunction),
                                auto_lambda(0.1, 5000), 0.05);
        width_small += r5.ci->second - r5.ci->first;
        const Dataset d20 = generate_s1(20000, Scenario::S1_eps71, stream_seed(77, "w20", t));
        const auto r20 =
            wald_ci(models, estimate_models(d20, models, EstimatorRoute::InfluenceFunction),
                    auto_lambda(0.1, 20000), 0.05);
        width_large += r20.ci->second - r20.ci->first;
    }
    const double ratio = width_large / width_small;
    CHECK(ratio > 0.4);
    CHECK(ratio < 0.6);
}

TEST_CASE("iv models need a frontdoor companion for their validity test") {
    const Dataset d = generate_s2(1000, Scenario::S2_both_ok, 12);
    ModelSpec iv;
    iv.kind = ModelKind::IV;
    iv.label = "iv-alone";
    iv.treatment = "A";
    iv.outcome = "Y";
    iv.anchor = "Z";
    iv.adjustment = {"C"};
    CHECK_THROWS_AS(estimate_models(d, {iv}, EstimatorRoute::Plugin), DomainError);
}

TEST_CASE("scenario-2 estimates route the coupled IV validity parameter") {
    const Dataset d = generate_s2(20000, Scenario::S2_fdoor_only, 53);
    const auto models = scenario_models(Scenario::S2_fdoor_only);
    const auto est = estimate_models(d, models, EstimatorRoute::Plugin);
    // beta_tilde_3 = beta_2 + beta_3 with beta_3 near -1 in this variant.
    CHECK(est.betas[2].value ==
          doctest::Approx(est.betas[1].value +
                          log_or_plugin(d, {"M", "Z", {"A", "C"}}).value)
              .epsilon(1e-12));
    CHECK(est.betas[2].value < -0.5);
}
