#include "tri/simulation.hpp"

#include "tri/errors.hpp"
#include "tri/parallel.hpp"
#include "tri/rng.hpp"
#include "tri/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tri {

namespace {

// Fixed master seed for oracle targets so coverage references do not move
// with the experiment seed.
constexpr std::uint64_t kOracleMaster = 977;

bool is_s1(Scenario s) { return s == Scenario::S1_eps71 || s == Scenario::S1_eps36; }

}  // namespace

const char* to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::S1_eps71: return "s1_eps71";
        case Scenario::S1_eps36: return "s1_eps36";
        case Scenario::S2_both_ok: return "s2_both_ok";
        case Scenario::S2_fdoor_only: return "s2_fdoor_only";
    }
    return "?";
}

Scenario scenario_from_string(const std::string& name) {
    if (name == "s1_eps71") return Scenario::S1_eps71;
    if (name == "s1_eps36") return Scenario::S1_eps36;
    if (name == "s2_both_ok") return Scenario::S2_both_ok;
    if (name == "s2_fdoor_only") return Scenario::S2_fdoor_only;
    throw ValidationError("unknown scenario '" + name +
                          "'; valid: s1_eps71, s1_eps36, s2_both_ok, s2_fdoor_only");
}

Dataset generate_s1(std::size_t n, Scenario variant, std::uint64_t seed) {
    if (!is_s1(variant)) {
        throw DomainError("generate_s1 takes a Scenario-1 variant");
    }
    if (n < 1) {
        throw DomainError("need n >= 1");
    }
    // Variant names are bound to the measured minimum incorrect |beta|:
    // keeping the U1 -> Z edge (with the weaker Z and A coefficients) yields
    // eps ~ 0.71, dropping it yields eps ~ 0.36.
    const bool u1_to_z = variant == Scenario::S1_eps71;
    const auto rows = static_cast<Eigen::Index>(n);
    Eigen::VectorXd z(rows), u1(rows), u2(rows), c1(rows), c2(rows), c3(rows), c4(rows), c5(rows),
        a(rows), y(rows);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < rows; ++i) {
        u1[i] = rng.normal();
        u2[i] = rng.normal();
        c1[i] = rng.normal();
        c2[i] = rng.normal();
        c3[i] = rng.normal();
        z[i] = u1_to_z ? rng.bernoulli(expit(u1[i])) : rng.bernoulli(0.5);
        c4[i] = rng.normal(-2.5 * u1[i] + 2.0 * u2[i], 1.0);
        c5[i] = rng.normal(-2.5 * u1[i] + 2.0 * u2[i], 1.0);
        const double z_coef = u1_to_z ? 2.0 : 2.75;
        a[i] = rng.bernoulli(expit(z_coef * z[i] - 3.0 * u1[i] + c1[i] + c2[i] + c3[i]));
        // Y's parents are A, U2, and C1..C3; C4 and C5 are childless
        // colliders, which is what makes adjusting for them harmful.
        const double a_coef = u1_to_z ? 1.0 : 1.5;
        y[i] = rng.bernoulli(expit(a_coef * a[i] + 2.0 * u2[i] + c1[i] + c2[i] + c3[i]));
    }
    return Dataset({"Z", "U1", "U2", "C1", "C2", "C3", "C4", "C5", "A", "Y"},
                   {z, u1, u2, c1, c2, c3, c4, c5, a, y}, {"Z", "A", "Y"});
}

Dataset generate_s2(std::size_t n, Scenario variant, std::uint64_t seed) {
    if (is_s1(variant)) {
        throw DomainError("generate_s2 takes a Scenario-2 variant");
    }
    if (n < 1) {
        throw DomainError("need n >= 1");
    }
    const bool both_ok = variant == Scenario::S2_both_ok;
    const auto rows = static_cast<Eigen::Index>(n);
    Eigen::VectorXd z(rows), c(rows), u(rows), a(rows), m(rows), y(rows);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < rows; ++i) {
        z[i] = rng.bernoulli(0.5);
        c[i] = rng.normal();
        u[i] = rng.normal();
        if (both_ok) {
            a[i] = rng.bernoulli(expit(2.0 * z[i] + 2.0 * c[i] + 2.0 * u[i]));
            m[i] = rng.bernoulli(expit(-2.0 + 4.0 * a[i] - 0.5 * c[i]));
            y[i] = rng.normal(2.0 * m[i] + 2.0 * c[i] + 2.0 * u[i], 1.0);
        } else {
            // The Z -> M edge breaks the IV exclusion; the frontdoor model,
            // which adjusts for Z, stays correct.
            a[i] = rng.bernoulli(expit(z[i] + c[i] - 0.5 * u[i]));
            m[i] = rng.bernoulli(expit(-1.0 + 2.0 * a[i] - z[i] + c[i]));
            y[i] = rng.normal(2.0 * m[i] - 0.75 * c[i] - 2.0 * u[i], 1.0);
        }
    }
    return Dataset({"Z", "C", "U", "A", "M", "Y"}, {z, c, u, a, m, y}, {"Z", "A", "M"});
}

Dataset generate_scenario(Scenario scenario, std::size_t n, std::uint64_t seed) {
    return is_s1(scenario) ? generate_s1(n, scenario, seed) : generate_s2(n, scenario, seed);
}

std::vector<ModelSpec> scenario_models(Scenario scenario) {
    if (is_s1(scenario)) {
        std::vector<ModelSpec> models;
        ModelSpec base;
        base.kind = ModelKind::Backdoor;
        base.treatment = "A";
        base.outcome = "Y";
        base.anchor = "Z";
        base.adjustment = {"C1", "C2", "C3"};
        base.label = "backdoor-C123";
        models.push_back(base);
        base.adjustment = {"C1", "C2", "C3", "C4"};
        base.label = "backdoor-C1234";
        models.push_back(base);
        base.adjustment = {"C1", "C2", "C3", "C4", "C5"};
        base.label = "backdoor-C12345";
        models.push_back(base);
        return models;
    }
    std::vector<ModelSpec> models;
    ModelSpec backdoor;
    backdoor.kind = ModelKind::Backdoor;
    backdoor.label = "backdoor";
    backdoor.treatment = "A";
    backdoor.outcome = "Y";
    backdoor.anchor = "Z";
    backdoor.adjustment = {"C"};
    models.push_back(backdoor);

    ModelSpec frontdoor = backdoor;
    frontdoor.kind = ModelKind::Frontdoor;
    frontdoor.label = "frontdoor";
    frontdoor.mediators = {"M"};
    models.push_back(frontdoor);

    ModelSpec iv = backdoor;
    iv.kind = ModelKind::IV;
    iv.label = "iv";
    models.push_back(iv);
    return models;
}

std::vector<std::string> scenario_latent_columns(Scenario scenario) {
    return is_s1(scenario) ? std::vector<std::string>{"U1", "U2"}
                           : std::vector<std::string>{"U"};
}

std::vector<int> scenario_correct_indices(Scenario scenario) {
    switch (scenario) {
        case Scenario::S1_eps71:
        case Scenario::S1_eps36: return {0};
        case Scenario::S2_both_ok: return {1, 2};
        case Scenario::S2_fdoor_only: return {1};
    }
    return {};
}

EstimatorRoute scenario_route(Scenario scenario) {
    return is_s1(scenario) ? EstimatorRoute::InfluenceFunction : EstimatorRoute::Plugin;
}

OracleAte oracle_ate(Scenario scenario, std::size_t n_mc, std::uint64_t seed) {
    if (n_mc < 1000000) {
        throw DomainError("oracle_ate needs at least 1e6 Monte-Carlo draws");
    }
    Rng rng(seed);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n_mc; ++i) {
        double diff = 0.0;
        switch (scenario) {
            case Scenario::S1_eps71:
            case Scenario::S1_eps36: {
                const double u2 = rng.normal();
                const double c1 = rng.normal();
                const double c2 = rng.normal();
                const double c3 = rng.normal();
                const double base = 2.0 * u2 + c1 + c2 + c3;
                const double a_coef = scenario == Scenario::S1_eps71 ? 1.0 : 1.5;
                diff = expit(a_coef + base) - expit(base);
                break;
            }
            case Scenario::S2_both_ok: {
                const double c = rng.normal();
                diff = 2.0 * (expit(2.0 - 0.5 * c) - expit(-2.0 - 0.5 * c));
                break;
            }
            case Scenario::S2_fdoor_only: {
                const double z = rng.bernoulli(0.5);
                const double c = rng.normal();
                diff = 2.0 * (expit(1.0 - z + c) - expit(-1.0 - z + c));
                break;
            }
        }
        sum += diff;
        sum_sq += diff * diff;
    }
    const double n = static_cast<double>(n_mc);
    OracleAte out;
    out.theta = sum / n;
    const double var = std::max(0.0, sum_sq / n - out.theta * out.theta);
    out.mc_se = std::sqrt(var / n);
    return out;
}

Eigen::VectorXd oracle_betas(Scenario scenario, std::size_t n, std::uint64_t seed) {
    if (n < 1000000) {
        throw DomainError("oracle_betas needs at least 1e6 rows");
    }
    const Dataset data = generate_scenario(scenario, n, seed);
    const auto betas = estimate_betas(data, scenario_models(scenario), scenario_route(scenario));
    Eigen::VectorXd out(static_cast<Eigen::Index>(betas.size()));
    for (std::size_t k = 0; k < betas.size(); ++k) {
        out[static_cast<Eigen::Index>(k)] = betas[k].value;
    }
    return out;
}

ScenarioLimits scenario_limits(Scenario scenario, std::size_t n, std::uint64_t seed,
                               double kernel_a) {
    const Dataset data = generate_scenario(scenario, n, seed);
    const ModelEstimates est =
        estimate_models(data, scenario_models(scenario), scenario_route(scenario));
    ScenarioLimits out;
    const auto k_models = static_cast<Eigen::Index>(est.betas.size());
    out.betas.resize(k_models);
    out.psis.resize(k_models);
    for (Eigen::Index k = 0; k < k_models; ++k) {
        out.betas[k] = est.betas[static_cast<std::size_t>(k)].value;
        out.psis[k] = est.psis[static_cast<std::size_t>(k)].value;
    }
    // The limiting functional is the lambda-free combination.
    out.psi_limit = triangulate(out.betas, out.psis, KernelConfig{kernel_a, 0.0, false});
    return out;
}

ScenarioConfig default_scenario_config(Scenario scenario, std::size_t n, int trials,
                                       std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.scenario = scenario;
    cfg.n = n;
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.inference.branch =
        is_s1(scenario) ? InferenceBranch::Wald : InferenceBranch::Bootstrap;
    return cfg;
}

TrialMetrics run_trials(const ScenarioConfig& cfg) {
    if (cfg.n < 200) {
        throw ValidationError("scenario runs need n >= 200");
    }
    if (cfg.trials < 1) {
        throw ValidationError("need at least one trial");
    }
    validate(cfg.inference);
    const std::vector<ModelSpec> models = scenario_models(cfg.scenario);
    const KernelConfig kernel =
        cfg.kernel.lambda_auto ? auto_lambda(cfg.kernel.a, cfg.n) : cfg.kernel;

    TrialMetrics metrics;
    metrics.scenario = cfg.scenario;
    metrics.n = cfg.n;
    const OracleAte oracle =
        oracle_ate(cfg.scenario, cfg.oracle_mc,
                   stream_seed(kOracleMaster, "oracle-ate", static_cast<int>(cfg.scenario)));
    metrics.theta = oracle.theta;
    metrics.theta_mc_se = oracle.mc_se;
    const ScenarioLimits limits =
        scenario_limits(cfg.scenario, cfg.oracle_n,
                        stream_seed(kOracleMaster, "oracle-limits", static_cast<int>(cfg.scenario)),
                        cfg.kernel.a);
    metrics.psi_limit = limits.psi_limit;
    metrics.limit_betas.assign(limits.betas.data(), limits.betas.data() + limits.betas.size());
    metrics.limit_psis.assign(limits.psis.data(), limits.psis.data() + limits.psis.size());

    metrics.trials.resize(static_cast<std::size_t>(cfg.trials));
    parallel_for(static_cast<std::size_t>(cfg.trials), cfg.threads, [&](std::size_t t) {
        TrialRecord& record = metrics.trials[t];
        try {
            const Dataset data =
                generate_scenario(cfg.scenario, cfg.n, stream_seed(cfg.seed, "trial-data", t));
            TriangulationResult result;
            if (cfg.inference.branch == InferenceBranch::Wald) {
                const ModelEstimates est =
                    estimate_models(data, models, EstimatorRoute::InfluenceFunction);
                result = wald_ci(models, est, kernel, cfg.inference.alpha);
            } else {
                InferenceConfig icfg = cfg.inference;
                icfg.seed = stream_seed(cfg.seed, "trial-infer", t);
                icfg.threads = 1;  // trials are the parallel unit
                result = icfg.branch == InferenceBranch::Bootstrap
                             ? bootstrap_ci(data, models, kernel, icfg)
                             : subsample_ci(data, models, kernel, icfg);
            }
            record.psi_n = result.psi_combined;
            record.se = result.se;
            if (result.ci) record.ci = *result.ci;
            record.degenerate = result.degenerate_flag;
            record.dropped_replicates = result.dropped_replicates;
            for (const auto& row : result.per_model) {
                record.betas.push_back(row.beta);
                record.psis.push_back(row.psi);
                record.weights.push_back(row.weight);
            }
        } catch (const Error& e) {
            record.failed = true;
            record.error = e.what();
        }
    });

    const std::size_t k_models = models.size();
    metrics.mean_model_beta.assign(k_models, 0.0);
    metrics.mean_model_psi.assign(k_models, 0.0);
    metrics.mean_model_weight.assign(k_models, 0.0);
    std::vector<double> estimates;
    double bias_sum = 0.0;
    double width_sum = 0.0;
    int covered_theta = 0;
    int covered_psi = 0;
    for (const auto& record : metrics.trials) {
        if (record.failed) {
            ++metrics.failed_trials;
            continue;
        }
        estimates.push_back(record.psi_n);
        bias_sum += record.psi_n - metrics.theta;
        width_sum += record.ci.second - record.ci.first;
        covered_theta += record.ci.first <= metrics.theta && metrics.theta <= record.ci.second;
        covered_psi +=
            record.ci.first <= metrics.psi_limit && metrics.psi_limit <= record.ci.second;
        for (std::size_t k = 0; k < k_models; ++k) {
            metrics.mean_model_beta[k] += record.betas[k];
            metrics.mean_model_psi[k] += record.psis[k];
            metrics.mean_model_weight[k] += record.weights[k];
        }
    }
    if (metrics.failed_trials > 0.05 * cfg.trials) {
        throw ExperimentUnstableError(std::to_string(metrics.failed_trials) + " of " +
                                      std::to_string(cfg.trials) + " trials failed");
    }
    const double successes = static_cast<double>(estimates.size());
    const Eigen::Map<const Eigen::VectorXd> est_vec(estimates.data(),
                                                    static_cast<Eigen::Index>(estimates.size()));
    metrics.mean_estimate = est_vec.mean();
    metrics.sd_estimate = sample_sd(est_vec);
    metrics.mean_bias_theta = bias_sum / successes;
    metrics.mean_ci_width = width_sum / successes;
    metrics.coverage_theta = covered_theta / successes;
    metrics.coverage_psi_limit = covered_psi / successes;
    std::vector<double> sorted = estimates;
    std::sort(sorted.begin(), sorted.end());
    metrics.band_lo = quantile_sorted(sorted, 0.025);
    metrics.band_hi = quantile_sorted(sorted, 0.975);
    for (std::size_t k = 0; k < k_models; ++k) {
        metrics.mean_model_beta[k] /= successes;
        metrics.mean_model_psi[k] /= successes;
        metrics.mean_model_weight[k] /= successes;
    }
    return metrics;
}

}  // namespace tri
