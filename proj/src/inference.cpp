#include "tri/inference.hpp"

#include "tri/errors.hpp"
#include "tri/estimators.hpp"
#include "tri/parallel.hpp"
#include "tri/rng.hpp"
#include "tri/stats.hpp"
#include "tri/validity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace tri {

namespace {

std::vector<std::string> join(const std::vector<std::string>& a, const std::string& extra) {
    std::vector<std::string> out = a;
    out.push_back(extra);
    return out;
}

std::vector<std::string> prepend(const std::string& head, const std::vector<std::string>& tail) {
    std::vector<std::string> out;
    out.reserve(tail.size() + 1);
    out.push_back(head);
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

const ModelSpec* find_frontdoor(const std::vector<ModelSpec>& models) {
    for (const auto& m : models) {
        if (m.kind == ModelKind::Frontdoor) return &m;
    }
    return nullptr;
}

EstimateWithIF backdoor_beta(const Dataset& data, const ModelSpec& model, EstimatorRoute route) {
    const ORSpec spec{model.outcome, model.anchor, prepend(model.treatment, model.adjustment)};
    if (route == EstimatorRoute::InfluenceFunction) {
        if (!data.is_binary(model.outcome) || !data.is_binary(model.anchor)) {
            throw BranchMismatchError(
                "model '" + model.label +
                "': the influence-function validity estimator needs a binary outcome and "
                "anchor; use the bootstrap or subsampling branch");
        }
        return log_or_zestimator(data, spec);
    }
    return log_or_plugin(data, spec);
}

void require_plugin_route(const ModelSpec& model, EstimatorRoute route) {
    if (route == EstimatorRoute::InfluenceFunction) {
        throw BranchMismatchError("model '" + model.label + "' (" + to_string(model.kind) +
                                  ") has no influence-function estimators; use the bootstrap or "
                                  "subsampling branch");
    }
}

EstimateWithIF frontdoor_beta(const Dataset& data, const ModelSpec& model) {
    const MediatorModelSpec mediator_model{
        model.mediators, prepend(model.treatment, join(model.adjustment, model.anchor))};
    return verma_log_or(data, model.outcome, model.anchor, model.adjustment, mediator_model);
}

/// IV validity parameter beta_2 + beta_3: the frontdoor Verma coefficient
/// plus the mediator-anchor log-odds coefficient.
EstimateWithIF iv_beta(const Dataset& data, const ModelSpec& model,
                       const EstimateWithIF& frontdoor_verma, const ModelSpec& frontdoor) {
    if (frontdoor.mediators.size() != 1) {
        throw DomainError("the scalar IV validity test needs a single frontdoor mediator");
    }
    const ORSpec spec{frontdoor.mediators.front(), model.anchor,
                      prepend(model.treatment, model.adjustment)};
    const EstimateWithIF beta3 = log_or_plugin(data, spec);
    EstimateWithIF out;
    out.value = frontdoor_verma.value + beta3.value;
    out.method = EstimationMethod::PluginParametric;
    out.clip_count = frontdoor_verma.clip_count;
    out.high_clip = frontdoor_verma.high_clip;
    return out;
}

struct ReplicateDraw {
    double psi = 0.0;
    std::vector<double> model_psis;
    bool ok = false;
};

/// One full re-estimation on a row sample; failures are recorded, not thrown.
ReplicateDraw estimate_replicate(const Dataset& sample, const std::vector<ModelSpec>& models,
                                 const KernelConfig& cfg) {
    ReplicateDraw draw;
    try {
        const ModelEstimates est = estimate_models(sample, models, EstimatorRoute::Plugin);
        Eigen::VectorXd betas(static_cast<Eigen::Index>(models.size()));
        Eigen::VectorXd psis(static_cast<Eigen::Index>(models.size()));
        for (std::size_t k = 0; k < models.size(); ++k) {
            betas[static_cast<Eigen::Index>(k)] = est.betas[k].value;
            psis[static_cast<Eigen::Index>(k)] = est.psis[k].value;
        }
        draw.psi = triangulate(betas, psis, cfg);
        draw.model_psis.assign(psis.data(), psis.data() + psis.size());
        draw.ok = true;
    } catch (const Error&) {
        draw.ok = false;
    }
    return draw;
}

std::pair<double, double> percentile_interval(std::vector<double> values, double alpha) {
    std::sort(values.begin(), values.end());
    return {quantile_sorted(values, alpha / 2.0), quantile_sorted(values, 1.0 - alpha / 2.0)};
}

/// Shared resampling loop for the bootstrap and subsampling branches.
struct ResampleSummary {
    std::vector<double> psi_draws;                   // successful replicates, replicate order
    std::vector<std::vector<double>> model_draws;    // per model
    int dropped = 0;
};

ResampleSummary run_replicates(const Dataset& data, const std::vector<ModelSpec>& models,
                               const KernelConfig& replicate_cfg, const InferenceConfig& icfg,
                               int count, const char* stream, Eigen::Index draw_size,
                               bool with_replacement) {
    const Eigen::Index n = data.n();
    std::vector<ReplicateDraw> draws(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), icfg.threads, [&](std::size_t r) {
        Rng rng(stream_seed(icfg.seed, stream, r));
        std::vector<Eigen::Index> rows;
        rows.reserve(static_cast<std::size_t>(draw_size));
        if (with_replacement) {
            for (Eigen::Index i = 0; i < draw_size; ++i) {
                rows.push_back(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
            }
        } else {
            // Partial Fisher-Yates: first draw_size entries of a shuffle.
            std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
            std::iota(pool.begin(), pool.end(), Eigen::Index(0));
            for (Eigen::Index i = 0; i < draw_size; ++i) {
                const auto j = i + static_cast<Eigen::Index>(
                                       rng.below(static_cast<std::uint64_t>(n - i)));
                std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
                rows.push_back(pool[static_cast<std::size_t>(i)]);
            }
        }
        draws[r] = estimate_replicate(data.subset(rows), models, replicate_cfg);
    });

    ResampleSummary out;
    out.model_draws.resize(models.size());
    for (const auto& draw : draws) {
        if (!draw.ok) {
            ++out.dropped;
            continue;
        }
        out.psi_draws.push_back(draw.psi);
        for (std::size_t k = 0; k < models.size(); ++k) {
            out.model_draws[k].push_back(draw.model_psis[k]);
        }
    }
    if (out.dropped > 0.1 * count) {
        throw UnstableBootstrapError(std::to_string(out.dropped) + " of " + std::to_string(count) +
                                     " replicates failed to estimate");
    }
    return out;
}

}  // namespace

void validate(const InferenceConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 0.5)) {
        throw ValidationError("alpha must lie in (0, 0.5]");
    }
    if (cfg.bootstrap_B < 100 || cfg.subsample_b < 100) {
        throw ValidationError("bootstrap_B and subsample_b must be at least 100");
    }
    if (!(cfg.subsample_exponent > 0.0 && cfg.subsample_exponent < 1.0)) {
        throw ValidationError("subsample exponent must lie in (0, 1)");
    }
}

ModelEstimates estimate_models(const Dataset& data, const std::vector<ModelSpec>& models,
                               EstimatorRoute route) {
    if (models.empty()) {
        throw DomainError("need at least one model");
    }
    ModelEstimates out;
    out.betas.resize(models.size());
    out.psis.resize(models.size());

    // Non-IV models first; IV validity reuses the frontdoor Verma estimate.
    std::optional<EstimateWithIF> frontdoor_verma;
    const ModelSpec* frontdoor = find_frontdoor(models);
    for (std::size_t k = 0; k < models.size(); ++k) {
        const ModelSpec& model = models[k];
        validate(model);
        if (model.anchor.empty()) {
            throw ValidationError("model '" + model.label +
                                  "': validity testing needs an anchor variable");
        }
        switch (model.kind) {
            case ModelKind::Backdoor:
                out.betas[k] = backdoor_beta(data, model, route);
                out.psis[k] = route == EstimatorRoute::InfluenceFunction
                                  ? backdoor_aipw(data, model.treatment, model.outcome,
                                                  model.adjustment)
                                  : backdoor_plugin(data, model.treatment, model.outcome,
                                                    model.adjustment);
                break;
            case ModelKind::Frontdoor: {
                require_plugin_route(model, route);
                out.betas[k] = frontdoor_beta(data, model);
                if (!frontdoor_verma) frontdoor_verma = out.betas[k];
                // Conditional frontdoor adjusts for the anchor as well.
                out.psis[k] = frontdoor_dual_ipw(data, model.treatment, model.outcome,
                                                 model.mediators,
                                                 join(model.adjustment, model.anchor));
                break;
            }
            case ModelKind::IV:
                break;  // second pass
        }
    }
    for (std::size_t k = 0; k < models.size(); ++k) {
        const ModelSpec& model = models[k];
        if (model.kind != ModelKind::IV) continue;
        require_plugin_route(model, route);
        if (!frontdoor) {
            throw DomainError("model '" + model.label +
                              "': the IV validity test beta_2 + beta_3 needs a frontdoor model "
                              "in the same list");
        }
        if (!frontdoor_verma) frontdoor_verma = frontdoor_beta(data, *frontdoor);
        out.betas[k] = iv_beta(data, model, *frontdoor_verma, *frontdoor);
        out.psis[k] = iv_plugin(data, model.anchor, model.treatment, model.outcome,
                                model.adjustment);
    }
    return out;
}

std::vector<EstimateWithIF> estimate_betas(const Dataset& data,
                                           const std::vector<ModelSpec>& models,
                                           EstimatorRoute route) {
    if (models.empty()) {
        throw DomainError("need at least one model");
    }
    std::vector<EstimateWithIF> betas(models.size());
    std::optional<EstimateWithIF> frontdoor_verma;
    const ModelSpec* frontdoor = find_frontdoor(models);
    for (std::size_t k = 0; k < models.size(); ++k) {
        const ModelSpec& model = models[k];
        validate(model);
        if (model.kind == ModelKind::Backdoor) {
            betas[k] = backdoor_beta(data, model, route);
        } else if (model.kind == ModelKind::Frontdoor) {
            require_plugin_route(model, route);
            betas[k] = frontdoor_beta(data, model);
            if (!frontdoor_verma) frontdoor_verma = betas[k];
        }
    }
    for (std::size_t k = 0; k < models.size(); ++k) {
        const ModelSpec& model = models[k];
        if (model.kind != ModelKind::IV) continue;
        require_plugin_route(model, route);
        if (!frontdoor) {
            throw DomainError("model '" + model.label +
                              "': the IV validity test beta_2 + beta_3 needs a frontdoor model "
                              "in the same list");
        }
        if (!frontdoor_verma) frontdoor_verma = frontdoor_beta(data, *frontdoor);
        betas[k] = iv_beta(data, model, *frontdoor_verma, *frontdoor);
    }
    return betas;
}

TriangulationResult combine_point(const std::vector<ModelSpec>& models,
                                  const ModelEstimates& estimates, const KernelConfig& cfg) {
    const auto k_models = static_cast<Eigen::Index>(models.size());
    Eigen::VectorXd betas(k_models), psis(k_models);
    for (Eigen::Index k = 0; k < k_models; ++k) {
        betas[k] = estimates.betas[static_cast<std::size_t>(k)].value;
        psis[k] = estimates.psis[static_cast<std::size_t>(k)].value;
    }
    const Eigen::VectorXd w = weights(betas, cfg);

    TriangulationResult result;
    result.kernel_a = cfg.a;
    result.lambda = cfg.lambda;
    result.psi_combined = w.dot(psis);
    result.degenerate_flag = degenerate_weights(betas, cfg);
    for (Eigen::Index k = 0; k < k_models; ++k) {
        ModelSummary row;
        row.label = models[static_cast<std::size_t>(k)].label;
        row.beta = betas[k];
        row.psi = psis[k];
        row.weight = w[k];
        row.high_clip = estimates.betas[static_cast<std::size_t>(k)].high_clip ||
                        estimates.psis[static_cast<std::size_t>(k)].high_clip;
        result.per_model.push_back(std::move(row));
    }
    return result;
}

TriangulationResult wald_ci(const std::vector<ModelSpec>& models, const ModelEstimates& estimates,
                            const KernelConfig& cfg, double alpha) {
    if (!(alpha > 0.0 && alpha <= 0.5)) {
        throw ValidationError("alpha must lie in (0, 0.5]");
    }
    const std::size_t k_models = models.size();
    auto require_influence = [&](const EstimateWithIF& e, const char* what, std::size_t k) {
        if (!e.influence || e.method != EstimationMethod::InfluenceFunction) {
            throw BranchMismatchError(std::string("Wald inference needs influence values, but the ") +
                                      what + " estimator for model '" + models[k].label +
                                      "' lacks them");
        }
    };
    for (std::size_t k = 0; k < k_models; ++k) {
        require_influence(estimates.betas[k], "beta", k);
        require_influence(estimates.psis[k], "psi", k);
    }
    const Eigen::Index n = estimates.betas.front().influence->size();

    // Influence matrix in (beta_1..beta_K, psi_1..psi_K) order.
    Eigen::MatrixXd phi(2 * static_cast<Eigen::Index>(k_models), n);
    for (std::size_t k = 0; k < k_models; ++k) {
        if (estimates.betas[k].influence->size() != n || estimates.psis[k].influence->size() != n) {
            throw DomainError("influence vectors must all have length n");
        }
        phi.row(static_cast<Eigen::Index>(k)) = estimates.betas[k].influence->transpose();
        phi.row(static_cast<Eigen::Index>(k_models + k)) = estimates.psis[k].influence->transpose();
    }
    const Eigen::VectorXd means = phi.rowwise().mean();
    phi.colwise() -= means;
    const Eigen::MatrixXd sigma = phi * phi.transpose() / static_cast<double>(n);

    TriangulationResult result = combine_point(models, estimates, cfg);
    result.inference_branch = InferenceBranch::Wald;

    Eigen::VectorXd betas(static_cast<Eigen::Index>(k_models)),
        psis(static_cast<Eigen::Index>(k_models));
    for (std::size_t k = 0; k < k_models; ++k) {
        betas[static_cast<Eigen::Index>(k)] = estimates.betas[k].value;
        psis[static_cast<Eigen::Index>(k)] = estimates.psis[k].value;
    }
    const Eigen::VectorXd gamma = gamma_partials(betas, psis, cfg);
    double var = gamma.dot(sigma * gamma) / static_cast<double>(n);
    if (var < 0.0) {
        var = 0.0;
        result.variance_clamped = true;
    }
    const double se = std::sqrt(var);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    result.se = se;
    result.ci = {result.psi_combined - z * se, result.psi_combined + z * se};

    for (std::size_t k = 0; k < k_models; ++k) {
        const double psi_var =
            sigma(static_cast<Eigen::Index>(k_models + k), static_cast<Eigen::Index>(k_models + k));
        const double psi_se = std::sqrt(std::max(0.0, psi_var) / static_cast<double>(n));
        result.per_model[k].psi_ci = {psis[static_cast<Eigen::Index>(k)] - z * psi_se,
                                      psis[static_cast<Eigen::Index>(k)] + z * psi_se};
        result.per_model[k].ci_method = "wald-if";
    }
    return result;
}

TriangulationResult bootstrap_ci(const Dataset& data, const std::vector<ModelSpec>& models,
                                 const KernelConfig& cfg, const InferenceConfig& icfg) {
    if (icfg.branch != InferenceBranch::Bootstrap) {
        throw DomainError("bootstrap_ci called with a non-bootstrap config");
    }
    validate(icfg);

    const ModelEstimates full = estimate_models(data, models, EstimatorRoute::Plugin);
    TriangulationResult result = combine_point(models, full, cfg);
    result.inference_branch = InferenceBranch::Bootstrap;

    // Resamples have size n, so an automatic lambda = 1/n carries over as is.
    const ResampleSummary summary = run_replicates(data, models, cfg, icfg, icfg.bootstrap_B,
                                                   "bootstrap", data.n(), /*with_replacement=*/true);
    result.dropped_replicates = summary.dropped;
    result.ci = percentile_interval(summary.psi_draws, icfg.alpha);
    for (std::size_t k = 0; k < models.size(); ++k) {
        result.per_model[k].psi_ci = percentile_interval(summary.model_draws[k], icfg.alpha);
        result.per_model[k].ci_method = "bootstrap-percentile";
    }
    return result;
}

TriangulationResult subsample_ci(const Dataset& data, const std::vector<ModelSpec>& models,
                                 const KernelConfig& cfg, const InferenceConfig& icfg) {
    if (icfg.branch != InferenceBranch::Subsample) {
        throw DomainError("subsample_ci called with a non-subsample config");
    }
    validate(icfg);
    const Eigen::Index n = data.n();
    if (n < 200) {
        throw DomainError("subsampling needs n >= 200 for stable nuisance fits");
    }
    const auto m = static_cast<Eigen::Index>(
        std::floor(std::pow(static_cast<double>(n), icfg.subsample_exponent)));

    const ModelEstimates full = estimate_models(data, models, EstimatorRoute::Plugin);
    TriangulationResult result = combine_point(models, full, cfg);
    result.inference_branch = InferenceBranch::Subsample;
    result.subsample_m = m;

    const KernelConfig replicate_cfg =
        cfg.lambda_auto ? auto_lambda(cfg.a, static_cast<std::size_t>(m)) : cfg;
    const ResampleSummary summary = run_replicates(data, models, replicate_cfg, icfg,
                                                   icfg.subsample_b, "subsample", m,
                                                   /*with_replacement=*/false);
    result.dropped_replicates = summary.dropped;

    // Paper-literal percentile interval of the raw subsample estimates.
    result.ci = percentile_interval(summary.psi_draws, icfg.alpha);
    for (std::size_t k = 0; k < models.size(); ++k) {
        result.per_model[k].psi_ci = percentile_interval(summary.model_draws[k], icfg.alpha);
        result.per_model[k].ci_method = "subsample-percentile";
    }

    // Recentered-rescaled companion: quantiles of sqrt(m/n)-scaled deviations
    // around the full-sample estimate.
    const double scale = std::sqrt(static_cast<double>(m) / static_cast<double>(n));
    std::vector<double> deviations;
    deviations.reserve(summary.psi_draws.size());
    for (double draw : summary.psi_draws) {
        deviations.push_back(scale * (draw - result.psi_combined));
    }
    std::sort(deviations.begin(), deviations.end());
    result.ci_rescaled = {
        result.psi_combined - quantile_sorted(deviations, 1.0 - icfg.alpha / 2.0),
        result.psi_combined - quantile_sorted(deviations, icfg.alpha / 2.0)};
    return result;
}

}  // namespace tri
