#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tri/dataset.hpp"
#include "tri/kernel.hpp"
#include "tri/types.hpp"

namespace tri {

/// Which estimator family backs each model's beta and psi. Wald inference
/// needs the influence-function route; the resampling branches refit the
/// plug-in parametric estimators.
enum class EstimatorRoute { InfluenceFunction, Plugin };

struct InferenceConfig {
    InferenceBranch branch = InferenceBranch::Wald;
    double alpha = 0.05;
    int bootstrap_B = 500;
    int subsample_b = 500;
    double subsample_exponent = 0.8;
    std::uint64_t seed = 0;
    int threads = 0;  ///< replicate workers; 0 = hardware count
};

void validate(const InferenceConfig& cfg);

struct ModelEstimates {
    std::vector<EstimateWithIF> betas;
    std::vector<EstimateWithIF> psis;
};

/// Estimates each model's validity parameter and identifying functional.
///
/// Backdoor models use the log-odds Z-estimator plus AIPW on the
/// influence-function route, or the plug-in coefficient plus the plug-in
/// backdoor estimator otherwise. Frontdoor models are plug-in only: the
/// reweighted Verma coefficient and the dual-IPW functional with covariates
/// C + anchor. IV models are plug-in only; their validity parameter is the
/// sum of the frontdoor model's Verma coefficient and the mediator-anchor
/// log-odds coefficient, so an IV model requires a frontdoor companion in the
/// same list.
ModelEstimates estimate_models(const Dataset& data, const std::vector<ModelSpec>& models,
                               EstimatorRoute route);

/// Validity parameters only (model-weight diagnostics).
std::vector<EstimateWithIF> estimate_betas(const Dataset& data,
                                           const std::vector<ModelSpec>& models,
                                           EstimatorRoute route);

/// Kernel-weighted combination of already-computed estimates: per-model
/// summary rows, the combined point estimate, and the degeneracy flag. No
/// interval; the branch functions below add one.
TriangulationResult combine_point(const std::vector<ModelSpec>& models,
                                  const ModelEstimates& estimates, const KernelConfig& cfg);

/// Delta-method Wald interval from influence functions.
///
/// Sigma is the sample covariance (divisor n) of the 2K influence vectors in
/// (beta_1..beta_K, psi_1..psi_K) order, gamma the analytic gradient at the
/// estimates, SE = sqrt(gamma' Sigma gamma / n). Every estimate must carry
/// influence values or BranchMismatchError names the offender. Per-model
/// intervals use each psi's own influence variance.
TriangulationResult wald_ci(const std::vector<ModelSpec>& models, const ModelEstimates& estimates,
                            const KernelConfig& cfg, double alpha);

/// Empirical bootstrap: resamples n rows with replacement, refits every
/// nuisance and estimate, and takes percentile intervals of the combined
/// estimates. The point estimate always comes from the full sample.
/// Replicates that fail to estimate are dropped and counted; more than 10%
/// failures raises UnstableBootstrapError.
TriangulationResult bootstrap_ci(const Dataset& data, const std::vector<ModelSpec>& models,
                                 const KernelConfig& cfg, const InferenceConfig& icfg);

/// Subsampling with m = floor(n^exponent) drawn without replacement. Two
/// intervals are produced: the literal percentile interval of the subsample
/// estimates (reported as `ci`) and a recentered interval rescaled by
/// sqrt(m/n) (reported as `ci_rescaled`), since plain subsample quantiles are
/// not generally calibrated.
TriangulationResult subsample_ci(const Dataset& data, const std::vector<ModelSpec>& models,
                                 const KernelConfig& cfg, const InferenceConfig& icfg);

}  // namespace tri
