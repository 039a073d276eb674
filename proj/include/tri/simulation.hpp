#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tri/dataset.hpp"
#include "tri/inference.hpp"
#include "tri/kernel.hpp"
#include "tri/types.hpp"

namespace tri {

/// The four simulation settings. Scenario 1 compares three backdoor
/// adjustment sets under M-bias; the two variants are labeled by the measured
/// minimum incorrect |beta| (0.71 and 0.36). Scenario 2 triangulates
/// backdoor, frontdoor, and IV models; the second variant adds the
/// anchor-to-mediator edge so only the frontdoor model stays correct.
enum class Scenario { S1_eps71, S1_eps36, S2_both_ok, S2_fdoor_only };

const char* to_string(Scenario scenario);
Scenario scenario_from_string(const std::string& name);

/// Scenario-1 draw: columns Z, U1, U2, C1..C5, A, Y with Z, A, Y binary.
/// The U columns are latent and must never reach an estimator.
Dataset generate_s1(std::size_t n, Scenario variant, std::uint64_t seed);

/// Scenario-2 draw: columns Z, C, U, A, M, Y with Z, A, M binary and Y
/// continuous. U is latent.
Dataset generate_s2(std::size_t n, Scenario variant, std::uint64_t seed);

Dataset generate_scenario(Scenario scenario, std::size_t n, std::uint64_t seed);

/// Candidate models for a scenario. None of them references a latent column.
std::vector<ModelSpec> scenario_models(Scenario scenario);

std::vector<std::string> scenario_latent_columns(Scenario scenario);

/// 0-based indices of the models whose identifying assumptions hold.
std::vector<int> scenario_correct_indices(Scenario scenario);

/// Estimator route the scenario's designated inference branch uses.
EstimatorRoute scenario_route(Scenario scenario);

struct OracleAte {
    double theta = 0.0;
    double mc_se = 0.0;
};

/// Monte-Carlo oracle for theta = E[Y | do(A=1)] - E[Y | do(A=0)]: common
/// exogenous draws with the treatment forced to 1 and 0, averaging the
/// conditional outcome means so the coupling removes all shared noise.
OracleAte oracle_ate(Scenario scenario, std::size_t n_mc, std::uint64_t seed);

/// Large-sample validity parameters: the scenario's beta estimators evaluated
/// on one sample of size n.
Eigen::VectorXd oracle_betas(Scenario scenario, std::size_t n, std::uint64_t seed);

struct ScenarioLimits {
    Eigen::VectorXd betas;
    Eigen::VectorXd psis;
    double psi_limit = 0.0;  ///< lambda-free functional at the limiting values
};

/// Large-sample (beta, psi) values from one size-n sample plus the implied
/// limiting triangulation functional.
ScenarioLimits scenario_limits(Scenario scenario, std::size_t n, std::uint64_t seed,
                               double kernel_a = 0.1);

struct ScenarioConfig {
    Scenario scenario = Scenario::S1_eps71;
    std::size_t n = 5000;
    int trials = 200;
    std::uint64_t seed = 0;
    KernelConfig kernel{0.1, 0.0, true};  ///< lambda_auto resolves to 1/n
    InferenceConfig inference;
    std::size_t oracle_n = 1000000;   ///< sample size behind psi_limit
    std::size_t oracle_mc = 1000000;  ///< Monte-Carlo draws behind theta
    int threads = 0;
};

/// Scenario defaults: Wald branch for Scenario 1, bootstrap for Scenario 2.
ScenarioConfig default_scenario_config(Scenario scenario, std::size_t n, int trials,
                                       std::uint64_t seed);

struct TrialRecord {
    bool failed = false;
    std::string error;
    double psi_n = 0.0;
    std::optional<double> se;
    std::pair<double, double> ci{0.0, 0.0};
    std::vector<double> betas;
    std::vector<double> psis;
    std::vector<double> weights;
    bool degenerate = false;
    int dropped_replicates = 0;
};

struct TrialMetrics {
    Scenario scenario = Scenario::S1_eps71;
    std::size_t n = 0;
    double theta = 0.0;
    double theta_mc_se = 0.0;
    double psi_limit = 0.0;
    std::vector<double> limit_betas;
    std::vector<double> limit_psis;
    std::vector<TrialRecord> trials;
    int failed_trials = 0;
    // Aggregates over successful trials:
    double mean_estimate = 0.0;
    double sd_estimate = 0.0;
    double mean_bias_theta = 0.0;
    double coverage_theta = 0.0;
    double coverage_psi_limit = 0.0;
    double mean_ci_width = 0.0;
    double band_lo = 0.0;  ///< 2.5 percentile of point estimates
    double band_hi = 0.0;  ///< 97.5 percentile of point estimates
    std::vector<double> mean_model_beta;
    std::vector<double> mean_model_psi;
    std::vector<double> mean_model_weight;
};

/// Multi-trial experiment: per trial, draw a dataset from a trial-indexed
/// seed stream, estimate every model on the scenario's designated branch,
/// triangulate, and record. Individual trial failures are recorded, not
/// fatal; more than 5% failures raises ExperimentUnstableError.
TrialMetrics run_trials(const ScenarioConfig& cfg);

}  // namespace tri
