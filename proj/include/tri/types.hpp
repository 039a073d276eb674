#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tri {

enum class ModelKind { Backdoor, Frontdoor, IV };

/// A candidate identification model: which functional identifies the effect
/// and which variables play each role. `anchor` is the variable whose
/// conditional (in)dependence certifies the model's validity test; for IV
/// models it doubles as the instrument.
struct ModelSpec {
    ModelKind kind = ModelKind::Backdoor;
    std::string label;
    std::string treatment;
    std::string outcome;
    std::string anchor;
    std::vector<std::string> mediators;   // Frontdoor only
    std::vector<std::string> adjustment;  // W for Backdoor, C otherwise
};

/// Throws ValidationError on structural violations (mediators present iff
/// frontdoor, empty role names).
void validate(const ModelSpec& spec);

const char* to_string(ModelKind kind);

enum class EstimationMethod { InfluenceFunction, PluginParametric };

/// Point estimate with optional per-observation influence values.
///
/// Influence vectors have length n and, by construction of the one-step and
/// Z-estimators that produce them, sample mean zero up to solver tolerance.
struct EstimateWithIF {
    double value = 0.0;
    std::optional<Eigen::VectorXd> influence;
    EstimationMethod method = EstimationMethod::PluginParametric;
    int clip_count = 0;     ///< probability-clipping events among the n rows
    bool high_clip = false; ///< more than 1% of rows clipped
};

enum class InferenceBranch { Wald, Bootstrap, Subsample };

const char* to_string(InferenceBranch branch);

struct ModelSummary {
    std::string label;
    double beta = 0.0;
    double psi = 0.0;
    double weight = 0.0;
    std::optional<std::pair<double, double>> psi_ci;  ///< single-model CI
    std::string ci_method;                            ///< how psi_ci was built
    bool high_clip = false;
};

/// Combined triangulation output: per-model diagnostics, the kernel-weighted
/// estimate, and whichever inference the branch produced.
struct TriangulationResult {
    std::vector<ModelSummary> per_model;
    double psi_combined = 0.0;
    std::optional<double> se;                              ///< Wald branch only
    std::optional<std::pair<double, double>> ci;
    std::optional<std::pair<double, double>> ci_rescaled;  ///< subsampling secondary CI
    double kernel_a = 0.1;
    double lambda = 0.0;
    bool degenerate_flag = false;  ///< sum of kernel masses < 10 * lambda
    InferenceBranch inference_branch = InferenceBranch::Wald;
    int dropped_replicates = 0;
    long subsample_m = 0;
    bool variance_clamped = false;  ///< negative delta-method variance clamped to 0
};

}  // namespace tri
