#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tri/dataset.hpp"

namespace tri {

enum class GLMFamily { Linear, Logistic };

/// Fitted main-effects GLM: intercept-first coefficients over the declared
/// predictors.
struct GLMFit {
    GLMFamily family = GLMFamily::Linear;
    Eigen::VectorXd coefficients;
    std::vector<std::string> predictor_names;
    bool converged = false;
    int iterations = 0;
    bool obs_weights_used = false;
};

/// Fits response ~ intercept + predictors, optionally observation-weighted.
///
/// Linear: weighted least squares via column-pivoted QR of the weighted
/// design. Logistic: weighted MLE by IRLS (coefficient-change tolerance
/// 1e-10, score tolerance 1e-8, at most 100 iterations with up to 20 step
/// halvings whenever the log-likelihood would decrease).
///
/// Throws SingularDesignError on rank-deficient designs and
/// NonConvergenceError when IRLS runs out of iterations, which is the usual
/// symptom of separation.
GLMFit fit_glm(const Dataset& data, const std::string& response,
               const std::vector<std::string>& predictors, GLMFamily family,
               const std::optional<Eigen::VectorXd>& obs_weights = std::nullopt);

/// Evaluates the fitted mean (X beta, or expit of it) on a dataset.
/// `overrides` substitute a constant for a column before evaluation, e.g.
/// {{"A", 1.0}} scores everyone as treated.
Eigen::VectorXd predict_mean(const GLMFit& fit, const Dataset& data,
                             const std::map<std::string, double>& overrides = {});

/// Clamps probabilities into [lo, hi] before they meet a reciprocal,
/// incrementing clip_count once per clamped entry.
Eigen::VectorXd clip_probabilities(Eigen::VectorXd p, double lo, double hi, int& clip_count);

/// Design matrix [1 | predictors] with override substitution; shared by the
/// fitting and prediction paths.
Eigen::MatrixXd design_matrix(const Dataset& data, const std::vector<std::string>& predictors,
                              const std::map<std::string, double>& overrides = {});

}  // namespace tri
