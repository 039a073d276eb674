#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "tri/dataset.hpp"
#include "tri/glm.hpp"
#include "tri/types.hpp"

namespace tri {

/// Specification of a conditional log-odds-ratio parameter
/// log OR(left, right | conditioning) with reference values for the
/// odds-ratio function.
struct ORSpec {
    std::string left;
    std::string right;
    std::vector<std::string> conditioning;
    double reference_left = 0.0;
    double reference_right = 0.0;
};

/// Influence-function-based Z-estimator of log OR(left, right | conditioning).
///
/// Solves (1/n) sum_i (y_i - zeta_i)(z_i - eta_i) exp(-beta y_i z_i) = 0 where
/// zeta = E[left | right = reference, conditioning] is fit on the
/// right-at-reference subsample and eta symmetrically. Root-finding is a
/// monotone-safe Newton/bisection hybrid on [-20, 20] driven to an averaged
/// estimating-equation residual below 1e-12. Influence values are
/// g_i(beta_hat) / B_n with B_n the averaged negative derivative.
///
/// Requires left and right binary-flagged and n >= 50.
EstimateWithIF log_or_zestimator(const Dataset& data, const ORSpec& spec);

/// Plug-in log-odds coefficient: the coefficient of `right` in a regression
/// of `left` on {right} + conditioning. Logistic when `left` is
/// binary-flagged, linear otherwise (the Gaussian analogue used when the
/// outcome is continuous). No influence values.
EstimateWithIF log_or_plugin(const Dataset& data, const ORSpec& spec);

/// Mediator set and the regressors of its sequential logistic models
/// (typically treatment, anchor, and covariates); mediator j is additionally
/// conditioned on mediators 0..j-1 in declared order.
struct MediatorModelSpec {
    std::vector<std::string> mediators;
    std::vector<std::string> predictors;
};

/// Fitted mediator density P(M = m | predictors): a product of sequential
/// logistic probabilities, usable with column overrides (e.g. treatment
/// forced to 1). Each factor is clipped into [1e-12, 1 - 1e-12] before it can
/// meet a reciprocal.
class MediatorDensityModel {
public:
    MediatorDensityModel(const Dataset& data, MediatorModelSpec spec);

    /// Density of each row's observed mediator values under `overrides`;
    /// `clipped_rows` grows by the number of rows with at least one clamped
    /// factor.
    Eigen::VectorXd density(const Dataset& data, const std::map<std::string, double>& overrides,
                            int& clipped_rows) const;

    const MediatorModelSpec& spec() const { return spec_; }

private:
    MediatorModelSpec spec_;
    std::vector<GLMFit> fits_;
};

/// Reweighted (Verma-constraint) log-odds: the coefficient of `anchor` in a
/// regression of `outcome` on {anchor} + covariates weighted by
/// 1 / P_hat(M = m_i | predictors_i). Regression family follows the outcome's
/// binary flag. Flags high_clip when more than 1% of rows had a clamped
/// mediator probability.
EstimateWithIF verma_log_or(const Dataset& data, const std::string& outcome,
                            const std::string& anchor,
                            const std::vector<std::string>& covariates,
                            const MediatorModelSpec& mediator_model);

}  // namespace tri
