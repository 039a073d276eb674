#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "tri/dataset.hpp"
#include "tri/types.hpp"

namespace tri {

/// Doubly robust AIPW estimator of the backdoor functional with adjustment W:
///
///   (1/n) sum_i [ (y - mu(a, w)) (a - pi(w)) / (pi(w)(1 - pi(w)))
///                 + mu(1, w) - mu(0, w) ]
///
/// pi is a logistic GLM of the (binary) treatment on W, clipped into
/// [0.01, 0.99] with the clip count reported; mu is a logistic or linear GLM
/// of the outcome on {treatment} + W, following the outcome's binary flag.
/// Influence values are the centered per-row terms.
EstimateWithIF backdoor_aipw(const Dataset& data, const std::string& treatment,
                             const std::string& outcome,
                             const std::vector<std::string>& adjustment);

/// AIPW with distinct propensity and outcome adjustment sets; used to probe
/// double robustness under deliberate misspecification of one nuisance.
EstimateWithIF backdoor_aipw(const Dataset& data, const std::string& treatment,
                             const std::string& outcome,
                             const std::vector<std::string>& propensity_adjustment,
                             const std::vector<std::string>& outcome_adjustment);

/// Plug-in backdoor estimator: (1/n) sum_i [mu(1, l_i) - mu(0, l_i)].
EstimateWithIF backdoor_plugin(const Dataset& data, const std::string& treatment,
                               const std::string& outcome,
                               const std::vector<std::string>& adjustment);

/// Dual-IPW plug-in estimator of the frontdoor functional:
///
///   mean[ (P(M = m | A=1, L) - P(M = m | A=0, L)) / P(M = m | A, L) * Y ]
///
/// with the mediator density fitted as sequential logistic models on
/// {treatment} + covariates. For the conditional frontdoor model the
/// covariates are C plus the anchor.
EstimateWithIF frontdoor_dual_ipw(const Dataset& data, const std::string& treatment,
                                  const std::string& outcome,
                                  const std::vector<std::string>& mediators,
                                  const std::vector<std::string>& covariates);

/// Plug-in covariate-adjusted Wald ratio:
///
///   mean_i[nu(1, l_i) - nu(0, l_i)] / mean_i[xi(1, l_i) - xi(0, l_i)]
///
/// with nu = E[Y | Z, L] and xi = E[A | Z, L] (logistic). Throws
/// WeakInstrumentError when the first stage is numerically zero.
EstimateWithIF iv_plugin(const Dataset& data, const std::string& instrument,
                         const std::string& treatment, const std::string& outcome,
                         const std::vector<std::string>& covariates);

/// Exhaustive joint distribution over binary variables; cell index bit j is
/// the value of variables[j]. Test-oracle substrate for the identifying
/// functionals.
struct DiscreteJoint {
    std::vector<std::string> variables;
    Eigen::VectorXd probabilities;  ///< length 2^variables, sums to one
};

void validate(const DiscreteJoint& joint);

/// Role bindings for the exact functionals. Each functional takes its own
/// adjustment set; the conditional frontdoor typically adjusts for the
/// instrument as well, while the backdoor and IV functionals do not.
struct FunctionalRoles {
    std::string treatment;
    std::string outcome;
    std::string instrument;
    std::vector<std::string> mediators;
    std::vector<std::string> backdoor_adjustment;
    std::vector<std::string> frontdoor_adjustment;
    std::vector<std::string> iv_adjustment;
};

struct ExactFunctionals {
    double backdoor = 0.0;
    double frontdoor = 0.0;
    double iv = 0.0;
};

/// Evaluates the backdoor, conditional frontdoor, and IV functionals by
/// exhaustive summation over the lattice. Throws DegenerateConditionalError
/// when a required conditioning event has zero probability.
ExactFunctionals exact_functionals(const DiscreteJoint& joint, const FunctionalRoles& roles);

/// IID sample of n rows from the joint; every column is binary-flagged.
Dataset sample_joint(const DiscreteJoint& joint, std::size_t n, std::uint64_t seed);

}  // namespace tri
