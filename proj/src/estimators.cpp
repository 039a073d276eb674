#include "tri/estimators.hpp"

#include "tri/errors.hpp"
#include "tri/glm.hpp"
#include "tri/rng.hpp"
#include "tri/stats.hpp"
#include "tri/validity.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tri {

namespace {

constexpr double kPropensityClipLo = 0.01;
constexpr double kPropensityClipHi = 0.99;

GLMFamily outcome_family(const Dataset& data, const std::string& outcome) {
    return data.is_binary(outcome) ? GLMFamily::Logistic : GLMFamily::Linear;
}

std::vector<std::string> prepend(const std::string& head, const std::vector<std::string>& tail) {
    std::vector<std::string> out;
    out.reserve(tail.size() + 1);
    out.push_back(head);
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

}  // namespace

EstimateWithIF backdoor_aipw(const Dataset& data, const std::string& treatment,
                             const std::string& outcome,
                             const std::vector<std::string>& adjustment) {
    return backdoor_aipw(data, treatment, outcome, adjustment, adjustment);
}

EstimateWithIF backdoor_aipw(const Dataset& data, const std::string& treatment,
                             const std::string& outcome,
                             const std::vector<std::string>& propensity_adjustment,
                             const std::vector<std::string>& outcome_adjustment) {
    if (!data.is_binary(treatment)) {
        throw DomainError("AIPW treatment '" + treatment + "' must be binary-flagged");
    }
    const Eigen::VectorXd& y = data.column(outcome);
    const Eigen::VectorXd& a = data.column(treatment);

    const GLMFit pi_fit = fit_glm(data, treatment, propensity_adjustment, GLMFamily::Logistic);
    int clip_count = 0;
    const Eigen::VectorXd pi =
        clip_probabilities(predict_mean(pi_fit, data), kPropensityClipLo, kPropensityClipHi,
                           clip_count);

    const GLMFit mu_fit =
        fit_glm(data, outcome, prepend(treatment, outcome_adjustment), outcome_family(data, outcome));
    const Eigen::VectorXd mu_at = predict_mean(mu_fit, data);
    const Eigen::VectorXd mu1 = predict_mean(mu_fit, data, {{treatment, 1.0}});
    const Eigen::VectorXd mu0 = predict_mean(mu_fit, data, {{treatment, 0.0}});

    const Eigen::ArrayXd residual_term =
        (y - mu_at).array() * (a.array() - pi.array()) / (pi.array() * (1.0 - pi.array()));
    const Eigen::VectorXd uncentered = (residual_term + mu1.array() - mu0.array()).matrix();

    EstimateWithIF out;
    out.value = uncentered.mean();
    out.influence = uncentered.array() - out.value;
    out.method = EstimationMethod::InfluenceFunction;
    out.clip_count = clip_count;
    out.high_clip = clip_count > 0.01 * static_cast<double>(data.n());
    return out;
}

EstimateWithIF backdoor_plugin(const Dataset& data, const std::string& treatment,
                               const std::string& outcome,
                               const std::vector<std::string>& adjustment) {
    const GLMFit mu_fit =
        fit_glm(data, outcome, prepend(treatment, adjustment), outcome_family(data, outcome));
    const Eigen::VectorXd mu1 = predict_mean(mu_fit, data, {{treatment, 1.0}});
    const Eigen::VectorXd mu0 = predict_mean(mu_fit, data, {{treatment, 0.0}});

    EstimateWithIF out;
    out.value = (mu1 - mu0).mean();
    out.method = EstimationMethod::PluginParametric;
    return out;
}

EstimateWithIF frontdoor_dual_ipw(const Dataset& data, const std::string& treatment,
                                  const std::string& outcome,
                                  const std::vector<std::string>& mediators,
                                  const std::vector<std::string>& covariates) {
    const MediatorDensityModel model(data, {mediators, prepend(treatment, covariates)});
    int clipped_rows = 0;
    const Eigen::VectorXd dens_at = model.density(data, {}, clipped_rows);
    const Eigen::VectorXd dens1 = model.density(data, {{treatment, 1.0}}, clipped_rows);
    const Eigen::VectorXd dens0 = model.density(data, {{treatment, 0.0}}, clipped_rows);
    const Eigen::VectorXd& y = data.column(outcome);

    EstimateWithIF out;
    out.value = (((dens1 - dens0).array() / dens_at.array()) * y.array()).mean();
    out.method = EstimationMethod::PluginParametric;
    out.clip_count = clipped_rows;
    out.high_clip = clipped_rows > 0.01 * 3.0 * static_cast<double>(data.n());
    return out;
}

EstimateWithIF iv_plugin(const Dataset& data, const std::string& instrument,
                         const std::string& treatment, const std::string& outcome,
                         const std::vector<std::string>& covariates) {
    if (!data.is_binary(instrument)) {
        throw DomainError("IV instrument '" + instrument + "' must be binary-flagged");
    }
    if (!data.is_binary(treatment)) {
        throw DomainError("IV treatment '" + treatment + "' must be binary-flagged");
    }
    const std::vector<std::string> predictors = prepend(instrument, covariates);
    const GLMFit nu_fit = fit_glm(data, outcome, predictors, outcome_family(data, outcome));
    const GLMFit xi_fit = fit_glm(data, treatment, predictors, GLMFamily::Logistic);

    const double numerator = (predict_mean(nu_fit, data, {{instrument, 1.0}}) -
                              predict_mean(nu_fit, data, {{instrument, 0.0}}))
                                 .mean();
    const double denominator = (predict_mean(xi_fit, data, {{instrument, 1.0}}) -
                                predict_mean(xi_fit, data, {{instrument, 0.0}}))
                                   .mean();
    if (std::abs(denominator) < 1e-6) {
        throw WeakInstrumentError("IV first stage is numerically zero");
    }

    EstimateWithIF out;
    out.value = numerator / denominator;
    out.method = EstimationMethod::PluginParametric;
    return out;
}

namespace {

int var_index(const DiscreteJoint& joint, const std::string& name) {
    for (std::size_t j = 0; j < joint.variables.size(); ++j) {
        if (joint.variables[j] == name) return static_cast<int>(j);
    }
    throw DomainError("role variable '" + name + "' not in the joint");
}

std::uint32_t mask_of(const DiscreteJoint& joint, const std::vector<std::string>& names) {
    std::uint32_t mask = 0;
    for (const auto& name : names) {
        mask |= 1u << var_index(joint, name);
    }
    return mask;
}

/// Marginal probability table over the masked coordinates: out[idx & mask].
Eigen::VectorXd marginal(const DiscreteJoint& joint, std::uint32_t mask) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(joint.probabilities.size());
    for (Eigen::Index idx = 0; idx < joint.probabilities.size(); ++idx) {
        out[static_cast<Eigen::Index>(static_cast<std::uint32_t>(idx) & mask)] +=
            joint.probabilities[idx];
    }
    return out;
}

/// E[outcome | masked coordinates]: numerator restricted to outcome = 1.
Eigen::VectorXd conditional_mean(const DiscreteJoint& joint, std::uint32_t mask,
                                 std::uint32_t outcome_bit, const Eigen::VectorXd& margin) {
    Eigen::VectorXd num = Eigen::VectorXd::Zero(joint.probabilities.size());
    for (Eigen::Index idx = 0; idx < joint.probabilities.size(); ++idx) {
        if (static_cast<std::uint32_t>(idx) & outcome_bit) {
            num[static_cast<Eigen::Index>(static_cast<std::uint32_t>(idx) & mask)] +=
                joint.probabilities[idx];
        }
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(joint.probabilities.size());
    for (Eigen::Index k = 0; k < out.size(); ++k) {
        if (margin[k] > 0.0) out[k] = num[k] / margin[k];
    }
    return out;
}

/// Enumerates the cell indices whose bits outside `mask` are zero.
std::vector<std::uint32_t> submasks(std::uint32_t mask) {
    std::vector<std::uint32_t> out;
    std::uint32_t sub = mask;
    while (true) {
        out.push_back(sub);
        if (sub == 0) break;
        sub = (sub - 1) & mask;
    }
    std::sort(out.begin(), out.end());
    return out;
}

void require_positive(double p, const char* what) {
    if (!(p > 0.0)) {
        throw DegenerateConditionalError(std::string("zero-probability conditioning event in ") +
                                         what);
    }
}

}  // namespace

void validate(const DiscreteJoint& joint) {
    if (joint.variables.empty() || joint.variables.size() > 20) {
        throw ValidationError("discrete joint supports 1..20 binary variables");
    }
    const Eigen::Index cells = Eigen::Index(1) << joint.variables.size();
    if (joint.probabilities.size() != cells) {
        throw ValidationError("probability vector must have 2^V entries");
    }
    if ((joint.probabilities.array() < 0.0).any()) {
        throw ValidationError("probabilities must be nonnegative");
    }
    if (std::abs(joint.probabilities.sum() - 1.0) > 1e-12) {
        throw ValidationError("probabilities must sum to one");
    }
    std::set<std::string> seen(joint.variables.begin(), joint.variables.end());
    if (seen.size() != joint.variables.size()) {
        throw ValidationError("duplicate variable names in the joint");
    }
}

ExactFunctionals exact_functionals(const DiscreteJoint& joint, const FunctionalRoles& roles) {
    validate(joint);
    const std::uint32_t a_bit = 1u << var_index(joint, roles.treatment);
    const std::uint32_t y_bit = 1u << var_index(joint, roles.outcome);
    const std::uint32_t z_bit = 1u << var_index(joint, roles.instrument);
    const std::uint32_t m_mask = mask_of(joint, roles.mediators);

    ExactFunctionals out;

    // Backdoor: sum_l P(l) (E[Y | A=1, l] - E[Y | A=0, l]).
    {
        const std::uint32_t l_mask = mask_of(joint, roles.backdoor_adjustment);
        const Eigen::VectorXd p_l = marginal(joint, l_mask);
        const Eigen::VectorXd p_al = marginal(joint, l_mask | a_bit);
        const Eigen::VectorXd ey_al = conditional_mean(joint, l_mask | a_bit, y_bit, p_al);
        double total = 0.0;
        for (std::uint32_t l : submasks(l_mask)) {
            if (p_l[l] == 0.0) continue;
            require_positive(p_al[l | a_bit], "backdoor E[Y | A=1, l]");
            require_positive(p_al[l], "backdoor E[Y | A=0, l]");
            total += p_l[l] * (ey_al[l | a_bit] - ey_al[l]);
        }
        out.backdoor = total;
    }

    // Frontdoor: sum_{m,l} (sum_{a'} P(a', l) E[Y | a', m, l])
    //                      (P(m | A=1, l) - P(m | A=0, l)).
    {
        const std::uint32_t l_mask = mask_of(joint, roles.frontdoor_adjustment);
        const Eigen::VectorXd p_al = marginal(joint, l_mask | a_bit);
        const Eigen::VectorXd p_aml = marginal(joint, l_mask | a_bit | m_mask);
        const Eigen::VectorXd ey_aml =
            conditional_mean(joint, l_mask | a_bit | m_mask, y_bit, p_aml);
        double total = 0.0;
        for (std::uint32_t l : submasks(l_mask)) {
            require_positive(p_al[l | a_bit], "frontdoor P(m | A=1, l)");
            require_positive(p_al[l], "frontdoor P(m | A=0, l)");
            for (std::uint32_t m : submasks(m_mask)) {
                double inner = 0.0;
                for (std::uint32_t a : {0u, a_bit}) {
                    const double p_cell = p_aml[l | m | a];
                    require_positive(p_cell, "frontdoor E[Y | a', m, l]");
                    inner += p_al[l | a] * ey_aml[l | m | a];
                }
                const double m_diff =
                    p_aml[l | m | a_bit] / p_al[l | a_bit] - p_aml[l | m] / p_al[l];
                total += inner * m_diff;
            }
        }
        out.frontdoor = total;
    }

    // IV: Wald ratio of covariate-averaged instrument contrasts.
    {
        const std::uint32_t l_mask = mask_of(joint, roles.iv_adjustment);
        const Eigen::VectorXd p_l = marginal(joint, l_mask);
        const Eigen::VectorXd p_zl = marginal(joint, l_mask | z_bit);
        const Eigen::VectorXd ey_zl = conditional_mean(joint, l_mask | z_bit, y_bit, p_zl);
        const Eigen::VectorXd ea_zl = conditional_mean(joint, l_mask | z_bit, a_bit, p_zl);
        double num = 0.0;
        double den = 0.0;
        for (std::uint32_t l : submasks(l_mask)) {
            if (p_l[l] == 0.0) continue;
            require_positive(p_zl[l | z_bit], "IV E[. | Z=1, l]");
            require_positive(p_zl[l], "IV E[. | Z=0, l]");
            num += p_l[l] * (ey_zl[l | z_bit] - ey_zl[l]);
            den += p_l[l] * (ea_zl[l | z_bit] - ea_zl[l]);
        }
        if (std::abs(den) < 1e-12) {
            throw WeakInstrumentError("exact IV denominator is zero");
        }
        out.iv = num / den;
    }

    return out;
}

Dataset sample_joint(const DiscreteJoint& joint, std::size_t n, std::uint64_t seed) {
    validate(joint);
    const Eigen::Index cells = joint.probabilities.size();
    std::vector<double> cumulative(static_cast<std::size_t>(cells));
    double acc = 0.0;
    for (Eigen::Index c = 0; c < cells; ++c) {
        acc += joint.probabilities[c];
        cumulative[static_cast<std::size_t>(c)] = acc;
    }
    cumulative.back() = 1.0;

    Rng rng(seed);
    const std::size_t v = joint.variables.size();
    std::vector<Eigen::VectorXd> columns(v, Eigen::VectorXd(static_cast<Eigen::Index>(n)));
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
        const std::uint32_t cell = static_cast<std::uint32_t>(it - cumulative.begin());
        for (std::size_t j = 0; j < v; ++j) {
            columns[j][static_cast<Eigen::Index>(i)] = (cell >> j) & 1u ? 1.0 : 0.0;
        }
    }
    return Dataset(joint.variables, std::move(columns),
                   std::set<std::string>(joint.variables.begin(), joint.variables.end()));
}

}  // namespace tri
