#include "tri/kernel.hpp"

#include "tri/errors.hpp"

#include <cmath>
#include <string>

namespace tri {

namespace {

void check_lengths(const Eigen::VectorXd& betas, const Eigen::VectorXd& psis) {
    if (betas.size() != psis.size()) {
        throw DomainError("beta/psi length mismatch: " + std::to_string(betas.size()) + " vs " +
                          std::to_string(psis.size()));
    }
    if (betas.size() < 1) {
        throw DomainError("need at least one model");
    }
}

double denominator(const Eigen::VectorXd& masses, const KernelConfig& cfg) {
    const double denom = cfg.lambda + masses.sum();
    if (!(denom > 0.0)) {
        throw DomainError("all kernel masses underflowed and lambda = 0; weights undefined");
    }
    return denom;
}

}  // namespace

double gaussian_kernel(double beta, double a) {
    if (!(a > 0.0)) {
        throw DomainError("kernel sharpness a must be positive");
    }
    const double z = beta / a;
    return std::exp(-z * z) / (a * std::sqrt(M_PI));
}

Eigen::VectorXd kernel_masses(const Eigen::VectorXd& betas, double a) {
    if (!(a > 0.0)) {
        throw DomainError("kernel sharpness a must be positive");
    }
    const double norm = 1.0 / (a * std::sqrt(M_PI));
    return (-(betas.array() / a).square()).exp() * norm;
}

Eigen::VectorXd weights(const Eigen::VectorXd& betas, const KernelConfig& cfg) {
    if (betas.size() < 1) {
        throw DomainError("need at least one model");
    }
    if (cfg.lambda < 0.0) {
        throw DomainError("lambda must be nonnegative");
    }
    const Eigen::VectorXd masses = kernel_masses(betas, cfg.a);
    return masses / denominator(masses, cfg);
}

double triangulate(const Eigen::VectorXd& betas, const Eigen::VectorXd& psis,
                   const KernelConfig& cfg) {
    check_lengths(betas, psis);
    return weights(betas, cfg).dot(psis);
}

double naive_triangulate(const Eigen::VectorXd& betas, const Eigen::VectorXd& psis, double tol) {
    check_lengths(betas, psis);
    if (tol < 0.0) {
        throw DomainError("tolerance must be nonnegative");
    }
    double sum = 0.0;
    Eigen::Index kept = 0;
    for (Eigen::Index k = 0; k < betas.size(); ++k) {
        if (std::abs(betas[k]) <= tol) {
            sum += psis[k];
            ++kept;
        }
    }
    if (kept == 0) {
        throw NoValidModelError("no model passed the |beta| <= tol filter");
    }
    return sum / static_cast<double>(kept);
}

Eigen::VectorXd gamma_partials(const Eigen::VectorXd& betas, const Eigen::VectorXd& psis,
                               const KernelConfig& cfg) {
    check_lengths(betas, psis);
    const Eigen::Index k_models = betas.size();
    const Eigen::VectorXd masses = kernel_masses(betas, cfg.a);
    const double denom = denominator(masses, cfg);
    const Eigen::VectorXd w = masses / denom;

    Eigen::VectorXd gamma(2 * k_models);
    const double inv_a2 = 1.0 / (cfg.a * cfg.a);
    for (Eigen::Index k = 0; k < k_models; ++k) {
        // Leave-one-out sums accumulated directly; subtracting from the total
        // cancels catastrophically when one kernel mass dominates.
        double cross = 0.0;        // sum_{i != k} psi_i w_i
        double others = cfg.lambda; // lambda + sum_{j != k} delta_j
        for (Eigen::Index i = 0; i < k_models; ++i) {
            if (i == k) continue;
            cross += psis[i] * w[i];
            others += masses[i];
        }
        gamma[k] = 2.0 * betas[k] * w[k] * inv_a2 * (cross - psis[k] * others / denom);
    }
    gamma.tail(k_models) = w;
    return gamma;
}

bool degenerate_weights(const Eigen::VectorXd& betas, const KernelConfig& cfg) {
    return kernel_masses(betas, cfg.a).sum() < 10.0 * cfg.lambda;
}

RobustnessBound robustness_bound(const Eigen::VectorXd& betas,
                                         const Eigen::VectorXd& psis, double theta,
                                         const std::vector<int>& correct_indices,
                                         const KernelConfig& cfg) {
    check_lengths(betas, psis);
    if (cfg.lambda != 0.0) {
        throw DomainError("the robustness-bound diagnostics are stated for the lambda-free functional");
    }
    const Eigen::Index k_models = betas.size();
    std::vector<bool> correct(static_cast<std::size_t>(k_models), false);
    for (int idx : correct_indices) {
        if (idx < 0 || idx >= k_models) {
            throw DomainError("correct-model index out of range");
        }
        correct[static_cast<std::size_t>(idx)] = true;
    }
    const std::size_t n_correct = correct_indices.size();
    if (n_correct == 0 || n_correct >= static_cast<std::size_t>(k_models)) {
        throw DomainError("correct set must be a nonempty proper subset; D_a is undefined otherwise");
    }

    const Eigen::VectorXd masses = kernel_masses(betas, cfg.a);
    double mass_correct = 0.0;
    double mass_incorrect = 0.0;
    double eps = std::numeric_limits<double>::infinity();
    std::size_t n_incorrect = 0;
    for (Eigen::Index k = 0; k < k_models; ++k) {
        if (correct[static_cast<std::size_t>(k)]) {
            mass_correct += masses[k];
        } else {
            mass_incorrect += masses[k];
            eps = std::min(eps, std::abs(betas[k]));
            ++n_incorrect;
        }
    }

    RobustnessBound out;
    out.d_a = mass_correct / mass_incorrect;  // +inf when the incorrect mass underflows
    out.eps = eps;
    const double z = eps / cfg.a;
    out.lower_bound_da = std::exp(z * z) / static_cast<double>(n_incorrect);
    out.bound = (psis.array() - theta).abs().maxCoeff() / (1.0 + out.d_a);
    out.attained = std::abs(triangulate(betas, psis, cfg) - theta);
    return out;
}

}  // namespace tri
