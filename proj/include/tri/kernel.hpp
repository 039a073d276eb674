#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace tri {

/// Gaussian-kernel sharpness and weight stabilizer.
///
/// `lambda` is the additive denominator term that keeps weights finite when
/// every kernel mass is near zero; the usual prescription is 1/n. When
/// `lambda_auto` is set, resampling procedures rescale it to 1/(replicate
/// size); an explicit lambda is carried through unchanged.
struct KernelConfig {
    double a = 0.1;
    double lambda = 0.0;
    bool lambda_auto = false;
};

/// KernelConfig with lambda = 1/n, tracking sample size under resampling.
inline KernelConfig auto_lambda(double a, std::size_t n) {
    return KernelConfig{a, 1.0 / static_cast<double>(n), true};
}

/// Gaussian kernel delta_a(beta) = exp(-(beta/a)^2) / (|a| sqrt(pi)).
/// Strictly positive (up to floating-point underflow), maximized at beta = 0.
double gaussian_kernel(double beta, double a);

/// delta_a applied elementwise.
Eigen::VectorXd kernel_masses(const Eigen::VectorXd& betas, double a);

/// Model weights w_k = delta_a(beta_k) / (lambda + sum_j delta_a(beta_j)).
/// With lambda = 0 the weights sum to one; with lambda > 0 they sum to
/// strictly less than one.
Eigen::VectorXd weights(const Eigen::VectorXd& betas, const KernelConfig& cfg);

/// Kernel-weighted combination sum_k w_k psi_k.
double triangulate(const Eigen::VectorXd& betas, const Eigen::VectorXd& psis,
                   const KernelConfig& cfg);

/// Indicator-filtered average: mean of psi_k over models with |beta_k| <= tol.
/// Throws NoValidModelError when no model survives the filter.
double naive_triangulate(const Eigen::VectorXd& betas, const Eigen::VectorXd& psis,
                         double tol = 1e-9);

/// Gradient of the combined functional in the estimate vector
/// (beta_1..beta_K, psi_1..psi_K):
///
///   d/d beta_k = (2 beta_k w_k / a^2) *
///                (sum_{i != k} psi_i w_i
///                 - psi_k (lambda + sum_{j != k} delta_j) / (lambda + sum_j delta_j))
///   d/d psi_k  = w_k
///
/// The beta block comes first, matching the ordering used for the influence
/// covariance.
Eigen::VectorXd gamma_partials(const Eigen::VectorXd& betas, const Eigen::VectorXd& psis,
                               const KernelConfig& cfg);

/// True when sum_j delta_a(beta_j) < 10 * lambda, i.e. the stabilizer
/// dominates the kernel mass and the combined estimate is no longer a
/// meaningful weighted average.
bool degenerate_weights(const Eigen::VectorXd& betas, const KernelConfig& cfg);

struct RobustnessBound {
    double d_a = 0.0;            ///< sum_{k in C} delta / sum_{k in I} delta
    double bound = 0.0;          ///< max_k |psi_k - theta| / (1 + d_a)
    double attained = 0.0;       ///< |triangulate(betas, psis) - theta| at lambda = 0
    double eps = 0.0;            ///< min_{k in I} |beta_k|
    double lower_bound_da = 0.0; ///< exp(eps^2 / a^2) / |I|
};

/// Robustness-bound diagnostics for a hypothesized split into correct and
/// incorrect models. Stated for the lambda-free functional, so cfg.lambda
/// must be zero. `correct_indices` are 0-based and must form a nonempty
/// proper subset of the models.
RobustnessBound robustness_bound(const Eigen::VectorXd& betas,
                                         const Eigen::VectorXd& psis, double theta,
                                         const std::vector<int>& correct_indices,
                                         const KernelConfig& cfg);

}  // namespace tri
