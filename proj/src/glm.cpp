#include "tri/glm.hpp"

#include "tri/errors.hpp"
#include "tri/stats.hpp"

#include <cmath>
#include <string>

namespace tri {

namespace {

constexpr int kMaxIterations = 100;
constexpr int kMaxHalvings = 20;
constexpr double kCoefTol = 1e-10;
constexpr double kScoreTol = 1e-8;
constexpr double kRcondFloor = 1e-12;
// mu is clamped away from {0, 1} inside IRLS so variances and residual
// scalings stay finite under saturation.
constexpr double kMuFloor = 1e-10;

double clamp_mu(double mu) { return std::min(1.0 - kMuFloor, std::max(kMuFloor, mu)); }

/// Weighted least-squares solve via column-pivoted QR of sqrt(w) X. The
/// reciprocal condition of the normal matrix is estimated from the R diagonal
/// as (min|r|/max|r|)^2.
Eigen::VectorXd weighted_ls(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                            const Eigen::VectorXd& sqrt_w) {
    const Eigen::MatrixXd a = sqrt_w.asDiagonal() * design;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::VectorXd r_diag = qr.matrixR().diagonal().cwiseAbs();
    const double r_max = r_diag.maxCoeff();
    const double r_min = r_diag.minCoeff();
    if (!(r_max > 0.0) || (r_min / r_max) * (r_min / r_max) < kRcondFloor) {
        throw SingularDesignError("rank-deficient design (normal-matrix rcond < 1e-12)");
    }
    return qr.solve((sqrt_w.array() * target.array()).matrix());
}

double log_likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                      const Eigen::VectorXd& w) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double m = clamp_mu(mu[i]);
        ll += w[i] * (y[i] * std::log(m) + (1.0 - y[i]) * std::log1p(-m));
    }
    return ll;
}

GLMFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& w) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd mu = (x * beta).unaryExpr([](double e) { return expit(e); });
    double ll = log_likelihood(y, mu, w);

    GLMFit fit;
    fit.family = GLMFamily::Logistic;
    for (int iter = 1; iter <= kMaxIterations; ++iter) {
        fit.iterations = iter;
        Eigen::VectorXd sqrt_v(n), scaled_resid(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double m = clamp_mu(mu[i]);
            const double var = m * (1.0 - m);
            sqrt_v[i] = std::sqrt(w[i] * var);
            scaled_resid[i] = std::sqrt(w[i] / var) * (y[i] - mu[i]);
        }
        // Newton step: (X^T V X)^{-1} X^T w (y - mu), as a least-squares solve.
        Eigen::MatrixXd a = sqrt_v.asDiagonal() * x;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        const Eigen::VectorXd r_diag = qr.matrixR().diagonal().cwiseAbs();
        const double r_max = r_diag.maxCoeff();
        const double r_min = r_diag.minCoeff();
        if (!(r_max > 0.0) || (r_min / r_max) * (r_min / r_max) < kRcondFloor) {
            throw SingularDesignError("rank-deficient design in IRLS (normal-matrix rcond < 1e-12)");
        }
        const Eigen::VectorXd step = qr.solve(scaled_resid);

        // Step-halving tolerates summation noise in the log-likelihood; near
        // the optimum genuine improvements fall below it.
        const double ll_slack = 1e-10 * (1.0 + std::abs(ll));
        double scale = 1.0;
        Eigen::VectorXd beta_next, mu_next;
        double ll_next = 0.0;
        for (int halving = 0; halving <= kMaxHalvings; ++halving) {
            beta_next = beta + scale * step;
            mu_next = (x * beta_next).unaryExpr([](double e) { return expit(e); });
            ll_next = log_likelihood(y, mu_next, w);
            if (ll_next >= ll - ll_slack || halving == kMaxHalvings) break;
            scale *= 0.5;
        }

        const double change = (beta_next - beta).cwiseAbs().maxCoeff();
        beta = beta_next;
        mu = mu_next;
        ll = ll_next;
        if (change < kCoefTol) {
            const Eigen::VectorXd score =
                x.transpose() * (w.array() * (y - mu).array()).matrix() / static_cast<double>(n);
            fit.converged = score.cwiseAbs().maxCoeff() < kScoreTol;
            break;
        }
    }
    if (!fit.converged) {
        throw NonConvergenceError("IRLS did not converge in " + std::to_string(kMaxIterations) +
                                  " iterations (separated or near-separated data?)");
    }
    fit.coefficients = beta;
    return fit;
}

}  // namespace

Eigen::MatrixXd design_matrix(const Dataset& data, const std::vector<std::string>& predictors,
                              const std::map<std::string, double>& overrides) {
    Eigen::MatrixXd x(data.n(), static_cast<Eigen::Index>(predictors.size()) + 1);
    x.col(0).setOnes();
    for (std::size_t j = 0; j < predictors.size(); ++j) {
        auto it = overrides.find(predictors[j]);
        if (it != overrides.end()) {
            x.col(static_cast<Eigen::Index>(j) + 1).setConstant(it->second);
        } else {
            x.col(static_cast<Eigen::Index>(j) + 1) = data.column(predictors[j]);
        }
    }
    return x;
}

GLMFit fit_glm(const Dataset& data, const std::string& response,
               const std::vector<std::string>& predictors, GLMFamily family,
               const std::optional<Eigen::VectorXd>& obs_weights) {
    const Eigen::VectorXd& y = data.column(response);
    if (family == GLMFamily::Logistic && !data.is_binary(response)) {
        throw DomainError("logistic response '" + response + "' must be binary-flagged");
    }
    Eigen::VectorXd w = Eigen::VectorXd::Ones(data.n());
    if (obs_weights) {
        if (obs_weights->size() != data.n()) {
            throw DomainError("observation weights must have length n");
        }
        if ((obs_weights->array() <= 0.0).any()) {
            throw DomainError("observation weights must be strictly positive");
        }
        w = *obs_weights;
    }
    const Eigen::MatrixXd x = design_matrix(data, predictors);

    GLMFit fit;
    if (family == GLMFamily::Linear) {
        fit.family = GLMFamily::Linear;
        fit.coefficients = weighted_ls(x, y, w.cwiseSqrt());
        fit.converged = true;
        fit.iterations = 1;
    } else {
        fit = fit_logistic(x, y, w);
    }
    fit.predictor_names = predictors;
    fit.obs_weights_used = obs_weights.has_value();
    return fit;
}

Eigen::VectorXd predict_mean(const GLMFit& fit, const Dataset& data,
                             const std::map<std::string, double>& overrides) {
    const Eigen::MatrixXd x = design_matrix(data, fit.predictor_names, overrides);
    Eigen::VectorXd eta = x * fit.coefficients;
    if (fit.family == GLMFamily::Logistic) {
        eta = eta.unaryExpr([](double e) { return expit(e); });
    }
    return eta;
}

Eigen::VectorXd clip_probabilities(Eigen::VectorXd p, double lo, double hi, int& clip_count) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] < lo) {
            p[i] = lo;
            ++clip_count;
        } else if (p[i] > hi) {
            p[i] = hi;
            ++clip_count;
        }
    }
    return p;
}

}  // namespace tri
