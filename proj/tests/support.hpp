#pragma once

// Shared test oracles, independent of the implementation paths they check.

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "tri/estimators.hpp"
#include "tri/kernel.hpp"
#include "tri/rng.hpp"

namespace testsupport {

/// Central finite differences of the triangulation functional in
/// (beta_1..beta_K, psi_1..psi_K); the oracle for the analytic gradient.
inline Eigen::VectorXd fd_gamma(const Eigen::VectorXd& betas, const Eigen::VectorXd& psis,
                                const tri::KernelConfig& cfg, double h = 1e-6) {
    const Eigen::Index k = betas.size();
    Eigen::VectorXd out(2 * k);
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::VectorXd up = betas, dn = betas;
        up[j] += h;
        dn[j] -= h;
        out[j] = (tri::triangulate(up, psis, cfg) - tri::triangulate(dn, psis, cfg)) / (2 * h);
    }
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::VectorXd up = psis, dn = psis;
        up[j] += h;
        dn[j] -= h;
        out[k + j] = (tri::triangulate(betas, up, cfg) - tri::triangulate(betas, dn, cfg)) / (2 * h);
    }
    return out;
}

/// Saturated 2x2 log-odds ratio log(n11 n00 / (n10 n01)) from raw columns.
inline double contingency_log_or(const Eigen::VectorXd& y, const Eigen::VectorXd& z) {
    double n00 = 0, n01 = 0, n10 = 0, n11 = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] == 0 && z[i] == 0) ++n00;
        else if (y[i] == 0 && z[i] == 1) ++n01;
        else if (y[i] == 1 && z[i] == 0) ++n10;
        else ++n11;
    }
    return std::log((n11 * n00) / (n10 * n01));
}

/// E_{X ~ N(0,1)}[expit(b0 + b1 X)] by wide trapezoid quadrature; used to
/// cross-check the Monte-Carlo do-intervention oracle.
inline double gauss_expit(double b0, double b1) {
    const int grid = 200001;
    const double lo = -10.0, hi = 10.0;
    const double h = (hi - lo) / (grid - 1);
    double sum = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double x = lo + i * h;
        const double w = (i == 0 || i == grid - 1) ? 0.5 : 1.0;
        sum += w * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI) / (1.0 + std::exp(-(b0 + b1 * x)));
    }
    return sum * h;
}

inline bool close_abs_or_rel(double a, double b, double abs_tol, double rel_tol) {
    const double diff = std::abs(a - b);
    return diff <= abs_tol || diff <= rel_tol * std::max(std::abs(a), std::abs(b));
}

/// Random five-variable joint over (Z, C, A, M, Y) built from bounded
/// logistic structural models for A and M (so the fitted parametric nuisances
/// the sampled estimators rely on are correctly specified) and an arbitrary
/// per-cell conditional for Y (so the outcome regression is genuinely
/// misspecified and double robustness is exercised).
inline tri::DiscreteJoint random_sem_joint(std::uint64_t seed) {
    tri::Rng rng(seed);
    auto expit = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };

    // P(Z, C): arbitrary positive table.
    double pzc[2][2];
    double total = 0.0;
    for (auto& row : pzc) {
        for (double& cell : row) {
            cell = rng.uniform(0.1, 1.0);
            total += cell;
        }
    }
    for (auto& row : pzc) {
        for (double& cell : row) cell /= total;
    }

    const double a0 = rng.uniform(-0.8, 0.8), az = rng.uniform(-1, 1), ac = rng.uniform(-1, 1);
    const double m0 = rng.uniform(-0.8, 0.8), ma = rng.uniform(-1, 1), mz = rng.uniform(-1, 1),
                 mc = rng.uniform(-1, 1);
    double py[16];  // P(Y=1 | a, m, z, c), arbitrary
    for (double& p : py) p = rng.uniform(0.15, 0.85);

    tri::DiscreteJoint joint;
    joint.variables = {"Z", "C", "A", "M", "Y"};
    joint.probabilities.resize(32);
    for (int cell = 0; cell < 32; ++cell) {
        const int z = cell & 1, c = (cell >> 1) & 1, a = (cell >> 2) & 1, m = (cell >> 3) & 1,
                  y = (cell >> 4) & 1;
        const double pa = expit(a0 + az * z + ac * c);
        const double pm = expit(m0 + ma * a + mz * z + mc * c);
        const double pyv = py[a * 8 + m * 4 + z * 2 + c];
        joint.probabilities[cell] = pzc[z][c] * (a ? pa : 1 - pa) * (m ? pm : 1 - pm) *
                                    (y ? pyv : 1 - pyv);
    }
    return joint;
}

}  // namespace testsupport
