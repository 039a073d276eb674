#include "tri/validity.hpp"

#include "tri/errors.hpp"
#include "tri/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

namespace tri {

namespace {

constexpr double kProbClipLo = 1e-12;
constexpr double kProbClipHi = 1.0 - 1e-12;
constexpr double kRootSpan = 20.0;

void check_or_spec(const Dataset& data, const ORSpec& spec) {
    if (spec.left == spec.right) {
        throw DomainError("odds-ratio spec needs distinct left/right variables");
    }
    for (const auto& c : spec.conditioning) {
        if (c == spec.left || c == spec.right) {
            throw DomainError("conditioning set must be disjoint from {left, right}");
        }
    }
    (void)data.column(spec.left);
    (void)data.column(spec.right);
}

std::vector<Eigen::Index> rows_where_equal(const Eigen::VectorXd& col, double value) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
        if (col[i] == value) rows.push_back(i);
    }
    return rows;
}

/// Monotone-safe hybrid root finder: Newton steps with the analytic
/// derivative, falling back to bisection whenever a step leaves the current
/// sign-change bracket.
double hybrid_root(const std::function<double(double)>& f, const std::function<double(double)>& fprime,
                   double lo, double hi) {
    double f_lo = f(lo);
    double f_hi = f(hi);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo > 0.0) == (f_hi > 0.0)) {
        throw RootNotBracketedError("estimating equation has no sign change on [-20, 20]");
    }
    double b = 0.5 * (lo + hi);
    double fb = f(b);
    for (int iter = 0; iter < 200 && std::abs(fb) > 1e-13 && hi - lo > 1e-15; ++iter) {
        const double d = fprime(b);
        double next = (d != 0.0) ? b - fb / d : lo - 1.0;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        const double f_next = f(next);
        if ((f_next > 0.0) == (f_lo > 0.0)) {
            lo = next;
            f_lo = f_next;
        } else {
            hi = next;
            f_hi = f_next;
        }
        b = next;
        fb = f_next;
    }
    return b;
}

}  // namespace

EstimateWithIF log_or_zestimator(const Dataset& data, const ORSpec& spec) {
    check_or_spec(data, spec);
    if (!data.is_binary(spec.left) || !data.is_binary(spec.right)) {
        throw DomainError("Z-estimator needs binary-flagged left and right variables");
    }
    if (data.n() < 50) {
        throw DomainError("Z-estimator refused below n = 50: root-finding is unreliable");
    }
    const Eigen::VectorXd& y = data.column(spec.left);
    const Eigen::VectorXd& z = data.column(spec.right);

    // zeta = E[left | right = ref_right, conditioning], fit on the reference
    // subsample and evaluated everywhere; eta symmetrically.
    const Dataset ref_right = data.subset(rows_where_equal(z, spec.reference_right));
    const Dataset ref_left = data.subset(rows_where_equal(y, spec.reference_left));
    const GLMFit zeta_fit = fit_glm(ref_right, spec.left, spec.conditioning, GLMFamily::Logistic);
    const GLMFit eta_fit = fit_glm(ref_left, spec.right, spec.conditioning, GLMFamily::Logistic);
    const Eigen::VectorXd zeta = predict_mean(zeta_fit, data);
    const Eigen::VectorXd eta = predict_mean(eta_fit, data);

    // g_i(b) = (y - zeta)(z - eta) e^{-b y z}; with binary y, z the averaged
    // equation is (s0 + s1 e^{-b}) / n, split on y z = 1.
    const Eigen::ArrayXd cross = (y - zeta).array() * (z - eta).array();
    const Eigen::ArrayXd yz = y.array() * z.array();
    const double n = static_cast<double>(data.n());
    const double s1 = (yz * cross).sum();
    const double s0 = cross.sum() - s1;

    const auto ee = [&](double b) { return (s0 + s1 * std::exp(-b)) / n; };
    const auto ee_prime = [&](double b) { return -s1 * std::exp(-b) / n; };
    const double beta = hybrid_root(ee, ee_prime, -kRootSpan, kRootSpan);

    const double info = s1 * std::exp(-beta) / n;  // (1/n) sum of -dg/db at beta
    if (std::abs(info) < 1e-10) {
        throw DegenerateInformationError("Z-estimator information |B_n| < 1e-10");
    }

    EstimateWithIF out;
    out.value = beta;
    out.method = EstimationMethod::InfluenceFunction;
    out.influence = ((cross * (-beta * yz).exp()) / info).matrix();
    return out;
}

EstimateWithIF log_or_plugin(const Dataset& data, const ORSpec& spec) {
    check_or_spec(data, spec);
    std::vector<std::string> predictors;
    predictors.reserve(spec.conditioning.size() + 1);
    predictors.push_back(spec.right);
    predictors.insert(predictors.end(), spec.conditioning.begin(), spec.conditioning.end());
    const GLMFamily family =
        data.is_binary(spec.left) ? GLMFamily::Logistic : GLMFamily::Linear;
    const GLMFit fit = fit_glm(data, spec.left, predictors, family);

    EstimateWithIF out;
    out.value = fit.coefficients[1];  // coefficient of `right`
    out.method = EstimationMethod::PluginParametric;
    return out;
}

MediatorDensityModel::MediatorDensityModel(const Dataset& data, MediatorModelSpec spec)
    : spec_(std::move(spec)) {
    if (spec_.mediators.empty()) {
        throw DomainError("mediator model needs at least one mediator");
    }
    std::vector<std::string> predictors = spec_.predictors;
    for (const auto& m : spec_.mediators) {
        if (!data.is_binary(m)) {
            throw DomainError("mediator '" + m + "' must be binary-flagged");
        }
        fits_.push_back(fit_glm(data, m, predictors, GLMFamily::Logistic));
        predictors.push_back(m);  // sequential conditioning on earlier mediators
    }
}

Eigen::VectorXd MediatorDensityModel::density(const Dataset& data,
                                              const std::map<std::string, double>& overrides,
                                              int& clipped_rows) const {
    Eigen::VectorXd dens = Eigen::VectorXd::Ones(data.n());
    Eigen::ArrayX<bool> clipped = Eigen::ArrayX<bool>::Constant(data.n(), false);
    for (std::size_t j = 0; j < spec_.mediators.size(); ++j) {
        const Eigen::VectorXd p = predict_mean(fits_[j], data, overrides);
        const Eigen::VectorXd& m = data.column(spec_.mediators[j]);
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            double prob = m[i] == 1.0 ? p[i] : 1.0 - p[i];
            if (prob < kProbClipLo || prob > kProbClipHi) {
                prob = std::clamp(prob, kProbClipLo, kProbClipHi);
                clipped[i] = true;
            }
            dens[i] *= prob;
        }
    }
    clipped_rows += static_cast<int>(clipped.count());
    return dens;
}

EstimateWithIF verma_log_or(const Dataset& data, const std::string& outcome,
                            const std::string& anchor,
                            const std::vector<std::string>& covariates,
                            const MediatorModelSpec& mediator_model) {
    const MediatorDensityModel model(data, mediator_model);
    int clipped_rows = 0;
    const Eigen::VectorXd dens = model.density(data, {}, clipped_rows);
    const Eigen::VectorXd w = dens.cwiseInverse();

    std::vector<std::string> predictors;
    predictors.reserve(covariates.size() + 1);
    predictors.push_back(anchor);
    predictors.insert(predictors.end(), covariates.begin(), covariates.end());
    const GLMFamily family =
        data.is_binary(outcome) ? GLMFamily::Logistic : GLMFamily::Linear;
    const GLMFit fit = fit_glm(data, outcome, predictors, family, w);

    EstimateWithIF out;
    out.value = fit.coefficients[1];  // coefficient of the anchor
    out.method = EstimationMethod::PluginParametric;
    out.clip_count = clipped_rows;
    out.high_clip = clipped_rows > 0.01 * static_cast<double>(data.n());
    return out;
}

}  // namespace tri
