#include "tvarch/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "tvarch/errors.hpp"
#include "tvarch/instrumentation.hpp"

namespace tvarch {

std::string fit_kind_name(FitKind kind) {
    switch (kind) {
        case FitKind::ols: return "ols";
        case FitKind::gls: return "gls";
        case FitKind::als: return "als";
    }
    return "ols";
}

std::vector<double> ar_residuals(const SeriesSample& sample, std::span<const double> coeffs) {
    const long n = static_cast<long>(sample.n());
    std::vector<double> u(static_cast<std::size_t>(n));
    for (long t = 1; t <= n; ++t) {
        double v = sample.x(t);
        for (std::size_t i = 0; i < coeffs.size(); ++i) v -= coeffs[i] * sample.x(t - 1 - static_cast<long>(i));
        u[static_cast<std::size_t>(t - 1)] = v;
    }
    return u;
}

namespace {

bool ill_conditioned(const Eigen::MatrixXd& gram) {
    if (gram.rows() == 0) return false;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double hi = eig.eigenvalues().maxCoeff();
    const double lo = eig.eigenvalues().minCoeff();
    return !(hi > 0.0) || !(lo > hi / kConditionLimit);
}

/// Solves the normal equations weighted by `weights` (all ones for OLS).
std::vector<double> weighted_normal_equations(const SeriesSample& sample, std::span<const double> weights) {
    instrumentation::count_ar_fit();
    const auto p = static_cast<Eigen::Index>(sample.p());
    const long n = static_cast<long>(sample.n());
    // augmented Gram matrix of (x_{t-1}, ..., x_{t-p}, x_t)
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(p + 1, p + 1);
    Eigen::VectorXd row(p + 1);
    for (long t = 1; t <= n; ++t) {
        for (Eigen::Index i = 0; i < p; ++i) row(i) = sample.x(t - 1 - static_cast<long>(i));
        row(p) = sample.x(t);
        aug.selfadjointView<Eigen::Lower>().rankUpdate(row, weights[static_cast<std::size_t>(t - 1)]);
    }
    aug = aug.selfadjointView<Eigen::Lower>();
    const Eigen::MatrixXd gram = aug.topLeftCorner(p, p);
    if (ill_conditioned(gram)) {
        std::ostringstream os;
        os << "rank-deficient design: the " << p << "x" << p << " Gram matrix is singular or has condition number above "
           << kConditionLimit;
        throw RankDeficientError(os.str());
    }
    if (ill_conditioned(aug)) {
        throw RankDeficientError(
            "rank-deficient design: the series is exactly predictable from its lags (residuals vanish)");
    }
    if (p == 0) return {};
    const Eigen::VectorXd rhs = aug.topRightCorner(p, 1);
    const Eigen::VectorXd sol = gram.ldlt().solve(rhs);
    return std::vector<double>(sol.data(), sol.data() + sol.size());
}

}  // namespace

ARFit ols_fit(const SeriesSample& sample) {
    const std::vector<double> ones(sample.n(), 1.0);
    ARFit fit;
    fit.kind = FitKind::ols;
    fit.coeffs = weighted_normal_equations(sample, ones);
    fit.residuals = ar_residuals(sample, fit.coeffs);
    return fit;
}

ARFit gls_fit(const SeriesSample& sample, std::span<const double> h2) {
    if (h2.size() != sample.n()) throw DomainError("variance path length must equal the sample length n");
    double h2_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < h2.size(); ++t) {
        if (!(h2[t] > 0.0) || !std::isfinite(h2[t])) {
            std::ostringstream os;
            os << "variance path must be strictly positive; h2[" << t + 1 << "] = " << h2[t];
            throw DomainError(os.str());
        }
        h2_min = std::min(h2_min, h2[t]);
    }
    // weights normalized to max 1; a constant path gives unit weights and reproduces OLS exactly
    std::vector<double> weights(h2.size());
    for (std::size_t t = 0; t < h2.size(); ++t) weights[t] = h2_min / h2[t];

    ARFit fit;
    fit.kind = FitKind::gls;
    fit.coeffs = weighted_normal_equations(sample, weights);
    fit.residuals = ar_residuals(sample, fit.coeffs);
    fit.variance_path_used = std::vector<double>(h2.begin(), h2.end());
    return fit;
}

std::pair<ARFit, VariancePathEstimate> als_fit(const SeriesSample& sample, const KernelSpec& kernel,
                                               const BandwidthRule& rule) {
    const ARFit ols = ols_fit(sample);
    std::vector<double> squared(ols.residuals.size());
    for (std::size_t t = 0; t < squared.size(); ++t) squared[t] = ols.residuals[t] * ols.residuals[t];
    const double b = select_bandwidth(squared, kernel, rule);
    VariancePathEstimate path = estimate_variance_path(squared, b, kernel, rule);
    ARFit fit = gls_fit(sample, path.h2);
    fit.kind = FitKind::als;
    return {std::move(fit), std::move(path)};
}

nlohmann::json fit_json(const ARFit& fit, std::size_t p) {
    return {{"kind", fit_kind_name(fit.kind)}, {"coeffs", fit.coeffs}, {"n", fit.residuals.size()}, {"p", p}};
}

}  // namespace tvarch
