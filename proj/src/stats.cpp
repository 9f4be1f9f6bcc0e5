#include "tvarch/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "tvarch/errors.hpp"
#include "tvarch/estimators.hpp"

namespace tvarch {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DomainError("residuals and variance path must have the same length");
    if (a.empty()) throw DomainError("empty residual sequence");
}

void require_positive(std::span<const double> h2) {
    for (std::size_t t = 0; t < h2.size(); ++t) {
        if (!(h2[t] > 0.0)) {
            std::ostringstream os;
            os << "variance path must be strictly positive; h2[" << t + 1 << "] = " << h2[t];
            throw DomainError(os.str());
        }
    }
}

}  // namespace

MomentEstimates moment_estimates(std::span<const double> residuals, std::span<const double> h2) {
    require_same_length(residuals, h2);
    require_positive(h2);
    const double n = static_cast<double>(residuals.size());
    double s_z = 0.0, s_z2 = 0.0, s_z4 = 0.0, s_u4 = 0.0, s_u8 = 0.0;
    for (std::size_t t = 0; t < residuals.size(); ++t) {
        const double u2 = residuals[t] * residuals[t];
        const double z = u2 / h2[t];
        s_z += z;
        s_z2 += z * z;
        s_z4 += (z * z) * (z * z);
        s_u4 += u2 * u2;
        s_u8 += (u2 * u2) * (u2 * u2);
    }
    MomentEstimates mom;
    const double mean_z = s_z / n;
    const double e4 = s_z2 / n;
    mom.var_eps2 = std::max(0.0, e4 - mean_z * mean_z);
    mom.e_eps4 = std::max(e4, kKurtosisFloor);
    mom.e_eps8 = s_z4 / n;
    mom.omega4 = (s_u4 / n) / mom.e_eps4;
    mom.omega8 = mom.e_eps8 > 0.0 ? (s_u8 / n) / mom.e_eps8 : 0.0;
    return mom;
}

std::vector<double> SigmaMatrix::eigenvalues() const {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

SigmaMatrix sigma_matrix(const MomentEstimates& mom, std::size_t m) {
    if (m < 1) throw DomainError("lag count m must be >= 1");
    const auto mi = static_cast<Eigen::Index>(m);
    SigmaMatrix sigma;
    sigma.m = m;
    const double scale = mom.var_eps2 / 4.0;
    sigma.matrix = Eigen::MatrixXd::Constant(mi, mi, scale);
    sigma.matrix.diagonal().setConstant(scale * mom.e_eps4);
    sigma.near_singular = !(mom.e_eps4 - 1.0 > 1e-10) || !(mom.var_eps2 > 0.0);
    return sigma;
}

std::vector<double> score_vector(std::span<const double> residuals, std::span<const double> h2, std::size_t m) {
    require_same_length(residuals, h2);
    if (m < 1) throw DomainError("lag count m must be >= 1");
    const std::size_t n = residuals.size();
    std::vector<double> s(m, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        const double centered = residuals[t] * residuals[t] / h2[t] - 1.0;
        // lagged squares are divided by h2 at index t, not t - j
        for (std::size_t j = 1; j <= m && j <= t; ++j) {
            const double lag = residuals[t - j];
            s[j - 1] += centered * (lag * lag / h2[t]);
        }
    }
    const double norm = 1.0 / (2.0 * std::sqrt(static_cast<double>(n)));
    for (double& v : s) v *= norm;
    return s;
}

double lm_statistic(std::span<const double> residuals, std::span<const double> h2, std::size_t m,
                    const SigmaMatrix& sigma) {
    if (sigma.m != m) throw DomainError("Sigma dimension does not match the lag count");
    const std::vector<double> s = score_vector(residuals, h2, m);
    const Eigen::Map<const Eigen::VectorXd> sv(s.data(), static_cast<Eigen::Index>(m));
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma.matrix);
    if (llt.info() != Eigen::Success || sigma.near_singular)
        throw MatrixInversionError("weight matrix Sigma is singular or not positive definite");
    const Eigen::VectorXd solved = llt.solve(sv);
    return std::max(0.0, sv.dot(solved));
}

double modified_lm_statistic(std::span<const double> residuals, std::span<const double> h2, std::size_t m) {
    const std::vector<double> s = score_vector(residuals, h2, m);
    double acc = 0.0;
    for (double v : s) acc += v * v;
    return acc;
}

Autocorrelations centered_autocorr(std::span<const double> d, std::size_t m) {
    const std::size_t n = d.size();
    if (m >= n) throw DomainError("lag count m must be smaller than n");
    const double inv_n = 1.0 / static_cast<double>(n);
    double g0 = 0.0;
    for (std::size_t t = 0; t < n; ++t) g0 += d[t] * d[t];
    g0 *= inv_n;
    if (!(g0 > 0.0)) throw DegenerateInputError("squared-residual autocovariance gamma(0) is not positive");
    Autocorrelations out;
    out.gamma0 = g0;
    out.r.resize(m);
    for (std::size_t j = 1; j <= m; ++j) {
        double g = 0.0;
        for (std::size_t t = j; t < n; ++t) g += d[t] * d[t - j];
        out.r[j - 1] = (g * inv_n) / g0;
    }
    return out;
}

Autocorrelations squared_resid_autocorr(std::span<const double> residuals, std::span<const double> center,
                                        std::size_t m) {
    require_same_length(residuals, center);
    std::vector<double> d(residuals.size());
    for (std::size_t t = 0; t < d.size(); ++t) d[t] = residuals[t] * residuals[t] - center[t];
    return centered_autocorr(d, m);
}

double lb_statistic(std::span<const double> r, std::size_t n, std::size_t m, double correction) {
    if (n <= m) throw DomainError("Ljung-Box statistic needs n > m");
    if (r.size() < m) throw DomainError("fewer autocorrelations than lags");
    if (!(correction > 0.0)) throw DomainError("Ljung-Box correction must be positive");
    const double nd = static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 1; i <= m; ++i) acc += r[i - 1] * r[i - 1] / (nd - static_cast<double>(i));
    return nd * (nd + 2.0) * acc * correction;
}

double engle_lm_statistic(std::span<const double> residuals, std::size_t m) {
    const std::size_t n = residuals.size();
    if (m < 1) throw DomainError("lag count m must be >= 1");
    if (n < 2 * m + 2) throw DomainError("too few residuals for the auxiliary ARCH regression");
    const auto rows = static_cast<Eigen::Index>(n - m);
    const auto cols = static_cast<Eigen::Index>(m + 1);
    Eigen::MatrixXd design(rows, cols);
    Eigen::VectorXd y(rows);
    for (std::size_t t = m; t < n; ++t) {
        const auto row = static_cast<Eigen::Index>(t - m);
        y(row) = residuals[t] * residuals[t];
        design(row, 0) = 1.0;
        for (std::size_t j = 1; j <= m; ++j)
            design(row, static_cast<Eigen::Index>(j)) = residuals[t - j] * residuals[t - j];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < cols) throw RankDeficientError("auxiliary ARCH regression is rank deficient");
    const Eigen::VectorXd beta = qr.solve(y);
    const double ssr = (y - design * beta).squaredNorm();
    const double sst = (y.array() - y.mean()).matrix().squaredNorm();
    if (!(sst > 0.0)) throw DegenerateInputError("squared residuals are constant");
    const double r2 = std::clamp(1.0 - ssr / sst, 0.0, 1.0);
    return static_cast<double>(rows) * r2;
}

double profile_moment(const VarianceProfile& profile, int k) {
    using Integrator = boost::math::quadrature::gauss_kronrod<double, 31>;
    std::vector<double> cuts{0.0};
    for (double c : profile.singular_points()) cuts.push_back(c);
    cuts.push_back(1.0);
    const auto f = [&](double r) { return std::pow(profile(r), k); };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (!(cuts[i + 1] > cuts[i])) continue;
        total += Integrator::integrate(f, cuts[i], cuts[i + 1], 20, 1e-13);
    }
    return total;
}

double divergence_constant(const VarianceProfile& profile) {
    const double g2 = profile_moment(profile, 2);
    const double g4 = profile_moment(profile, 4);
    const double d = g4 - g2 * g2;
    // Jensen: d >= 0; clip round-off for constant profiles
    return d > 1e-12 * g4 ? d : 0.0;
}

double chisq_pvalue(double statistic, std::size_t m) {
    if (m < 1) throw DomainError("degrees of freedom must be >= 1");
    if (!(statistic >= 0.0)) throw DomainError("chi-square statistic must be nonnegative");
    if (statistic == 0.0) return 1.0;
    if (std::isinf(statistic)) return 0.0;
    return boost::math::gamma_q(0.5 * static_cast<double>(m), 0.5 * statistic);
}

// ---------------------------------------------------------------------------

namespace {
constexpr const char* kFamilyNames[] = {"lm_standard",     "lb_standard",    "lm_gls", "lb_gls", "lm_als",
                                        "lb_als",          "lm_als_modified", "lb_als_modified"};
}

std::string family_name(TestFamily family) { return kFamilyNames[static_cast<int>(family)]; }

TestFamily family_from_name(const std::string& name) {
    for (int i = 0; i < 8; ++i)
        if (name == kFamilyNames[i]) return static_cast<TestFamily>(i);
    throw ConfigurationError("unknown test family '" + name + "'");
}

bool is_lm_family(TestFamily family) {
    switch (family) {
        case TestFamily::lm_standard:
        case TestFamily::lm_gls:
        case TestFamily::lm_als:
        case TestFamily::lm_als_modified:
            return true;
        default:
            return false;
    }
}

bool is_modified_family(TestFamily family) {
    return family == TestFamily::lm_als_modified || family == TestFamily::lb_als_modified;
}

std::string pvalue_source_label(const PValueSource& source) {
    if (std::holds_alternative<ChiSquareAsymptotic>(source)) return "chisq_asymptotic";
    if (const auto* b = std::get_if<BootstrapSource>(&source))
        return "bootstrap(" + std::to_string(b->replications) + ")";
    if (const auto* mc = std::get_if<MonteCarloSource>(&source))
        return "monte_carlo(" + std::to_string(mc->replications) + ")";
    return "none";
}

void to_json(nlohmann::json& j, const TestReport& report) {
    j = {{"family", family_name(report.family)},
         {"m", report.m},
         {"statistic", report.statistic},
         {"pvalue", report.pvalue ? nlohmann::json(*report.pvalue) : nlohmann::json(nullptr)},
         {"pvalue_source", pvalue_source_label(report.pvalue_source)}};
    if (std::holds_alternative<BootstrapSource>(report.pvalue_source) ||
        std::holds_alternative<MonteCarloSource>(report.pvalue_source)) {
        j["dropped_replicates"] = report.dropped_replicates;
        j["reliability_warning"] = report.reliability_warning;
    }
}

namespace {

double gls_like_statistic(bool lm, std::span<const double> residuals, std::span<const double> h2, std::size_t m) {
    const MomentEstimates mom = moment_estimates(residuals, h2);
    if (lm) return lm_statistic(residuals, h2, m, sigma_matrix(mom, m));
    const Autocorrelations ac = squared_resid_autocorr(residuals, h2, m);
    if (!(mom.omega8 > 0.0)) throw DegenerateInputError("omega8 normalizer vanished");
    return lb_statistic(ac.r, residuals.size(), m, mom.omega4 * mom.omega4 / mom.omega8);
}

}  // namespace

double als_family_statistic(TestFamily family, std::span<const double> residuals, std::span<const double> h2,
                            std::size_t m) {
    switch (family) {
        case TestFamily::lm_als:
        case TestFamily::lm_gls:
            return gls_like_statistic(true, residuals, h2, m);
        case TestFamily::lb_als:
        case TestFamily::lb_gls:
            return gls_like_statistic(false, residuals, h2, m);
        case TestFamily::lm_als_modified:
            return modified_lm_statistic(residuals, h2, m);
        case TestFamily::lb_als_modified:
            return lb_statistic(squared_resid_autocorr(residuals, h2, m).r, residuals.size(), m, 1.0);
        default:
            throw ConfigurationError("family " + family_name(family) + " is not a variance-weighted family");
    }
}

TestReport run_test(const SeriesSample& sample, TestFamily family, std::size_t m, const VarianceSource& variance) {
    if (m < 1) throw DomainError("lag count m must be >= 1");
    TestReport report;
    report.family = family;
    report.m = m;
    report.pvalue_source = ChiSquareAsymptotic{};

    const auto incompatible = [&](const char* need) {
        return ConfigurationError("family " + family_name(family) + " requires variance source '" + need + "'");
    };

    switch (family) {
        case TestFamily::lm_standard:
        case TestFamily::lb_standard: {
            if (!std::holds_alternative<NoVariance>(variance)) throw incompatible("none");
            const ARFit fit = ols_fit(sample);
            if (family == TestFamily::lm_standard) {
                report.statistic = engle_lm_statistic(fit.residuals, m);
            } else {
                double omega2 = 0.0;
                for (double u : fit.residuals) omega2 += u * u;
                omega2 /= static_cast<double>(fit.residuals.size());
                const std::vector<double> center(fit.residuals.size(), omega2);
                report.statistic =
                    lb_statistic(squared_resid_autocorr(fit.residuals, center, m).r, fit.residuals.size(), m, 1.0);
            }
            break;
        }
        case TestFamily::lm_gls:
        case TestFamily::lb_gls: {
            const auto* known = std::get_if<KnownVariance>(&variance);
            if (!known) throw incompatible("known");
            const ARFit fit = gls_fit(sample, known->h2);
            report.statistic = als_family_statistic(family, fit.residuals, known->h2, m);
            break;
        }
        case TestFamily::lm_als:
        case TestFamily::lb_als:
        case TestFamily::lm_als_modified:
        case TestFamily::lb_als_modified: {
            const auto* kv = std::get_if<KernelVariance>(&variance);
            if (!kv) throw incompatible("kernel");
            const auto [fit, path] = als_fit(sample, kv->kernel, kv->rule);
            report.statistic = als_family_statistic(family, fit.residuals, path.h2, m);
            if (is_modified_family(family)) report.pvalue_source = NoPValue{};
            break;
        }
    }
    if (std::holds_alternative<ChiSquareAsymptotic>(report.pvalue_source))
        report.pvalue = chisq_pvalue(report.statistic, m);
    return report;
}

}  // namespace tvarch
