#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tvarch/kernelvar.hpp"
#include "tvarch/model.hpp"

namespace tvarch {

/// Moments of the standardized innovations eps_t = u_t / h_t and the omega normalizers.
struct MomentEstimates {
    double var_eps2 = 0.0;  ///< mean(z^2) - mean(z)^2 with z = u^2 / h2
    double e_eps4 = 1.0;    ///< mean(z^2), floored at 1 + 1e-12
    double e_eps8 = 1.0;    ///< mean(z^4)
    double omega4 = 0.0;    ///< mean(u^4) / e_eps4
    double omega8 = 0.0;    ///< mean(u^8) / e_eps8
};

inline constexpr double kKurtosisFloor = 1.0 + 1e-12;

[[nodiscard]] MomentEstimates moment_estimates(std::span<const double> residuals, std::span<const double> h2);

/// Sigma = (V/4) [(kappa - 1) I + J]: kappa on the diagonal, 1 off the diagonal, scaled by V/4.
struct SigmaMatrix {
    std::size_t m = 0;
    Eigen::MatrixXd matrix;
    /// Set when kappa - 1 is at the floor or V = 0, i.e. Sigma is (numerically) singular.
    bool near_singular = false;

    /// Eigenvalues in ascending order, computed numerically from `matrix`.
    [[nodiscard]] std::vector<double> eigenvalues() const;
};

[[nodiscard]] SigmaMatrix sigma_matrix(const MomentEstimates& mom, std::size_t m);

/// Normalized score at the no-ARCH constraint:
///   S_j = (1 / (2 sqrt(n))) sum_t (u_t^2 / h2_t - 1) u_{t-j}^2 / h2_t,  u_{t-j} = 0 for t - j <= 0.
[[nodiscard]] std::vector<double> score_vector(std::span<const double> residuals, std::span<const double> h2,
                                               std::size_t m);

/// S' Sigma^{-1} S. Throws MatrixInversionError if Sigma is not positive definite.
[[nodiscard]] double lm_statistic(std::span<const double> residuals, std::span<const double> h2, std::size_t m,
                                  const SigmaMatrix& sigma);

/// S' S (no weight matrix).
[[nodiscard]] double modified_lm_statistic(std::span<const double> residuals, std::span<const double> h2,
                                           std::size_t m);

struct Autocorrelations {
    std::vector<double> r;  ///< r[i-1] = gamma(i) / gamma(0), i = 1..m
    double gamma0 = 0.0;
};

/// Autocorrelations of d_t = u_t^2 - center_t: gamma(j) = n^{-1} sum_{t=1+j}^n d_t d_{t-j}.
/// Throws DegenerateInputError if gamma(0) <= 0.
[[nodiscard]] Autocorrelations squared_resid_autocorr(std::span<const double> residuals,
                                                      std::span<const double> center, std::size_t m);

/// Same as squared_resid_autocorr but on an already centered sequence d.
[[nodiscard]] Autocorrelations centered_autocorr(std::span<const double> d, std::size_t m);

/// n (n + 2) sum_i r_i^2 / (n - i), times `correction`.
[[nodiscard]] double lb_statistic(std::span<const double> r, std::size_t n, std::size_t m, double correction = 1.0);

/// Engle's n R^2 from regressing u_t^2 on a constant and u_{t-1}^2..u_{t-m}^2 over t = m+1..n.
[[nodiscard]] double engle_lm_statistic(std::span<const double> residuals, std::size_t m);

/// int g^4 - (int g^2)^2 over (0,1].
[[nodiscard]] double divergence_constant(const VarianceProfile& profile);

/// int_0^1 g(r)^k dr by adaptive quadrature split at the profile's singular points.
[[nodiscard]] double profile_moment(const VarianceProfile& profile, int k);

/// P(chi2_m > statistic).
[[nodiscard]] double chisq_pvalue(double statistic, std::size_t m);

// ---------------------------------------------------------------------------
// Test reports and the single-series test pipeline

enum class TestFamily {
    lm_standard,
    lb_standard,
    lm_gls,
    lb_gls,
    lm_als,
    lb_als,
    lm_als_modified,
    lb_als_modified,
};

[[nodiscard]] std::string family_name(TestFamily family);
[[nodiscard]] TestFamily family_from_name(const std::string& name);
[[nodiscard]] bool is_lm_family(TestFamily family);
[[nodiscard]] bool is_modified_family(TestFamily family);

struct ChiSquareAsymptotic {};
struct BootstrapSource {
    std::size_t replications = 0;
};
struct MonteCarloSource {
    std::size_t replications = 0;
};
struct NoPValue {};
using PValueSource = std::variant<ChiSquareAsymptotic, BootstrapSource, MonteCarloSource, NoPValue>;

[[nodiscard]] std::string pvalue_source_label(const PValueSource& source);

struct TestReport {
    TestFamily family = TestFamily::lm_standard;
    std::size_t m = 1;
    double statistic = 0.0;
    std::optional<double> pvalue;  ///< empty when pvalue_source is NoPValue
    PValueSource pvalue_source = NoPValue{};
    /// Set by resampling procedures when more than 5% of replicates were dropped.
    bool reliability_warning = false;
    std::size_t dropped_replicates = 0;
};

/// {family, m, statistic, pvalue, pvalue_source} (+ reliability fields when resampled).
void to_json(nlohmann::json& j, const TestReport& report);

struct NoVariance {};
struct KnownVariance {
    std::vector<double> h2;
};
struct KernelVariance {
    KernelSpec kernel;
    BandwidthRule rule;
};
using VarianceSource = std::variant<NoVariance, KnownVariance, KernelVariance>;

/// Statistic for an ALS family (standard-weighted or modified) from residuals and a variance path.
[[nodiscard]] double als_family_statistic(TestFamily family, std::span<const double> residuals,
                                          std::span<const double> h2, std::size_t m);

/// Fits the estimator matching `variance` (OLS / GLS / ALS) and computes the family's statistic.
/// Standard, GLS and ALS families get a chi-square p-value; modified families get none.
/// Throws ConfigurationError for an incompatible family/variance combination.
[[nodiscard]] TestReport run_test(const SeriesSample& sample, TestFamily family, std::size_t m,
                                  const VarianceSource& variance);

}  // namespace tvarch
