#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tvarch/kernelvar.hpp"
#include "tvarch/model.hpp"

namespace tvarch {

enum class FitKind { ols, gls, als };

[[nodiscard]] std::string fit_kind_name(FitKind kind);

/// AR(p) coefficient estimate and its residuals u_t(theta), t = 1..n.
struct ARFit {
    std::vector<double> coeffs;
    FitKind kind = FitKind::ols;
    std::vector<double> residuals;
    /// Variance path used for weighting; empty for OLS.
    std::optional<std::vector<double>> variance_path_used;
};

/// Relative condition-number threshold above which a Gram matrix counts as singular.
inline constexpr double kConditionLimit = 1e12;

/// u_t = x_t - sum_i coeffs[i] x_{t-i}, t = 1..n. The presample values of `sample` serve as
/// regressors for the first p observations.
[[nodiscard]] std::vector<double> ar_residuals(const SeriesSample& sample, std::span<const double> coeffs);

/// Ordinary least squares. For p = 0 returns empty coefficients and residuals equal to x.
/// Throws RankDeficientError if the Gram matrix (or the Gram matrix augmented with the response,
/// i.e. an exact fit with vanishing residuals) exceeds kConditionLimit.
[[nodiscard]] ARFit ols_fit(const SeriesSample& sample);

/// Weighted least squares with weights 1/h2[t] (infeasible GLS when h2 is the true path).
/// Throws DomainError on a length mismatch or nonpositive h2 entry.
[[nodiscard]] ARFit gls_fit(const SeriesSample& sample, std::span<const double> h2);

/// OLS -> squared residuals -> kernel variance path -> weighted fit with the estimated path.
[[nodiscard]] std::pair<ARFit, VariancePathEstimate> als_fit(const SeriesSample& sample,
                                                             const KernelSpec& kernel,
                                                             const BandwidthRule& rule);

/// {kind, coeffs, n, p}
[[nodiscard]] nlohmann::json fit_json(const ARFit& fit, std::size_t p);

}  // namespace tvarch
