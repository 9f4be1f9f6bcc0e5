#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tvarch/kernelvar.hpp"
#include "tvarch/model.hpp"
#include "tvarch/rng.hpp"
#include "tvarch/stats.hpp"

namespace tvarch {

inline constexpr std::size_t kMinReplications = 99;
/// Fraction of dropped replicates above which a report carries a reliability warning.
inline constexpr double kDropWarningFraction = 0.05;

/// Two-point multipliers of Mammen: -(sqrt5 - 1)/2 with probability (sqrt5 + 1)/(2 sqrt5),
/// (sqrt5 + 1)/2 otherwise. Zero mean, unit variance.
[[nodiscard]] std::vector<double> mammen_draw(std::size_t count, std::uint64_t seed);
[[nodiscard]] std::vector<double> mammen_draw(std::size_t count, Engine& engine);

/// (1 + #{replicates >= observed}) / (replicates.size() + 1)
[[nodiscard]] double counting_pvalue(double observed, std::span<const double> replicates);

struct ResampleSpec {
    enum class Method { bootstrap, monte_carlo };
    Method method = Method::monte_carlo;
    std::size_t replications = 499;
    std::uint64_t seed = 42;

    void validate() const;
};

/// Residual bootstrap for the modified ALS statistics. Each replicate resamples the standardized
/// residuals u_t(theta~)/h^_t, rebuilds the series through the fitted AR recursion (seeded with the
/// original presample values), re-smooths at the original numeric bandwidth and recomputes the
/// statistic. Replicates whose estimation fails are dropped and counted.
[[nodiscard]] TestReport bootstrap_pvalue(const SeriesSample& sample, TestFamily family, std::size_t m,
                                          const KernelSpec& kernel, const BandwidthRule& rule,
                                          std::size_t replications, std::uint64_t seed, std::size_t threads = 1);

/// Multipliers eta_1..eta_n for Monte Carlo replicate `replicate`.
using MultiplierSource = std::function<std::vector<double>(std::size_t n, std::size_t replicate)>;

/// Wild Monte Carlo p-value for the modified ALS statistics. theta~ and the variance path are
/// estimated once; each replicate perturbs the score (LM) or autocovariance (LB) summands with
/// fresh multipliers. `multipliers` overrides the Mammen draws (used by tests).
[[nodiscard]] TestReport mc_pvalue(const SeriesSample& sample, TestFamily family, std::size_t m,
                                   const KernelSpec& kernel, const BandwidthRule& rule, std::size_t replications,
                                   std::uint64_t seed, std::size_t threads = 1,
                                   const MultiplierSource& multipliers = {});

/// Dispatches on spec.method.
[[nodiscard]] TestReport resampled_test(const SeriesSample& sample, TestFamily family, std::size_t m,
                                        const KernelSpec& kernel, const BandwidthRule& rule,
                                        const ResampleSpec& spec, std::size_t threads = 1);

struct CalibrationSpec {
    std::vector<double> gamma_grid{0.08, 0.12, 0.2, 0.3};
    std::size_t knots = 8;
    std::size_t replications_per_gamma = 200;
    double target_level = 0.05;
    TestFamily test_family = TestFamily::lb_als_modified;
    std::size_t m = 1;
    /// Resampling replications inside each calibration replicate.
    std::size_t inner_replications = kMinReplications;
    /// Bootstrap for the LM family and Monte Carlo for the LB family unless overridden.
    std::optional<ResampleSpec::Method> method;
    /// sigma2 convention of the rule-of-thumb bandwidths being calibrated.
    RuleOfThumb::Scale rot_scale = RuleOfThumb::Scale::squared_residual_variance;
    /// Bandwidth rule for the preliminary variance estimate.
    CrossValidation preliminary_rule{};

    void validate() const;
};

struct CalibrationRow {
    double gamma = 0.0;
    double rejection_rate = 0.0;
    std::size_t replications = 0;
};

struct CalibrationResult {
    double gamma_star = 0.0;
    std::vector<CalibrationRow> table;
};

/// Piecewise-linear interpolation of `path` through `knots` equispaced indices (first and last
/// included), evaluated at every index.
[[nodiscard]] std::vector<double> interpolate_path(std::span<const double> path, std::size_t knots);

/// Selects gamma for the rule-of-thumb bandwidth by simulating null series from a smoothed
/// surrogate of the estimated variance path and picking the gamma whose rejection rate is
/// closest to the target level (ties go to the smaller gamma).
[[nodiscard]] CalibrationResult calibrate_gamma(const SeriesSample& sample, const CalibrationSpec& cal,
                                                const KernelSpec& kernel, std::uint64_t seed,
                                                std::size_t threads = 1);

/// CSV with header "gamma,rejection_rate,replications".
[[nodiscard]] std::string calibration_csv(const CalibrationResult& result);

}  // namespace tvarch
