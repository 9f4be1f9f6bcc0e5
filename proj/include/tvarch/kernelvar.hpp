#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace tvarch {

/// Smoothing kernel. Both kinds are bounded symmetric unimodal densities.
struct KernelSpec {
    enum class Kind { gaussian, triangular };
    Kind kind = Kind::gaussian;

    [[nodiscard]] double operator()(double v) const noexcept;
    [[nodiscard]] std::string name() const;
};

[[nodiscard]] KernelSpec kernel_from_name(const std::string& name);

struct FixedBandwidth {
    double b = 0.1;
};

/// Leave-one-out cross-validation over a log-spaced grid in [c_min n^{-1/5}, c_max n^{-1/5}].
struct CrossValidation {
    double c_min = 0.05;
    double c_max = 2.0;
    std::size_t grid_size = 20;
};

/// b = gamma (sigma2 / n)^{1/5}. By default sigma2 is the empirical variance of the squared
/// residuals; `residual_variance` uses the mean squared residual instead, which keeps b well inside
/// (0,1) for series measured on the scale of the simulation design (g around 20 to 50).
struct RuleOfThumb {
    enum class Scale { squared_residual_variance, residual_variance };
    double gamma = 0.12;
    Scale scale = Scale::squared_residual_variance;
};

using BandwidthRule = std::variant<FixedBandwidth, CrossValidation, RuleOfThumb>;

/// Throws DomainError if the rule's parameters are out of range.
void validate_rule(const BandwidthRule& rule);
[[nodiscard]] std::string rule_label(const BandwidthRule& rule);

struct VariancePathEstimate {
    std::vector<double> h2;
    double bandwidth = 0.0;
    KernelSpec kernel;
    BandwidthRule rule;
    bool floor_applied = false;
};

/// Relative floor on the variance path: h2[t] >= kVarianceFloor * mean(squared_resid).
inline constexpr double kVarianceFloor = 1e-6;

/// Leave-one-out weights w_{t,i} = K_{ti} / sum_j K_{tj}, K_{ti} = K((t-i)/(n b)) and K_{tt} = 0.
/// `t` is 1-based. Throws DegenerateWindowError if every K_{tj} vanishes.
[[nodiscard]] std::vector<double> smoothing_weights(std::size_t n, std::size_t t, double b,
                                                    const KernelSpec& kernel);

/// h2[t] = sum_i w_{ti} squared_resid[i], floored. `rule` is recorded in the result only.
[[nodiscard]] VariancePathEstimate estimate_variance_path(std::span<const double> squared_resid, double b,
                                                          const KernelSpec& kernel,
                                                          const BandwidthRule& rule = FixedBandwidth{});

/// Sum over t of (h2[t] - squared_resid[t])^2 for the leave-one-out path at bandwidth b.
[[nodiscard]] double cv_criterion(std::span<const double> squared_resid, double b, const KernelSpec& kernel);

/// The bandwidth grid searched by cv_bandwidth (ascending, log-spaced).
[[nodiscard]] std::vector<double> cv_grid(std::size_t n, double c_min, double c_max, std::size_t grid_size);

/// Grid minimizer of cv_criterion; ties go to the smaller bandwidth. Degenerate grid points are
/// skipped; SelectionFailedError if all are degenerate.
[[nodiscard]] double cv_bandwidth(std::span<const double> squared_resid, const KernelSpec& kernel,
                                  double c_min, double c_max, std::size_t grid_size);

/// gamma (sigma2 / n)^{1/5}. DegenerateInputError if sigma2 is zero.
[[nodiscard]] double rot_bandwidth(std::span<const double> squared_resid, double gamma,
                                   RuleOfThumb::Scale scale = RuleOfThumb::Scale::squared_residual_variance);

/// Applies any rule to a residual sequence to get a numeric bandwidth.
[[nodiscard]] double select_bandwidth(std::span<const double> squared_resid, const KernelSpec& kernel,
                                      const BandwidthRule& rule);

void to_json(nlohmann::json& j, const BandwidthRule& rule);
void from_json(const nlohmann::json& j, BandwidthRule& rule);

/// JSON sidecar {bandwidth, kernel, rule, floor_applied}.
[[nodiscard]] nlohmann::json path_metadata_json(const VariancePathEstimate& path);
/// CSV with header "t,h2" and 17 significant digits.
[[nodiscard]] std::string path_csv(const VariancePathEstimate& path);

}  // namespace tvarch
