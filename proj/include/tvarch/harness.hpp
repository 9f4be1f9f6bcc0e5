#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tvarch/kernelvar.hpp"
#include "tvarch/model.hpp"
#include "tvarch/stats.hpp"

namespace tvarch {

/// One test column of an experiment: family, lag count, variance source and p-value correction.
struct TestConfig {
    enum class Variance { none, known, kernel };
    enum class Correction { none, bootstrap, monte_carlo };

    TestFamily family = TestFamily::lm_standard;
    std::size_t m = 1;
    Variance variance = Variance::none;
    KernelSpec kernel;
    BandwidthRule rule = CrossValidation{};
    Correction correction = Correction::none;
    std::size_t replications = 199;
    /// Row label; derived from the other fields when empty.
    std::string label;

    [[nodiscard]] std::string name() const;
    void validate() const;
};

struct ExperimentSpec {
    DgpSpec dgp;  ///< template; n is overridden by each entry of n_grid
    std::vector<std::size_t> n_grid{100, 200, 500};
    std::vector<TestConfig> tests;
    std::size_t outer_replications = 500;
    double nominal_level = 0.05;
    std::uint64_t seed = 42;
    /// 0 means TVARCH_THREADS or the hardware concurrency.
    std::size_t threads = 0;
    /// AR order fitted by the tests; defaults to dgp.ar_coeffs.size().
    std::optional<std::size_t> fit_order;

    void validate() const;
};

struct ResultRow {
    std::string test_name;
    std::size_t n = 0;
    std::size_t m = 0;
    double alpha0 = 0.0;
    double rejection_rate = 0.0;
    double std_error = 0.0;  ///< sqrt(r (1 - r) / N)
    std::size_t failures = 0;

    bool operator==(const ResultRow&) const = default;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    nlohmann::json metadata;
};

/// Largest fraction of failed replications an experiment cell tolerates.
inline constexpr double kMaxFailureFraction = 0.02;

/// Fraction of p-values <= nominal_level per (n, test). Requires an empty dgp.arch_alpha.
/// Throws NumericError if more than 2% of a cell's replications fail.
[[nodiscard]] ResultTable run_size_experiment(const ExperimentSpec& spec);

/// As the size experiment under ARCH(1) alternatives alpha0 in alpha_grid (0 allowed, giving the
/// null row). Innovations depend on (seed, n, replication) only, so rows share random numbers
/// across alpha0.
[[nodiscard]] ResultTable run_power_experiment(const ExperimentSpec& spec, const std::vector<double>& alpha_grid);

struct DivergenceRow {
    std::size_t n = 0;
    double median = 0.0;
};

struct DivergenceTable {
    std::vector<DivergenceRow> rows;
    double fitted_slope = 0.0;     ///< least-squares slope of median against n
    double predicted_slope = 0.0;  ///< m (D / (3 int g^4 - (int g^2)^2))^2 with D = divergence_constant
    std::size_t m = 1;
};

/// Medians of the standard LB statistic under H0 (Gaussian innovations, no AR part) per n.
[[nodiscard]] DivergenceTable run_divergence_experiment(const VarianceProfile& profile,
                                                        const std::vector<std::size_t>& n_grid,
                                                        std::size_t replications, std::uint64_t seed,
                                                        std::size_t m = 1, std::size_t threads = 0);

/// CSV with header "test_name,n,m,alpha0,rejection_rate,std_error".
[[nodiscard]] std::string result_csv(const ResultTable& table);
[[nodiscard]] std::string divergence_csv(const DivergenceTable& table);
[[nodiscard]] nlohmann::json divergence_json(const DivergenceTable& table);

void to_json(nlohmann::json& j, const TestConfig& config);
void from_json(const nlohmann::json& j, TestConfig& config);
void to_json(nlohmann::json& j, const ExperimentSpec& spec);
void from_json(const nlohmann::json& j, ExperimentSpec& spec);

}  // namespace tvarch
