#include "tvarch/resample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "tvarch/errors.hpp"
#include "tvarch/estimators.hpp"
#include "tvarch/io.hpp"
#include "tvarch/parallel.hpp"

namespace tvarch {

namespace {

const double kSqrt5 = std::sqrt(5.0);
const double kMammenLow = -(kSqrt5 - 1.0) / 2.0;
const double kMammenHigh = (kSqrt5 + 1.0) / 2.0;
const double kMammenLowProb = (kSqrt5 + 1.0) / (2.0 * kSqrt5);

void require_modified(TestFamily family) {
    if (!is_modified_family(family))
        throw ConfigurationError("resampling corrections apply to lm_als_modified and lb_als_modified only, got " +
                                 family_name(family));
}

void require_replications(std::size_t replications) {
    if (replications < kMinReplications) {
        std::ostringstream os;
        os << "replications must be at least " << kMinReplications << ", got " << replications;
        throw ConfigurationError(os.str());
    }
}

/// Shared tail of both procedures: count, p-value, drop accounting.
TestReport finish_report(TestFamily family, std::size_t m, double observed,
                         const std::vector<std::optional<double>>& slots, PValueSource source) {
    std::vector<double> kept;
    kept.reserve(slots.size());
    for (const auto& s : slots)
        if (s) kept.push_back(*s);
    TestReport report;
    report.family = family;
    report.m = m;
    report.statistic = observed;
    report.pvalue = counting_pvalue(observed, kept);
    report.pvalue_source = source;
    report.dropped_replicates = slots.size() - kept.size();
    report.reliability_warning =
        static_cast<double>(report.dropped_replicates) > kDropWarningFraction * static_cast<double>(slots.size());
    return report;
}

/// x_t = sum_i coeffs[i] x_{t-i} + u_t started from the presample values of `original`.
SeriesSample regenerate(const SeriesSample& original, std::span<const double> coeffs, std::span<const double> u) {
    const std::size_t p = original.p();
    std::vector<double> values(p + u.size());
    for (std::size_t k = 0; k < p; ++k) values[k] = original.values()[k];
    for (std::size_t t = 0; t < u.size(); ++t) {
        double v = u[t];
        for (std::size_t i = 0; i < coeffs.size(); ++i) v += coeffs[i] * values[p + t - 1 - i];
        values[p + t] = v;
    }
    return SeriesSample(std::move(values), p);
}

std::vector<double> resample_with_replacement(std::span<const double> pool, std::size_t count, Engine& engine) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<double> out(count);
    for (auto& v : out) v = pool[pick(engine)];
    return out;
}

std::string method_name(ResampleSpec::Method method) {
    return method == ResampleSpec::Method::bootstrap ? "bootstrap" : "monte_carlo";
}

}  // namespace

std::vector<double> mammen_draw(std::size_t count, Engine& engine) {
    std::bernoulli_distribution low(kMammenLowProb);
    std::vector<double> out(count);
    for (auto& v : out) v = low(engine) ? kMammenLow : kMammenHigh;
    return out;
}

std::vector<double> mammen_draw(std::size_t count, std::uint64_t seed) {
    Engine engine = make_engine(seed, {});
    return mammen_draw(count, engine);
}

double counting_pvalue(double observed, std::span<const double> replicates) {
    const auto exceed = std::count_if(replicates.begin(), replicates.end(), [&](double v) { return v >= observed; });
    return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(replicates.size()) + 1.0);
}

void ResampleSpec::validate() const { require_replications(replications); }

TestReport bootstrap_pvalue(const SeriesSample& sample, TestFamily family, std::size_t m, const KernelSpec& kernel,
                            const BandwidthRule& rule, std::size_t replications, std::uint64_t seed,
                            std::size_t threads) {
    require_modified(family);
    require_replications(replications);
    const auto [fit, path] = als_fit(sample, kernel, rule);
    const double observed = als_family_statistic(family, fit.residuals, path.h2, m);

    const std::size_t n = sample.n();
    std::vector<double> h(n), eps(n);
    for (std::size_t t = 0; t < n; ++t) {
        h[t] = std::sqrt(path.h2[t]);
        eps[t] = fit.residuals[t] / h[t];
    }
    const BandwidthRule fixed = FixedBandwidth{path.bandwidth};

    std::vector<std::optional<double>> slots(replications);
    parallel_for(replications, threads, [&](std::size_t b) {
        Engine engine = make_engine(seed, {b});
        std::vector<double> u = resample_with_replacement(eps, n, engine);
        for (std::size_t t = 0; t < n; ++t) u[t] *= h[t];
        try {
            const SeriesSample star = regenerate(sample, fit.coeffs, u);
            const auto [fit_b, path_b] = als_fit(star, kernel, fixed);
            const double stat = als_family_statistic(family, fit_b.residuals, path_b.h2, m);
            if (std::isfinite(stat)) slots[b] = stat;
        } catch (const NumericError&) {
        } catch (const DomainError&) {
        }
    });
    return finish_report(family, m, observed, slots, BootstrapSource{replications});
}

TestReport mc_pvalue(const SeriesSample& sample, TestFamily family, std::size_t m, const KernelSpec& kernel,
                     const BandwidthRule& rule, std::size_t replications, std::uint64_t seed, std::size_t threads,
                     const MultiplierSource& multipliers) {
    require_modified(family);
    require_replications(replications);
    const auto [fit, path] = als_fit(sample, kernel, rule);
    const double observed = als_family_statistic(family, fit.residuals, path.h2, m);
    const std::vector<double>& u = fit.residuals;
    const std::vector<double>& h2 = path.h2;
    const std::size_t n = u.size();

    const auto draw = [&](std::size_t r) {
        if (multipliers) {
            std::vector<double> eta = multipliers(n, r);
            if (eta.size() != n) throw ConfigurationError("multiplier source returned a sequence of the wrong length");
            return eta;
        }
        Engine engine = make_engine(seed, {r});
        return mammen_draw(n, engine);
    };

    std::vector<std::optional<double>> slots(replications);
    if (is_lm_family(family)) {
        // fixed ingredients: z_t - 1 and the lag ratios u_{t-j}^2 / h2_t - 1
        std::vector<double> lead(n);
        std::vector<double> usq(n);
        for (std::size_t t = 0; t < n; ++t) {
            usq[t] = u[t] * u[t];
            lead[t] = usq[t] / h2[t] - 1.0;
        }
        const double scale = 1.0 / (2.0 * std::sqrt(static_cast<double>(n)));
        parallel_for(replications, threads, [&](std::size_t r) {
            const std::vector<double> eta = draw(r);
            double stat = 0.0;
            for (std::size_t j = 1; j <= m; ++j) {
                double s = 0.0;
                for (std::size_t t = j; t < n; ++t)
                    s += eta[t] * lead[t] * (eta[t - j] * (usq[t - j] / h2[t] - 1.0) + 1.0);
                s *= scale;
                stat += s * s;
            }
            if (std::isfinite(stat)) slots[r] = stat;
        });
    } else {
        std::vector<double> d(n);
        for (std::size_t t = 0; t < n; ++t) d[t] = u[t] * u[t] - h2[t];
        parallel_for(replications, threads, [&](std::size_t r) {
            const std::vector<double> eta = draw(r);
            std::vector<double> e(n);
            for (std::size_t t = 0; t < n; ++t) e[t] = eta[t] * d[t];
            try {
                const Autocorrelations ac = centered_autocorr(e, m);
                const double stat = lb_statistic(ac.r, n, m, 1.0);
                if (std::isfinite(stat)) slots[r] = stat;
            } catch (const NumericError&) {
            }
        });
    }
    return finish_report(family, m, observed, slots, MonteCarloSource{replications});
}

TestReport resampled_test(const SeriesSample& sample, TestFamily family, std::size_t m, const KernelSpec& kernel,
                          const BandwidthRule& rule, const ResampleSpec& spec, std::size_t threads) {
    spec.validate();
    if (spec.method == ResampleSpec::Method::bootstrap)
        return bootstrap_pvalue(sample, family, m, kernel, rule, spec.replications, spec.seed, threads);
    return mc_pvalue(sample, family, m, kernel, rule, spec.replications, spec.seed, threads);
}

void CalibrationSpec::validate() const {
    if (gamma_grid.empty()) throw ConfigurationError("gamma grid must be nonempty");
    for (std::size_t k = 0; k < gamma_grid.size(); ++k) {
        if (!(gamma_grid[k] > 0.0)) throw ConfigurationError("gamma grid values must be positive");
        if (k > 0 && !(gamma_grid[k] > gamma_grid[k - 1]))
            throw ConfigurationError("gamma grid must be strictly ascending");
    }
    if (knots < 4) throw ConfigurationError("knots must be at least 4");
    if (replications_per_gamma < 1) throw ConfigurationError("replications_per_gamma must be positive");
    if (!(target_level > 0.0 && target_level <= 1.0)) throw ConfigurationError("target_level must lie in (0, 1]");
    require_modified(test_family);
    if (m < 1) throw ConfigurationError("m must be at least 1");
    require_replications(inner_replications);
    validate_rule(preliminary_rule);
}

std::vector<double> interpolate_path(std::span<const double> path, std::size_t knots) {
    const std::size_t n = path.size();
    if (n == 0) return {};
    if (knots < 2 || n < 2) return std::vector<double>(n, path[0]);
    knots = std::min(knots, n);
    std::vector<std::size_t> at(knots);
    for (std::size_t k = 0; k < knots; ++k)
        at[k] = static_cast<std::size_t>(std::llround(static_cast<double>(k) * static_cast<double>(n - 1) /
                                                      static_cast<double>(knots - 1)));
    std::vector<double> out(n);
    for (std::size_t k = 0; k + 1 < knots; ++k) {
        const std::size_t lo = at[k], hi = at[k + 1];
        const double span = static_cast<double>(hi - lo);
        for (std::size_t t = lo; t <= hi; ++t) {
            const double w = span > 0.0 ? static_cast<double>(t - lo) / span : 0.0;
            out[t] = (1.0 - w) * path[lo] + w * path[hi];
        }
    }
    return out;
}

CalibrationResult calibrate_gamma(const SeriesSample& sample, const CalibrationSpec& cal, const KernelSpec& kernel,
                                  std::uint64_t seed, std::size_t threads) {
    cal.validate();
    const auto [fit, path] = als_fit(sample, kernel, cal.preliminary_rule);
    const std::vector<double> surrogate = interpolate_path(path.h2, cal.knots);
    const std::size_t n = sample.n();
    std::vector<double> h(n), eps(n);
    for (std::size_t t = 0; t < n; ++t) {
        h[t] = std::sqrt(surrogate[t]);
        eps[t] = fit.residuals[t] / h[t];
    }
    const ResampleSpec::Method method =
        cal.method.value_or(is_lm_family(cal.test_family) ? ResampleSpec::Method::bootstrap
                                                          : ResampleSpec::Method::monte_carlo);

    const std::size_t grid = cal.gamma_grid.size();
    // rejected[j * grid + g]: 1 reject, 0 accept, empty when the replicate failed at that gamma
    std::vector<std::optional<int>> outcome(cal.replications_per_gamma * grid);
    parallel_for(cal.replications_per_gamma, threads, [&](std::size_t j) {
        Engine engine = make_engine(seed, {j});
        std::vector<double> u = resample_with_replacement(eps, n, engine);
        for (std::size_t t = 0; t < n; ++t) u[t] *= h[t];
        const SeriesSample star = regenerate(sample, fit.coeffs, u);
        for (std::size_t g = 0; g < grid; ++g) {
            ResampleSpec inner{method, cal.inner_replications, derive_seed(seed, {j, g, 1})};
            try {
                const TestReport report = resampled_test(star, cal.test_family, cal.m, kernel,
                                                         RuleOfThumb{cal.gamma_grid[g], cal.rot_scale}, inner, 1);
                outcome[j * grid + g] = (report.pvalue && *report.pvalue <= cal.target_level) ? 1 : 0;
            } catch (const NumericError&) {
            } catch (const DomainError&) {
            }
        }
    });

    CalibrationResult result;
    std::optional<std::size_t> best;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid; ++g) {
        std::size_t used = 0, rejected = 0;
        for (std::size_t j = 0; j < cal.replications_per_gamma; ++j) {
            const auto& o = outcome[j * grid + g];
            if (!o) continue;
            ++used;
            rejected += static_cast<std::size_t>(*o);
        }
        CalibrationRow row{cal.gamma_grid[g], 0.0, used};
        if (used > 0) {
            row.rejection_rate = static_cast<double>(rejected) / static_cast<double>(used);
            const double gap = std::abs(row.rejection_rate - cal.target_level);
            if (gap < best_gap) {
                best_gap = gap;
                best = g;
            }
        }
        result.table.push_back(row);
    }
    if (!best)
        throw CalibrationFailedError("calibration failed: every replicate failed for every gamma (" +
                                     method_name(method) + " correction)");
    result.gamma_star = cal.gamma_grid[*best];
    return result;
}

std::string calibration_csv(const CalibrationResult& result) {
    std::string out = "gamma,rejection_rate,replications\n";
    for (const auto& row : result.table)
        out += format_number(row.gamma) + "," + format_number(row.rejection_rate) + "," +
               std::to_string(row.replications) + "\n";
    return out;
}

}  // namespace tvarch
