#include "tvarch/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>

#include "tvarch/errors.hpp"
#include "tvarch/io.hpp"
#include "tvarch/parallel.hpp"
#include "tvarch/resample.hpp"
#include "tvarch/rng.hpp"

namespace tvarch {

namespace {

std::string variance_name(TestConfig::Variance v) {
    switch (v) {
        case TestConfig::Variance::none: return "none";
        case TestConfig::Variance::known: return "known";
        case TestConfig::Variance::kernel: return "kernel";
    }
    return "none";
}

TestConfig::Variance variance_from_name(const std::string& s) {
    if (s == "none") return TestConfig::Variance::none;
    if (s == "known") return TestConfig::Variance::known;
    if (s == "kernel") return TestConfig::Variance::kernel;
    throw ConfigurationError("unknown variance source '" + s + "' (expected none, known or kernel)");
}

std::string correction_name(TestConfig::Correction c) {
    switch (c) {
        case TestConfig::Correction::none: return "none";
        case TestConfig::Correction::bootstrap: return "bootstrap";
        case TestConfig::Correction::monte_carlo: return "mc";
    }
    return "none";
}

TestConfig::Correction correction_from_name(const std::string& s) {
    if (s == "none") return TestConfig::Correction::none;
    if (s == "bootstrap") return TestConfig::Correction::bootstrap;
    if (s == "mc" || s == "monte_carlo") return TestConfig::Correction::monte_carlo;
    throw ConfigurationError("unknown correction '" + s + "' (expected none, bootstrap or mc)");
}

/// 64-bit FNV-1a, stable across platforms (unlike std::hash).
std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

/// p-value of one config on one simulated path. Nested resampling runs serially.
double config_pvalue(const TestConfig& cfg, const SeriesSample& sample, std::span<const double> h,
                     std::uint64_t seed) {
    if (cfg.correction != TestConfig::Correction::none) {
        if (cfg.correction == TestConfig::Correction::bootstrap)
            return *bootstrap_pvalue(sample, cfg.family, cfg.m, cfg.kernel, cfg.rule, cfg.replications, seed, 1).pvalue;
        return *mc_pvalue(sample, cfg.family, cfg.m, cfg.kernel, cfg.rule, cfg.replications, seed, 1).pvalue;
    }
    VarianceSource source = NoVariance{};
    if (cfg.variance == TestConfig::Variance::known) {
        // the true path covers x_1..x_n of the simulated series; align with the fitted sample's tail
        std::vector<double> h2(sample.n());
        const std::size_t offset = h.size() - sample.n();
        for (std::size_t t = 0; t < h2.size(); ++t) h2[t] = h[offset + t] * h[offset + t];
        source = KnownVariance{std::move(h2)};
    } else if (cfg.variance == TestConfig::Variance::kernel) {
        source = KernelVariance{cfg.kernel, cfg.rule};
    }
    const TestReport report = run_test(sample, cfg.family, cfg.m, source);
    if (!report.pvalue) throw ConfigurationError("test " + cfg.name() + " produces no p-value without a correction");
    return *report.pvalue;
}

ResultTable run_grid(const ExperimentSpec& spec, const std::vector<double>& alphas, bool power) {
    spec.validate();
    const auto start = std::chrono::steady_clock::now();
    const std::size_t threads = worker_count(spec.threads);
    const std::size_t reps = spec.outer_replications;
    const std::size_t configs = spec.tests.size();
    const std::size_t order = spec.fit_order.value_or(spec.dgp.ar_coeffs.size());

    ResultTable table;
    for (std::size_t n : spec.n_grid) {
        for (double alpha : alphas) {
            DgpSpec dgp = spec.dgp;
            dgp.n = n;
            if (power) dgp.arch_alpha = alpha > 0.0 ? std::vector<double>{alpha} : std::vector<double>{};
            dgp.validate();

            // outcome[r * configs + c]: 1 reject, 0 accept, empty on failure
            std::vector<std::optional<int>> outcome(reps * configs);
            parallel_for(reps, threads, [&](std::size_t r) {
                DgpSpec local = dgp;
                local.seed = derive_seed(spec.seed, {n, r});
                std::optional<SimulatedPath> path;
                try {
                    path = simulate_path(local);
                } catch (const SimulationDivergedError&) {
                    return;
                }
                const SeriesSample sample = path->sample.with_order(order);
                for (std::size_t c = 0; c < configs; ++c) {
                    try {
                        const double p =
                            config_pvalue(spec.tests[c], sample, path->h, derive_seed(spec.seed, {n, r, c + 1}));
                        outcome[r * configs + c] = p <= spec.nominal_level ? 1 : 0;
                    } catch (const NumericError&) {
                    } catch (const DomainError&) {
                    }
                }
            });

            for (std::size_t c = 0; c < configs; ++c) {
                std::size_t used = 0, rejected = 0;
                for (std::size_t r = 0; r < reps; ++r) {
                    const auto& o = outcome[r * configs + c];
                    if (!o) continue;
                    ++used;
                    rejected += static_cast<std::size_t>(*o);
                }
                const std::size_t failures = reps - used;
                if (static_cast<double>(failures) > kMaxFailureFraction * static_cast<double>(reps)) {
                    std::ostringstream os;
                    os << "experiment cell " << spec.tests[c].name() << " n=" << n << " alpha0=" << alpha << ": "
                       << failures << " of " << reps << " replications failed (limit "
                       << kMaxFailureFraction * 100.0 << "%)";
                    throw NumericError(os.str());
                }
                ResultRow row;
                row.test_name = spec.tests[c].name();
                row.n = n;
                row.m = spec.tests[c].m;
                row.alpha0 = alpha;
                row.rejection_rate = used ? static_cast<double>(rejected) / static_cast<double>(used) : 0.0;
                row.std_error = std::sqrt(row.rejection_rate * (1.0 - row.rejection_rate) / static_cast<double>(reps));
                row.failures = failures;
                table.rows.push_back(std::move(row));
            }
        }
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const nlohmann::json spec_json = spec;
    table.metadata = {{"spec", spec_json},
                      {"spec_hash", hex(fnv1a(spec_json.dump()))},
                      {"seed", spec.seed},
                      {"outer_replications", reps},
                      {"nominal_level", spec.nominal_level},
                      {"threads", threads},
                      {"wall_time_seconds", wall}};
    if (power) table.metadata["alpha_grid"] = alphas;
    return table;
}

}  // namespace

std::string TestConfig::name() const {
    if (!label.empty()) return label;
    std::string s = family_name(family);
    if (variance == Variance::kernel) s += "[" + rule_label(rule) + "]";
    if (correction != Correction::none) s += "^" + correction_name(correction);
    return s;
}

void TestConfig::validate() const {
    if (m < 1) throw ConfigurationError("m must be at least 1");
    switch (family) {
        case TestFamily::lm_standard:
        case TestFamily::lb_standard:
            if (variance != Variance::none) throw ConfigurationError(name() + " takes no variance source");
            break;
        case TestFamily::lm_gls:
        case TestFamily::lb_gls:
            if (variance != Variance::known) throw ConfigurationError(name() + " needs the known variance source");
            break;
        default:
            if (variance != Variance::kernel) throw ConfigurationError(name() + " needs the kernel variance source");
            validate_rule(rule);
    }
    if (correction != Correction::none) {
        if (!is_modified_family(family))
            throw ConfigurationError("corrections apply to the modified ALS families only, got " + name());
        if (replications < kMinReplications)
            throw ConfigurationError("correction replications must be at least 99");
    } else if (is_modified_family(family)) {
        throw ConfigurationError(name() + " has no asymptotic p-value; choose a bootstrap or mc correction");
    }
}

void ExperimentSpec::validate() const {
    if (outer_replications < 100) throw ConfigurationError("outer_replications must be at least 100");
    if (!(nominal_level > 0.0 && nominal_level <= 1.0)) throw ConfigurationError("nominal_level must lie in (0, 1]");
    if (n_grid.empty()) throw ConfigurationError("n grid must be nonempty");
    if (tests.empty()) throw ConfigurationError("at least one test config is required");
    for (const auto& t : tests) t.validate();
    DgpSpec probe = dgp;
    for (std::size_t n : n_grid) {
        probe.n = n;
        probe.validate();
    }
}

ResultTable run_size_experiment(const ExperimentSpec& spec) {
    if (!spec.dgp.arch_alpha.empty()) throw ConfigurationError("size experiments need a DGP without ARCH terms");
    return run_grid(spec, {0.0}, false);
}

ResultTable run_power_experiment(const ExperimentSpec& spec, const std::vector<double>& alpha_grid) {
    if (alpha_grid.empty()) throw ConfigurationError("alpha grid must be nonempty");
    for (double a : alpha_grid)
        if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigurationError("alpha grid values must be nonnegative");
    return run_grid(spec, alpha_grid, true);
}

DivergenceTable run_divergence_experiment(const VarianceProfile& profile, const std::vector<std::size_t>& n_grid,
                                          std::size_t replications, std::uint64_t seed, std::size_t m,
                                          std::size_t threads) {
    if (n_grid.empty()) throw ConfigurationError("n grid must be nonempty");
    if (replications < 1) throw ConfigurationError("replications must be positive");
    const std::size_t workers = worker_count(threads);
    DivergenceTable table;
    table.m = m;
    for (std::size_t n : n_grid) {
        DgpSpec dgp;
        dgp.profile = profile;
        dgp.n = n;
        dgp.validate();
        std::vector<double> stats(replications);
        parallel_for(replications, workers, [&](std::size_t r) {
            DgpSpec local = dgp;
            local.seed = derive_seed(seed, {n, r});
            stats[r] = run_test(simulate(local), TestFamily::lb_standard, m, NoVariance{}).statistic;
        });
        const auto mid = stats.begin() + static_cast<long>(replications / 2);
        std::nth_element(stats.begin(), mid, stats.end());
        double median = *mid;
        if (replications % 2 == 0) median = 0.5 * (median + *std::max_element(stats.begin(), mid));
        table.rows.push_back({n, median});
    }
    if (table.rows.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (const auto& row : table.rows) {
            mx += static_cast<double>(row.n);
            my += row.median;
        }
        mx /= static_cast<double>(table.rows.size());
        my /= static_cast<double>(table.rows.size());
        double sxy = 0.0, sxx = 0.0;
        for (const auto& row : table.rows) {
            sxy += (static_cast<double>(row.n) - mx) * (row.median - my);
            sxx += (static_cast<double>(row.n) - mx) * (static_cast<double>(row.n) - mx);
        }
        table.fitted_slope = sxx > 0.0 ? sxy / sxx : 0.0;
    }
    const double g2 = profile_moment(profile, 2);
    const double g4 = profile_moment(profile, 4);
    const double rho = divergence_constant(profile) / (3.0 * g4 - g2 * g2);
    table.predicted_slope = static_cast<double>(m) * rho * rho;
    return table;
}

std::string result_csv(const ResultTable& table) {
    std::string out = "test_name,n,m,alpha0,rejection_rate,std_error\n";
    for (const auto& row : table.rows)
        out += row.test_name + "," + std::to_string(row.n) + "," + std::to_string(row.m) + "," +
               format_number(row.alpha0) + "," + format_number(row.rejection_rate) + "," +
               format_number(row.std_error) + "\n";
    return out;
}

std::string divergence_csv(const DivergenceTable& table) {
    std::string out = "n,median_statistic\n";
    for (const auto& row : table.rows) out += std::to_string(row.n) + "," + format_number(row.median) + "\n";
    return out;
}

nlohmann::json divergence_json(const DivergenceTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) rows.push_back({{"n", row.n}, {"median", row.median}});
    return {{"m", table.m},
            {"rows", rows},
            {"fitted_slope", table.fitted_slope},
            {"predicted_slope", table.predicted_slope}};
}

void to_json(nlohmann::json& j, const TestConfig& config) {
    j = {{"family", family_name(config.family)},
         {"m", config.m},
         {"variance", variance_name(config.variance)},
         {"kernel", config.kernel.name()},
         {"rule", config.rule},
         {"correction", correction_name(config.correction)},
         {"replications", config.replications},
         {"label", config.label}};
}

void from_json(const nlohmann::json& j, TestConfig& config) {
    config = TestConfig{};
    config.family = family_from_name(j.at("family").get<std::string>());
    config.m = j.value("m", std::size_t{1});
    if (j.contains("variance")) {
        config.variance = variance_from_name(j.at("variance").get<std::string>());
    } else if (config.family == TestFamily::lm_gls || config.family == TestFamily::lb_gls) {
        config.variance = TestConfig::Variance::known;
    } else if (config.family != TestFamily::lm_standard && config.family != TestFamily::lb_standard) {
        config.variance = TestConfig::Variance::kernel;
    }
    if (j.contains("kernel")) config.kernel = kernel_from_name(j.at("kernel").get<std::string>());
    if (j.contains("rule")) config.rule = j.at("rule").get<BandwidthRule>();
    if (j.contains("correction")) config.correction = correction_from_name(j.at("correction").get<std::string>());
    config.replications = j.value("replications", std::size_t{199});
    config.label = j.value("label", std::string{});
}

void to_json(nlohmann::json& j, const ExperimentSpec& spec) {
    j = {{"dgp", spec.dgp},
         {"n_grid", spec.n_grid},
         {"tests", spec.tests},
         {"outer_replications", spec.outer_replications},
         {"nominal_level", spec.nominal_level},
         {"seed", spec.seed}};
    if (spec.fit_order) j["fit_order"] = *spec.fit_order;
}

void from_json(const nlohmann::json& j, ExperimentSpec& spec) {
    spec = ExperimentSpec{};
    if (j.contains("dgp")) spec.dgp = j.at("dgp").get<DgpSpec>();
    if (j.contains("n_grid")) spec.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
    spec.tests = j.at("tests").get<std::vector<TestConfig>>();
    spec.outer_replications = j.value("outer_replications", std::size_t{500});
    spec.nominal_level = j.value("nominal_level", 0.05);
    spec.seed = j.value("seed", std::uint64_t{42});
    spec.threads = j.value("threads", std::size_t{0});
    if (j.contains("fit_order")) spec.fit_order = j.at("fit_order").get<std::size_t>();
}

}  // namespace tvarch
