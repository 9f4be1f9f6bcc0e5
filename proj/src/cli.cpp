#include "tvarch/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tvarch/errors.hpp"
#include "tvarch/estimators.hpp"
#include "tvarch/harness.hpp"
#include "tvarch/io.hpp"
#include "tvarch/kernelvar.hpp"
#include "tvarch/model.hpp"
#include "tvarch/parallel.hpp"
#include "tvarch/resample.hpp"
#include "tvarch/stats.hpp"

namespace tvarch {

namespace {

struct ProfileOptions {
    std::string kind = "sinusoidal";
    double level = 20.0;
    std::vector<double> breakpoints{0.5};
    std::vector<double> levels{1.0, 2.0};

    void add(CLI::App* app) {
        app->add_option("--profile", kind, "variance profile: sinusoidal, constant or step")
            ->check(CLI::IsMember({"sinusoidal", "constant", "step"}))
            ->capture_default_str();
        app->add_option("--level", level, "level of the constant profile")->capture_default_str();
        app->add_option("--breakpoints", breakpoints, "step profile breakpoints in (0,1)")->delimiter(',');
        app->add_option("--levels", levels, "step profile levels")->delimiter(',');
    }

    [[nodiscard]] VarianceProfile build() const {
        if (kind == "constant") return VarianceProfile::constant(level);
        if (kind == "step") return VarianceProfile::piecewise_constant(breakpoints, levels);
        return VarianceProfile::default_sinusoid();
    }
};

struct InputOptions {
    std::string path;
    std::string column;
    std::size_t difference = 0;
    std::size_t p = 0;

    void add(CLI::App* app, bool require_p) {
        app->add_option("-i,--input", path, "input CSV file")->required();
        app->add_option("--column", column, "column name, or 0-based index");
        app->add_option("--difference", difference, "number of first differences to apply")->capture_default_str();
        auto* opt = app->add_option("--p", p, "AR order");
        if (require_p) opt->required();
    }

    [[nodiscard]] SeriesSample load() const {
        std::optional<ColumnSelector> selector;
        if (!column.empty()) {
            const bool numeric = column.find_first_not_of("0123456789") == std::string::npos;
            selector = numeric ? ColumnSelector{static_cast<std::size_t>(std::stoull(column))} : ColumnSelector{column};
        }
        return ingest_csv(path, selector, difference).with_order(p);
    }
};

struct BandwidthOptions {
    std::string kernel = "gaussian";
    std::string bandwidth = "cv";
    double gamma = 0.12;
    std::string rot_scale = "squared";
    double b = 0.1;
    CrossValidation cv;

    void add(CLI::App* app) {
        app->add_option("--kernel", kernel, "smoothing kernel: gaussian or triangular")
            ->check(CLI::IsMember({"gaussian", "triangular"}))
            ->capture_default_str();
        app->add_option("--bandwidth", bandwidth, "bandwidth rule: cv, rot or fixed")
            ->check(CLI::IsMember({"cv", "rot", "fixed"}))
            ->capture_default_str();
        app->add_option("--gamma", gamma, "rule-of-thumb constant")->capture_default_str();
        app->add_option("--rot-scale", rot_scale,
                        "rule-of-thumb sigma2: squared (variance of squared residuals) or residual (mean squared residual)")
            ->check(CLI::IsMember({"squared", "residual"}))
            ->capture_default_str();
        app->add_option("--b", b, "fixed bandwidth")->capture_default_str();
        app->add_option("--cv-min", cv.c_min, "cross-validation grid lower constant")->capture_default_str();
        app->add_option("--cv-max", cv.c_max, "cross-validation grid upper constant")->capture_default_str();
        app->add_option("--cv-points", cv.grid_size, "cross-validation grid size")->capture_default_str();
    }

    [[nodiscard]] BandwidthRule rule() const {
        BandwidthRule r = cv;
        if (bandwidth == "rot")
            r = RuleOfThumb{gamma, rot_scale == "residual" ? RuleOfThumb::Scale::residual_variance
                                                           : RuleOfThumb::Scale::squared_residual_variance};
        if (bandwidth == "fixed") r = FixedBandwidth{b};
        validate_rule(r);
        return r;
    }
};

std::vector<double> read_h2_file(const std::string& path) {
    const SeriesSample h2 = ingest_csv(path, std::nullopt, 0, 1);
    return std::vector<double>(h2.observations().begin(), h2.observations().end());
}

void emit(const std::string& text, const std::string& output, std::ostream& out) {
    if (output.empty())
        out << text;
    else
        write_text(output, text);
}

std::filesystem::path sidecar(const std::string& output) {
    std::filesystem::path p(output);
    p.replace_extension(".json");
    return p;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adaptive ARCH-LM and portmanteau tests for autoregressions with time-varying variance"};
    app.require_subcommand(1);
    std::uint64_t seed = 42;
    std::size_t threads = 0;

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate an AR series with time-varying variance");
    ProfileOptions sim_profile;
    sim_profile.add(sim);
    std::size_t sim_n = 500, sim_burn = 200;
    std::vector<double> sim_ar, sim_alpha;
    std::string sim_dist = "gaussian";
    int sim_df = 10;
    std::string sim_out, sim_truth, sim_scale = "sd";
    sim->add_option("--n", sim_n, "sample length")->capture_default_str();
    sim->add_option("--burn-in", sim_burn, "discarded burn-in steps")->capture_default_str();
    sim->add_option("--ar", sim_ar, "AR coefficients a_1..a_p")->delimiter(',');
    sim->add_option("--alpha", sim_alpha, "ARCH coefficients alpha_1..alpha_m")->delimiter(',');
    sim->add_option("--innovations", sim_dist, "gaussian or student_t")
        ->check(CLI::IsMember({"gaussian", "student_t"}))
        ->capture_default_str();
    sim->add_option("--profile-scale", sim_scale, "profile gives the std dev (sd) or the variance")
        ->check(CLI::IsMember({"sd", "variance"}))
        ->capture_default_str();
    sim->add_option("--df", sim_df, "student_t degrees of freedom")->capture_default_str();
    sim->add_option("-o,--output", sim_out, "output CSV (stdout when omitted)");
    sim->add_option("--truth", sim_truth, "also write the true variance path h2 to this CSV");
    sim->add_option("--seed", seed, "master random seed")->capture_default_str();

    // estimate
    auto* est = app.add_subcommand("estimate", "fit an AR model by OLS, GLS or ALS");
    InputOptions est_in;
    est_in.add(est, true);
    BandwidthOptions est_bw;
    est_bw.add(est);
    std::string est_method = "als", est_h2, est_out, est_path_out;
    est->add_option("--method", est_method, "ols, gls or als")
        ->check(CLI::IsMember({"ols", "gls", "als"}))
        ->capture_default_str();
    est->add_option("--h2", est_h2, "CSV with the known variance path (gls)");
    est->add_option("-o,--output", est_out, "output JSON (stdout when omitted)");
    est->add_option("--path-output", est_path_out, "write the estimated variance path as CSV");

    // test
    auto* tst = app.add_subcommand("test", "test for second-order dynamics");
    InputOptions tst_in;
    tst_in.add(tst, true);
    BandwidthOptions tst_bw;
    tst_bw.add(tst);
    std::string tst_family, tst_correction = "none", tst_h2, tst_out;
    std::size_t tst_m = 1, tst_reps = 499;
    tst->add_option("--family", tst_family, "test family")->required();
    tst->add_option("--correction", tst_correction, "none, bootstrap or mc")
        ->check(CLI::IsMember({"none", "bootstrap", "mc"}))
        ->capture_default_str();
    tst->add_option("--m", tst_m, "number of lags")->capture_default_str();
    tst->add_option("--replications", tst_reps, "bootstrap / Monte Carlo replications")->capture_default_str();
    tst->add_option("--h2", tst_h2, "CSV with the known variance path (gls families)");
    tst->add_option("-o,--output", tst_out, "output JSON (stdout when omitted)");
    tst->add_option("--seed", seed, "master random seed")->capture_default_str();
    tst->add_option("--threads", threads, "worker threads (0: TVARCH_THREADS or all cores)");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "choose the rule-of-thumb constant gamma by simulation");
    InputOptions cal_in;
    cal_in.add(cal, true);
    CalibrationSpec cal_spec;
    std::string cal_family = "lb_als_modified", cal_method, cal_kernel = "gaussian", cal_out;
    cal->add_option("--family", cal_family, "lm_als_modified or lb_als_modified")->capture_default_str();
    cal->add_option("--m", cal_spec.m, "number of lags")->capture_default_str();
    cal->add_option("--gammas", cal_spec.gamma_grid, "ascending gamma grid")->delimiter(',');
    cal->add_option("--knots", cal_spec.knots, "variance interpolation points")->capture_default_str();
    cal->add_option("--replications", cal_spec.replications_per_gamma, "simulated series per gamma")
        ->capture_default_str();
    cal->add_option("--inner-replications", cal_spec.inner_replications, "resampling replications per series")
        ->capture_default_str();
    cal->add_option("--level", cal_spec.target_level, "target rejection level")->capture_default_str();
    cal->add_option("--method", cal_method, "bootstrap or mc (default: by family)")
        ->check(CLI::IsMember({"bootstrap", "mc"}));
    std::string cal_scale = "squared";
    cal->add_option("--rot-scale", cal_scale, "rule-of-thumb sigma2: squared or residual")
        ->check(CLI::IsMember({"squared", "residual"}))
        ->capture_default_str();
    cal->add_option("--kernel", cal_kernel, "smoothing kernel")->check(CLI::IsMember({"gaussian", "triangular"}));
    cal->add_option("-o,--output", cal_out, "output CSV; a JSON sidecar is written next to it");
    cal->add_option("--seed", seed, "master random seed")->capture_default_str();
    cal->add_option("--threads", threads, "worker threads");

    // experiment
    auto* exp = app.add_subcommand("experiment", "run a Monte Carlo size, power or divergence experiment");
    std::string exp_kind = "size", exp_config, exp_out;
    std::vector<double> exp_alphas{0.2, 0.4, 0.6};
    std::vector<std::size_t> exp_ngrid{500, 1000};
    std::size_t exp_reps = 500, exp_m = 1;
    std::optional<std::uint64_t> exp_seed;
    ProfileOptions exp_profile;
    exp->add_option("--kind", exp_kind, "size, power or divergence")
        ->check(CLI::IsMember({"size", "power", "divergence"}))
        ->capture_default_str();
    exp->add_option("--config", exp_config, "experiment spec JSON (size, power)");
    exp->add_option("--alphas", exp_alphas, "ARCH(1) alternatives (power)")->delimiter(',');
    exp->add_option("--n-grid", exp_ngrid, "sample lengths (divergence)")->delimiter(',');
    exp->add_option("--replications", exp_reps, "replications (divergence)")->capture_default_str();
    exp->add_option("--m", exp_m, "number of lags (divergence)")->capture_default_str();
    exp_profile.add(exp);
    exp->add_option("-o,--output", exp_out, "output CSV; a JSON sidecar is written next to it");
    exp->add_option("--seed", exp_seed, "master random seed (overrides the config)");
    exp->add_option("--threads", threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*sim) {
            DgpSpec dgp;
            dgp.ar_coeffs = sim_ar;
            dgp.arch_alpha = sim_alpha;
            dgp.profile = sim_profile.build();
            if (sim_scale == "variance") dgp.profile_scale = DgpSpec::ProfileScale::variance;
            dgp.n = sim_n;
            dgp.burn_in = sim_burn;
            dgp.seed = seed;
            if (sim_dist == "student_t") dgp.innovations = {InnovationSpec::Distribution::student_t, sim_df};
            dgp.validate();
            const SimulatedPath path = simulate_path(dgp);
            if (sim_out.empty()) {
                out << "x\n";
                for (double v : path.sample.values()) out << format_number(v) << "\n";
            } else {
                write_column_csv(sim_out, "x", path.sample.values());
            }
            if (!sim_truth.empty()) write_column_csv(sim_truth, "h2", true_variance_path(dgp));
        } else if (*est) {
            const SeriesSample sample = est_in.load();
            nlohmann::json report;
            if (est_method == "ols") {
                report = fit_json(ols_fit(sample), sample.p());
            } else if (est_method == "gls") {
                if (est_h2.empty()) throw ConfigurationError("--method gls needs --h2");
                report = fit_json(gls_fit(sample, read_h2_file(est_h2)), sample.p());
            } else {
                const auto [fit, path] = als_fit(sample, kernel_from_name(est_bw.kernel), est_bw.rule());
                report = fit_json(fit, sample.p());
                report["variance_path"] = path_metadata_json(path);
                if (!est_path_out.empty()) write_text(est_path_out, path_csv(path));
            }
            emit(report.dump(2) + "\n", est_out, out);
        } else if (*tst) {
            const SeriesSample sample = tst_in.load();
            const TestFamily family = family_from_name(tst_family);
            const KernelSpec kernel = kernel_from_name(tst_bw.kernel);
            TestReport report;
            if (tst_correction != "none") {
                const BandwidthRule rule = tst_bw.rule();
                const std::size_t workers = worker_count(threads);
                report = tst_correction == "bootstrap"
                             ? bootstrap_pvalue(sample, family, tst_m, kernel, rule, tst_reps, seed, workers)
                             : mc_pvalue(sample, family, tst_m, kernel, rule, tst_reps, seed, workers);
            } else {
                VarianceSource source = NoVariance{};
                if (family == TestFamily::lm_gls || family == TestFamily::lb_gls) {
                    if (tst_h2.empty()) throw ConfigurationError("GLS families need --h2");
                    source = KnownVariance{read_h2_file(tst_h2)};
                } else if (family != TestFamily::lm_standard && family != TestFamily::lb_standard) {
                    source = KernelVariance{kernel, tst_bw.rule()};
                }
                report = run_test(sample, family, tst_m, source);
            }
            const nlohmann::json j = report;
            emit(j.dump(2) + "\n", tst_out, out);
        } else if (*cal) {
            const SeriesSample sample = cal_in.load();
            cal_spec.test_family = family_from_name(cal_family);
            if (cal_scale == "residual") cal_spec.rot_scale = RuleOfThumb::Scale::residual_variance;
            if (!cal_method.empty())
                cal_spec.method = cal_method == "bootstrap" ? ResampleSpec::Method::bootstrap
                                                            : ResampleSpec::Method::monte_carlo;
            const CalibrationResult result =
                calibrate_gamma(sample, cal_spec, kernel_from_name(cal_kernel), seed, worker_count(threads));
            nlohmann::json j = {{"gamma_star", result.gamma_star}, {"family", cal_family}, {"m", cal_spec.m},
                                {"target_level", cal_spec.target_level}, {"seed", seed}};
            if (cal_out.empty()) {
                out << calibration_csv(result);
                out << j.dump(2) << "\n";
            } else {
                write_text(cal_out, calibration_csv(result));
                write_text(sidecar(cal_out), j.dump(2) + "\n");
            }
        } else if (*exp) {
            if (exp_kind == "divergence") {
                const DivergenceTable table = run_divergence_experiment(
                    exp_profile.build(), exp_ngrid, exp_reps, exp_seed.value_or(seed), exp_m, threads);
                if (exp_out.empty()) {
                    out << divergence_csv(table) << divergence_json(table).dump(2) << "\n";
                } else {
                    write_text(exp_out, divergence_csv(table));
                    write_text(sidecar(exp_out), divergence_json(table).dump(2) + "\n");
                }
            } else {
                if (exp_config.empty()) throw ConfigurationError("--config is required for size and power experiments");
                ExperimentSpec spec = nlohmann::json::parse(read_text(exp_config)).get<ExperimentSpec>();
                if (exp_seed) spec.seed = *exp_seed;
                if (threads) spec.threads = threads;
                const ResultTable table =
                    exp_kind == "size" ? run_size_experiment(spec) : run_power_experiment(spec, exp_alphas);
                if (exp_out.empty()) {
                    out << result_csv(table);
                } else {
                    write_text(exp_out, result_csv(table));
                    write_text(sidecar(exp_out), table.metadata.dump(2) + "\n");
                }
            }
        }
    } catch (const ConfigurationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        err << "error: invalid JSON configuration: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}

}  // namespace tvarch
