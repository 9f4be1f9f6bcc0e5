#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "test_support.hpp"
#include "tvarch/errors.hpp"
#include "tvarch/estimators.hpp"
#include "tvarch/rng.hpp"
#include "tvarch/stats.hpp"

using namespace tvarch;
using tvarch::testing::ks_distance;
using tvarch::testing::null_sample;
using tvarch::testing::quantile;

namespace {

/// Composite Simpson rule on [a, b] with an even number of panels.
template <class F>
double simpson(F f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

/// Upper chi-square tail by integrating the density.
double chisq_tail_oracle(double x, int m) {
    const double k = 0.5 * m;
    const double c = 1.0 / (std::pow(2.0, k) * std::tgamma(k));
    return simpson([&](double y) { return c * std::pow(y, k - 1.0) * std::exp(-0.5 * y); }, x, x + 400.0, 400'000);
}

/// Quasi log-likelihood -1/2 sum (log ht2 + u^2 / ht2), ht2 = h2_t + sum_i theta_i u_{t-i}^2.
double quasi_loglik(const std::vector<double>& u, const std::vector<double>& h2, const std::vector<double>& theta) {
    double acc = 0.0;
    for (std::size_t t = 0; t < u.size(); ++t) {
        double ht2 = h2[t];
        for (std::size_t i = 1; i <= theta.size() && i <= t; ++i) ht2 += theta[i - 1] * u[t - i] * u[t - i];
        acc += std::log(ht2) + u[t] * u[t] / ht2;
    }
    return -0.5 * acc;
}

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> z;
    std::vector<double> v(n);
    for (double& x : v) x = z(eng);
    return v;
}

double chisq_cdf(double x, std::size_t m) { return x <= 0.0 ? 0.0 : 1.0 - chisq_pvalue(x, m); }

}  // namespace

TEST_CASE("moment estimates") {
    const auto u = gaussian(1'000'000, 1);
    const std::vector<double> h2(u.size(), 1.0);
    const auto mom = moment_estimates(u, h2);
    CHECK(mom.e_eps4 == doctest::Approx(3.0).epsilon(0.02));
    CHECK(mom.var_eps2 == doctest::Approx(2.0).epsilon(0.03));
    CHECK(mom.e_eps8 == doctest::Approx(105.0).epsilon(0.1));
    CHECK(mom.omega4 == doctest::Approx(1.0).epsilon(1e-12));

    // u^2 = h2 exactly: no variation left, kurtosis at the floor
    const std::vector<double> flat_u{1.0, -2.0, 3.0}, flat_h{1.0, 4.0, 9.0};
    const auto deg = moment_estimates(flat_u, flat_h);
    CHECK(deg.var_eps2 == 0.0);
    CHECK(deg.e_eps4 == kKurtosisFloor);
    const auto sigma = sigma_matrix(deg, 1);
    CHECK(sigma.near_singular);
    CHECK_THROWS_AS((void)lm_statistic(flat_u, flat_h, 1, sigma), MatrixInversionError);
    CHECK_THROWS_AS((void)moment_estimates(flat_u, std::vector<double>{1.0, 0.0, 1.0}), DomainError);
}

TEST_CASE("sigma matrix examples and closed-form eigenvalues") {
    MomentEstimates g;
    g.var_eps2 = 2.0;
    g.e_eps4 = 3.0;
    const auto s1 = sigma_matrix(g, 1);
    CHECK(s1.matrix(0, 0) == doctest::Approx(1.5));
    CHECK(s1.eigenvalues()[0] == doctest::Approx(1.5));
    const auto s2 = sigma_matrix(g, 2);
    CHECK(s2.matrix(0, 1) == doctest::Approx(0.5));
    const auto ev = s2.eigenvalues();
    CHECK(ev[0] == doctest::Approx(1.0));
    CHECK(ev[1] == doctest::Approx(2.0));
    CHECK_FALSE(s2.near_singular);

    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> vd(0.1, 10.0), kd(1.05, 20.0);
    for (int rep = 0; rep < 50; ++rep) {
        MomentEstimates mom;
        mom.var_eps2 = vd(eng);
        mom.e_eps4 = kd(eng);
        for (std::size_t m = 1; m <= 6; ++m) {
            const auto e = sigma_matrix(mom, m).eigenvalues();
            const double lo = mom.var_eps2 / 4.0 * (mom.e_eps4 - 1.0);
            const double hi = mom.var_eps2 / 4.0 * (mom.e_eps4 - 1.0 + double(m));
            for (std::size_t i = 0; i + 1 < m; ++i) CHECK(std::abs(e[i] - lo) <= 1e-9 * hi);
            CHECK(std::abs(e[m - 1] - hi) <= 1e-9 * hi);
        }
    }
}

TEST_CASE("score vector examples") {
    const std::vector<double> u{1.0, 2.0, 1.0}, h{1.0, 1.0, 1.0};
    const auto s = score_vector(u, h, 1);
    CHECK(s[0] == doctest::Approx(3.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-14));
    CHECK(s[0] == doctest::Approx(0.8660).epsilon(1e-4));

    const std::vector<double> exact_u{1.0, -2.0, 3.0}, exact_h{1.0, 4.0, 9.0};
    for (double v : score_vector(exact_u, exact_h, 2)) CHECK(v == 0.0);
}

TEST_CASE("score equals the finite-difference gradient of the quasi-likelihood") {
    std::mt19937_64 eng(17);
    std::uniform_real_distribution<double> hd(0.5, 3.0);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 30 + 5 * rep, m = 1 + rep % 4;
        auto u = gaussian(n, 100 + rep);
        std::vector<double> h2(n);
        for (std::size_t t = 0; t < n; ++t) {
            h2[t] = hd(eng);
            u[t] *= std::sqrt(h2[t]);
        }
        const auto s = score_vector(u, h2, m);
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<double> plus(m, 0.0), minus(m, 0.0);
            const double step = 1e-5;
            plus[j] = step;
            minus[j] = -step;
            const double grad = (quasi_loglik(u, h2, plus) - quasi_loglik(u, h2, minus)) / (2.0 * step);
            const double fd = grad / std::sqrt(double(n));
            CHECK(std::abs(s[j] - fd) <= 1e-6 * std::max(1.0, std::abs(s[j])));
        }
    }
}

TEST_CASE("lm and modified statistics") {
    const auto u = gaussian(200, 5);
    const std::vector<double> h2(200, 1.0);
    const auto mom = moment_estimates(u, h2);
    const auto sigma = sigma_matrix(mom, 1);
    const double lm = lm_statistic(u, h2, 1, sigma);
    const double s = score_vector(u, h2, 1)[0];
    CHECK(lm == doctest::Approx(s * s / sigma.matrix(0, 0)).epsilon(1e-12));
    CHECK(modified_lm_statistic(u, h2, 1) == doctest::Approx(lm * sigma.matrix(0, 0)).epsilon(1e-12));
    CHECK_THROWS_AS((void)lm_statistic(u, h2, 2, sigma), DomainError);
    CHECK_THROWS_AS((void)score_vector(u, h2, 0), DomainError);
}

TEST_CASE("autocorrelations and the Ljung-Box form") {
    const std::vector<double> d{1.0, -1.0, 1.0, -1.0};
    const auto ac = centered_autocorr(d, 2);
    CHECK(ac.gamma0 == doctest::Approx(1.0));
    CHECK(ac.r[0] == doctest::Approx(-0.75));
    CHECK(ac.r[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS((void)centered_autocorr(std::vector<double>(5, 0.0), 1), DegenerateInputError);

    const std::vector<double> u{1.0, 2.0, 3.0}, c{2.0, 2.0, 2.0};
    const auto ac2 = squared_resid_autocorr(u, c, 1);
    // d = (-1, 2, 7)
    CHECK(ac2.gamma0 == doctest::Approx(54.0 / 3.0));
    CHECK(ac2.r[0] == doctest::Approx((2.0 * -1.0 + 7.0 * 2.0) / 54.0));

    const std::vector<double> r{0.1};
    CHECK(lb_statistic(r, 100, 1) == doctest::Approx(100.0 * 102.0 * 0.01 / 99.0).epsilon(1e-14));
    CHECK(lb_statistic(r, 100, 1) == doctest::Approx(1.0303).epsilon(1e-4));
    CHECK(lb_statistic(std::vector<double>{0.0, 0.0}, 50, 2) == 0.0);
    CHECK(lb_statistic(r, 100, 1, 2.0) == doctest::Approx(2.0 * lb_statistic(r, 100, 1)));
}

TEST_CASE("Engle regression statistic matches n R^2 by correlation at m = 1") {
    const auto u = gaussian(300, 8);
    std::vector<double> y, x;
    for (std::size_t t = 1; t < u.size(); ++t) {
        y.push_back(u[t] * u[t]);
        x.push_back(u[t - 1] * u[t - 1]);
    }
    const double n = double(y.size());
    double my = 0, mx = 0;
    for (std::size_t i = 0; i < y.size(); ++i) my += y[i] / n, mx += x[i] / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    CHECK(engle_lm_statistic(u, 1) == doctest::Approx(n * sxy * sxy / (sxx * syy)).epsilon(1e-10));
    CHECK_THROWS_AS((void)engle_lm_statistic(std::vector<double>(3, 1.0), 1), DomainError);
}

TEST_CASE("divergence constant") {
    CHECK(std::abs(divergence_constant(VarianceProfile::constant(20.0))) <= 1e-8);
    CHECK(divergence_constant(VarianceProfile::piecewise_constant({0.5}, {1.0, 2.0})) ==
          doctest::Approx(2.25).epsilon(1e-12));

    const auto g = VarianceProfile::default_sinusoid();
    const double g2 = simpson([&](double r) { return std::pow(g(std::max(r, 1e-300)), 2); }, 0.0, 1.0, 200'000);
    const double g4 = simpson([&](double r) { return std::pow(g(std::max(r, 1e-300)), 4); }, 0.0, 1.0, 200'000);
    const double d = divergence_constant(g);
    CHECK(d > 0.0);
    CHECK(std::abs(d - (g4 - g2 * g2)) <= 1e-8 * d);
}

TEST_CASE("chi-square tail") {
    CHECK(chisq_pvalue(0.0, 3) == 1.0);
    CHECK(std::abs(chisq_pvalue(3.8415, 1) - 0.05) < 1e-4);
    CHECK(std::abs(chisq_pvalue(12.592, 6) - 0.05) < 1e-4);
    for (int m : {1, 2, 3, 6})
        for (double x : {0.5, 2.0, 3.8415, 7.0, 12.592, 20.0})
            CHECK(std::abs(chisq_pvalue(x, m) - chisq_tail_oracle(x, m)) < 1e-10);
    // closed form for m = 1
    CHECK(std::abs(chisq_pvalue(2.7, 1) - std::erfc(std::sqrt(2.7 / 2.0))) < 1e-14);
    CHECK_THROWS_AS((void)chisq_pvalue(-1.0, 1), DomainError);
}

TEST_CASE("run_test wiring and configuration errors") {
    const auto g = VarianceProfile::default_sinusoid();
    const auto s = null_sample({0.5}, g, 300, 1);
    const auto h2 = true_variance_path(g, 300);

    CHECK_THROWS_AS((void)run_test(s, TestFamily::lm_standard, 1, KnownVariance{h2}), ConfigurationError);
    CHECK_THROWS_AS((void)run_test(s, TestFamily::lb_gls, 1, NoVariance{}), ConfigurationError);
    CHECK_THROWS_AS((void)run_test(s, TestFamily::lm_als, 1, KnownVariance{h2}), ConfigurationError);
    CHECK_THROWS_AS((void)family_from_name("lm_bogus"), ConfigurationError);

    for (int f = 0; f < 8; ++f) {
        const auto family = static_cast<TestFamily>(f);
        CHECK(family_from_name(family_name(family)) == family);
        VarianceSource v = NoVariance{};
        if (f >= 2 && f <= 3) v = KnownVariance{h2};
        if (f >= 4) v = KernelVariance{KernelSpec{}, CrossValidation{}};
        const auto rep = run_test(s, family, 2, v);
        CHECK(rep.statistic >= 0.0);
        if (is_modified_family(family)) {
            CHECK_FALSE(rep.pvalue.has_value());
            CHECK(pvalue_source_label(rep.pvalue_source) == "none");
            const nlohmann::json j = rep;
            CHECK(j.at("pvalue").is_null());
        } else {
            REQUIRE(rep.pvalue.has_value());
            CHECK(*rep.pvalue == doctest::Approx(chisq_pvalue(rep.statistic, 2)));
            CHECK(pvalue_source_label(rep.pvalue_source) == "chisq_asymptotic");
        }
    }

    // the GLS Ljung-Box statistic carries the omega4^2 / omega8 correction
    const auto fit = gls_fit(s, h2);
    const auto mom = moment_estimates(fit.residuals, h2);
    const auto ac = squared_resid_autocorr(fit.residuals, h2, 1);
    CHECK(run_test(s, TestFamily::lb_gls, 1, KnownVariance{h2}).statistic ==
          doctest::Approx(lb_statistic(ac.r, 300, 1, mom.omega4 * mom.omega4 / mom.omega8)));
}

TEST_CASE("statistics are invariant to rescaling the series") {
    const auto g = VarianceProfile::default_sinusoid();
    const auto s = null_sample({0.3}, g, 400, 2);
    std::vector<double> scaled(s.values().begin(), s.values().end());
    for (double& v : scaled) v *= 3.0;
    const SeriesSample sc(scaled, 1);
    auto h2 = true_variance_path(g, 400), h2c = h2;
    for (double& v : h2c) v *= 9.0;
    const auto rel = [](double a, double b) { return std::abs(a - b) <= 1e-8 * std::max(1.0, std::abs(a)); };

    for (auto f : {TestFamily::lm_standard, TestFamily::lb_standard})
        CHECK(rel(run_test(s, f, 3, NoVariance{}).statistic, run_test(sc, f, 3, NoVariance{}).statistic));
    for (auto f : {TestFamily::lm_gls, TestFamily::lb_gls})
        CHECK(rel(run_test(s, f, 3, KnownVariance{h2}).statistic, run_test(sc, f, 3, KnownVariance{h2c}).statistic));
    const KernelVariance kv{KernelSpec{}, FixedBandwidth{0.1}};
    for (auto f : {TestFamily::lm_als, TestFamily::lb_als, TestFamily::lm_als_modified, TestFamily::lb_als_modified})
        CHECK(rel(run_test(s, f, 3, kv).statistic, run_test(sc, f, 3, kv).statistic));
}

TEST_CASE("null sizes of the asymptotic tests") {
    const auto sinus = VarianceProfile::default_sinusoid();
    const auto flat = VarianceProfile::constant(20.0);
    const auto h2 = true_variance_path(sinus, 500);
    const std::size_t reps = 1000;
    int lb_homo = 0, lb_hetero = 0, lb_gls = 0;
    std::vector<double> q_gls;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto a = null_sample({0.5}, flat, 500, derive_seed(71, {r}));
        lb_homo += *run_test(a, TestFamily::lb_standard, 1, NoVariance{}).pvalue <= 0.05;
        const auto b = null_sample({0.5}, sinus, 500, derive_seed(72, {r}));
        lb_hetero += *run_test(b, TestFamily::lb_standard, 1, NoVariance{}).pvalue <= 0.05;
        lb_gls += *run_test(b, TestFamily::lb_gls, 1, KnownVariance{h2}).pvalue <= 0.05;
        q_gls.push_back(run_test(b, TestFamily::lm_gls, 1, KnownVariance{h2}).statistic);
    }
    const double q95 = quantile(q_gls, 0.95);
    MESSAGE("LB_S homo " << lb_homo / 10.0 << "%, LB_S hetero " << lb_hetero / 10.0 << "%, LB_GLS " << lb_gls / 10.0
                         << "%, Q_GLS 95th percentile " << q95);
    CHECK(lb_homo >= 33);
    CHECK(lb_homo <= 66);
    CHECK(lb_hetero >= 200);
    CHECK(lb_gls >= 33);
    CHECK(lb_gls <= 80);
    CHECK(q95 >= 3.3);
    CHECK(q95 <= 4.4);
}

TEST_CASE("modified statistic follows the weighted chi-square mixture") {
    const std::size_t reps = 2000, n = 2000;
    const auto g = VarianceProfile::constant(1.0);
    const std::vector<double> h2(n, 1.0);
    std::vector<double> stat(reps), mixture(20'000);
    for (std::size_t r = 0; r < reps; ++r) {
        const auto s = null_sample({0.5}, g, n, derive_seed(90, {r}));
        stat[r] = modified_lm_statistic(gls_fit(s, h2).residuals, h2, 2);
    }
    std::mt19937_64 eng(91);
    std::normal_distribution<double> z;
    for (double& v : mixture) {
        const double a = z(eng), b = z(eng);
        v = 2.0 * a * a + b * b;
    }
    const double d = ks_distance(stat, mixture);
    MESSAGE("KS distance to 2U1^2 + U2^2: " << d);
    CHECK(d < 0.05);
}

TEST_CASE("known-variance statistics are chi-square under the null") {
    const std::size_t reps = 1000, n = 1000;
    const auto g = VarianceProfile::constant(2.0);
    const std::vector<double> h2(n, 4.0);
    std::vector<double> lm, lb;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto s = null_sample({0.5}, g, n, derive_seed(55, {r}));
        lm.push_back(run_test(s, TestFamily::lm_gls, 2, KnownVariance{h2}).statistic);
        lb.push_back(run_test(s, TestFamily::lb_gls, 2, KnownVariance{h2}).statistic);
    }
    const auto cdf = [](double x) { return chisq_cdf(x, 2); };
    MESSAGE("KS Q_GLS " << ks_distance(lm, cdf) << ", Q*_GLS " << ks_distance(lb, cdf));
    CHECK(ks_distance(lm, cdf) < 0.06);
    CHECK(ks_distance(lb, cdf) < 0.06);
}
