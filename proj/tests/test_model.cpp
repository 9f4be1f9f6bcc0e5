#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "tvarch/errors.hpp"
#include "tvarch/model.hpp"
#include "tvarch/rng.hpp"

using namespace tvarch;

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

/// Lag-i sample covariance of the squares and its iid standard error.
std::pair<double, double> squared_cov(const std::vector<double>& u, std::size_t lag) {
    std::vector<double> s(u.size());
    for (std::size_t t = 0; t < u.size(); ++t) s[t] = u[t] * u[t];
    const double mu = mean(s);
    double c = 0.0, v = 0.0;
    for (std::size_t t = lag; t < s.size(); ++t) c += (s[t] - mu) * (s[t - lag] - mu);
    for (double x : s) v += (x - mu) * (x - mu);
    const double n = static_cast<double>(s.size());
    return {c / n, (v / n) / std::sqrt(n)};
}

}  // namespace

TEST_CASE("profiles evaluate as defined") {
    CHECK(eval_profile(VarianceProfile::constant(20.0), 0.37) == 20.0);

    const auto sinus = VarianceProfile::default_sinusoid();
    CHECK(sinus(1e-12) == doctest::Approx(25.0).epsilon(1e-9));
    const double r = 0.3;
    CHECK(sinus(r) == doctest::Approx(30.0 - 10.0 * std::sin(1.5 * std::numbers::pi * r + std::numbers::pi / 6) * 1.3));

    const auto step = VarianceProfile::piecewise_constant({0.5}, {1.0, 4.0});
    CHECK(step(0.25) == 1.0);
    CHECK(step(0.5) == 1.0);
    CHECK(step(0.75) == 4.0);

    const auto table = VarianceProfile::table({0.2, 0.6}, {1.0, 3.0});
    CHECK(table(0.1) == 1.0);
    CHECK(table(0.4) == doctest::Approx(2.0));
    CHECK(table(0.9) == 3.0);
}

TEST_CASE("profile domain and invariants") {
    const auto g = VarianceProfile::constant(1.0);
    CHECK_THROWS_AS((void)g(0.0), DomainError);
    CHECK_THROWS_AS((void)g(1.5), DomainError);
    CHECK_NOTHROW((void)g(1.0));
    CHECK_THROWS_AS((void)VarianceProfile::constant(-1.0), DomainError);
    CHECK_THROWS_AS((void)VarianceProfile::piecewise_constant({0.5}, {1.0}), DomainError);
    CHECK_THROWS_AS((void)VarianceProfile::piecewise_constant({0.5}, {1.0, 0.0}), DomainError);
    // c0 - c1 sin(.)(1 + r) crosses zero
    CHECK_THROWS_AS((void)VarianceProfile::sinusoidal(1.0, 10.0, 3.0, 0.0), DomainError);
}

TEST_CASE("innovations have zero mean and unit variance") {
    for (const InnovationSpec spec : {InnovationSpec{}, InnovationSpec{InnovationSpec::Distribution::student_t, 10}}) {
        Engine engine = make_engine(11, {});
        const std::size_t n = 1'000'000;
        double s1 = 0.0, s2 = 0.0, s4 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = spec.draw(engine);
            s1 += e;
            s2 += e * e;
            s4 += e * e * e * e;
        }
        const double m1 = s1 / n, m2 = s2 / n;
        CHECK(std::abs(m1) < 3.0 / std::sqrt(double(n)));
        CHECK(std::abs(m2 - 1.0) < 3.0 * std::sqrt((s4 / n - 1.0) / n));
    }
    CHECK_THROWS_AS((InnovationSpec{InnovationSpec::Distribution::student_t, 8}.validate()), DomainError);
}

TEST_CASE("dgp validation") {
    DgpSpec spec;
    spec.ar_coeffs = {1.01};
    CHECK_THROWS_AS(spec.validate(), DomainError);
    spec.ar_coeffs = {0.5, 0.6};  // companion radius > 1
    CHECK_THROWS_AS(spec.validate(), DomainError);
    spec.ar_coeffs = {0.5};
    spec.arch_alpha = {-0.1};
    CHECK_THROWS_AS(spec.validate(), DomainError);
    spec.arch_alpha = {0.6};  // above the fourth-moment bound but allowed
    CHECK_NOTHROW(spec.validate());
    spec.n = 5;
    CHECK_THROWS_AS(spec.validate(), DomainError);
    CHECK(companion_spectral_radius(std::vector<double>{0.5}) == doctest::Approx(0.5));
    CHECK(companion_spectral_radius(std::vector<double>{}) == 0.0);
}

TEST_CASE("unit-variance iid case") {
    DgpSpec spec;
    spec.n = 100'000;
    spec.seed = 5;
    const auto path = simulate_path(spec);
    double s2 = 0.0, s4 = 0.0;
    for (double u : path.u) {
        s2 += u * u;
        s4 += u * u * u * u;
    }
    const double n = double(spec.n);
    const double se = std::sqrt((s4 / n - (s2 / n) * (s2 / n)) / n);
    CHECK(std::abs(s2 / n - 1.0) < 3.0 * se);
    // p = 0 means the sample is u itself
    const auto obs = path.sample.observations();
    CHECK(std::equal(obs.begin(), obs.end(), path.u.begin()));
}

TEST_CASE("AR(1) recovered by closed-form OLS") {
    DgpSpec spec;
    spec.ar_coeffs = {0.5};
    spec.profile = VarianceProfile::default_sinusoid();
    spec.n = 100'000;
    const auto s = simulate(spec);
    double sxy = 0.0, sxx = 0.0;
    for (long t = 1; t <= long(s.n()); ++t) {
        sxy += s.x(t) * s.x(t - 1);
        sxx += s.x(t - 1) * s.x(t - 1);
    }
    CHECK(std::abs(sxy / sxx - 0.5) < 0.02);
    CHECK(s.p() == 1);
    CHECK(s.values().size() == spec.n + 1);
}

TEST_CASE("ARCH(1) makes squares autocorrelated; H0 does not") {
    DgpSpec spec;
    spec.n = 100'000;
    spec.arch_alpha = {0.2};
    const auto alt = simulate_path(spec).u;
    const auto [c1, se1] = squared_cov(alt, 1);
    double v = 0.0;
    const double mu = [&] {
        double s = 0.0;
        for (double u : alt) s += u * u;
        return s / alt.size();
    }();
    for (double u : alt) v += (u * u - mu) * (u * u - mu);
    CHECK(c1 / (v / alt.size()) > 0.1);

    spec.arch_alpha = {};
    spec.profile = VarianceProfile::constant(20.0);
    spec.seed = 9;
    const auto null = simulate_path(spec).u;
    for (std::size_t i = 1; i <= 5; ++i) {
        const auto [c, se] = squared_cov(null, i);
        CHECK(std::abs(c) < 4.0 * se);
    }
}

TEST_CASE("rescaled time: simulated h_t equals g(t/n)") {
    DgpSpec spec;
    spec.profile = VarianceProfile::default_sinusoid();
    spec.n = 777;
    const auto path = simulate_path(spec);
    for (std::size_t t = 1; t <= spec.n; ++t) CHECK(path.h[t - 1] == spec.profile(double(t) / double(spec.n)));
}

TEST_CASE("determinism and seed sensitivity") {
    DgpSpec spec;
    spec.ar_coeffs = {0.3, -0.2};
    spec.arch_alpha = {0.4};
    spec.seed = 123;
    const auto a = simulate(spec), b = simulate(spec);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin(), b.values().end()));
    spec.seed = 124;
    const auto c = simulate(spec);
    CHECK_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
}

TEST_CASE("explosive ARCH is reported with its index") {
    DgpSpec spec;
    spec.arch_alpha = {1e308};
    spec.n = 50;
    try {
        (void)simulate(spec);
        FAIL("expected divergence");
    } catch (const SimulationDivergedError& e) {
        CHECK(e.first_bad_index() <= 50);
    }
}

TEST_CASE("series sample indexing") {
    const SeriesSample s({1.0, 2.0, 3.0, 4.0}, 1);
    CHECK(s.n() == 3);
    CHECK(s.x(0) == 1.0);
    CHECK(s.x(3) == 4.0);
    const auto s2 = s.with_order(2);
    CHECK(s2.n() == 2);
    CHECK(s2.x(-1) == 1.0);
    CHECK_THROWS_AS(SeriesSample({1.0}, 1), DomainError);
    CHECK_THROWS_AS(SeriesSample({1.0, NAN}, 0), DomainError);
}

TEST_CASE("dgp json round trip") {
    DgpSpec spec;
    spec.ar_coeffs = {0.4};
    spec.arch_alpha = {0.2};
    spec.profile = VarianceProfile::piecewise_constant({0.3, 0.7}, {1.0, 2.0, 3.0});
    spec.innovations = {InnovationSpec::Distribution::student_t, 12};
    spec.n = 321;
    spec.seed = 77;
    const nlohmann::json j = spec;
    CHECK(j.at("profile").at("kind") == "piecewise_constant");
    const auto back = j.get<DgpSpec>();
    const nlohmann::json j2 = back;
    CHECK(j == j2);
    const auto a = simulate(spec), b = simulate(back);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin(), b.values().end()));
}

TEST_CASE("seed derivation separates streams") {
    CHECK(derive_seed(1, {0}) != derive_seed(1, {1}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(7, {4, 5}) == derive_seed(7, {4, 5}));
}

TEST_CASE("variance profile scale") {
    DgpSpec spec;
    spec.profile = VarianceProfile::default_sinusoid();
    spec.profile_scale = DgpSpec::ProfileScale::variance;
    spec.n = 300;
    const auto path = simulate_path(spec);
    const auto h2 = true_variance_path(spec);
    for (std::size_t t = 1; t <= spec.n; ++t) {
        const double g = spec.profile(double(t) / double(spec.n));
        CHECK(path.h[t - 1] == std::sqrt(g));
        CHECK(h2[t - 1] == doctest::Approx(g).epsilon(1e-14));
    }
    spec.profile_scale = DgpSpec::ProfileScale::std_dev;
    CHECK(true_variance_path(spec) == true_variance_path(spec.profile, spec.n));

    spec.profile_scale = DgpSpec::ProfileScale::variance;
    const nlohmann::json j = spec;
    CHECK(j.at("profile_scale") == "variance");
    CHECK(j.get<DgpSpec>().profile_scale == DgpSpec::ProfileScale::variance);
    auto bad = j;
    bad["profile_scale"] = "log";
    CHECK_THROWS_AS((void)bad.get<DgpSpec>(), DomainError);
}
