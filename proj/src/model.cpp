#include "tvarch/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "tvarch/errors.hpp"

namespace tvarch {

namespace {

constexpr int kValidationGrid = 10000;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool strictly_ascending(const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

double eval_kind(const VarianceProfile::Kind& kind, double r) {
    return std::visit(
        Overloaded{
            [](const ConstantProfile& c) { return c.level; },
            [r](const SinusoidalProfile& s) {
                return s.c0 - s.c1 * std::sin(s.freq * r + s.phase) * (1.0 + r);
            },
            [r](const PiecewiseConstantProfile& pc) {
                const auto k = std::lower_bound(pc.breakpoints.begin(), pc.breakpoints.end(), r) -
                               pc.breakpoints.begin();
                return pc.levels[static_cast<std::size_t>(k)];
            },
            [r](const TableProfile& tb) {
                if (r <= tb.knots.front()) return tb.values.front();
                if (r >= tb.knots.back()) return tb.values.back();
                const auto hi = static_cast<std::size_t>(
                    std::upper_bound(tb.knots.begin(), tb.knots.end(), r) - tb.knots.begin());
                const std::size_t lo = hi - 1;
                const double w = (r - tb.knots[lo]) / (tb.knots[hi] - tb.knots[lo]);
                return (1.0 - w) * tb.values[lo] + w * tb.values[hi];
            },
        },
        kind);
}

}  // namespace

VarianceProfile::VarianceProfile(Kind kind) : kind_(std::move(kind)) {
    std::visit(Overloaded{
                   [](const ConstantProfile& c) {
                       if (!(c.level > 0.0) || !std::isfinite(c.level))
                           throw DomainError("constant profile level must be positive and finite");
                   },
                   [](const SinusoidalProfile& s) {
                       if (!std::isfinite(s.c0) || !std::isfinite(s.c1) || !std::isfinite(s.freq) ||
                           !std::isfinite(s.phase))
                           throw DomainError("sinusoidal profile parameters must be finite");
                   },
                   [](const PiecewiseConstantProfile& pc) {
                       if (pc.levels.size() != pc.breakpoints.size() + 1)
                           throw DomainError("piecewise_constant: levels.count must be breakpoints.count + 1");
                       if (!strictly_ascending(pc.breakpoints))
                           throw DomainError("piecewise_constant: breakpoints must be ascending");
                       for (double b : pc.breakpoints)
                           if (!(b > 0.0 && b < 1.0))
                               throw DomainError("piecewise_constant: breakpoints must lie in (0,1)");
                   },
                   [](const TableProfile& tb) {
                       if (tb.knots.empty() || tb.knots.size() != tb.values.size())
                           throw DomainError("table: knots and values must be nonempty and of equal length");
                       if (!strictly_ascending(tb.knots))
                           throw DomainError("table: knots must be ascending");
                       for (double k : tb.knots)
                           if (!(k > 0.0 && k <= 1.0)) throw DomainError("table: knots must lie in (0,1]");
                   },
               },
               kind_);
    for (int i = 1; i <= kValidationGrid; ++i) {
        const double g = eval_kind(kind_, static_cast<double>(i) / kValidationGrid);
        if (!(g > 0.0) || !std::isfinite(g)) {
            std::ostringstream os;
            os << "variance profile must be positive and finite on (0,1]; g("
               << static_cast<double>(i) / kValidationGrid << ") = " << g;
            throw DomainError(os.str());
        }
    }
}

VarianceProfile VarianceProfile::constant(double level) { return VarianceProfile(ConstantProfile{level}); }

VarianceProfile VarianceProfile::sinusoidal(double c0, double c1, double freq, double phase) {
    return VarianceProfile(SinusoidalProfile{c0, c1, freq, phase});
}

VarianceProfile VarianceProfile::default_sinusoid() {
    return sinusoidal(30.0, 10.0, 1.5 * std::numbers::pi, std::numbers::pi / 6.0);
}

VarianceProfile VarianceProfile::piecewise_constant(std::vector<double> breakpoints,
                                                    std::vector<double> levels) {
    return VarianceProfile(PiecewiseConstantProfile{std::move(breakpoints), std::move(levels)});
}

VarianceProfile VarianceProfile::table(std::vector<double> knots, std::vector<double> values) {
    return VarianceProfile(TableProfile{std::move(knots), std::move(values)});
}

double VarianceProfile::operator()(double r) const {
    if (!(r > 0.0 && r <= 1.0)) {
        std::ostringstream os;
        os << "profile argument must lie in (0,1], got " << r;
        throw DomainError(os.str());
    }
    return eval_kind(kind_, r);
}

bool VarianceProfile::is_constant() const noexcept {
    return std::visit(Overloaded{
                          [](const ConstantProfile&) { return true; },
                          [](const SinusoidalProfile& s) { return s.c1 == 0.0; },
                          [](const PiecewiseConstantProfile& pc) {
                              return std::adjacent_find(pc.levels.begin(), pc.levels.end(),
                                                        std::not_equal_to<>()) == pc.levels.end();
                          },
                          [](const TableProfile& tb) {
                              return std::adjacent_find(tb.values.begin(), tb.values.end(),
                                                        std::not_equal_to<>()) == tb.values.end();
                          },
                      },
                      kind_);
}

std::vector<double> VarianceProfile::singular_points() const {
    return std::visit(Overloaded{
                          [](const ConstantProfile&) { return std::vector<double>{}; },
                          [](const SinusoidalProfile&) { return std::vector<double>{}; },
                          [](const PiecewiseConstantProfile& pc) { return pc.breakpoints; },
                          [](const TableProfile& tb) {
                              std::vector<double> out;
                              for (double k : tb.knots)
                                  if (k < 1.0) out.push_back(k);
                              return out;
                          },
                      },
                      kind_);
}

std::string VarianceProfile::kind_name() const {
    static constexpr const char* names[] = {"constant", "sinusoidal", "piecewise_constant", "table"};
    return names[kind_.index()];
}

double eval_profile(const VarianceProfile& profile, double r) { return profile(r); }

// ---------------------------------------------------------------------------

void InnovationSpec::validate() const {
    if (distribution == Distribution::student_t && df < 9)
        throw DomainError("student_t innovations need df >= 9 (finite moment of order > 8)");
}

double InnovationSpec::draw(Engine& engine) const {
    switch (distribution) {
        case Distribution::standard_gaussian:
            return std::normal_distribution<double>(0.0, 1.0)(engine);
        case Distribution::student_t: {
            const double d = static_cast<double>(df);
            return std::student_t_distribution<double>(d)(engine) * std::sqrt((d - 2.0) / d);
        }
    }
    return 0.0;
}

double companion_spectral_radius(std::span<const double> ar_coeffs) {
    const auto p = static_cast<Eigen::Index>(ar_coeffs.size());
    if (p == 0) return 0.0;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = ar_coeffs[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    return companion.eigenvalues().cwiseAbs().maxCoeff();
}

void DgpSpec::validate() const {
    for (double a : ar_coeffs)
        if (!std::isfinite(a)) throw DomainError("AR coefficients must be finite");
    const double rho = companion_spectral_radius(ar_coeffs);
    if (!(rho < 1.0)) {
        std::ostringstream os;
        os << "AR polynomial is not stable: companion spectral radius " << rho << " >= 1";
        throw DomainError(os.str());
    }
    for (double a : arch_alpha)
        if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("ARCH coefficients must be nonnegative");
    innovations.validate();
    if (n < 2 * (ar_coeffs.size() + arch_alpha.size() + 1))
        throw DomainError("sample length n must be at least 2 (p + m + 1)");
}

// ---------------------------------------------------------------------------

SeriesSample::SeriesSample(std::vector<double> values, std::size_t p) : values_(std::move(values)), p_(p) {
    if (values_.size() <= p_) throw DomainError("series must contain more values than the AR order");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            std::ostringstream os;
            os << "series value at position " << i << " is not finite";
            throw DomainError(os.str());
        }
    }
}

SeriesSample SeriesSample::with_order(std::size_t p) const { return SeriesSample(values_, p); }

double DgpSpec::scale_at(double r) const {
    const double g = profile(r);
    return profile_scale == ProfileScale::variance ? std::sqrt(g) : g;
}

SimulatedPath simulate_path(const DgpSpec& spec) {
    spec.validate();
    const std::size_t p = spec.ar_coeffs.size();
    const std::size_t m = spec.arch_alpha.size();
    const std::size_t total = spec.burn_in + spec.n;
    const double nd = static_cast<double>(spec.n);
    const double h_presample = spec.scale_at(1.0 / nd);

    Engine engine = make_engine(spec.seed, {});
    // x has p leading zeros that seed the recursion; u has m leading zeros.
    std::vector<double> x(p + total, 0.0);
    std::vector<double> u(m + total, 0.0);
    SimulatedPath out;
    out.u.reserve(spec.n);
    out.h.reserve(spec.n);

    for (std::size_t s = 0; s < total; ++s) {
        const long t = static_cast<long>(s) - static_cast<long>(spec.burn_in) + 1;
        const double h = t >= 1 ? spec.scale_at(static_cast<double>(t) / nd) : h_presample;
        double h2 = h * h;
        for (std::size_t i = 0; i < m; ++i) {
            const double lag = u[m + s - 1 - i];
            h2 += spec.arch_alpha[i] * lag * lag;
        }
        const double eps = spec.innovations.draw(engine);
        const double ut = std::sqrt(h2) * eps;
        double xt = ut;
        for (std::size_t i = 0; i < p; ++i) xt += spec.ar_coeffs[i] * x[p + s - 1 - i];
        if (!std::isfinite(ut) || !std::isfinite(xt)) {
            std::ostringstream os;
            os << "simulation diverged at t = " << t;
            throw SimulationDivergedError(os.str(), t);
        }
        u[m + s] = ut;
        x[p + s] = xt;
        if (t >= 1) {
            out.u.push_back(ut);
            out.h.push_back(h);
        }
    }
    // keep the last p values before t = 1 as presample
    std::vector<double> values(x.end() - static_cast<long>(spec.n + p), x.end());
    out.sample = SeriesSample(std::move(values), p);
    return out;
}

SeriesSample simulate(const DgpSpec& spec) { return simulate_path(spec).sample; }

std::vector<double> true_variance_path(const VarianceProfile& profile, std::size_t n) {
    std::vector<double> h2(n);
    for (std::size_t t = 1; t <= n; ++t) {
        const double h = profile(static_cast<double>(t) / static_cast<double>(n));
        h2[t - 1] = h * h;
    }
    return h2;
}

std::vector<double> true_variance_path(const DgpSpec& spec) {
    std::vector<double> h2(spec.n);
    for (std::size_t t = 1; t <= spec.n; ++t) {
        const double h = spec.scale_at(static_cast<double>(t) / static_cast<double>(spec.n));
        h2[t - 1] = h * h;
    }
    return h2;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const VarianceProfile& profile) {
    std::visit(Overloaded{
                   [&](const ConstantProfile& c) { j = {{"kind", "constant"}, {"level", c.level}}; },
                   [&](const SinusoidalProfile& s) {
                       j = {{"kind", "sinusoidal"}, {"c0", s.c0}, {"c1", s.c1}, {"freq", s.freq}, {"phase", s.phase}};
                   },
                   [&](const PiecewiseConstantProfile& pc) {
                       j = {{"kind", "piecewise_constant"}, {"breakpoints", pc.breakpoints}, {"levels", pc.levels}};
                   },
                   [&](const TableProfile& tb) {
                       j = {{"kind", "table"},
                            {"knots", tb.knots},
                            {"values", tb.values},
                            {"interpolation", "piecewise_linear"}};
                   },
               },
               profile.kind());
}

void from_json(const nlohmann::json& j, VarianceProfile& profile) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
        profile = VarianceProfile::constant(j.at("level").get<double>());
    } else if (kind == "sinusoidal") {
        profile = VarianceProfile::sinusoidal(j.at("c0").get<double>(), j.at("c1").get<double>(),
                                              j.at("freq").get<double>(), j.at("phase").get<double>());
    } else if (kind == "piecewise_constant") {
        profile = VarianceProfile::piecewise_constant(j.at("breakpoints").get<std::vector<double>>(),
                                                      j.at("levels").get<std::vector<double>>());
    } else if (kind == "table") {
        if (j.contains("interpolation") && j.at("interpolation").get<std::string>() != "piecewise_linear")
            throw DomainError("table profile supports only piecewise_linear interpolation");
        profile = VarianceProfile::table(j.at("knots").get<std::vector<double>>(),
                                         j.at("values").get<std::vector<double>>());
    } else {
        throw DomainError("unknown variance profile kind '" + kind + "'");
    }
}

void to_json(nlohmann::json& j, const InnovationSpec& spec) {
    if (spec.distribution == InnovationSpec::Distribution::student_t) {
        j = {{"distribution", "student_t"}, {"df", spec.df}};
    } else {
        j = {{"distribution", "standard_gaussian"}};
    }
}

void from_json(const nlohmann::json& j, InnovationSpec& spec) {
    const std::string d = j.at("distribution").get<std::string>();
    if (d == "standard_gaussian") {
        spec = InnovationSpec{};
    } else if (d == "student_t") {
        spec = InnovationSpec{InnovationSpec::Distribution::student_t, j.at("df").get<int>()};
    } else {
        throw DomainError("unknown innovation distribution '" + d + "'");
    }
    spec.validate();
}

void to_json(nlohmann::json& j, const DgpSpec& spec) {
    j = {{"ar_coeffs", spec.ar_coeffs}, {"profile", spec.profile},   {"arch_alpha", spec.arch_alpha},
         {"innovations", spec.innovations}, {"n", spec.n}, {"burn_in", spec.burn_in},
         {"seed", spec.seed}};
    if (spec.profile_scale == DgpSpec::ProfileScale::variance) j["profile_scale"] = "variance";
}

void from_json(const nlohmann::json& j, DgpSpec& spec) {
    DgpSpec out;
    out.ar_coeffs = j.value("ar_coeffs", std::vector<double>{});
    out.profile = j.at("profile").get<VarianceProfile>();
    out.arch_alpha = j.value("arch_alpha", std::vector<double>{});
    if (j.contains("innovations")) out.innovations = j.at("innovations").get<InnovationSpec>();
    const std::string scale = j.value("profile_scale", std::string("std_dev"));
    if (scale == "variance")
        out.profile_scale = DgpSpec::ProfileScale::variance;
    else if (scale != "std_dev")
        throw DomainError("profile_scale must be std_dev or variance, got '" + scale + "'");
    out.n = j.value("n", out.n);
    out.burn_in = j.value("burn_in", std::size_t{200});
    out.seed = j.value("seed", std::uint64_t{42});
    out.validate();
    spec = std::move(out);
}

}  // namespace tvarch
