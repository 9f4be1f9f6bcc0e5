#include "tvarch/kernelvar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tvarch/errors.hpp"
#include "tvarch/instrumentation.hpp"
#include "tvarch/io.hpp"

namespace tvarch {

double KernelSpec::operator()(double v) const noexcept {
    switch (kind) {
        case Kind::gaussian:
            return std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
        case Kind::triangular:
            return std::max(0.0, 1.0 - std::abs(v));
    }
    return 0.0;
}

std::string KernelSpec::name() const { return kind == Kind::gaussian ? "gaussian" : "triangular"; }

KernelSpec kernel_from_name(const std::string& name) {
    if (name == "gaussian") return {KernelSpec::Kind::gaussian};
    if (name == "triangular") return {KernelSpec::Kind::triangular};
    throw DomainError("unknown kernel '" + name + "'");
}

void validate_rule(const BandwidthRule& rule) {
    if (const auto* f = std::get_if<FixedBandwidth>(&rule)) {
        if (!(f->b > 0.0) || !std::isfinite(f->b)) throw DomainError("fixed bandwidth must be positive");
    } else if (const auto* cv = std::get_if<CrossValidation>(&rule)) {
        if (!(cv->c_min > 0.0) || !(cv->c_min < cv->c_max))
            throw DomainError("cross-validation range needs 0 < c_min < c_max");
        if (cv->grid_size < 5) throw DomainError("cross-validation grid_size must be >= 5");
    } else if (const auto* rot = std::get_if<RuleOfThumb>(&rule)) {
        if (!(rot->gamma > 0.0) || !std::isfinite(rot->gamma))
            throw DomainError("rule-of-thumb gamma must be positive");
    }
}

std::string rule_label(const BandwidthRule& rule) {
    std::ostringstream os;
    if (const auto* f = std::get_if<FixedBandwidth>(&rule)) {
        os << "fixed(" << f->b << ")";
    } else if (std::holds_alternative<CrossValidation>(rule)) {
        os << "cv";
    } else {
        const auto& rot = std::get<RuleOfThumb>(rule);
        os << (rot.scale == RuleOfThumb::Scale::residual_variance ? "rotu(" : "rot(") << rot.gamma << ")";
    }
    return os.str();
}

namespace {

/// K(d / (n b)) for d = 0..n-1 with the d = 0 entry zeroed (leave-one-out).
std::vector<double> kernel_table(std::size_t n, double b, const KernelSpec& kernel) {
    std::vector<double> table(n);
    const double scale = 1.0 / (static_cast<double>(n) * b);
    table[0] = 0.0;
    for (std::size_t d = 1; d < n; ++d) table[d] = kernel(static_cast<double>(d) * scale);
    return table;
}

/// Unfloored leave-one-out smooth of `s`.
std::vector<double> smooth(std::span<const double> s, double b, const KernelSpec& kernel) {
    const std::size_t n = s.size();
    const std::vector<double> table = kernel_table(n, b, kernel);
    std::size_t reach = n - 1;
    while (reach > 0 && table[reach] == 0.0) --reach;
    if (reach == 0) {
        std::ostringstream os;
        os << "kernel window degenerate at bandwidth " << b << " (all weights vanish)";
        throw DegenerateWindowError(os.str());
    }
    std::vector<double> out(n);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t lo = t >= reach ? t - reach : 0;
        const std::size_t hi = std::min(n - 1, t + reach);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = lo; i <= hi; ++i) {
            const double k = table[i > t ? i - t : t - i];
            num += k * s[i];
            den += k;
        }
        if (!(den > 0.0)) {
            std::ostringstream os;
            os << "kernel window degenerate at t = " << t + 1 << ", bandwidth " << b;
            throw DegenerateWindowError(os.str());
        }
        out[t] = num / den;
    }
    return out;
}

double mean_of(std::span<const double> s) {
    double acc = 0.0;
    for (double v : s) acc += v;
    return acc / static_cast<double>(s.size());
}

}  // namespace

std::vector<double> smoothing_weights(std::size_t n, std::size_t t, double b, const KernelSpec& kernel) {
    if (n < 2) throw DomainError("smoothing_weights needs n >= 2");
    if (t < 1 || t > n) throw DomainError("smoothing_weights: t must lie in 1..n");
    if (!(b > 0.0)) throw DomainError("bandwidth must be positive");
    const double scale = 1.0 / (static_cast<double>(n) * b);
    std::vector<double> w(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        if (i == t) continue;
        const double d = static_cast<double>(t) - static_cast<double>(i);
        w[i - 1] = kernel(d * scale);
        total += w[i - 1];
    }
    if (!(total > 0.0)) {
        std::ostringstream os;
        os << "kernel window degenerate at t = " << t << ", bandwidth " << b;
        throw DegenerateWindowError(os.str());
    }
    for (double& v : w) v /= total;
    return w;
}

VariancePathEstimate estimate_variance_path(std::span<const double> squared_resid, double b,
                                            const KernelSpec& kernel, const BandwidthRule& rule) {
    if (squared_resid.size() < 3) throw DomainError("variance path estimation needs n >= 3");
    if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("bandwidth must be positive");
    const double mean = mean_of(squared_resid);
    if (!(mean > 0.0)) throw DegenerateInputError("squared residuals are identically zero");
    instrumentation::count_variance_path();

    VariancePathEstimate out;
    out.h2 = smooth(squared_resid, b, kernel);
    out.bandwidth = b;
    out.kernel = kernel;
    out.rule = rule;
    const double floor = kVarianceFloor * mean;
    for (double& v : out.h2) {
        if (v < floor) {
            v = floor;
            out.floor_applied = true;
        }
    }
    return out;
}

double cv_criterion(std::span<const double> squared_resid, double b, const KernelSpec& kernel) {
    const std::vector<double> path = smooth(squared_resid, b, kernel);
    double acc = 0.0;
    for (std::size_t t = 0; t < path.size(); ++t) {
        const double e = path[t] - squared_resid[t];
        acc += e * e;
    }
    return acc;
}

std::vector<double> cv_grid(std::size_t n, double c_min, double c_max, std::size_t grid_size) {
    validate_rule(CrossValidation{c_min, c_max, grid_size});
    const double base = std::pow(static_cast<double>(n), -0.2);
    const double lo = std::log(c_min * base);
    const double hi = std::log(c_max * base);
    std::vector<double> grid(grid_size);
    for (std::size_t k = 0; k < grid_size; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(grid_size - 1);
        grid[k] = std::exp(lo + frac * (hi - lo));
    }
    grid.front() = c_min * base;
    grid.back() = c_max * base;
    return grid;
}

double cv_bandwidth(std::span<const double> squared_resid, const KernelSpec& kernel, double c_min,
                    double c_max, std::size_t grid_size) {
    if (squared_resid.size() < 3) throw DomainError("cross-validation needs n >= 3");
    const std::vector<double> grid = cv_grid(squared_resid.size(), c_min, c_max, grid_size);
    double best_b = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (double b : grid) {
        double crit = 0.0;
        try {
            crit = cv_criterion(squared_resid, b, kernel);
        } catch (const DegenerateWindowError&) {
            continue;
        }
        // strict comparison keeps the smaller bandwidth on ties (grid is ascending)
        if (crit < best) {
            best = crit;
            best_b = b;
        }
    }
    if (!(best_b > 0.0)) throw SelectionFailedError("cross-validation failed: every grid bandwidth is degenerate");
    return best_b;
}

double rot_bandwidth(std::span<const double> squared_resid, double gamma, RuleOfThumb::Scale scale) {
    const std::size_t n = squared_resid.size();
    if (n < 2) throw DomainError("rule-of-thumb bandwidth needs n >= 2");
    if (!(gamma > 0.0)) throw DomainError("rule-of-thumb gamma must be positive");
    const double mean = mean_of(squared_resid);
    double var = mean;
    if (scale == RuleOfThumb::Scale::squared_residual_variance) {
        var = 0.0;
        for (double v : squared_resid) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
    }
    if (!(var > 0.0))
        throw DegenerateInputError(scale == RuleOfThumb::Scale::squared_residual_variance
                                       ? "squared residuals have zero variance"
                                       : "residuals vanish");
    return gamma * std::pow(var / static_cast<double>(n), 0.2);
}

double select_bandwidth(std::span<const double> squared_resid, const KernelSpec& kernel,
                        const BandwidthRule& rule) {
    validate_rule(rule);
    if (const auto* f = std::get_if<FixedBandwidth>(&rule)) return f->b;
    if (const auto* cv = std::get_if<CrossValidation>(&rule))
        return cv_bandwidth(squared_resid, kernel, cv->c_min, cv->c_max, cv->grid_size);
    const auto& rot = std::get<RuleOfThumb>(rule);
    return rot_bandwidth(squared_resid, rot.gamma, rot.scale);
}

void to_json(nlohmann::json& j, const BandwidthRule& rule) {
    if (const auto* f = std::get_if<FixedBandwidth>(&rule)) {
        j = {{"rule", "fixed"}, {"b", f->b}};
    } else if (const auto* cv = std::get_if<CrossValidation>(&rule)) {
        j = {{"rule", "cross_validation"}, {"c_min", cv->c_min}, {"c_max", cv->c_max}, {"grid_size", cv->grid_size}};
    } else {
        const auto& rot = std::get<RuleOfThumb>(rule);
        j = {{"rule", "rule_of_thumb"},
             {"gamma", rot.gamma},
             {"scale", rot.scale == RuleOfThumb::Scale::residual_variance ? "residual_variance"
                                                                           : "squared_residual_variance"}};
    }
}

void from_json(const nlohmann::json& j, BandwidthRule& rule) {
    const std::string name = j.at("rule").get<std::string>();
    if (name == "fixed") {
        rule = FixedBandwidth{j.at("b").get<double>()};
    } else if (name == "cross_validation") {
        CrossValidation cv;
        cv.c_min = j.value("c_min", cv.c_min);
        cv.c_max = j.value("c_max", cv.c_max);
        cv.grid_size = j.value("grid_size", cv.grid_size);
        rule = cv;
    } else if (name == "rule_of_thumb") {
        RuleOfThumb rot{j.at("gamma").get<double>()};
        const std::string scale = j.value("scale", std::string{"squared_residual_variance"});
        if (scale == "residual_variance")
            rot.scale = RuleOfThumb::Scale::residual_variance;
        else if (scale != "squared_residual_variance")
            throw DomainError("unknown rule-of-thumb scale '" + scale + "'");
        rule = rot;
    } else {
        throw DomainError("unknown bandwidth rule '" + name + "'");
    }
    validate_rule(rule);
}

nlohmann::json path_metadata_json(const VariancePathEstimate& path) {
    return {{"bandwidth", path.bandwidth},
            {"kernel", path.kernel.name()},
            {"rule", nlohmann::json(path.rule)},
            {"floor_applied", path.floor_applied}};
}

std::string path_csv(const VariancePathEstimate& path) {
    std::string out = "t,h2\n";
    for (std::size_t t = 0; t < path.h2.size(); ++t) {
        out += std::to_string(t + 1);
        out += ',';
        out += format_number(path.h2[t]);
        out += '\n';
    }
    return out;
}

}  // namespace tvarch
