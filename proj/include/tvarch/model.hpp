#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tvarch/rng.hpp"

namespace tvarch {

// ---------------------------------------------------------------------------
// Variance profiles g(r), r in (0,1]. The innovation scale is h_t = g(t/n).
// ---------------------------------------------------------------------------

struct ConstantProfile {
    double level = 1.0;
};

/// g(r) = c0 - c1 * sin(freq * r + phase) * (1 + r)
struct SinusoidalProfile {
    double c0 = 30.0;
    double c1 = 10.0;
    double freq = 0.0;
    double phase = 0.0;
};

/// Step function: levels[k] on (breakpoints[k-1], breakpoints[k]].
struct PiecewiseConstantProfile {
    std::vector<double> breakpoints;
    std::vector<double> levels;
};

/// Piecewise-linear interpolation through (knots[i], values[i]), clamped outside the knots.
struct TableProfile {
    std::vector<double> knots;
    std::vector<double> values;
};

class VarianceProfile {
public:
    using Kind = std::variant<ConstantProfile, SinusoidalProfile, PiecewiseConstantProfile,
                              TableProfile>;

    /// Validates the invariants (positivity on a 10^4 grid, finite sup, matching lengths).
    /// Throws DomainError on violation.
    explicit VarianceProfile(Kind kind);
    VarianceProfile() : VarianceProfile(ConstantProfile{}) {}

    [[nodiscard]] static VarianceProfile constant(double level);
    [[nodiscard]] static VarianceProfile sinusoidal(double c0, double c1, double freq, double phase);
    /// g(r) = 30 - 10 sin(1.5 pi r + pi/6)(1 + r)
    [[nodiscard]] static VarianceProfile default_sinusoid();
    [[nodiscard]] static VarianceProfile piecewise_constant(std::vector<double> breakpoints,
                                                            std::vector<double> levels);
    [[nodiscard]] static VarianceProfile table(std::vector<double> knots, std::vector<double> values);

    /// g(r). Throws DomainError unless 0 < r <= 1.
    [[nodiscard]] double operator()(double r) const;

    [[nodiscard]] const Kind& kind() const noexcept { return kind_; }
    [[nodiscard]] bool is_constant() const noexcept;
    /// Points in (0,1) where g is not smooth; quadrature splits its range there.
    [[nodiscard]] std::vector<double> singular_points() const;
    [[nodiscard]] std::string kind_name() const;

private:
    Kind kind_;
};

[[nodiscard]] double eval_profile(const VarianceProfile& profile, double r);

// ---------------------------------------------------------------------------
// Innovations and the data-generating process
// ---------------------------------------------------------------------------

struct InnovationSpec {
    enum class Distribution { standard_gaussian, student_t };

    Distribution distribution = Distribution::standard_gaussian;
    /// Degrees of freedom for student_t; must be >= 9 so that E|eps|^s < inf for some s > 8.
    int df = 0;

    void validate() const;
    /// One draw with zero mean and unit variance.
    [[nodiscard]] double draw(Engine& engine) const;
};

struct DgpSpec {
    /// How the profile enters the model: h_t = g(t/n) (std_dev) or h_t^2 = g(t/n) (variance).
    enum class ProfileScale { std_dev, variance };

    std::vector<double> ar_coeffs;
    VarianceProfile profile = VarianceProfile::constant(1.0);
    ProfileScale profile_scale = ProfileScale::std_dev;
    std::vector<double> arch_alpha;
    InnovationSpec innovations;
    std::size_t n = 500;
    std::size_t burn_in = 200;
    std::uint64_t seed = 42;

    /// Throws DomainError if the AR polynomial is not stable, an alpha is negative, or
    /// n < 2 (p + arch_alpha.size() + 1).
    void validate() const;
    /// Unconditional scale h at rescaled time r.
    [[nodiscard]] double scale_at(double r) const;
};

/// Spectral radius of the AR companion matrix; 0 for an empty coefficient vector.
[[nodiscard]] double companion_spectral_radius(std::span<const double> ar_coeffs);

/// Observed values x_{-p+1}, ..., x_0, x_1, ..., x_n.
class SeriesSample {
public:
    SeriesSample() = default;
    /// `values` holds the p presample values followed by the n observations.
    /// Throws DomainError if values.size() <= p or any value is non-finite.
    SeriesSample(std::vector<double> values, std::size_t p);

    [[nodiscard]] std::size_t p() const noexcept { return p_; }
    [[nodiscard]] std::size_t n() const noexcept { return values_.size() - p_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    /// x_1, ..., x_n.
    [[nodiscard]] std::span<const double> observations() const noexcept {
        return std::span<const double>(values_).subspan(p_);
    }
    /// x_t for t in [-p+1, n].
    [[nodiscard]] double x(long t) const { return values_[static_cast<std::size_t>(t + static_cast<long>(p_) - 1)]; }

    /// Same raw values re-split with a different AR order (the first p values become presample).
    [[nodiscard]] SeriesSample with_order(std::size_t p) const;

private:
    std::vector<double> values_;
    std::size_t p_ = 0;
};

struct SimulatedPath {
    SeriesSample sample;
    std::vector<double> u;  ///< innovations u_1..u_n
    std::vector<double> h;  ///< unconditional scales h_1..h_n
};

/// Runs the AR(p) recursion driven by u_t = htilde_t eps_t, htilde_t^2 = h_t^2 + sum alpha_i u_{t-i}^2.
/// Burn-in steps use the scale at r = 1/n; the recursion starts from zeros and burn-in output is discarded.
/// The returned sample has order p = ar_coeffs.size(); its presample values are the last burn-in values.
[[nodiscard]] SimulatedPath simulate_path(const DgpSpec& spec);
[[nodiscard]] SeriesSample simulate(const DgpSpec& spec);

/// True variance path h_t^2 = g(t/n)^2, t = 1..n.
[[nodiscard]] std::vector<double> true_variance_path(const VarianceProfile& profile, std::size_t n);
/// True variance path of a DGP, honoring its profile scale.
[[nodiscard]] std::vector<double> true_variance_path(const DgpSpec& spec);

// JSON (tagged-union profile encoding {"kind": ...}).
void to_json(nlohmann::json& j, const VarianceProfile& profile);
void from_json(const nlohmann::json& j, VarianceProfile& profile);
void to_json(nlohmann::json& j, const InnovationSpec& spec);
void from_json(const nlohmann::json& j, InnovationSpec& spec);
void to_json(nlohmann::json& j, const DgpSpec& spec);
void from_json(const nlohmann::json& j, DgpSpec& spec);

}  // namespace tvarch
