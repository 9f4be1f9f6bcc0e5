#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tvarch/model.hpp"

namespace tvarch::testing {

inline SeriesSample null_sample(std::vector<double> ar, const VarianceProfile& g, std::size_t n, std::uint64_t seed) {
    DgpSpec spec;
    spec.ar_coeffs = std::move(ar);
    spec.profile = g;
    spec.n = n;
    spec.seed = seed;
    return simulate(spec);
}

inline double median(std::vector<double> v) {
    const std::size_t k = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(k), v.end());
    if (v.size() % 2) return v[k];
    const double hi = v[k];
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<long>(k)));
}

/// Empirical quantile by the inverse ECDF (type 1).
inline double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    return v[std::clamp<std::size_t>(k, 1, v.size()) - 1];
}

/// sup |F_n - F| for a continuous reference CDF.
inline double ks_distance(std::vector<double> v, const std::function<double(double)>& cdf) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = cdf(v[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Two-sample sup |F_a - F_b|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / double(a.size()) - double(j) / double(b.size())));
    }
    return d;
}

}  // namespace tvarch::testing
