#pragma once

#include <cstdint>

namespace tvarch::instrumentation {

/// Process-wide counters of expensive constructions. Used by tests to assert which
/// procedures refit the model and which reuse an existing fit.
struct Counters {
    std::uint64_t ar_fits = 0;         ///< OLS/GLS solves
    std::uint64_t variance_paths = 0;  ///< kernel variance path estimates
};

[[nodiscard]] Counters snapshot() noexcept;
void reset() noexcept;

void count_ar_fit() noexcept;
void count_variance_path() noexcept;

}  // namespace tvarch::instrumentation
