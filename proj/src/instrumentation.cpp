#include "tvarch/instrumentation.hpp"

#include <atomic>

namespace tvarch::instrumentation {

namespace {
std::atomic<std::uint64_t> g_ar_fits{0};
std::atomic<std::uint64_t> g_variance_paths{0};
}  // namespace

Counters snapshot() noexcept {
    return {g_ar_fits.load(std::memory_order_relaxed), g_variance_paths.load(std::memory_order_relaxed)};
}

void reset() noexcept {
    g_ar_fits.store(0, std::memory_order_relaxed);
    g_variance_paths.store(0, std::memory_order_relaxed);
}

void count_ar_fit() noexcept { g_ar_fits.fetch_add(1, std::memory_order_relaxed); }

void count_variance_path() noexcept { g_variance_paths.fetch_add(1, std::memory_order_relaxed); }

}  // namespace tvarch::instrumentation
