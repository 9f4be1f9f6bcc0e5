#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tvarch {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a master seed and a path of stream indices,
/// e.g. derive_seed(master, {n, replication}). The result depends only on its arguments,
/// so replicate streams do not depend on scheduling.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master,
                                        std::initializer_list<std::uint64_t> path) noexcept;

[[nodiscard]] Engine make_engine(std::uint64_t master, std::initializer_list<std::uint64_t> path);

}  // namespace tvarch
