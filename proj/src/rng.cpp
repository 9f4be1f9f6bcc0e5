#include "tvarch/rng.hpp"

namespace tvarch {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t state = mix64(master);
    for (std::uint64_t step : path) {
        state = mix64(state ^ mix64(step + 0x632BE59BD9B4E019ULL));
    }
    return state;
}

Engine make_engine(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    const std::uint64_t s = derive_seed(master, path);
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
    return Engine(seq);
}

}  // namespace tvarch
