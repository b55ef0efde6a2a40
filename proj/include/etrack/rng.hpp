#pragma once

#include <cstdint>
#include <random>

namespace etrack {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; used to derive decorrelated seeds for independent streams.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent stream number `stream` derived from `master_seed`. The same pair always
/// yields the same generator state, so a Monte-Carlo run does not depend on which
/// worker thread executes it.
[[nodiscard]] inline Rng make_stream(std::uint64_t master_seed, std::uint64_t stream) {
    const std::uint64_t a = splitmix64(master_seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

}  // namespace etrack
