#pragma once

#include <cstdint>
#include <random>

namespace drutil {

using Rng = std::mt19937_64;

// Independent generator for replicate `stream` under a master `seed`. The
// result depends only on (seed, stream), never on scheduling order.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5eedu};
    return Rng(seq);
}

}  // namespace drutil
