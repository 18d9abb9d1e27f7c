#pragma once

#include <cstdint>
#include <random>

namespace epifield {

/// Engine for one reproducible stream, keyed by (seed, stream, index).
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t index = 0);

}  // namespace epifield
