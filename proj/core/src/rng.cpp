#include "lwucb/rng.hpp"

namespace lwucb {

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    return mix64(master + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

} // namespace lwucb
