#pragma once

#include <cstdint>
#include <random>

namespace lwucb {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of an independent stream `index` derived from `master`.
///
/// derive_seed(m, i) = mix64(m + (i + 1) * 0x9E3779B97F4A7C15). Each derived
/// seed depends only on (master, index), so adding trials or streams never
/// perturbs existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

} // namespace lwucb
