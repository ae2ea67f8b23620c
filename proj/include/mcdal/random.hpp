#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace mcdal {

/// The engine behind every stochastic step. mt19937_64's output sequence is
/// fixed by the standard; distributions come from Boost.Random so draws are
/// identical across standard-library implementations.
using Rng = std::mt19937_64;

/// Mixes a base seed with a path of stream tags into an independent
/// sub-seed (splitmix64 finalizer chain).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

/// Stable 64-bit hash (FNV-1a) for naming RNG streams by string.
std::uint64_t stable_hash(std::string_view text);

/// Fisher-Yates shuffle.
void shuffle_ids(std::vector<std::string>& ids, Rng& rng);

/// Uniform sample of `count` distinct indices from [0, n), in draw order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, Rng& rng);

}  // namespace mcdal
