#pragma once

// Reproducible random streams for Monte-Carlo replicates.
//
// Each replicate draws from its own mt19937_64 whose seed is derived from
// (seed, replicate) by SplitMix64, so results do not depend on how replicates
// are scheduled across threads.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace streamstat::sim {

using Rng = std::mt19937_64;

/// One SplitMix64 step: advances `state` and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for stream `stream` under master seed `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

Rng make_rng(std::uint64_t seed, std::uint64_t stream);

/// STREAMSTAT_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Calls body(i) for i in [0, n) on up to `workers` threads. The first
/// exception thrown by any call is rethrown after all threads finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t workers = 0);

}  // namespace streamstat::sim
