#pragma once

#include <cstdint>
#include <functional>

namespace decal {

/// Number of worker threads to use. Reads DECAL_THREADS once (clamped to
/// [1, 256]); falls back to the hardware thread count when unset or invalid.
int thread_budget();

/// Runs fn(i) for i in [0, count) on up to thread_budget() threads.
/// Work is assigned by index, so any per-index output written by fn is
/// independent of scheduling; callers combine results in index order.
void parallel_for_index(std::int64_t count, const std::function<void(std::int64_t)>& fn);

/// Mixes (seed, stream) into an independent 64-bit RNG seed. Distinct
/// streams give unrelated sequences regardless of execution order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace decal
