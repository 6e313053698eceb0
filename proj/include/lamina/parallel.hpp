/// @file parallel.hpp
/// @brief Slice-parallel execution helper.
///
/// Work is partitioned into fixed units (typically z-slices) regardless of
/// thread count, and any reductions are accumulated per unit and combined
/// serially in unit order by the caller. Kernels that only write disjoint
/// outputs therefore produce bitwise identical results for every thread
/// count, which the determinism tests assert.

#pragma once

#include <functional>

namespace lamina {

/// Runs fn(i) for i in [0, n) using up to `threads` worker threads.
/// fn must write only to locations owned by unit i.
void parallel_for_units(int n, int threads, const std::function<void(int)>& fn);

}  // namespace lamina
