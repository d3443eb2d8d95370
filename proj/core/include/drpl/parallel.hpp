#pragma once

#include <cstddef>
#include <functional>

namespace drpl {

/// Caps the number of worker threads used by library-internal loops.
/// 0 restores the default (hardware concurrency).
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs body(i) for i in [0, count). Work is split into contiguous chunks;
/// callers write results into per-index slots so output never depends on
/// the schedule. Exceptions from workers are rethrown on the calling thread
/// (the one with the lowest index wins).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace drpl
