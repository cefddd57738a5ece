#pragma once

#include <cstddef>
#include <functional>

// Deterministic worker parallelism. Items must be independent and write only
// to preallocated, disjoint slots; then results cannot depend on the thread
// count or the schedule.

namespace dfi {

void set_thread_count(unsigned n);
unsigned thread_count();

// Runs fn(0..n-1); serial when thread_count() == 1. The first exception
// thrown by any item is rethrown to the caller after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dfi
