#pragma once

// Fixed worker pool shared by the whole library. Work is always split by
// index, and callers merge results in index order, so output never depends on
// the number of workers.

#include <cstddef>
#include <functional>

namespace qsdlab::parallel {

// Worker count from QSDLAB_THREADS, else the hardware concurrency.
std::size_t default_worker_count();

std::size_t worker_count();

// Resizes the pool. 0 restores the default.
void set_worker_count(std::size_t n);

// Calls fn(i) for every i in [0, n). Calls made from inside a worker run
// inline. If several indices throw, the exception of the smallest one is
// rethrown after all work has finished.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace qsdlab::parallel
