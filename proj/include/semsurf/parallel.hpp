#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace semsurf {

/// Process-wide worker count. 0 = hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Runs fn(i) for i in [0, n) on the worker pool. Work items are assigned
/// dynamically but the caller must not rely on execution order; determinism
/// has to come from each item writing only to its own slot.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Splits [0, n) into fixed-size chunks and runs fn(begin, end) per chunk.
/// Chunking depends only on n and chunk_size, never on the worker count.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace semsurf
