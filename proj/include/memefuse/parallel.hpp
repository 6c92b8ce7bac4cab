#pragma once

#include <cstddef>
#include <functional>

namespace memefuse {

/// Worker count: MEMEFUSE_THREADS when set to a positive integer (capped at
/// hardware concurrency), otherwise hardware concurrency.
unsigned worker_count();

/// Runs body(chunk) for chunk in [0, chunks) on up to worker_count() threads.
/// Chunks must be independent; results are identical for any thread count.
void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& body);

} // namespace memefuse
