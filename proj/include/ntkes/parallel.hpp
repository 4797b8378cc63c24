#pragma once

#include <cstddef>
#include <functional>

namespace ntkes {

/// Worker threads used by the parallel maps in this library (default 1).
unsigned thread_count() noexcept;
void set_thread_count(unsigned threads) noexcept;

/// Calls body(task) for every task in [0, tasks).
///
/// Tasks are handed out in contiguous blocks; results must be written to
/// task-owned storage so the outcome never depends on the thread count.
void parallel_for(std::size_t tasks, const std::function<void(std::size_t)>& body);

}  // namespace ntkes
