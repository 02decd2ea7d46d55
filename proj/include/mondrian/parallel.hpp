#pragma once

#include <cstddef>
#include <functional>

namespace mondrian {

/// Environment variable consulted for the default worker count.
inline constexpr const char* kThreadsEnvVar = "MONDRIAN_THREADS";

/// Worker count from MONDRIAN_THREADS, else the hardware concurrency (at least 1).
unsigned default_thread_count();

/// Runs body(i) for i in [0, count) on up to `threads` workers.
///
/// Indices are handed out dynamically, so body must only write to slots owned
/// by its index. threads == 0 means default_thread_count(). The first
/// exception thrown by any body is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace mondrian
