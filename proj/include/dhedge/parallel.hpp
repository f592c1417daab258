#pragma once

#include <cstddef>
#include <functional>

namespace dhedge {

/// Global worker cap shared by all modules; 0 means hardware concurrency.
/// Mirrors the DELAYED_HEDGE_THREADS environment variable.
void set_thread_cap(std::size_t n);
std::size_t thread_cap();

/// Runs body(i) for i in [0, count) on up to thread_cap() workers. Bodies
/// must write to disjoint state; iteration-to-result mapping is fixed, so
/// results are identical for any worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace dhedge
