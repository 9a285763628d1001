#pragma once

#include <cstddef>
#include <functional>

namespace hebert {

/// Process-wide worker count used by parallel_for. Defaults to 1.
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Iterations are partitioned into contiguous
/// chunks; each index is visited exactly once, so results never depend on
/// the worker count as long as body(i) only writes state owned by i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hebert
