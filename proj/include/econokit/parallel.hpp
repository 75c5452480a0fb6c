#pragma once

#include <cstddef>
#include <functional>

namespace econokit {

/// Global cap on worker threads used by the grid searches. Defaults to 1.
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Runs body(i) for i in [0, count). Each index is visited exactly once; the
/// caller must write results into per-index slots so reductions stay ordered.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace econokit
