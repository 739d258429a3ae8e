#pragma once

#include <cstddef>
#include <functional>

namespace rigid {

/// Number of worker threads used when a caller passes 0.
int default_workers();

/// Runs body(i) for i in [0, count) on up to `workers` threads. Work is split
/// by index so results written per index do not depend on scheduling. If any
/// call throws, the exception from the smallest failing index is rethrown
/// after all workers finish.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace rigid
