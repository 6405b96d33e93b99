#pragma once

#include <cstddef>
#include <functional>

namespace mdda {

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index is
/// processed exactly once; the first exception thrown is rethrown here.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace mdda
