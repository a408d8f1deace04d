#pragma once

#include <cstddef>
#include <functional>

namespace kdlab {

/// Process-wide worker count used by parallel loops. 1 means serial.
void set_num_threads(int n);
int num_threads();

// Runs body(i) for i in [begin, end). Each index must write only to its own
// output slot; results are then independent of the worker count.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body);

}  // namespace kdlab
