#pragma once

#include <cstddef>
#include <functional>

namespace ahlfors {

// Worker cap shared by every internally parallel operation. 0 means
// hardware concurrency.
void set_thread_limit(std::size_t n);
std::size_t thread_limit();

// Runs task(i) for i in [0, n). Tasks must write only to their own slots;
// callers reduce the slots in index order afterwards.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

}  // namespace ahlfors
