#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace sirus {

// Worker count: SIRUS_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

// Runs body(i) for i in [0, count). Work is split into contiguous chunks, one
// per worker. Calls made from inside a worker run serially on that worker.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Independent, reproducible stream seed for (base, stream, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

}  // namespace sirus
