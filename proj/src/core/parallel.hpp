#pragma once

#include <cstdint>
#include <functional>

namespace mamsr {

// Worker count for parallel_for. Defaults to the hardware concurrency,
// bounded by the MAMSR_THREADS environment variable when set.
int worker_count();

// Runs body(begin, end) over a static partition of [0, count). Each chunk is
// processed sequentially by one worker, so results are bit-identical for any
// worker count as long as chunks write disjoint outputs.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t, std::int64_t)>& body);

// Per-index convenience wrapper.
template <typename F>
void parallel_for_each(std::int64_t count, F&& f) {
    parallel_for(count, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) f(i);
    });
}

} // namespace mamsr
