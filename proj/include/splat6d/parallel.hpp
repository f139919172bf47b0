#pragma once

#include <utility>

#include <tbb/task_arena.h>

namespace splat6d {

/// Runs `fn` with TBB parallelism capped at `threads` (0: scheduler default).
template <typename Fn>
void with_threads(int threads, Fn&& fn) {
    if (threads <= 0) {
        std::forward<Fn>(fn)();
        return;
    }
    tbb::task_arena arena(threads);
    arena.execute(std::forward<Fn>(fn));
}

}  // namespace splat6d
