// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/worker_pool.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#include <tbb/global_control.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace parrep {

// The global control lifts TBB's default cap at the hardware concurrency, so
// a pool gets the thread count it asks for even on a smaller machine.
struct WorkerPool::Arena {
    explicit Arena(int threads)
        : limit(tbb::global_control::max_allowed_parallelism,
                static_cast<std::size_t>(threads)),
          arena(threads) {}

    tbb::global_control limit;
    tbb::task_arena arena;
};

WorkerPool::WorkerPool(std::size_t threads)
    : threads_(threads == 0
                   ? std::max<std::size_t>(1, std::thread::hardware_concurrency())
                   : threads) {
    if (threads_ > 1) {
        arena_ = std::make_unique<Arena>(static_cast<int>(threads_));
    }
}

WorkerPool::~WorkerPool() = default;

void WorkerPool::parallel_for(
    std::size_t n, std::function<void(std::size_t)> const& body) const {
    if (!arena_ || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    arena_->arena.execute([&] {
        tbb::parallel_for(std::size_t{0}, n, [&](std::size_t i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    });
    for (auto const& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace parrep
