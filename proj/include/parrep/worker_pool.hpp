// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>

namespace parrep {

/// Fixed-size pool backed by a TBB task arena.
///
/// parallel_for() returns only after every index has run, so each call is a
/// barrier. With one thread the loop runs inline on the caller. If several
/// indices throw, the exception from the smallest index is rethrown, which
/// keeps failures independent of scheduling.
class WorkerPool {
  public:
    /// threads == 0 selects the hardware concurrency.
    explicit WorkerPool(std::size_t threads = 1);
    ~WorkerPool();
    WorkerPool(WorkerPool const&) = delete;
    WorkerPool& operator=(WorkerPool const&) = delete;

    std::size_t threads() const noexcept { return threads_; }

    void parallel_for(std::size_t n,
                      std::function<void(std::size_t)> const& body) const;

  private:
    std::size_t threads_;
    struct Arena;
    std::unique_ptr<Arena> arena_;
};

}  // namespace parrep
