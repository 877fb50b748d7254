// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

namespace parrep {

/// Philox4x64-10 counter-based block cipher (Salmon et al., SC'11).
///
/// Distinct keys yield independent streams; the cipher is a bijection on the
/// 256-bit counter for a fixed key, so disjoint counter ranges never repeat.
struct Philox4x64 {
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept;
};

/// A reproducible random stream addressed by (seed, stream_id, substream).
///
/// The Philox key is (seed, stream_id). Counter word 0 is the block index
/// within the stream; word 1 carries the substream (e.g. a replication index).
/// One "draw" is one 64-bit word: uniform() consumes one draw and normal()
/// consumes exactly two. Output depends only on the address and the number of
/// draws taken, never on the thread that advances it.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id,
              std::uint64_t substream = 0) noexcept;

    std::uint64_t next_u64() noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;

    /// Uniform on (0, 1), never exactly 0 or 1.
    double uniform_open() noexcept;

    /// Standard normal via Box-Muller (cosine branch). Two draws, no caching.
    double normal() noexcept;

    /// Skips n draws.
    void discard(std::uint64_t n) noexcept;

    std::uint64_t draws() const noexcept { return draws_; }
    std::uint64_t seed() const noexcept { return key_[0]; }
    std::uint64_t stream_id() const noexcept { return key_[1]; }
    std::uint64_t substream() const noexcept { return substream_; }

  private:
    void refill() noexcept;

    Philox4x64::Key key_;
    std::uint64_t substream_;
    std::uint64_t draws_ = 0;
    Philox4x64::Counter buffer_{};
    std::uint64_t buffered_block_ = ~std::uint64_t{0};
};

/// Stream roles used throughout the engine: the reference chain owns stream 0
/// and replica j (1-based) owns stream j.
inline constexpr std::uint64_t kReferenceStream = 0;

}  // namespace parrep
