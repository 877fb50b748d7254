// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/rng.hpp"

#include <cmath>
#include <set>

#include <gtest/gtest.h>

namespace parrep {
namespace {

TEST(Philox4x64, ZeroKeyZeroCounterKnownAnswer) {
    auto const out = Philox4x64::block({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out[0], 0x16554d9eca36314cULL);
    EXPECT_EQ(out[1], 0xdb20fe9d672d0fdcULL);
    EXPECT_EQ(out[2], 0xd7e772cee186176bULL);
    EXPECT_EQ(out[3], 0x7e68b68aec7ba23bULL);
}

// numpy.random.Philox increments its counter before each block, so its first
// outputs for counter c are block(c + 1).
TEST(Philox4x64, MatchesNumpyZeroKey) {
    auto const b1 = Philox4x64::block({1, 0, 0, 0}, {0, 0});
    EXPECT_EQ(b1[0], 0x02f4ba6408e4d89bULL);
    EXPECT_EQ(b1[1], 0x3dd62b0b9ca8c5b2ULL);
    EXPECT_EQ(b1[2], 0x1c8667a55d902e79ULL);
    EXPECT_EQ(b1[3], 0x907d7a052fd5b4dcULL);
    auto const b2 = Philox4x64::block({2, 0, 0, 0}, {0, 0});
    EXPECT_EQ(b2[0], 0x809bf322883987c3ULL);
    EXPECT_EQ(b2[1], 0x471128b9e807f7ddULL);
    EXPECT_EQ(b2[2], 0xf250ba0dbec065b7ULL);
    EXPECT_EQ(b2[3], 0xfc6ed66767a457bcULL);
}

TEST(Philox4x64, MatchesNumpyNonzeroKey) {
    auto const b = Philox4x64::block({6, 0, 0, 0},
                                     {0x0123456789abcdefULL, 0xfedcba9876543210ULL});
    EXPECT_EQ(b[0], 0xd0bba8f1bcf6f692ULL);
    EXPECT_EQ(b[1], 0xe3473c643c54e623ULL);
    EXPECT_EQ(b[2], 0xeded168e9338e0d9ULL);
    EXPECT_EQ(b[3], 0xc20bc8d6143b0f29ULL);
}

TEST(RngStream, WordsFollowBlocksInOrder) {
    RngStream rng(0, 0);
    for (std::uint64_t block = 0; block < 3; ++block) {
        auto const expected = Philox4x64::block({block, 0, 0, 0}, {0, 0});
        for (auto word : expected) EXPECT_EQ(rng.next_u64(), word);
    }
    EXPECT_EQ(rng.draws(), 12u);
}

TEST(RngStream, SubstreamOccupiesCounterWordOne) {
    RngStream rng(5, 3, 9);
    auto const expected = Philox4x64::block({0, 9, 0, 0}, {5, 3});
    EXPECT_EQ(rng.next_u64(), expected[0]);
    EXPECT_EQ(rng.seed(), 5u);
    EXPECT_EQ(rng.stream_id(), 3u);
    EXPECT_EQ(rng.substream(), 9u);
}

TEST(RngStream, SameAddressSameSequence) {
    RngStream a(42, 7, 1), b(42, 7, 1);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, DistinctAddressesDiffer) {
    std::set<std::uint64_t> first;
    for (std::uint64_t s = 0; s < 4; ++s) {
        for (std::uint64_t id = 0; id < 4; ++id) {
            for (std::uint64_t sub = 0; sub < 4; ++sub) {
                first.insert(RngStream(s, id, sub).next_u64());
            }
        }
    }
    EXPECT_EQ(first.size(), 64u);
}

TEST(RngStream, DiscardSkipsExactlyNDraws) {
    RngStream a(1, 2), b(1, 2);
    for (int i = 0; i < 7; ++i) a.next_u64();
    b.discard(7);
    EXPECT_EQ(a.draws(), b.draws());
    for (int i = 0; i < 9; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, UniformRangesAndBitDepth) {
    RngStream rng(3, 0);
    for (int i = 0; i < 100000; ++i) {
        double const u = rng.uniform();
        double const v = rng.uniform_open();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        ASSERT_GT(v, 0.0);
        ASSERT_LT(v, 1.0);
        ASSERT_EQ(std::ldexp(u, 53), std::floor(std::ldexp(u, 53)));
    }
}

TEST(RngStream, UniformIsTopBitsOfWord) {
    RngStream a(8, 1), b(8, 1);
    auto const w = a.next_u64();
    EXPECT_EQ(b.uniform(), static_cast<double>(w >> 11) * 0x1p-53);
}

TEST(RngStream, NormalConsumesTwoDrawsWithoutCaching) {
    RngStream rng(11, 4);
    rng.normal();
    EXPECT_EQ(rng.draws(), 2u);
    rng.normal();
    rng.normal();
    EXPECT_EQ(rng.draws(), 6u);
}

TEST(RngStream, NormalMatchesBoxMullerCosineBranch) {
    RngStream a(13, 2), b(13, 2);
    double const u1 = (static_cast<double>(a.next_u64() >> 11) + 0.5) * 0x1p-53;
    double const u2 = static_cast<double>(a.next_u64() >> 11) * 0x1p-53;
    double const expected =
        std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    EXPECT_DOUBLE_EQ(b.normal(), expected);
}

TEST(RngStream, NormalMoments) {
    RngStream rng(17, 0);
    constexpr int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double const z = rng.normal();
        sum += z;
        sq += z * z;
    }
    // 5 standard errors.
    EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(double(n)));
    EXPECT_NEAR(sq / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

}  // namespace
}  // namespace parrep
