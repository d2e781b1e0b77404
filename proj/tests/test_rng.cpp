#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "xicor/bootstrap.hpp"
#include "xicor/rng.hpp"

using namespace xicor;

// Known-answer vectors published with Random123.
TEST(Philox, KnownAnswerZero) {
  const auto out = rng::philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = rng::philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  const auto out = rng::philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(CounterRng, UniformInHalfOpenUnitInterval) {
  const rng::CounterRng gen(11, rng::Domain::Data);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const double u = gen.uniform(3, i);
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
  }
}

TEST(CounterRng, DomainsAreIndependentStreams) {
  const rng::CounterRng a(5, rng::Domain::Data);
  const rng::CounterRng b(5, rng::Domain::Jitter);
  EXPECT_NE(a.uniform(0, 0), b.uniform(0, 0));
  EXPECT_EQ(a.uniform(0, 0), rng::CounterRng(5, rng::Domain::Data).uniform(0, 0));
}

TEST(DrawMultipliers, SameSeedSameMatrix) {
  const RowMatrix a = draw_multipliers(50, 7, 99, 1);
  const RowMatrix b = draw_multipliers(50, 7, 99, 4);
  EXPECT_TRUE((a.array() == b.array()).all());
  const RowMatrix c = draw_multipliers(50, 7, 100, 1);
  EXPECT_FALSE((a.array() == c.array()).all());
}

TEST(DrawMultipliers, EntryDependsOnlyOnPosition) {
  // Growing B or m must not disturb existing entries.
  const RowMatrix small = draw_multipliers(10, 4, 1, 1);
  const RowMatrix big = draw_multipliers(20, 9, 1, 1);
  EXPECT_TRUE((small.array() == big.topLeftCorner(10, 4).array()).all());
}

TEST(DrawMultipliers, StandardNormalMoments) {
  // 10^6 entries: 3-sigma bands are 0.003 for the mean and ~0.0042 for the variance.
  const RowMatrix eps = draw_multipliers(1000, 1000, 2024, 0);
  const double count = static_cast<double>(eps.size());
  const double mean = eps.sum() / count;
  const double var = (eps.array() - mean).square().sum() / (count - 1.0);
  EXPECT_NEAR(mean, 0.0, 0.004);
  EXPECT_NEAR(var, 1.0, 0.005);
}
