#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "xicor/bootstrap.hpp"
#include "xicor/simlab.hpp"

using namespace xicor;

namespace {

ConcomitantRanks ranks_from(std::vector<std::vector<double>> cols) {
  ConcomitantRanks u{Eigen::MatrixXd(static_cast<Eigen::Index>(cols[0].size()), static_cast<Eigen::Index>(cols.size()))};
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < cols[j].size(); ++i) {
      u.u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
    }
  }
  return u;
}

ConcomitantRanks random_ranks(std::size_t n, std::size_t p, std::mt19937_64& gen) {
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  for (auto& c : cols) {
    for (std::size_t i = 0; i < n; ++i) c[i] = static_cast<double>(i + 1) / static_cast<double>(n);
    std::shuffle(c.begin(), c.end(), gen);
  }
  return ranks_from(cols);
}

RowMatrix row_matrix(std::initializer_list<std::initializer_list<double>> rows) {
  RowMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

std::vector<std::size_t> iota_set(std::size_t p) {
  std::vector<std::size_t> s(p);
  std::iota(s.begin(), s.end(), std::size_t{0});
  return s;
}

}  // namespace

TEST(ComputeWhat, BoundaryAndMidpointValues) {
  const auto w = compute_what(ranks_from({{1.0, 1.0, 0.5, 0.5}}));
  EXPECT_DOUBLE_EQ(w(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(w(2, 0), 0.5);
}

TEST(ComputeWhat, TopRankFollowedByBottomRank) {
  const double n = 5.0;
  const auto w = compute_what(ranks_from({{1.0, 1.0 / n, 0.6, 0.8, 0.4}}));
  EXPECT_DOUBLE_EQ(w(0, 0), 2.0 - 3.0 * (1.0 - 1.0 / n));
  EXPECT_NEAR(w(0, 0), -0.4, 1e-15);
}

TEST(ComputeWhat, EntriesBoundedByTwo) {
  std::mt19937_64 gen(3);
  for (std::size_t n : {3u, 4u, 10u, 57u}) {
    const auto w = compute_what(random_ranks(n, 20, gen));
    EXPECT_EQ(w.rows(), static_cast<Eigen::Index>(n - 1));
    EXPECT_LE(w.cwiseAbs().maxCoeff(), 2.0);
  }
}

TEST(BlockScheme, TenObservationsBlockTwo) {
  const auto s = build_block_scheme(10, 2);
  EXPECT_EQ(s.m, 3u);
  EXPECT_EQ(s.r, 0u);
  // 1-based big blocks {1-2, 4-5, 7-8}, small indices {3, 6, 9}.
  const std::vector<std::pair<std::size_t, std::size_t>> blocks{{0, 2}, {3, 5}, {6, 8}};
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(s.block_begin(k), blocks[k].first);
    EXPECT_EQ(s.block_end(k), blocks[k].second);
    EXPECT_EQ(s.small_index(k) + 1, 3 * (k + 1));
  }
}

TEST(BlockScheme, CountsAndBoundary) {
  const auto s = build_block_scheme(500, 3);
  EXPECT_EQ(s.m, 124u);
  EXPECT_EQ(s.r, 3u);
  const auto edge = build_block_scheme(4, 2);
  EXPECT_EQ(edge.m, 1u);
  EXPECT_EQ(edge.r, 0u);
  try {
    build_block_scheme(4, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BlockTooLarge);
  }
}

TEST(BlockScheme, InvariantsOverGrid) {
  for (std::size_t n = 3; n <= 60; ++n) {
    for (std::size_t q = 1; q + 1 <= n - 1; ++q) {
      const auto s = build_block_scheme(n, q);
      ASSERT_GE(s.m, 1u);
      ASSERT_LT(s.r, q + 1);
      ASSERT_EQ(s.m * (q + 1) + s.r, n - 1);
      for (std::size_t k = 0; k + 1 < s.m; ++k) ASSERT_EQ(s.block_begin(k + 1) - s.block_end(k), 1u);
    }
  }
}

TEST(BlockSums, UnitBlocksPickEveryOtherTerm) {
  std::mt19937_64 gen(5);
  const auto w = compute_what(random_ranks(11, 3, gen));
  const auto a = block_sums(w, build_block_scheme(11, 1));
  ASSERT_EQ(a.rows(), 5);
  for (Eigen::Index k = 0; k < 5; ++k) {
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_EQ(a(k, j), w(2 * k, j));
  }
}

TEST(BlockSums, ConstantInput) {
  const Eigen::MatrixXd w = Eigen::MatrixXd::Constant(20, 2, 0.75);
  const auto a = block_sums(w, build_block_scheme(21, 4));
  EXPECT_TRUE((a.array() == 3.0).all());
}

TEST(BlockSums, MatchesIndexFormulaOracle) {
  std::mt19937_64 gen(7);
  for (std::size_t n : {10u, 11u, 37u, 100u}) {
    for (std::size_t q = 1; q + 1 <= n - 1; q += 2) {
      const auto w = compute_what(random_ranks(n, 4, gen));
      const auto a = block_sums(w, build_block_scheme(n, q));
      const auto expected = oracle::brute_force_block_sums(w, n, q);
      ASSERT_EQ(a.rows(), expected.rows());
      ASSERT_LE((a - expected).cwiseAbs().maxCoeff(), 1e-12) << "n=" << n << " q=" << q;
      ASSERT_LE(a.cwiseAbs().maxCoeff(), 2.0 * static_cast<double>(q));
    }
  }
}

TEST(BootstrapStatistics, ZeroMultipliersGiveZero) {
  std::mt19937_64 gen(9);
  const auto scheme = build_block_scheme(30, 2);
  const auto a = block_sums(compute_what(random_ranks(30, 3, gen)), scheme);
  for (auto mode : {Studentize::None, Studentize::Fixed, Studentize::Empirical}) {
    const auto d = bootstrap_statistics(a, scheme, RowMatrix::Zero(4, static_cast<Eigen::Index>(scheme.m)), mode);
    for (std::size_t b = 0; b < 4; ++b) {
      for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(d.value(b, j), 0.0);
    }
  }
}

TEST(BootstrapStatistics, UnstudentizedHandExample) {
  const auto scheme = build_block_scheme(5, 1);  // m = 2, q = 1
  const RowMatrix a = row_matrix({{1.0}, {-1.0}});
  const auto d = bootstrap_statistics(a, scheme, row_matrix({{1.0, -1.0}}), Studentize::None);
  EXPECT_NEAR(d.value(0, 0), std::sqrt(2.0), 1e-15);
}

TEST(BootstrapStatistics, FixedIsRescaledUnstudentized) {
  std::mt19937_64 gen(11);
  for (std::size_t q : {1u, 2u, 3u, 7u}) {
    const auto scheme = build_block_scheme(120, q);
    const auto a = block_sums(compute_what(random_ranks(120, 5, gen)), scheme);
    const auto eps = draw_multipliers(20, scheme.m, 4);
    const auto none = bootstrap_statistics(a, scheme, eps, Studentize::None);
    const auto fixed = bootstrap_statistics(a, scheme, eps, Studentize::Fixed);
    const double factor = std::sqrt(static_cast<double>(q) / (0.4 * static_cast<double>(q) + 0.1));
    for (std::size_t b = 0; b < 20; ++b) {
      for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(fixed.value(b, j), none.value(b, j) * factor, 1e-12);
    }
  }
}

TEST(BootstrapStatistics, EmpiricalMatchesDirectFormula) {
  std::mt19937_64 gen(13);
  const auto scheme = build_block_scheme(80, 3);
  const auto a = block_sums(compute_what(random_ranks(80, 4, gen)), scheme);
  const auto eps = draw_multipliers(10, scheme.m, 8);
  const auto d = bootstrap_statistics(a, scheme, eps, Studentize::Empirical);
  const double m = static_cast<double>(scheme.m);
  for (Eigen::Index j = 0; j < 4; ++j) {
    const double mean = a.col(j).mean();
    const double raw_second = a.col(j).squaredNorm() / m;
    for (Eigen::Index b = 0; b < 10; ++b) {
      double sum = 0.0;
      for (Eigen::Index k = 0; k < a.rows(); ++k) sum += eps(b, k) * (a(k, j) - mean) / std::sqrt(raw_second);
      EXPECT_NEAR(d.value(static_cast<std::size_t>(b), static_cast<std::size_t>(j)), sum / std::sqrt(m), 1e-12);
    }
  }
}

TEST(BootstrapStatistics, EmpiricalRejectsZeroColumn) {
  const auto scheme = build_block_scheme(7, 1);
  const RowMatrix a = RowMatrix::Zero(static_cast<Eigen::Index>(scheme.m), 2);
  try {
    bootstrap_statistics(a, scheme, draw_multipliers(3, scheme.m, 1), Studentize::Empirical);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateVariance);
  }
}

TEST(BootstrapStatistics, SharedMultiplierRowAcrossHypotheses) {
  std::mt19937_64 gen(15);
  const auto scheme = build_block_scheme(60, 2);
  const auto a = block_sums(compute_what(random_ranks(60, 6, gen)), scheme);
  const auto eps = draw_multipliers(8, scheme.m, 21);
  const auto d = bootstrap_statistics(a, scheme, eps, Studentize::None, Storage::Dense);
  const double scale = 1.0 / std::sqrt(static_cast<double>(scheme.m * scheme.q));
  for (std::size_t b = 0; b < 8; ++b) {
    const auto row = d.multiplier_row(b);
    ASSERT_TRUE(std::equal(row.begin(), row.end(), eps.row(static_cast<Eigen::Index>(b)).data()));
    for (std::size_t j = 0; j < 6; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < scheme.m; ++k) acc += row[k] * a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
      EXPECT_EQ(d.value(b, j), acc * scale);
    }
  }
}

TEST(BootstrapStatistics, DenseAndStreamingAreBitwiseEqual) {
  std::mt19937_64 gen(17);
  const auto scheme = build_block_scheme(200, 3);
  const auto a = block_sums(compute_what(random_ranks(200, 25, gen)), scheme);
  const auto eps = draw_multipliers(99, scheme.m, 5);
  for (auto mode : {Studentize::None, Studentize::Fixed, Studentize::Empirical}) {
    const auto dense = bootstrap_statistics(a, scheme, eps, mode, Storage::Dense, 1);
    const auto stream = bootstrap_statistics(a, scheme, eps, mode, Storage::Streaming, 3);
    const std::vector<std::size_t> subsets[] = {iota_set(25), {0}, {3, 7, 24}};
    for (const auto& subset : subsets) EXPECT_EQ(dense.subset_max(subset), stream.subset_max(subset));
    EXPECT_EQ(dense.value(42, 11), stream.value(42, 11));
  }
}

TEST(SubsetMax, SingletonFullAndMonotone) {
  std::mt19937_64 gen(19);
  const auto scheme = build_block_scheme(150, 3);
  const auto a = block_sums(compute_what(random_ranks(150, 10, gen)), scheme);
  const auto d = bootstrap_statistics(a, scheme, draw_multipliers(50, scheme.m, 6), Studentize::Fixed);
  const std::vector<std::size_t> single{4};
  const auto col = subset_max(d, single);
  for (std::size_t b = 0; b < 50; ++b) EXPECT_EQ(col[b], d.value(b, 4));
  const auto full = subset_max(d, iota_set(10));
  for (std::size_t b = 0; b < 50; ++b) {
    double best = d.value(b, 0);
    for (std::size_t j = 1; j < 10; ++j) best = std::max(best, d.value(b, j));
    EXPECT_EQ(full[b], best);
  }
  const std::vector<std::size_t> small{1, 5};
  const std::vector<std::size_t> large{1, 2, 5, 8};
  const auto lo = subset_max(d, small);
  const auto hi = subset_max(d, large);
  for (std::size_t b = 0; b < 50; ++b) EXPECT_LE(lo[b], hi[b]);
  const std::vector<std::size_t> empty;
  EXPECT_THROW(subset_max(d, empty), Error);
}

TEST(CriticalValue, OrderStatisticConvention) {
  EXPECT_EQ(critical_rank(19, 0.05), 19u);
  EXPECT_EQ(critical_rank(999, 0.05), 950u);
  EXPECT_EQ(critical_rank(199, 0.05), 190u);
  EXPECT_EQ(critical_rank(1, 0.05), 1u);
  std::vector<double> draws(19);
  std::iota(draws.begin(), draws.end(), 1.0);
  std::shuffle(draws.begin(), draws.end(), std::mt19937_64(1));
  EXPECT_EQ(critical_value(draws, 0.05), 19.0);
  std::vector<double> big(999);
  std::iota(big.begin(), big.end(), 1.0);
  EXPECT_EQ(critical_value(big, 0.05), 950.0);
  EXPECT_EQ(critical_value(std::vector<double>(37, 2.5), 0.1), 2.5);
  EXPECT_THROW(critical_value(draws, 1.0), Error);
}

TEST(BootstrapVariance, EstimatedRankBiasShrinksWithN) {
  // V_B from estimated ranks of independent data; its mean approaches
  // 2/5 + 1/(10q) as n grows.
  auto bias = [](std::size_t n) {
    const auto r = sim::mc_vb_moments(n, 1, 20000, 77, sim::RankSource::Estimated);
    return std::abs(r.mean - e_vb(1));
  };
  const double small_n = bias(30);
  const double large_n = bias(1000);
  EXPECT_LT(large_n, small_n);
}
