#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "xicor/error.hpp"
#include "xicor/parallel.hpp"
#include "xicor/rng.hpp"

namespace xicor {

/// The conditioning variable x and the n-by-p matrix of hypothesis columns.
/// Columns of `y` are contiguous (Eigen default column-major storage).
struct PairedSample {
  std::vector<double> x;
  Eigen::MatrixXd y;
  std::vector<std::string> names;

  PairedSample() = default;

  PairedSample(std::vector<double> x_in, Eigen::MatrixXd y_in, std::vector<std::string> names_in = {})
      : x(std::move(x_in)), y(std::move(y_in)), names(std::move(names_in)) {
    if (names.empty()) {
      names.reserve(static_cast<std::size_t>(y.cols()));
      for (Eigen::Index j = 0; j < y.cols(); ++j) names.push_back("y" + std::to_string(j + 1));
    }
    validate();
  }

  std::size_t n() const { return x.size(); }
  std::size_t p() const { return static_cast<std::size_t>(y.cols()); }

  std::span<const double> column(std::size_t j) const {
    return {y.col(static_cast<Eigen::Index>(j)).data(), n()};
  }

  void validate() const {
    require(x.size() >= 3, ErrorCode::SampleTooSmall,
            "need at least 3 observations, got " + std::to_string(x.size()));
    require(y.cols() >= 1, ErrorCode::ShapeMismatch, "need at least one hypothesis column");
    require(static_cast<std::size_t>(y.rows()) == x.size(), ErrorCode::ShapeMismatch,
            "x has " + std::to_string(x.size()) + " rows but y has " + std::to_string(y.rows()));
    require(names.size() == p(), ErrorCode::ShapeMismatch, "one name per hypothesis column required");
  }
};

/// u(i, j) = rank of the concomitant of the i-th smallest x within column j, over n.
struct ConcomitantRanks {
  Eigen::MatrixXd u;

  std::size_t n() const { return static_cast<std::size_t>(u.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(u.cols()); }
  std::span<const double> column(std::size_t j) const {
    return {u.col(static_cast<Eigen::Index>(j)).data(), n()};
  }
};

enum class TiePolicy { Error, Jitter };

struct TieBreakConfig {
  TiePolicy policy = TiePolicy::Error;
  double jitter_relative_scale = 1e-9;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

namespace detail {

/// Label used in messages: the x column or the hypothesis name.
inline std::string column_label(const PairedSample& s, std::ptrdiff_t col) {
  return col < 0 ? std::string("x") : s.names[static_cast<std::size_t>(col)];
}

inline bool has_duplicates(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

/// Smallest strictly positive difference between sorted distinct values, or
/// 0 if the column is constant.
inline double min_nonzero_gap(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double d = sorted[i] - sorted[i - 1];
    if (d > 0.0) gap = std::min(gap, d);
  }
  return std::isfinite(gap) ? gap : 0.0;
}

/// Perturbs a column in place. Stream `stream_id` keys the noise so results
/// do not depend on which worker handles the column.
inline void jitter_column(std::span<double> values, double relative_scale, const rng::CounterRng& gen,
                          std::uint64_t stream_id, const std::string& label) {
  const double gap = min_nonzero_gap(values);
  require(gap > 0.0, ErrorCode::DegenerateColumn, "column '" + label + "' is constant; ties cannot be broken");
  const std::vector<double> original(values.begin(), values.end());
  // Noise amplitude stays below gap/4 so strictly ordered values never swap.
  // It is doubled only if the first amplitude is lost to rounding.
  for (double scale = relative_scale; scale < 0.25; scale *= 2.0) {
    const double s = scale * gap;
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = original[i] + s * (2.0 * gen.uniform(stream_id, i) - 1.0);
    }
    if (!has_duplicates(values)) return;
  }
  fail(ErrorCode::TiesPresent, "could not separate ties in column '" + label + "' at floating-point resolution");
}

/// 1-based ranks of a tie-free column.
inline std::vector<std::uint32_t> ranks(std::span<const double> values) {
  std::vector<std::uint32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
  std::vector<std::uint32_t> rank(values.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = static_cast<std::uint32_t>(pos + 1);
  return rank;
}

}  // namespace detail

/// Returns a sample with pairwise-distinct values in x and every y column.
/// With TiePolicy::Error any duplicate is reported; with TiePolicy::Jitter only
/// columns containing duplicates are perturbed.
inline PairedSample resolve_ties(PairedSample sample, const TieBreakConfig& cfg) {
  sample.validate();
  require(cfg.jitter_relative_scale > 0.0 && cfg.jitter_relative_scale < 0.25, ErrorCode::InvalidArgument,
          "jitter_relative_scale must lie in (0, 0.25)");
  const std::size_t cols = sample.p() + 1;
  const rng::CounterRng gen(cfg.seed, rng::Domain::Jitter);
  auto column_span = [&](std::size_t c) -> std::span<double> {
    if (c == 0) return {sample.x.data(), sample.n()};
    return {sample.y.col(static_cast<Eigen::Index>(c - 1)).data(), sample.n()};
  };
  parallel_for(cols, cfg.threads, [&](std::size_t c) {
    auto values = column_span(c);
    const auto label = detail::column_label(sample, static_cast<std::ptrdiff_t>(c) - 1);
    if (!detail::has_duplicates(values)) return;
    if (cfg.policy == TiePolicy::Error) {
      if (detail::min_nonzero_gap(values) == 0.0) {
        fail(ErrorCode::DegenerateColumn, "column '" + label + "' is constant");
      }
      fail(ErrorCode::TiesPresent, "column '" + label + "' contains duplicate values");
    }
    detail::jitter_column(values, cfg.jitter_relative_scale, gen, c, label);
  });
  return sample;
}

/// Sorts by x and records each column's concomitant ranks divided by n.
inline ConcomitantRanks concomitant_ranks(const PairedSample& sample, unsigned threads = 0) {
  sample.validate();
  const std::size_t n = sample.n();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return sample.x[a] < sample.x[b]; });
  for (std::size_t i = 1; i < n; ++i) {
    require(sample.x[order[i - 1]] < sample.x[order[i]], ErrorCode::TiesPresent,
            "column 'x' contains duplicate values");
  }
  ConcomitantRanks out{Eigen::MatrixXd(static_cast<Eigen::Index>(n), sample.y.cols())};
  const double dn = static_cast<double>(n);
  parallel_for(sample.p(), threads, [&](std::size_t j) {
    const auto col = sample.column(j);
    require(!detail::has_duplicates(col), ErrorCode::TiesPresent,
            "column '" + sample.names[j] + "' contains duplicate values");
    const auto rank = detail::ranks(col);
    auto dst = out.u.col(static_cast<Eigen::Index>(j));
    for (std::size_t i = 0; i < n; ++i) dst(static_cast<Eigen::Index>(i)) = rank[order[i]] / dn;
  });
  return out;
}

/// Chatterjee's rank correlation from one column of concomitant ranks.
inline double xi(std::span<const double> u_col) {
  const std::size_t n = u_col.size();
  require(n >= 3, ErrorCode::SampleTooSmall, "xi needs n >= 3, got " + std::to_string(n));
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) total += std::abs(u_col[i + 1] - u_col[i]);
  const double dn = static_cast<double>(n);
  return 1.0 - 3.0 * dn / (dn * dn - 1.0) * total;
}

inline std::vector<double> xi_all(const ConcomitantRanks& u, unsigned threads = 0) {
  std::vector<double> out(u.p());
  parallel_for(u.p(), threads, [&](std::size_t j) { out[j] = xi(u.column(j)); });
  return out;
}

inline std::vector<double> xi_all(const PairedSample& sample, unsigned threads = 0) {
  return xi_all(concomitant_ranks(sample, threads), threads);
}

}  // namespace xicor
