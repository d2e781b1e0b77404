#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "xicor/error.hpp"
#include "xicor/parallel.hpp"
#include "xicor/rank.hpp"
#include "xicor/rng.hpp"

namespace xicor {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Studentization of the bootstrap statistic: BMB0, BMB1, BMB2.
enum class Studentize { None, Fixed, Empirical };

constexpr std::string_view to_string(Studentize mode) {
  switch (mode) {
    case Studentize::None: return "none";
    case Studentize::Fixed: return "fixed";
    case Studentize::Empirical: return "empirical";
  }
  return "none";
}

constexpr std::string_view variant_name(Studentize mode) {
  switch (mode) {
    case Studentize::None: return "bmb0";
    case Studentize::Fixed: return "bmb1";
    case Studentize::Empirical: return "bmb2";
  }
  return "bmb0";
}

inline std::optional<Studentize> parse_studentize(std::string_view s) {
  if (s == "none" || s == "bmb0") return Studentize::None;
  if (s == "fixed" || s == "bmb1") return Studentize::Fixed;
  if (s == "empirical" || s == "bmb2") return Studentize::Empirical;
  return std::nullopt;
}

enum class Storage { Dense, Streaming };

/// Big blocks of length q separated by single-index small blocks over the
/// n-1 W-terms. Indices here are 0-based: big block k covers
/// [k(q+1), k(q+1)+q) and small block k is index k(q+1)+q.
struct BlockScheme {
  std::size_t n = 0;
  std::size_t q = 0;
  std::size_t m = 0;
  std::size_t r = 0;

  std::size_t block_begin(std::size_t k) const { return k * (q + 1); }
  std::size_t block_end(std::size_t k) const { return k * (q + 1) + q; }
  std::size_t small_index(std::size_t k) const { return k * (q + 1) + q; }
};

inline BlockScheme build_block_scheme(std::size_t n, std::size_t q) {
  require(q >= 1, ErrorCode::InvalidArgument, "block length q must be >= 1");
  require(n >= 3, ErrorCode::SampleTooSmall, "n must be >= 3, got " + std::to_string(n));
  require(q + 1 <= n - 1, ErrorCode::BlockTooLarge,
          "q=" + std::to_string(q) + " needs q+1 <= n-1 (n=" + std::to_string(n) + ")");
  BlockScheme s;
  s.n = n;
  s.q = q;
  s.m = (n - 1) / (q + 1);
  s.r = n - 1 - s.m * (q + 1);
  return s;
}

/// (n-1) x p matrix of estimated W-terms.
inline Eigen::MatrixXd compute_what(const ConcomitantRanks& u) {
  const auto n = static_cast<Eigen::Index>(u.n());
  require(n >= 2, ErrorCode::ShapeMismatch, "need at least two concomitant ranks");
  Eigen::MatrixXd w(n - 1, u.u.cols());
  for (Eigen::Index j = 0; j < u.u.cols(); ++j) {
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double cur = u.u(i, j);
      const double next = u.u(i + 1, j);
      w(i, j) = 2.0 - 3.0 * std::abs(next - cur) - 6.0 * cur * (1.0 - cur);
    }
  }
  return w;
}

/// m x p big-block sums; small-block and remainder terms are dropped.
inline RowMatrix block_sums(const Eigen::MatrixXd& w, const BlockScheme& scheme) {
  require(static_cast<std::size_t>(w.rows()) == scheme.n - 1, ErrorCode::ShapeMismatch,
          "W has " + std::to_string(w.rows()) + " rows, scheme expects " + std::to_string(scheme.n - 1));
  RowMatrix a = RowMatrix::Zero(static_cast<Eigen::Index>(scheme.m), w.cols());
  for (std::size_t k = 0; k < scheme.m; ++k) {
    for (std::size_t l = scheme.block_begin(k); l < scheme.block_end(k); ++l) {
      a.row(static_cast<Eigen::Index>(k)) += w.row(static_cast<Eigen::Index>(l));
    }
  }
  return a;
}

/// B x m standard normals; entry (b, k) depends only on (seed, b, k).
inline RowMatrix draw_multipliers(std::size_t b_reps, std::size_t m, std::uint64_t seed, unsigned threads = 0) {
  require(b_reps >= 1 && m >= 1, ErrorCode::InvalidArgument, "need B >= 1 and m >= 1");
  RowMatrix eps(static_cast<Eigen::Index>(b_reps), static_cast<Eigen::Index>(m));
  const rng::CounterRng gen(seed, rng::Domain::Multipliers);
  parallel_for(b_reps, threads, [&](std::size_t b) {
    for (std::size_t k = 0; k < m; ++k) {
      eps(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) = gen.normal(b, k);
    }
  });
  return eps;
}

/// Per-hypothesis bootstrap statistics d(b, j) = scale_j * sum_k eps(b, k) * loading(k, j).
/// Dense storage materializes the B x p matrix; streaming keeps only the
/// multipliers and loadings and recomputes rows on demand with the same
/// arithmetic, so both return bitwise identical values.
class BootstrapDraws {
 public:
  BootstrapDraws(RowMatrix multipliers, RowMatrix loadings, std::vector<double> scale, Studentize mode,
                 Storage storage, unsigned threads)
      : multipliers_(std::move(multipliers)),
        loadings_(std::move(loadings)),
        scale_(std::move(scale)),
        mode_(mode),
        storage_(storage),
        threads_(threads) {
    require(multipliers_.cols() == loadings_.rows(), ErrorCode::ShapeMismatch,
            "multiplier columns must equal the number of blocks");
    require(static_cast<std::size_t>(loadings_.cols()) == scale_.size(), ErrorCode::ShapeMismatch,
            "one scale per hypothesis required");
    if (storage_ == Storage::Dense) {
      dense_.resize(multipliers_.rows(), loadings_.cols());
      parallel_for(b_reps(), threads_, [&](std::size_t b) {
        compute_row(b, {dense_.row(static_cast<Eigen::Index>(b)).data(), p()});
      });
    }
  }

  std::size_t b_reps() const { return static_cast<std::size_t>(multipliers_.rows()); }
  std::size_t m() const { return static_cast<std::size_t>(multipliers_.cols()); }
  std::size_t p() const { return static_cast<std::size_t>(loadings_.cols()); }
  Studentize mode() const { return mode_; }
  Storage storage() const { return storage_; }
  const RowMatrix& multipliers() const { return multipliers_; }
  std::span<const double> multiplier_row(std::size_t b) const {
    return {multipliers_.row(static_cast<Eigen::Index>(b)).data(), m()};
  }

  void compute_row(std::size_t b, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const auto row = multiplier_row(b);
    for (std::size_t k = 0; k < m(); ++k) {
      const double e = row[k];
      const double* load = loadings_.row(static_cast<Eigen::Index>(k)).data();
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += e * load[j];
    }
    for (std::size_t j = 0; j < out.size(); ++j) out[j] *= scale_[j];
  }

  double value(std::size_t b, std::size_t j) const {
    if (storage_ == Storage::Dense) return dense_(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
    std::vector<double> row(p());
    compute_row(b, row);
    return row[j];
  }

  /// Maximum over `subset` of d(b, j) for every replication b.
  std::vector<double> subset_max(std::span<const std::size_t> subset) const {
    require(!subset.empty(), ErrorCode::EmptySubset, "subset must be nonempty");
    for (auto j : subset) require(j < p(), ErrorCode::InvalidArgument, "subset index out of range");
    std::vector<double> out(b_reps());
    auto reduce = [&](const double* row, std::size_t b) {
      double best = row[subset[0]];
      for (auto j : subset) best = std::max(best, row[j]);
      out[b] = best;
    };
    if (storage_ == Storage::Dense) {
      parallel_for(b_reps(), threads_,
                   [&](std::size_t b) { reduce(dense_.row(static_cast<Eigen::Index>(b)).data(), b); });
    } else {
      parallel_for(b_reps(), threads_, [&](std::size_t b) {
        std::vector<double> row(p());
        compute_row(b, row);
        reduce(row.data(), b);
      });
    }
    return out;
  }

 private:
  RowMatrix multipliers_;
  RowMatrix loadings_;
  std::vector<double> scale_;
  Studentize mode_;
  Storage storage_;
  unsigned threads_;
  RowMatrix dense_;
};

inline BootstrapDraws bootstrap_statistics(const RowMatrix& a, const BlockScheme& scheme, RowMatrix multipliers,
                                           Studentize mode, Storage storage = Storage::Dense,
                                           unsigned threads = 0) {
  require(static_cast<std::size_t>(a.rows()) == scheme.m, ErrorCode::ShapeMismatch,
          "block sums have " + std::to_string(a.rows()) + " rows, scheme has m=" + std::to_string(scheme.m));
  const auto p = static_cast<std::size_t>(a.cols());
  const double m = static_cast<double>(scheme.m);
  const double q = static_cast<double>(scheme.q);
  std::vector<double> scale(p);
  RowMatrix loadings = a;
  switch (mode) {
    case Studentize::None:
      std::fill(scale.begin(), scale.end(), 1.0 / std::sqrt(m * q));
      break;
    case Studentize::Fixed:
      std::fill(scale.begin(), scale.end(), 1.0 / (std::sqrt(m) * std::sqrt(0.4 * q + 0.1)));
      break;
    case Studentize::Empirical:
      // Centered numerator, raw (uncentered) second moment in the denominator.
      for (std::size_t j = 0; j < p; ++j) {
        const auto col = a.col(static_cast<Eigen::Index>(j));
        const double mean = col.mean();
        const double second = col.squaredNorm() / m;
        require(second > 0.0, ErrorCode::DegenerateVariance,
                "block sums of hypothesis " + std::to_string(j) + " are all zero");
        loadings.col(static_cast<Eigen::Index>(j)).array() -= mean;
        scale[j] = 1.0 / (std::sqrt(m) * std::sqrt(second));
      }
      break;
  }
  return BootstrapDraws(std::move(multipliers), std::move(loadings), std::move(scale), mode, storage, threads);
}

inline std::vector<double> subset_max(const BootstrapDraws& draws, std::span<const std::size_t> subset) {
  return draws.subset_max(subset);
}

/// Order index k = min(B, ceil((1 - alpha)(B + 1))), 1-based.
inline std::size_t critical_rank(std::size_t b_reps, double alpha) {
  require(b_reps >= 1, ErrorCode::InvalidArgument, "need B >= 1");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  const double target = (1.0 - alpha) * static_cast<double>(b_reps + 1);
  // Guard against (1 - alpha)(B + 1) landing a rounding error above an integer.
  auto k = static_cast<std::size_t>(std::ceil(target - 1e-9 * target));
  return std::clamp<std::size_t>(k, 1, b_reps);
}

/// k-th smallest bootstrap maximum.
inline double critical_value(std::vector<double> draw_maxima, double alpha) {
  const std::size_t k = critical_rank(draw_maxima.size(), alpha);
  auto nth = draw_maxima.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(draw_maxima.begin(), nth, draw_maxima.end());
  return *nth;
}

}  // namespace xicor
