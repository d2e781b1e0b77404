#pragma once

// Moments of the bootstrap variance V_B under independence and the
// block length that minimizes its mean squared error against v_n.

#include <cmath>
#include <cstddef>
#include <string>

#include "xicor/error.hpp"

namespace xicor {

/// Exact null variance of sqrt(n) * xi for sample size n.
inline double v_n(std::size_t n) {
  if (n < 3) fail(ErrorCode::SampleTooSmall, "v_n needs n >= 3, got " + std::to_string(n));
  const double d = static_cast<double>(n);
  return d * (d - 2.0) * (4.0 * d - 7.0) / (10.0 * (d - 1.0) * (d - 1.0) * (d + 1.0));
}

/// E[V_B] = 2/5 + 1/(10q).
inline double e_vb(std::size_t q) {
  require(q >= 1, ErrorCode::InvalidArgument, "block length q must be >= 1");
  return 0.4 + 0.1 / static_cast<double>(q);
}

/// m * Var(V_B), i.e. Var(A^2) / q^2 for one big block of length q.
inline double var_vb_per_block(std::size_t q) {
  require(q >= 1, ErrorCode::InvalidArgument, "block length q must be >= 1");
  if (q == 1) return 7.0 / 20.0;
  if (q == 2) return 1353.0 / 2800.0;
  const double d = static_cast<double>(q);
  return 8.0 / 25.0 + 88.0 / (175.0 * d) - 229.0 / (700.0 * d * d);
}

inline double var_vb(std::size_t q, std::size_t m) {
  require(m >= 1, ErrorCode::InvalidArgument, "number of blocks m must be >= 1");
  return var_vb_per_block(q) / static_cast<double>(m);
}

inline std::size_t max_block_length(std::size_t n) { return (n - 1) / 2; }

inline double mse(std::size_t n, std::size_t q) {
  if (n < 3) fail(ErrorCode::SampleTooSmall, "n must be >= 3, got " + std::to_string(n));
  if (q < 1) fail(ErrorCode::InvalidArgument, "block length q must be >= 1");
  if (q > max_block_length(n)) {
    fail(ErrorCode::BlockTooLarge, "q=" + std::to_string(q) + " exceeds (n-1)/2 for n=" + std::to_string(n));
  }
  const std::size_t m = (n - 1) / (q + 1);
  const double bias = e_vb(q) - v_n(n);
  return var_vb(q, m) + bias * bias;
}

/// Grid argmin over q in 1..floor((n-1)/2); ties go to the smaller q.
inline std::size_t q_star(std::size_t n) {
  if (n < 3) fail(ErrorCode::SampleTooSmall, "n must be >= 3, got " + std::to_string(n));
  std::size_t best = 1;
  double best_mse = mse(n, 1);
  for (std::size_t q = 2; q <= max_block_length(n); ++q) {
    const double value = mse(n, q);
    if (value < best_mse) {
      best_mse = value;
      best = q;
    }
  }
  return best;
}

inline double q_tilde(std::size_t n) {
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  return std::cbrt(static_cast<double>(n) / 16.0);
}

/// Compares only the two integers bracketing q_tilde(n).
inline std::size_t q_star_fast(std::size_t n) {
  if (n < 3) fail(ErrorCode::SampleTooSmall, "n must be >= 3, got " + std::to_string(n));
  const double approx = q_tilde(n);
  const std::size_t upper_bound = max_block_length(n);
  auto clamp = [&](double q) {
    auto v = static_cast<std::size_t>(q);
    if (v < 1) v = 1;
    if (v > upper_bound) v = upper_bound;
    return v;
  };
  const std::size_t lo = clamp(std::floor(approx));
  const std::size_t hi = clamp(std::ceil(approx));
  return mse(n, hi) <= mse(n, lo) ? hi : lo;
}

struct BlockSizeTable {
  std::size_t n = 0;
  std::size_t q_star = 0;
  double q_tilde = 0.0;
  double mse_at_qstar = 0.0;
};

inline BlockSizeTable block_size_table(std::size_t n) {
  const std::size_t q = q_star(n);
  return {n, q, q_tilde(n), mse(n, q)};
}

}  // namespace xicor
