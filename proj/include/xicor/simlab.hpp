#pragma once

// Simulation designs, Monte Carlo rejection studies, and brute-force
// moment estimates for the closed-form bootstrap-variance results.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "xicor/block_size.hpp"
#include "xicor/bootstrap.hpp"
#include "xicor/error.hpp"
#include "xicor/parallel.hpp"
#include "xicor/rank.hpp"
#include "xicor/rng.hpp"
#include "xicor/testing.hpp"

namespace xicor::sim {

enum class Model { One = 1, Two = 2, Three = 3 };

struct ModelSpec {
  Model model = Model::One;
  std::size_t n = 500;
  std::size_t p = 10;
  double rho = 0.0;
  double tau = 0.0;
  std::uint64_t seed = 0;
};

/// Joint covariance of (x, y_1, ..., y_p) for Model 1.
inline Eigen::MatrixXd model1_covariance(std::size_t p, double rho, double tau) {
  const auto dim = static_cast<Eigen::Index>(p + 1);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(dim, dim, tau);
  sigma.row(0).setZero();
  sigma.col(0).setZero();
  sigma.diagonal().setOnes();
  sigma(0, 1) = sigma(1, 0) = rho;
  return sigma;
}

inline void validate(const ModelSpec& spec) {
  require(spec.n >= 3, ErrorCode::SampleTooSmall, "n must be >= 3");
  require(spec.p >= 1, ErrorCode::InvalidArgument, "p must be >= 1");
  if (spec.model != Model::One) {
    require(spec.tau >= 0.0 && spec.tau < 1.0, ErrorCode::BadTau, "tau must lie in [0, 1) for models 2 and 3");
  }
}

namespace detail {

inline rng::CounterRng data_stream(const ModelSpec& spec, std::uint64_t replicate) {
  return {rng::derive_seed(spec.seed, replicate), rng::Domain::Data};
}

inline std::vector<std::string> default_names(std::size_t p) {
  std::vector<std::string> names;
  names.reserve(p);
  for (std::size_t j = 0; j < p; ++j) names.push_back("y" + std::to_string(j + 1));
  return names;
}

/// Models 2 and 3. eps_j = sqrt(tau) z_0 + sqrt(1 - tau) z_j has unit
/// variances and pairwise correlation tau.
inline PairedSample oscillating_model(const ModelSpec& spec, std::uint64_t replicate, bool signal_everywhere) {
  validate(spec);
  const auto gen = data_stream(spec, replicate);
  const std::size_t n = spec.n;
  const std::size_t p = spec.p;
  const double common = std::sqrt(spec.tau);
  const double own = std::sqrt(1.0 - spec.tau);
  std::vector<double> x(n);
  Eigen::MatrixXd y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = 2.0 * gen.uniform(1, i) - 1.0;
    const double signal = 2.0 * spec.rho * std::cos(8.0 * std::numbers::pi * x[i]);
    const std::uint64_t base = i * (p + 1);
    const double z0 = gen.normal(0, base);
    for (std::size_t j = 0; j < p; ++j) {
      double v = common * z0 + own * gen.normal(0, base + j + 1);
      if (j == 0 || signal_everywhere) v += signal;
      y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return {std::move(x), std::move(y), default_names(p)};
}

}  // namespace detail

/// Multivariate normal (x, y) with correlation rho between x and y_1 and tau among the y's.
inline PairedSample gen_model1(const ModelSpec& spec, std::uint64_t replicate) {
  validate(spec);
  const Eigen::LLT<Eigen::MatrixXd> llt(model1_covariance(spec.p, spec.rho, spec.tau));
  require(llt.info() == Eigen::Success, ErrorCode::NotPositiveDefinite,
          "covariance with rho=" + std::to_string(spec.rho) + ", tau=" + std::to_string(spec.tau) +
              " is not positive definite");
  const auto gen = detail::data_stream(spec, replicate);
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto dim = static_cast<Eigen::Index>(spec.p + 1);
  Eigen::MatrixXd z(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      z(i, c) = gen.normal(0, static_cast<std::uint64_t>(i * dim + c));
    }
  }
  const Eigen::MatrixXd draws = z * llt.matrixL().transpose();
  std::vector<double> x(draws.col(0).data(), draws.col(0).data() + n);
  return {std::move(x), draws.rightCols(dim - 1), detail::default_names(spec.p)};
}

/// x ~ Unif[-1, 1]; only y_1 carries the oscillating signal.
inline PairedSample gen_model2(const ModelSpec& spec, std::uint64_t replicate) {
  return detail::oscillating_model(spec, replicate, false);
}

/// As Model 2 but every y_j carries the signal.
inline PairedSample gen_model3(const ModelSpec& spec, std::uint64_t replicate) {
  return detail::oscillating_model(spec, replicate, true);
}

inline PairedSample generate(const ModelSpec& spec, std::uint64_t replicate) {
  switch (spec.model) {
    case Model::One: return gen_model1(spec, replicate);
    case Model::Two: return gen_model2(spec, replicate);
    case Model::Three: return gen_model3(spec, replicate);
  }
  fail(ErrorCode::InvalidArgument, "unknown model");
}

struct MCResult {
  ModelSpec spec;
  Studentize variant = Studentize::Fixed;
  std::size_t q = 0;
  std::size_t b_reps = 0;
  std::size_t replications = 0;
  std::size_t rejections = 0;
  double rejection_rate = 0.0;
  double mc_stderr = 0.0;
};

struct StudyConfig {
  std::vector<std::optional<std::size_t>> q_grid{std::nullopt};  ///< nullopt = q_star(n)
  Studentize variant = Studentize::Fixed;
  std::size_t replications = 500;
  std::size_t b_reps = 199;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

inline double binomial_stderr(double rate, std::size_t trials) {
  return std::sqrt(rate * (1.0 - rate) / static_cast<double>(trials));
}

/// One row per q in the grid. Every grid cell sees the same S datasets.
inline std::vector<MCResult> run_rejection_study(ModelSpec spec, const StudyConfig& cfg) {
  validate(spec);
  require(cfg.replications >= 1, ErrorCode::InvalidArgument, "need at least one replication");
  require(!cfg.q_grid.empty(), ErrorCode::InvalidArgument, "q grid must be nonempty");
  spec.seed = cfg.seed;
  std::vector<std::size_t> qs;
  for (const auto& q : cfg.q_grid) {
    qs.push_back(q.value_or(q_star(spec.n)));
    build_block_scheme(spec.n, qs.back());
  }
  // rejected[s * cells + c]
  std::vector<unsigned char> rejected(cfg.replications * qs.size(), 0);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t s) {
    const PairedSample sample = generate(spec, s);
    for (std::size_t c = 0; c < qs.size(); ++c) {
      TestConfig tc;
      tc.bootstrap.b_reps = cfg.b_reps;
      tc.bootstrap.q = qs[c];
      tc.bootstrap.studentize = cfg.variant;
      tc.bootstrap.alpha = cfg.alpha;
      tc.bootstrap.seed = rng::derive_seed(cfg.seed, s, 1);
      tc.bootstrap.threads = 1;
      tc.tie_break.threads = 1;
      rejected[s * qs.size() + c] = max_test(sample, tc).reject ? 1 : 0;
    }
  });
  std::vector<MCResult> out;
  for (std::size_t c = 0; c < qs.size(); ++c) {
    MCResult r;
    r.spec = spec;
    r.variant = cfg.variant;
    r.q = qs[c];
    r.b_reps = cfg.b_reps;
    r.replications = cfg.replications;
    for (std::size_t s = 0; s < cfg.replications; ++s) r.rejections += rejected[s * qs.size() + c];
    r.rejection_rate = static_cast<double>(r.rejections) / static_cast<double>(cfg.replications);
    r.mc_stderr = binomial_stderr(r.rejection_rate, cfg.replications);
    out.push_back(r);
  }
  return out;
}

inline void write_study_csv_header(std::ostream& os) {
  os << "model,n,p,rho,tau,q,variant,B,S,rejection_rate,mc_stderr\n";
}

inline void write_study_csv_row(std::ostream& os, const MCResult& r) {
  os << static_cast<int>(r.spec.model) << ',' << r.spec.n << ',' << r.spec.p << ',' << r.spec.rho << ','
     << r.spec.tau << ',' << r.q << ',' << variant_name(r.variant) << ',' << r.b_reps << ',' << r.replications
     << ',' << r.rejection_rate << ',' << r.mc_stderr << '\n';
}

/// Family-wise error and screening power of the stepdown over S datasets.
/// The first `false_nulls` columns violate independence; the rest are true nulls.
struct StepdownStudy {
  std::size_t replications = 0;
  std::size_t any_true_rejected = 0;
  std::size_t first_rejected = 0;
  std::size_t containment_failures = 0;
  double fwer = 0.0;
  double first_rate = 0.0;
};

inline StepdownStudy run_stepdown_study(ModelSpec spec, const StudyConfig& cfg, std::size_t false_nulls = 1) {
  validate(spec);
  require(cfg.q_grid.size() == 1, ErrorCode::InvalidArgument, "stepdown study takes a single q");
  spec.seed = cfg.seed;
  const std::size_t q = cfg.q_grid.front().value_or(q_star(spec.n));
  struct Outcome {
    bool any_true = false;
    bool first = false;
    bool contains_single_step = true;
  };
  std::vector<Outcome> outcomes(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t s) {
    TestConfig tc;
    tc.bootstrap.b_reps = cfg.b_reps;
    tc.bootstrap.q = q;
    tc.bootstrap.studentize = cfg.variant;
    tc.bootstrap.alpha = cfg.alpha;
    tc.bootstrap.seed = rng::derive_seed(cfg.seed, s, 1);
    tc.bootstrap.threads = 1;
    tc.tie_break.threads = 1;
    const StepdownResult res = stepdown(generate(spec, s), tc);
    Outcome& o = outcomes[s];
    for (auto j : res.final_rejected) {
      if (j >= false_nulls) o.any_true = true;
      if (j == 0) o.first = true;
    }
    // Single-step selection uses the first step's critical value over all hypotheses.
    const double single_critical = res.steps.front().critical;
    for (const auto& h : res.per_hypothesis) {
      if (h.statistic > single_critical) {
        const auto idx = static_cast<std::size_t>(&h - res.per_hypothesis.data());
        if (!std::binary_search(res.final_rejected.begin(), res.final_rejected.end(), idx)) {
          o.contains_single_step = false;
        }
      }
    }
  });
  StepdownStudy out;
  out.replications = cfg.replications;
  for (const auto& o : outcomes) {
    out.any_true_rejected += o.any_true;
    out.first_rejected += o.first;
    out.containment_failures += !o.contains_single_step;
  }
  out.fwer = static_cast<double>(out.any_true_rejected) / static_cast<double>(cfg.replications);
  out.first_rate = static_cast<double>(out.first_rejected) / static_cast<double>(cfg.replications);
  return out;
}

/// Population W-term from consecutive uniforms.
inline double population_w(double u, double u_next) {
  return 2.0 - 3.0 * std::abs(u_next - u) - 6.0 * u * (1.0 - u);
}

struct MomentEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double target = 0.0;

  bool within(double n_se) const { return std::abs(estimate - target) <= n_se * std_error; }
};

/// Moments (i)-(viii) of the 1-dependent W sequence in the order
/// E[W], E[W^2], E[W1 W2], E[W^4], E[W1^2 W2^2], E[W1 W2 (W1^2 + W2^2)],
/// E[W1 W2 W3 (W1 + W2 + W3)], E[W1 W2 W3 W4].
struct WMoments {
  std::array<MomentEstimate, 8> moments;
  std::size_t samples = 0;
};

inline constexpr std::array<double, 8> kWMomentTargets{
    0.0, 0.5, -1.0 / 20.0, 3.0 / 5.0, 23.0 / 70.0, -3.0 / 28.0, -37.0 / 700.0, 1.0 / 700.0};

inline std::array<double, 8> w_moment_terms(double w1, double w2, double w3, double w4) {
  return {w1,
          w1 * w1,
          w1 * w2,
          w1 * w1 * w1 * w1,
          w1 * w1 * w2 * w2,
          w1 * w2 * (w1 * w1 + w2 * w2),
          w1 * w2 * w3 * (w1 + w2 + w3),
          w1 * w2 * w3 * w4};
}

namespace detail {

/// Mean and standard error of `values`, summed in index order.
inline std::pair<double, double> mean_and_se(const std::vector<double>& values) {
  const double count = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / count;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / (count - 1.0);
  return {mean, std::sqrt(var / count)};
}

}  // namespace detail

inline WMoments mc_w_moments(std::size_t num_samples, std::uint64_t seed, unsigned threads = 0) {
  require(num_samples >= 10000, ErrorCode::InvalidArgument, "need at least 10^4 samples");
  const rng::CounterRng gen(seed, rng::Domain::Moments);
  std::vector<std::array<double, 8>> terms(num_samples);
  parallel_for(num_samples, threads, [&](std::size_t s) {
    std::array<double, 5> u{};
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = gen.uniform(s, i);
    terms[s] = w_moment_terms(population_w(u[0], u[1]), population_w(u[1], u[2]), population_w(u[2], u[3]),
                              population_w(u[3], u[4]));
  });
  WMoments out;
  out.samples = num_samples;
  std::vector<double> column(num_samples);
  for (std::size_t k = 0; k < 8; ++k) {
    for (std::size_t s = 0; s < num_samples; ++s) column[s] = terms[s][k];
    const auto [mean, se] = detail::mean_and_se(column);
    out.moments[k] = {mean, se, kWMomentTargets[k]};
  }
  return out;
}

enum class RankSource { Population, Estimated };

struct VBMoments {
  BlockScheme scheme;
  std::size_t samples = 0;
  double mean = 0.0;
  double mean_se = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  /// m * Var(V_B), comparable with var_vb_per_block(q).
  double scaled_variance = 0.0;
  double scaled_variance_se = 0.0;
};

/// V_B = (1/(mq)) sum_k A_k^2 for one independence sequence of length n.
/// Population ranks use the uniforms directly; estimated ranks replace
/// them by rank/n, as the test does with data.
inline double simulate_vb(const BlockScheme& scheme, const rng::CounterRng& gen, std::uint64_t stream,
                          RankSource source) {
  const std::size_t n = scheme.n;
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = gen.uniform(stream, i);
  if (source == RankSource::Estimated) {
    const auto rank = xicor::detail::ranks(u);
    for (std::size_t i = 0; i < n; ++i) u[i] = rank[i] / static_cast<double>(n);
  }
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < scheme.m; ++k) {
    double a = 0.0;
    for (std::size_t l = scheme.block_begin(k); l < scheme.block_end(k); ++l) a += population_w(u[l], u[l + 1]);
    sum_sq += a * a;
  }
  return sum_sq / static_cast<double>(scheme.m * scheme.q);
}

inline VBMoments mc_vb_moments(std::size_t n, std::size_t q, std::size_t num_samples, std::uint64_t seed,
                               RankSource source = RankSource::Population, unsigned threads = 0) {
  require(num_samples >= 2, ErrorCode::InvalidArgument, "need at least two samples");
  const BlockScheme scheme = build_block_scheme(n, q);
  const rng::CounterRng gen(seed, rng::Domain::Moments);
  std::vector<double> vb(num_samples);
  parallel_for(num_samples, threads, [&](std::size_t s) { vb[s] = simulate_vb(scheme, gen, s, source); });

  VBMoments out;
  out.scheme = scheme;
  out.samples = num_samples;
  const auto [mean, mean_se] = detail::mean_and_se(vb);
  out.mean = mean;
  out.mean_se = mean_se;
  const double count = static_cast<double>(num_samples);
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : vb) {
    const double d2 = (v - mean) * (v - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  out.variance = m2 / (count - 1.0);
  // Delta-method standard error of the sample variance.
  const double central4 = m4 / count;
  const double pop_var = m2 / count;
  out.variance_se = std::sqrt(std::max(0.0, central4 - pop_var * pop_var) / count);
  const double m = static_cast<double>(scheme.m);
  out.scaled_variance = m * out.variance;
  out.scaled_variance_se = m * out.variance_se;
  return out;
}

}  // namespace xicor::sim
