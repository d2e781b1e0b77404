#pragma once

// The joint max-test over all hypothesis columns and the stepdown
// screening procedure that controls the family-wise error rate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "xicor/block_size.hpp"
#include "xicor/bootstrap.hpp"
#include "xicor/error.hpp"
#include "xicor/rank.hpp"

namespace xicor {

struct BootstrapConfig {
  std::size_t b_reps = 999;
  std::optional<std::size_t> q;  ///< nullopt selects q_star(n)
  Studentize studentize = Studentize::Fixed;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  Storage storage = Storage::Dense;
  /// Dense storage falls back to streaming when B * p doubles exceed this.
  std::size_t memory_cap_bytes = std::size_t{1} << 30;
  unsigned threads = 0;

  void validate() const {
    require(b_reps >= 1, ErrorCode::InvalidArgument, "bootstrap replications must be >= 1");
    require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    require(!q || *q >= 1, ErrorCode::InvalidArgument, "block length q must be >= 1");
  }
};

struct TestConfig {
  BootstrapConfig bootstrap;
  TieBreakConfig tie_break;
};

struct HypothesisRecord {
  std::string name;
  double xi = 0.0;
  double statistic = 0.0;
};

struct TestResult {
  double t_stat = 0.0;
  double critical = 0.0;
  bool reject = false;
  double p_value = 1.0;
  std::vector<HypothesisRecord> per_hypothesis;
  std::size_t n = 0;
  std::size_t q_used = 0;
  std::size_t m = 0;
  std::size_t r = 0;
  Studentize mode = Studentize::Fixed;
  Storage storage = Storage::Dense;
  std::size_t b_reps = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

struct StepRecord {
  std::vector<std::size_t> active;
  double t_stat = 0.0;
  double critical = 0.0;
  std::vector<std::size_t> rejected;
};

struct StepdownResult {
  std::vector<StepRecord> steps;
  std::vector<std::size_t> final_rejected;
  std::vector<std::size_t> final_survivors;
  std::vector<HypothesisRecord> per_hypothesis;
  std::size_t n = 0;
  std::size_t q_used = 0;
  std::size_t m = 0;
  std::size_t r = 0;
  Studentize mode = Studentize::Fixed;
  Storage storage = Storage::Dense;
  std::size_t b_reps = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

/// Everything both procedures share: per-hypothesis statistics and one set
/// of bootstrap draws reused for every subset.
struct BootstrapContext {
  BlockScheme scheme;
  std::vector<std::string> names;
  std::vector<double> xi;
  std::vector<double> statistics;
  BootstrapDraws draws;
};

inline Storage resolve_storage(const BootstrapConfig& cfg, std::size_t p) {
  if (cfg.storage == Storage::Streaming) return Storage::Streaming;
  const double bytes = static_cast<double>(cfg.b_reps) * static_cast<double>(p) * sizeof(double);
  return bytes > static_cast<double>(cfg.memory_cap_bytes) ? Storage::Streaming : Storage::Dense;
}

/// sqrt(n) xi_j, divided by sqrt(v_n) for the studentized variants.
inline double scaled_statistic(double xi_value, std::size_t n, Studentize mode) {
  const double root_n = std::sqrt(static_cast<double>(n));
  if (mode == Studentize::None) return root_n * xi_value;
  return root_n * xi_value / std::sqrt(v_n(n));
}

inline BootstrapContext prepare_bootstrap(const PairedSample& input, const TestConfig& cfg) {
  cfg.bootstrap.validate();
  const PairedSample sample = resolve_ties(input, cfg.tie_break);
  const unsigned threads = cfg.bootstrap.threads;
  const std::size_t n = sample.n();
  const std::size_t q = cfg.bootstrap.q.value_or(q_star(n));
  const BlockScheme scheme = build_block_scheme(n, q);

  const ConcomitantRanks u = concomitant_ranks(sample, threads);
  std::vector<double> xi_values = xi_all(u, threads);
  std::vector<double> stats(xi_values.size());
  for (std::size_t j = 0; j < stats.size(); ++j) {
    stats[j] = scaled_statistic(xi_values[j], n, cfg.bootstrap.studentize);
  }

  const RowMatrix a = block_sums(compute_what(u), scheme);
  RowMatrix eps = draw_multipliers(cfg.bootstrap.b_reps, scheme.m, cfg.bootstrap.seed, threads);
  BootstrapDraws draws = bootstrap_statistics(a, scheme, std::move(eps), cfg.bootstrap.studentize,
                                              resolve_storage(cfg.bootstrap, sample.p()), threads);
  return {scheme, sample.names, std::move(xi_values), std::move(stats), std::move(draws)};
}

namespace detail {

inline std::vector<HypothesisRecord> hypothesis_records(const BootstrapContext& ctx) {
  std::vector<HypothesisRecord> out;
  out.reserve(ctx.xi.size());
  for (std::size_t j = 0; j < ctx.xi.size(); ++j) out.push_back({ctx.names[j], ctx.xi[j], ctx.statistics[j]});
  return out;
}

inline double max_over(const std::vector<double>& values, const std::vector<std::size_t>& subset) {
  double best = values[subset.front()];
  for (auto j : subset) best = std::max(best, values[j]);
  return best;
}

}  // namespace detail

/// (1 + #{b : maxima_b >= t}) / (B + 1).
inline double bootstrap_p_value(const std::vector<double>& maxima, double t_stat) {
  const auto exceed = std::count_if(maxima.begin(), maxima.end(), [&](double v) { return v >= t_stat; });
  return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(maxima.size()) + 1.0);
}

inline TestResult max_test(const PairedSample& sample, const TestConfig& cfg) {
  const BootstrapContext ctx = prepare_bootstrap(sample, cfg);
  std::vector<std::size_t> all(ctx.xi.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::vector<double> maxima = ctx.draws.subset_max(all);

  TestResult res;
  res.t_stat = detail::max_over(ctx.statistics, all);
  res.critical = critical_value(maxima, cfg.bootstrap.alpha);
  res.reject = res.t_stat > res.critical;
  res.p_value = bootstrap_p_value(maxima, res.t_stat);
  res.per_hypothesis = detail::hypothesis_records(ctx);
  res.n = ctx.scheme.n;
  res.q_used = ctx.scheme.q;
  res.m = ctx.scheme.m;
  res.r = ctx.scheme.r;
  res.mode = cfg.bootstrap.studentize;
  res.storage = ctx.draws.storage();
  res.b_reps = cfg.bootstrap.b_reps;
  res.alpha = cfg.bootstrap.alpha;
  res.seed = cfg.bootstrap.seed;
  return res;
}

/// Stepdown over shrinking active sets. The draws are computed once, so
/// critical values can only fall from one step to the next.
inline StepdownResult stepdown(const BootstrapContext& ctx, double alpha) {
  StepdownResult res;
  std::vector<std::size_t> active(ctx.xi.size());
  std::iota(active.begin(), active.end(), std::size_t{0});
  while (!active.empty()) {
    StepRecord step;
    step.active = active;
    step.t_stat = detail::max_over(ctx.statistics, active);
    step.critical = critical_value(ctx.draws.subset_max(active), alpha);
    std::vector<std::size_t> survivors;
    if (step.t_stat > step.critical) {
      for (auto j : active) {
        (ctx.statistics[j] > step.critical ? step.rejected : survivors).push_back(j);
      }
    }
    const bool progressed = !step.rejected.empty();
    res.final_rejected.insert(res.final_rejected.end(), step.rejected.begin(), step.rejected.end());
    res.steps.push_back(std::move(step));
    if (!progressed) break;
    active = std::move(survivors);
  }
  std::sort(res.final_rejected.begin(), res.final_rejected.end());
  for (std::size_t j = 0; j < ctx.xi.size(); ++j) {
    if (!std::binary_search(res.final_rejected.begin(), res.final_rejected.end(), j)) {
      res.final_survivors.push_back(j);
    }
  }
  res.per_hypothesis = detail::hypothesis_records(ctx);
  res.n = ctx.scheme.n;
  res.q_used = ctx.scheme.q;
  res.m = ctx.scheme.m;
  res.r = ctx.scheme.r;
  res.mode = ctx.draws.mode();
  res.storage = ctx.draws.storage();
  res.b_reps = ctx.draws.b_reps();
  res.alpha = alpha;
  return res;
}

inline StepdownResult stepdown(const PairedSample& sample, const TestConfig& cfg) {
  StepdownResult res = stepdown(prepare_bootstrap(sample, cfg), cfg.bootstrap.alpha);
  res.seed = cfg.bootstrap.seed;
  return res;
}

}  // namespace xicor
