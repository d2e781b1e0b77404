#pragma once

// Command-line front end: test, screen, blocksize, simulate.
// Exit codes: 0 ok, 2 usage or I/O failure, 3 statistical precondition.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xicor/block_size.hpp"
#include "xicor/io.hpp"
#include "xicor/simlab.hpp"
#include "xicor/testing.hpp"

namespace xicor::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitStatistical = 3;

namespace detail {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::size_t parse_positive(const std::string& token, const std::string& what) {
  std::size_t value = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size() || value == 0) {
    throw UsageError(what + ": expected a positive integer, got '" + token + "'");
  }
  return value;
}

/// "auto", "3", "1,2,5", "1:10", or any comma-separated mix.
inline std::vector<std::optional<std::size_t>> parse_q_list(const std::string& spec) {
  std::vector<std::optional<std::size_t>> out;
  std::stringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token == "auto") {
      out.emplace_back(std::nullopt);
    } else if (const auto colon = token.find(':'); colon != std::string::npos) {
      const auto lo = parse_positive(token.substr(0, colon), "--q");
      const auto hi = parse_positive(token.substr(colon + 1), "--q");
      if (hi < lo) throw UsageError("--q: empty range '" + token + "'");
      for (auto q = lo; q <= hi; ++q) out.emplace_back(q);
    } else {
      out.emplace_back(parse_positive(token, "--q"));
    }
  }
  if (out.empty()) throw UsageError("--q: empty value");
  return out;
}

inline std::optional<std::size_t> parse_q_single(const std::string& spec) {
  if (spec == "auto") return std::nullopt;
  return parse_positive(spec, "--q");
}

inline const CLI::Validator& open_unit_interval() {
  static const CLI::Validator v(
      [](std::string& s) -> std::string {
        try {
          const double a = std::stod(s);
          if (a > 0.0 && a < 1.0) return {};
        } catch (...) {
        }
        return "value must lie strictly between 0 and 1, got " + s;
      },
      "(0,1)");
  return v;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io::InputError("cannot write '" + path + "'");
  f << text;
}

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ShapeMismatch:
      return kExitUsage;
    default:
      return kExitStatistical;
  }
}

/// Options shared by `test` and `screen`.
struct RunOptions {
  std::string input;
  std::string x_col = "0";
  std::string delimiter;
  double alpha = 0.05;
  std::size_t b_reps = 999;
  std::string q = "auto";
  std::string studentize = "fixed";
  std::uint64_t seed = 0;
  std::string ties = "error";
  double jitter_scale = 1e-9;
  std::string storage = "dense";
  std::size_t memory_cap_mb = 1024;
  unsigned threads = 0;
  std::string out_json;
  std::string out_csv;
};

inline void add_run_options(CLI::App& cmd, RunOptions& o) {
  cmd.add_option("input", o.input, "Delimited matrix file with a header row")->required();
  cmd.add_option("--x-col", o.x_col, "Name or 0-based index of the X column")->capture_default_str();
  cmd.add_option("--delimiter", o.delimiter, "Field separator: comma or tab (default: by extension)")
      ->check(CLI::IsMember({"comma", "tab", ",", "\\t"}));
  cmd.add_option("--alpha", o.alpha, "Nominal level")->check(open_unit_interval())->capture_default_str();
  cmd.add_option("--bootstrap,-B", o.b_reps, "Bootstrap replications")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--q", o.q, "Big-block length: auto or a positive integer")->capture_default_str();
  cmd.add_option("--studentize", o.studentize, "none | fixed | empirical")
      ->check(CLI::IsMember({"none", "fixed", "empirical", "bmb0", "bmb1", "bmb2"}))
      ->capture_default_str();
  cmd.add_option("--seed", o.seed, "Seed for multipliers and jitter")->capture_default_str();
  cmd.add_option("--ties", o.ties, "error | jitter")->check(CLI::IsMember({"error", "jitter"}))->capture_default_str();
  cmd.add_option("--jitter-scale", o.jitter_scale, "Jitter amplitude relative to the smallest gap")
      ->check(CLI::Range(1e-300, 0.2))
      ->capture_default_str();
  cmd.add_option("--storage", o.storage, "dense | streaming")
      ->check(CLI::IsMember({"dense", "streaming"}))
      ->capture_default_str();
  cmd.add_option("--memory-cap-mb", o.memory_cap_mb, "Dense draws beyond this size switch to streaming")
      ->capture_default_str();
  cmd.add_option("--threads", o.threads, "Worker threads (0: XICOR_THREADS or hardware)")->capture_default_str();
  cmd.add_option("--out-json", o.out_json, "Write the JSON summary here instead of stdout");
  cmd.add_option("--out-csv", o.out_csv, "Write the per-hypothesis CSV here");
}

inline TestConfig make_config(const RunOptions& o, io::RunEcho& echo) {
  TestConfig cfg;
  cfg.bootstrap.b_reps = o.b_reps;
  cfg.bootstrap.q = parse_q_single(o.q);
  cfg.bootstrap.studentize = *parse_studentize(o.studentize);
  cfg.bootstrap.alpha = o.alpha;
  cfg.bootstrap.seed = o.seed;
  cfg.bootstrap.storage = o.storage == "dense" ? Storage::Dense : Storage::Streaming;
  cfg.bootstrap.memory_cap_bytes = o.memory_cap_mb << 20;
  cfg.bootstrap.threads = o.threads;
  cfg.tie_break.policy = o.ties == "jitter" ? TiePolicy::Jitter : TiePolicy::Error;
  cfg.tie_break.jitter_relative_scale = o.jitter_scale;
  cfg.tie_break.seed = o.seed;
  cfg.tie_break.threads = o.threads;
  echo.q_requested = o.q;
  echo.ties = o.ties;
  echo.jitter_scale = o.jitter_scale;
  echo.x_col = o.x_col;
  return cfg;
}

inline PairedSample load(const RunOptions& o) {
  std::optional<char> delim;
  if (o.delimiter == "tab" || o.delimiter == "\\t") delim = '\t';
  if (o.delimiter == "comma" || o.delimiter == ",") delim = ',';
  PairedSample sample = io::read_matrix_file(o.input, o.x_col, delim);
  sample.validate();
  return sample;
}

inline void emit_json(const nlohmann::ordered_json& j, const std::string& path, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

inline int cmd_test(const RunOptions& o, std::ostream& out) {
  io::RunEcho echo;
  const TestConfig cfg = make_config(o, echo);
  const TestResult res = max_test(load(o), cfg);
  emit_json(io::to_json(res, cfg.bootstrap, echo), o.out_json, out);
  if (!o.out_csv.empty()) {
    std::ostringstream csv;
    io::write_hypotheses_csv(csv, res.per_hypothesis);
    write_text(o.out_csv, csv.str());
  }
  return kExitOk;
}

inline int cmd_screen(const RunOptions& o, std::ostream& out) {
  io::RunEcho echo;
  const TestConfig cfg = make_config(o, echo);
  const StepdownResult res = stepdown(load(o), cfg);
  emit_json(io::to_json(res, cfg.bootstrap, echo), o.out_json, out);
  if (!o.out_csv.empty()) {
    std::ostringstream csv;
    io::write_rejections_csv(csv, res);
    write_text(o.out_csv, csv.str());
  }
  return kExitOk;
}

inline int cmd_blocksize(long long n_arg, bool grid, std::ostream& out) {
  if (n_arg < 3) throw UsageError("--n must be an integer >= 3");
  const auto n = static_cast<std::size_t>(n_arg);
  const BlockSizeTable t = block_size_table(n);
  out << "n: " << n << '\n'
      << "q_star: " << t.q_star << '\n'
      << "q_tilde: " << io::format_double(t.q_tilde) << '\n'
      << "q_star_fast: " << q_star_fast(n) << '\n'
      << "v_n: " << io::format_double(v_n(n)) << '\n'
      << "mse_at_q_star: " << io::format_double(t.mse_at_qstar) << '\n';
  if (grid) {
    out << "\nq,m,var_vb,bias_squared,mse\n";
    for (std::size_t q = 1; q <= max_block_length(n); ++q) {
      const std::size_t m = (n - 1) / (q + 1);
      const double bias = e_vb(q) - v_n(n);
      out << q << ',' << m << ',' << io::format_double(var_vb(q, m)) << ',' << io::format_double(bias * bias)
          << ',' << io::format_double(mse(n, q)) << '\n';
    }
  }
  return kExitOk;
}

struct SimulateOptions {
  int model = 1;
  std::size_t n = 500;
  std::size_t p = 10;
  double rho = 0.0;
  double tau = 0.0;
  std::string q = "auto";
  std::string variant = "bmb1";
  std::size_t replications = 500;
  std::size_t b_reps = 199;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
};

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  sim::ModelSpec spec;
  spec.model = static_cast<sim::Model>(o.model);
  spec.n = o.n;
  spec.p = o.p;
  spec.rho = o.rho;
  spec.tau = o.tau;
  sim::StudyConfig cfg;
  cfg.q_grid = parse_q_list(o.q);
  cfg.variant = *parse_studentize(o.variant);
  cfg.replications = o.replications;
  cfg.b_reps = o.b_reps;
  cfg.alpha = o.alpha;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  std::vector<sim::MCResult> rows;
  try {
    rows = sim::run_rejection_study(spec, cfg);
  } catch (const Error& e) {
    // Every failure here traces back to the requested grid.
    throw UsageError(std::string("invalid simulation grid: ") + e.what());
  }
  std::ostringstream csv;
  sim::write_study_csv_header(csv);
  for (const auto& r : rows) sim::write_study_csv_row(csv, r);
  if (o.out.empty()) {
    out << csv.str();
  } else {
    write_text(o.out, csv.str());
  }
  return kExitOk;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"xicor: max-of-Chatterjee independence test with a block multiplier bootstrap"};
  app.require_subcommand(1);

  detail::RunOptions test_opts;
  auto* test_cmd = app.add_subcommand("test", "Joint test of independence of X from every hypothesis column");
  detail::add_run_options(*test_cmd, test_opts);

  detail::RunOptions screen_opts;
  auto* screen_cmd = app.add_subcommand("screen", "Stepdown selection of columns that depend on X (FWER control)");
  detail::add_run_options(*screen_cmd, screen_opts);

  long long block_n = 0;
  bool block_grid = false;
  auto* block_cmd = app.add_subcommand("blocksize", "MSE-optimal big-block length for a sample size");
  block_cmd->add_option("--n", block_n, "Sample size")->required();
  block_cmd->add_flag("--grid", block_grid, "Also print the MSE over every admissible q");

  detail::SimulateOptions sim_opts;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo rejection rates for the simulation designs");
  sim_cmd->add_option("--model", sim_opts.model, "1, 2 or 3")->check(CLI::IsMember({1, 2, 3}))->capture_default_str();
  sim_cmd->add_option("--n", sim_opts.n, "Sample size")->check(CLI::Range(3, 100000000))->capture_default_str();
  sim_cmd->add_option("--p", sim_opts.p, "Number of hypothesis columns")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--rho", sim_opts.rho, "Signal strength")->capture_default_str();
  sim_cmd->add_option("--tau", sim_opts.tau, "Correlation among hypothesis columns")->capture_default_str();
  sim_cmd->add_option("--q", sim_opts.q, "auto, an integer, a list 1,2,3 or a range 1:10")->capture_default_str();
  sim_cmd->add_option("--variant", sim_opts.variant, "bmb0 | bmb1 | bmb2")
      ->check(CLI::IsMember({"bmb0", "bmb1", "bmb2", "none", "fixed", "empirical"}))
      ->capture_default_str();
  sim_cmd->add_option("--S", sim_opts.replications, "Monte Carlo replications")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--B", sim_opts.b_reps, "Bootstrap replications")->check(CLI::PositiveNumber)->capture_default_str();
  sim_cmd->add_option("--alpha", sim_opts.alpha, "Nominal level")
      ->check(detail::open_unit_interval())
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim_opts.seed, "Seed")->capture_default_str();
  sim_cmd->add_option("--threads", sim_opts.threads, "Worker threads (0: XICOR_THREADS or hardware)");
  sim_cmd->add_option("--out", sim_opts.out, "Write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << failing->help();
    return kExitUsage;
  }

  try {
    if (*test_cmd) return detail::cmd_test(test_opts, out);
    if (*screen_cmd) return detail::cmd_screen(screen_opts, out);
    if (*block_cmd) return detail::cmd_blocksize(block_n, block_grid, out);
    if (*sim_cmd) return detail::cmd_simulate(sim_opts, out);
  } catch (const detail::UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const io::InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return detail::exit_code_for(e);
  }
  return kExitUsage;
}

/// Convenience overload for tests.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"xicor"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace xicor::cli
