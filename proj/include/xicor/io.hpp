#pragma once

// Wide-format matrix ingestion and JSON/CSV serialization of results.
// Requires the single-header nlohmann/json (vendor/json.hpp) on the include path.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "xicor/rank.hpp"
#include "xicor/testing.hpp"

namespace xicor::io {

/// Unreadable or malformed input; distinct from statistical preconditions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest representation that round-trips.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

inline char delimiter_for(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot != std::string::npos) {
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == "tsv" || ext == "tab" || ext == "txt") return '\t';
  }
  return ',';
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

inline std::optional<double> parse_real(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace detail

/// Reads a delimited table with a header row. `x_col` is a column name or a
/// 0-based index; every other column becomes a hypothesis.
inline PairedSample read_matrix(std::istream& in, const std::string& x_col, char delim,
                                const std::string& source = "input") {
  std::string line;
  if (!std::getline(in, line)) throw InputError(source + ": empty file, expected a header row");
  const auto header_views = detail::split(line, delim);
  std::vector<std::string> header(header_views.begin(), header_views.end());

  std::optional<std::size_t> x_index;
  if (const auto it = std::find(header.begin(), header.end(), x_col); it != header.end()) {
    x_index = static_cast<std::size_t>(it - header.begin());
  } else if (!x_col.empty() && std::all_of(x_col.begin(), x_col.end(), [](unsigned char c) { return std::isdigit(c); })) {
    x_index = std::stoul(x_col);
  }
  if (!x_index || *x_index >= header.size()) {
    throw InputError(source + ": x column '" + x_col + "' not found in header");
  }
  if (header.size() < 2) throw InputError(source + ": need the x column and at least one hypothesis column");

  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != *x_index) names.push_back(header[c].empty() ? "col" + std::to_string(c) : header[c]);
  }

  std::vector<double> x;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, delim);
    if (cells.size() != header.size()) {
      throw InputError(source + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                       " cells, header has " + std::to_string(header.size()));
    }
    std::vector<double> row;
    row.reserve(names.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto value = detail::parse_real(cells[c]);
      if (!value) {
        throw InputError(source + ": row " + std::to_string(line_no) + ", column '" + header[c] +
                         "': cannot parse '" + std::string(cells[c]) + "' as a finite real");
      }
      if (c == *x_index) {
        x.push_back(*value);
      } else {
        row.push_back(*value);
      }
    }
    rows.push_back(std::move(row));
  }

  Eigen::MatrixXd y(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  PairedSample sample;
  sample.x = std::move(x);
  sample.y = std::move(y);
  sample.names = std::move(names);
  return sample;
}

inline PairedSample read_matrix_file(const std::string& path, const std::string& x_col,
                                     std::optional<char> delim = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_matrix(in, x_col, delim.value_or(delimiter_for(path)), path);
}

/// Echo of every setting that determines the result, for bit-exact reruns.
struct RunEcho {
  std::string q_requested = "auto";
  std::string ties = "error";
  double jitter_scale = 1e-9;
  std::string x_col;
};

inline nlohmann::ordered_json config_json(const BootstrapConfig& cfg, Storage storage, const RunEcho& echo) {
  nlohmann::ordered_json j;
  j["alpha"] = cfg.alpha;
  j["bootstrap"] = cfg.b_reps;
  j["q"] = echo.q_requested;
  j["studentize"] = std::string(to_string(cfg.studentize));
  j["seed"] = cfg.seed;
  j["ties"] = echo.ties;
  j["jitter_scale"] = echo.jitter_scale;
  j["storage"] = storage == Storage::Dense ? "dense" : "streaming";
  j["x_col"] = echo.x_col;
  return j;
}

inline nlohmann::ordered_json to_json(const TestResult& r, const BootstrapConfig& cfg, const RunEcho& echo) {
  nlohmann::ordered_json j;
  j["procedure"] = "max_test";
  j["t_stat"] = r.t_stat;
  j["critical"] = r.critical;
  j["reject"] = r.reject;
  j["p_value"] = r.p_value;
  j["n"] = r.n;
  j["p"] = r.per_hypothesis.size();
  j["q_used"] = r.q_used;
  j["m"] = r.m;
  j["r"] = r.r;
  j["variant"] = std::string(variant_name(r.mode));
  std::size_t best = 0;
  for (std::size_t k = 1; k < r.per_hypothesis.size(); ++k) {
    if (r.per_hypothesis[k].statistic > r.per_hypothesis[best].statistic) best = k;
  }
  if (!r.per_hypothesis.empty()) {
    j["argmax"] = {{"name", r.per_hypothesis[best].name},
                   {"xi", r.per_hypothesis[best].xi},
                   {"statistic", r.per_hypothesis[best].statistic}};
  }
  j["config"] = config_json(cfg, r.storage, echo);
  return j;
}

/// Per-step counts only; the rejected names go to the CSV.
inline nlohmann::ordered_json to_json(const StepdownResult& r, const BootstrapConfig& cfg, const RunEcho& echo) {
  nlohmann::ordered_json j;
  j["procedure"] = "stepdown";
  j["n"] = r.n;
  j["p"] = r.per_hypothesis.size();
  j["q_used"] = r.q_used;
  j["m"] = r.m;
  j["r"] = r.r;
  j["variant"] = std::string(variant_name(r.mode));
  auto steps = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < r.steps.size(); ++s) {
    const auto& st = r.steps[s];
    nlohmann::ordered_json o;
    o["step"] = s;
    o["active"] = st.active.size();
    o["t_stat"] = st.t_stat;
    o["critical"] = st.critical;
    o["rejected"] = st.rejected.size();
    steps.push_back(std::move(o));
  }
  j["steps"] = std::move(steps);
  j["n_rejected"] = r.final_rejected.size();
  j["n_survivors"] = r.final_survivors.size();
  j["config"] = config_json(cfg, r.storage, echo);
  return j;
}

inline void write_hypotheses_csv(std::ostream& os, const std::vector<HypothesisRecord>& records) {
  os << "name,xi,statistic\n";
  for (const auto& h : records) os << h.name << ',' << format_double(h.xi) << ',' << format_double(h.statistic) << '\n';
}

/// Rejected hypotheses, strongest first, with the step that rejected each.
inline void write_rejections_csv(std::ostream& os, const StepdownResult& r) {
  std::vector<std::pair<std::size_t, std::size_t>> rows;  // (index, step)
  for (std::size_t s = 0; s < r.steps.size(); ++s) {
    for (auto j : r.steps[s].rejected) rows.emplace_back(j, s);
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
    return r.per_hypothesis[a.first].statistic > r.per_hypothesis[b.first].statistic;
  });
  os << "name,index,xi,statistic,step\n";
  for (const auto& [j, s] : rows) {
    const auto& h = r.per_hypothesis[j];
    os << h.name << ',' << j << ',' << format_double(h.xi) << ',' << format_double(h.statistic) << ',' << s << '\n';
  }
}

}  // namespace xicor::io
