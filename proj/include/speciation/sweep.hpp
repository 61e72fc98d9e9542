#pragma once

// Concentration sweeps and their CSV form.

#include "conservation.hpp"
#include "equilibrium.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace speciation {

/// Solves one mixture: totals by moiety name, ionic correction per cfg.
inline EquilibriumState solve_mixture(const Scheme& scheme, const ConservationLaws& laws,
                                      const std::map<std::string, double>& totals, const SolverConfig& cfg = {}) {
  const auto moieties = with_totals(laws, totals);
  return solve_with_ionic_correction(scheme, moieties, cfg);
}

struct SweepSpec {
  std::string vary;
  double from = 0.1;
  double to = 0.3;
  double step = 0.0;  // either step or points
  int points = 0;
  std::map<std::string, double> fixed;

  void validate() const {
    if (vary.empty()) throw std::invalid_argument("sweep needs a varying moiety");
    if (fixed.count(vary)) throw std::invalid_argument("moiety '" + vary + "' is both varied and fixed");
    if (!(from <= to)) throw std::invalid_argument("sweep needs from <= to");
    if ((step > 0.0) == (points > 0)) throw std::invalid_argument("give exactly one of step > 0 or points > 0");
    if (points == 1 && from != to) throw std::invalid_argument("a single-point sweep needs from == to");
    auto in_range = [](double c) { return c > 0.0 && c <= 1.0; };
    if (!in_range(from) || !in_range(to)) throw std::invalid_argument("sweep totals must lie in (0, 1] mol/L");
    for (const auto& [name, c] : fixed) {
      if (!in_range(c)) throw std::invalid_argument("total of '" + name + "' must lie in (0, 1] mol/L");
    }
  }

  /// Grid values computed as from + i * h, never by accumulation.
  std::vector<double> grid() const {
    validate();
    std::vector<double> g;
    if (points > 0) {
      if (points == 1) return {from};
      const double h = (to - from) / (points - 1);
      for (int i = 0; i < points; ++i) g.push_back(i + 1 == points ? to : from + i * h);
      return g;
    }
    const double count = std::floor((to - from) / step + 1e-9);
    for (int i = 0; i <= static_cast<int>(count); ++i) g.push_back(from + i * step);
    return g;
  }
};

struct SweepRow {
  double value = 0.0;
  EquilibriumState state;
  std::string status;  // "ok", "not-converged" or "error: ..."
  bool ok() const { return status == "ok"; }
};

/// Runs every grid point; failures become rows, not exceptions. With more
/// than one thread the rows still come back in grid order.
inline std::vector<SweepRow> run_sweep(const Scheme& scheme, const ConservationLaws& laws, const SweepSpec& spec,
                                       const SolverConfig& cfg = {}, unsigned threads = 1) {
  const auto grid = spec.grid();
  if (!laws.find(spec.vary)) throw std::invalid_argument("scheme has no moiety '" + spec.vary + "'");
  std::vector<SweepRow> rows(grid.size());
  auto solve_point = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.value = grid[i];
    auto totals = spec.fixed;
    totals[spec.vary] = grid[i];
    try {
      SolverConfig local = cfg;
      local.trace = nullptr;
      row.state = solve_mixture(scheme, laws, totals, local);
      row.status = row.state.converged ? "ok" : "not-converged";
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(grid.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) solve_point(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < grid.size(); i = next++) solve_point(i);
    });
  }
  for (auto& th : pool) th.join();
  return rows;
}

namespace detail {

inline std::string fixed(double v, int precision) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

inline std::string scientific(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

inline std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace detail

inline void write_sweep_csv(std::ostream& os, const SweepSpec& spec, const std::vector<SweepRow>& rows, int precision = 4) {
  os << "C_" << spec.vary;
  for (const auto& [name, v] : spec.fixed) os << ",C_" << name;
  os << ",pH,pH_a,pH_I0,I,gamma,status,newton_iters,corr_iters\n";
  for (const auto& row : rows) {
    const auto& s = row.state;
    os << detail::scientific(row.value);
    for (const auto& [name, v] : spec.fixed) os << ',' << detail::scientific(v);
    const bool have = row.status.rfind("error", 0) != 0;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    os << ',' << detail::fixed(have ? s.pH : nan, precision) << ',' << detail::fixed(have ? s.pH_a : nan, precision) << ','
       << detail::fixed(have ? s.pH_I0 : nan, precision) << ',' << detail::scientific(have ? s.I : nan) << ','
       << detail::fixed(have ? s.gamma : nan, precision) << ',' << detail::csv_safe(row.status) << ',' << s.newton_iters
       << ',' << s.correction_iters << '\n';
  }
}

/// Reads two named numeric columns from a CSV with a header row. Rows whose
/// status column (if any) is not "ok" are skipped.
inline std::pair<std::vector<double>, std::vector<double>> read_csv_columns(std::istream& is, const std::string& x_name,
                                                                            const std::string& y_name) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("CSV input is empty");
  const auto header = split(line);
  auto column = [&](const std::string& name) -> std::ptrdiff_t {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const auto xi = column(x_name);
  const auto yi = column(y_name);
  const auto si = column("status");
  if (xi < 0) throw std::invalid_argument("CSV has no column '" + x_name + "'");
  if (yi < 0) throw std::invalid_argument("CSV has no column '" + y_name + "'");

  std::pair<std::vector<double>, std::vector<double>> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (static_cast<std::ptrdiff_t>(cells.size()) <= std::max(xi, yi)) {
      throw std::invalid_argument("CSV line " + std::to_string(line_no) + " is short");
    }
    if (si >= 0 && static_cast<std::ptrdiff_t>(cells.size()) > si && cells[static_cast<std::size_t>(si)] != "ok") continue;
    try {
      out.first.push_back(std::stod(cells[static_cast<std::size_t>(xi)]));
      out.second.push_back(std::stod(cells[static_cast<std::size_t>(yi)]));
    } catch (const std::exception&) {
      throw std::invalid_argument("CSV line " + std::to_string(line_no) + " has a non-numeric value");
    }
  }
  return out;
}

}  // namespace speciation
