// speciate: solve, sweep, fit and check chemical-equilibrium schemes.

#include "speciation/speciation.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace {

using namespace speciation;

enum Exit { kOk = 0, kUsage = 1, kNoConvergence = 2, kCheckFailed = 3 };

struct Common {
  std::string scheme_file;
  std::string preset;
  std::vector<std::string> sets;
  std::vector<std::string> totals;
  bool no_ionic = false;
  double debye_A = 0.5093;
  double tol = 1e-10;
  int precision = 4;
  std::string out;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
  auto* scheme = cmd->add_option("--scheme", c.scheme_file, "Scheme file in the reaction DSL")->check(CLI::ExistingFile);
  auto* preset = cmd->add_option("--preset", c.preset, "Built-in scheme: tris-borate, acid-base, water");
  scheme->excludes(preset);
  cmd->add_option("--set", c.sets, "Preset constant override, e.g. pK6=8.08 (repeatable)");
  cmd->add_option("--total", c.totals, "Moiety total, NAME=mol/L (repeatable)");
  cmd->add_flag("--no-ionic", c.no_ionic, "Skip the ionic-strength correction");
  cmd->add_option("--debye-A", c.debye_A, "Debye-Hueckel constant A")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", c.tol, "Newton residual tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--precision", c.precision, "Decimals for pH-like output")->check(CLI::Range(0, 15));
  cmd->add_option("--out", c.out, "Write CSV to this path");
  cmd->add_flag("--verbose", c.verbose, "Print solver trace and diagnostics to stderr");
}

std::pair<std::string, double> split_assignment(const std::string& text, const char* what) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw CLI::ValidationError(what, "expected NAME=VALUE, got '" + text + "'");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text.substr(eq + 1), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() - eq - 1) throw CLI::ValidationError(what, "'" + text + "' has no numeric value");
  return {text.substr(0, eq), v};
}

std::map<std::string, double> assignments(const std::vector<std::string>& items, const char* what) {
  std::map<std::string, double> out;
  for (const auto& s : items) {
    auto [k, v] = split_assignment(s, what);
    out[k] = v;
  }
  return out;
}

struct Loaded {
  Scheme scheme;
  ConservationLaws laws;
  std::map<std::string, double> totals;
};

Loaded load(const Common& c) {
  std::string text;
  if (!c.scheme_file.empty()) {
    if (!c.sets.empty()) throw std::invalid_argument("--set applies to presets only");
    std::ifstream in(c.scheme_file);
    if (!in) throw std::invalid_argument("cannot read " + c.scheme_file);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  } else if (!c.preset.empty()) {
    text = presets::preset_text(c.preset, assignments(c.sets, "--set"));
  } else {
    throw std::invalid_argument("give --scheme <file> or --preset <name>");
  }
  auto doc = parse_document(text);
  Loaded out{doc.scheme, canonical_moieties(doc.scheme), {}};
  for (const auto& [name, v] : doc.totals) out.totals[name] = v;
  for (const auto& [name, v] : assignments(c.totals, "--total")) out.totals[name] = v;
  return out;
}

SolverConfig config(const Common& c) {
  SolverConfig cfg;
  cfg.ionic_correction = !c.no_ionic;
  cfg.activity = DebyeHuckel(c.debye_A);
  cfg.newton_tol = c.tol;
  if (c.verbose) cfg.trace = &std::cerr;
  return cfg;
}

std::string fixed(double v, int p) { return detail::fixed(v, p); }

void report_laws(const Loaded& L, bool verbose) {
  if (!verbose) return;
  for (const auto& d : L.laws.diagnostics) std::cerr << "note: " << d << '\n';
}

int cmd_solve(const Common& c) {
  const Loaded L = load(c);
  report_laws(L, c.verbose);
  const auto st = solve_mixture(L.scheme, L.laws, L.totals, config(c));
  const int p = c.precision;
  std::cout << "species " << L.scheme.species_count() << ", reactions " << L.scheme.reaction_count() << ", moieties";
  for (const auto& m : L.laws.moieties) std::cout << ' ' << m.name << '=' << detail::format_real(L.totals.at(m.name));
  std::cout << '\n';
  if (L.scheme.has_hydrogen()) {
    std::cout << "pH     " << fixed(st.pH, p) << '\n'
              << "pH_a   " << fixed(st.pH_a, p) << '\n'
              << "pH_I0  " << fixed(st.pH_I0, p) << '\n';
  }
  std::cout << "I      " << detail::scientific(st.I) << '\n'
            << "gamma  " << fixed(st.gamma, p) << '\n'
            << "newton iterations " << st.newton_iters << ", correction passes " << st.correction_iters << '\n';
  for (std::size_t k = 0; k < L.scheme.species_count(); ++k) {
    const auto& s = L.scheme.species(k);
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %-8s %+d  %s", s.name.c_str(), s.charge, detail::scientific(st.xi(static_cast<Eigen::Index>(k))).c_str());
    std::cout << buf << '\n';
  }
  if (c.verbose) {
    for (const auto& d : st.diagnostics) std::cerr << "note: " << d << '\n';
  }
  if (!c.out.empty()) {
    std::ofstream os(c.out);
    if (!os) throw std::invalid_argument("cannot write " + c.out);
    os << "species,charge,concentration\n";
    for (std::size_t k = 0; k < L.scheme.species_count(); ++k) {
      os << L.scheme.species(k).name << ',' << L.scheme.species(k).charge << ','
         << detail::scientific(st.xi(static_cast<Eigen::Index>(k))) << '\n';
    }
  }
  if (!st.converged) {
    std::cerr << "error: solver did not converge";
    for (const auto& d : st.diagnostics) std::cerr << "; " << d;
    std::cerr << '\n';
    return kNoConvergence;
  }
  return kOk;
}

struct SweepArgs {
  std::string vary;
  double from = 0.1, to = 0.3, step = 0.0;
  int points = 0;
  unsigned threads = 1;
};

void add_sweep(CLI::App* cmd, SweepArgs& s, bool required) {
  auto* vary = cmd->add_option("--vary", s.vary, "Moiety whose total is varied");
  if (required) vary->required();
  cmd->add_option("--from", s.from, "First total (mol/L)");
  cmd->add_option("--to", s.to, "Last total (mol/L)");
  auto* step = cmd->add_option("--step", s.step, "Grid step (mol/L)");
  auto* points = cmd->add_option("--points", s.points, "Number of evenly spaced grid points");
  step->excludes(points);
  cmd->add_option("--threads", s.threads, "Worker threads; row order is unaffected")->check(CLI::Range(1u, 256u));
}

std::vector<SweepRow> sweep(const Common& c, const SweepArgs& a, const Loaded& L, SweepSpec& spec) {
  spec.vary = a.vary;
  spec.from = a.from;
  spec.to = a.to;
  spec.step = a.step;
  spec.points = a.points;
  if (spec.step == 0.0 && spec.points == 0) spec.step = 0.02;
  for (const auto& [name, v] : L.totals) {
    if (name != a.vary) spec.fixed[name] = v;
  }
  return run_sweep(L.scheme, L.laws, spec, config(c), a.threads);
}

int cmd_sweep(const Common& c, const SweepArgs& a) {
  const Loaded L = load(c);
  report_laws(L, c.verbose);
  SweepSpec spec;
  const auto rows = sweep(c, a, L, spec);
  std::ofstream file;
  if (!c.out.empty()) {
    file.open(c.out);
    if (!file) throw std::invalid_argument("cannot write " + c.out);
  }
  write_sweep_csv(c.out.empty() ? std::cout : file, spec, rows, c.precision);
  std::size_t good = 0;
  for (const auto& r : rows) {
    if (r.ok()) ++good;
    else if (c.verbose) std::cerr << "C_" << spec.vary << '=' << r.value << ": " << r.status << '\n';
  }
  if (good == 0) {
    std::cerr << "error: every sweep point failed\n";
    return kNoConvergence;
  }
  return kOk;
}

int cmd_fit(const Common& c, const SweepArgs& a, const std::string& input, std::string x, const std::string& y, int degree) {
  std::vector<double> xs, ys;
  if (!input.empty()) {
    std::ifstream in(input);
    if (!in) throw std::invalid_argument("cannot read " + input);
    if (x.empty()) {
      std::string header;
      std::getline(in, header);
      x = header.substr(0, header.find(','));
      in.seekg(0);
    }
    std::tie(xs, ys) = read_csv_columns(in, x, y);
  } else {
    if (a.vary.empty()) throw std::invalid_argument("fit needs --input <csv> or a live sweep (--vary ...)");
    const Loaded L = load(c);
    SweepSpec spec;
    const auto rows = sweep(c, a, L, spec);
    x = "C_" + spec.vary;
    for (const auto& r : rows) {
      if (!r.ok()) continue;
      xs.push_back(r.value);
      ys.push_back(y == "pH" ? r.state.pH : y == "pH_I0" ? r.state.pH_I0 : r.state.pH_a);
    }
  }
  const auto fit = polyfit(xs, ys, degree);
  std::cout << "fit " << y << " ~ " << x << ", degree " << fit.degree << ", " << fit.samples << " points\n";
  for (std::size_t i = 0; i < fit.coefficients.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "c%zu      %.6f", i, fit.coefficients[i]);
    std::cout << buf << '\n';
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "sigma   %.6f\nmax_abs %.6f", fit.sigma, fit.max_abs);
  std::cout << buf << '\n';
  if (!c.out.empty()) {
    std::ofstream os(c.out);
    if (!os) throw std::invalid_argument("cannot write " + c.out);
    os << "term,value\n";
    for (std::size_t i = 0; i < fit.coefficients.size(); ++i) os << 'c' << i << ',' << detail::format_real(fit.coefficients[i]) << '\n';
    os << "sigma," << detail::format_real(fit.sigma) << "\nmax_abs," << detail::format_real(fit.max_abs) << "\nsamples," << fit.samples << '\n';
  }
  return kOk;
}

int cmd_check(const Common& c, std::vector<std::string> suites, bool oracle_only) {
  if (oracle_only) suites.push_back("oracle");
  CheckOptions opt;
  opt.overrides = assignments(c.sets, "--set");
  opt.cfg = config(c);
  opt.cfg.trace = nullptr;
  const auto cases = run_checks({suites.begin(), suites.end()}, opt);
  int failed = 0;
  for (const auto& k : cases) {
    if (!k.passed) ++failed;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-4s  %-10s  %-32s  ", k.passed ? "PASS" : "FAIL", k.suite.c_str(), k.name.c_str());
    std::cout << buf << k.detail << '\n';
  }
  std::cout << cases.size() - static_cast<std::size_t>(failed) << '/' << cases.size() << " passed\n";
  return failed == 0 ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chemical-equilibrium speciation: pH of buffer mixtures"};
  app.require_subcommand(1);
  Common common;
  SweepArgs sweep_args;

  auto* solve = app.add_subcommand("solve", "Solve one mixture");
  add_common(solve, common);

  auto* sweep_cmd = app.add_subcommand("sweep", "Solve a grid of totals and write CSV");
  add_common(sweep_cmd, common);
  add_sweep(sweep_cmd, sweep_args, true);

  auto* fit = app.add_subcommand("fit", "Least-squares polynomial fit of pH_a against a total");
  add_common(fit, common);
  add_sweep(fit, sweep_args, false);
  std::string input, x_column, y_column = "pH_a";
  int degree = 1;
  fit->add_option("--input", input, "Sweep CSV to fit instead of a live sweep")->check(CLI::ExistingFile);
  fit->add_option("--x", x_column, "CSV column for x (default: first column)");
  fit->add_option("--y", y_column, "Column for y")->check(CLI::IsMember({"pH", "pH_a", "pH_I0"}));
  fit->add_option("--degree", degree, "Polynomial degree")->check(CLI::IsMember({1, 2}));

  auto* check = app.add_subcommand("check", "Run verification suites");
  add_common(check, common);
  std::vector<std::string> suites;
  bool oracle_only = false;
  check->add_option("--suite", suites, "tables, crosscheck, jacobian, oracle (repeatable; default all)")
      ->check(CLI::IsMember(check_suites()));
  check->add_flag("--oracle", oracle_only, "Same as --suite oracle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*solve) return cmd_solve(common);
    if (*sweep_cmd) return cmd_sweep(common, sweep_args);
    if (*fit) return cmd_fit(common, sweep_args, input, x_column, y_column, degree);
    if (*check) return cmd_check(common, suites, oracle_only);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const SingularJacobian& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const IntegrationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
