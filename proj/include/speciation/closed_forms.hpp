#pragma once

// Reduced solution paths: the single-acid/single-base quadratic, a bracketed
// scalar solve for the same pair, and the three-unknown tris-borate system.

#include "activity.hpp"
#include "conservation.hpp"
#include "equilibrium.hpp"
#include "presets.hpp"

#include <Eigen/Core>
#include <Eigen/LU>

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace speciation {

enum class Electroneutrality {
  /// [HB+] - [A-] + [H+] - [OH-] = 0
  full,
  /// [HB+] - [A-] + [H+] = 0
  no_hydroxyl,
  /// [HB+] - [A-] = 0
  simplified,
};

struct AcidBasePair {
  double a = 0.1;  // acid total, mol/L
  double b = 0.1;  // base total, mol/L
  double pKa = 9.29;
  double pKb = 7.98;
  double pKw = 14.0;

  void validate() const {
    if (!(a > 0.0) || !(b > 0.0)) throw DegenerateInput("moiety absent from mixture: acid and base totals must be > 0");
    if (!std::isfinite(pKa) || !std::isfinite(pKb) || !std::isfinite(pKw)) throw std::invalid_argument("pK must be finite");
  }
};

/// Positive root of  Ka a / (Ka + h) = h b / (Kb + h), i.e.
/// h = Ka/2 (q - 1 + sqrt((q - 1)^2 + 4 q Kb/Ka)) with q = a/b.
/// The q < 1 branch is rationalised to avoid cancellation.
inline double henderson_h_plus(const AcidBasePair& pair) {
  pair.validate();
  const double Ka = std::pow(10.0, -pair.pKa);
  const double Kb = std::pow(10.0, -pair.pKb);
  const double q = pair.a / pair.b;
  const double d = q - 1.0;
  const double root = std::sqrt(d * d + 4.0 * q * Kb / Ka);
  if (d >= 0.0) return 0.5 * Ka * (d + root);
  return 2.0 * Kb * q / (root - d);
}

struct AcidBaseResult {
  /// Concentrations in the order of presets::acid_base().
  EquilibriumState state;
  double alpha = 0.0;  // [A-] / a
  double beta = 0.0;   // [HB+] / b
  double pKa_prime = 0.0;
  double pKb_prime = 0.0;
};

namespace detail {

// Charge balance as a function of pH; strictly decreasing.
struct AcidBaseBalance {
  const AcidBasePair& pair;
  double Ka, Kb, Kw;
  Electroneutrality mode;

  double operator()(double pH) const {
    const double h = std::pow(10.0, -pH);
    double f = pair.b * h / (Kb + h) - pair.a * Ka / (Ka + h);
    if (mode != Electroneutrality::simplified) f += h;
    if (mode == Electroneutrality::full) f -= Kw / h;
    return f;
  }
  double derivative(double pH) const {
    const double h = std::pow(10.0, -pH);
    double dfdh = pair.b * Kb / ((Kb + h) * (Kb + h)) + pair.a * Ka / ((Ka + h) * (Ka + h));
    if (mode != Electroneutrality::simplified) dfdh += 1.0;
    if (mode == Electroneutrality::full) dfdh += Kw / (h * h);
    return -std::numbers::ln10 * h * dfdh;
  }
};

inline double solve_acid_base_pH(const AcidBaseBalance& f) {
  double lo = 0.0;
  double hi = 14.0;
  double flo = f(lo);
  const double fhi = f(hi);
  if (!(flo > 0.0 && fhi < 0.0)) throw std::domain_error("no physical root: charge balance has no sign change in pH [0, 14]");
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double d = f.derivative(x);
    if (d == 0.0) break;
    const double next = x - f(x) / d;
    if (!(next >= lo - 1e-12 && next <= hi + 1e-12)) break;
    x = next;
  }
  return x;
}

}  // namespace detail

/// Scalar solve of the acid/base charge balance. With ionic correction the
/// constants are replaced by their ionic-strength-corrected values in a
/// fixed-point loop on pH.
inline AcidBaseResult acid_base_solve(const AcidBasePair& pair, Electroneutrality mode = Electroneutrality::full,
                                      bool with_ionic = false, const SolverConfig& cfg = {}) {
  pair.validate();
  const Scheme scheme = presets::acid_base(pair.pKa, pair.pKb, pair.pKw);
  const std::size_t water = 0, acid = 1, base = 2;
  const std::size_t iH = 0, iOH = *scheme.find("OH"), iHA = *scheme.find("HA"), iA = *scheme.find("A"),
                    iHB = *scheme.find("HB"), iB = *scheme.find("B");

  AcidBaseResult out;
  std::vector<double> pk{pair.pKw, pair.pKa, pair.pKb};
  auto solve_at = [&](const std::vector<double>& p) {
    detail::AcidBaseBalance f{pair, std::pow(10.0, -p[acid]), std::pow(10.0, -p[base]), std::pow(10.0, -p[water]), mode};
    return detail::solve_acid_base_pH(f);
  };
  auto concentrations = [&](double pH, const std::vector<double>& p) {
    const double h = std::pow(10.0, -pH);
    const double Ka = std::pow(10.0, -p[acid]);
    const double Kb = std::pow(10.0, -p[base]);
    Eigen::VectorXd xi(static_cast<Eigen::Index>(scheme.species_count()));
    const double alpha = Ka / (Ka + h);
    const double beta = h / (Kb + h);
    xi(static_cast<Eigen::Index>(iH)) = h;
    xi(static_cast<Eigen::Index>(iOH)) = std::pow(10.0, -p[water]) / h;
    xi(static_cast<Eigen::Index>(iA)) = alpha * pair.a;
    xi(static_cast<Eigen::Index>(iHA)) = (1.0 - alpha) * pair.a;
    xi(static_cast<Eigen::Index>(iHB)) = beta * pair.b;
    xi(static_cast<Eigen::Index>(iB)) = (1.0 - beta) * pair.b;
    out.alpha = alpha;
    out.beta = beta;
    return xi;
  };

  double pH = solve_at(pk);
  auto& st = out.state;
  st.pH_I0 = pH;
  st.xi = concentrations(pH, pk);
  st.I = 0.5 * (st.xi(static_cast<Eigen::Index>(iH)) + st.xi(static_cast<Eigen::Index>(iOH)) +
                st.xi(static_cast<Eigen::Index>(iA)) + st.xi(static_cast<Eigen::Index>(iHB)));
  st.converged = true;
  if (with_ionic) {
    st.converged = false;
    for (int it = 1; it <= cfg.max_correction_iters; ++it) {
      pk = corrected_pK(scheme, st.I, cfg.activity, cfg.correct_water);
      const double next = solve_at(pk);
      st.xi = concentrations(next, pk);
      st.I = 0.5 * (st.xi(static_cast<Eigen::Index>(iH)) + st.xi(static_cast<Eigen::Index>(iOH)) +
                    st.xi(static_cast<Eigen::Index>(iA)) + st.xi(static_cast<Eigen::Index>(iHB)));
      st.correction_iters = it;
      const bool settled = std::abs(next - pH) < cfg.correction_tol;
      pH = next;
      if (settled) {
        st.converged = true;
        break;
      }
    }
    if (!st.converged) st.diagnostics.push_back("ionic-strength correction did not settle");
  }
  st.pH = pH;
  st.u = st.xi.array().log().matrix();
  st.corrected_pK = pk;
  st.gamma = std::pow(10.0, cfg.activity.log10_gamma(1, st.I));
  st.pH_a = with_ionic ? activity_pH(st.xi(0), st.gamma) : pH;
  st.residual_norm = 0.0;
  out.pKa_prime = pk[acid];
  out.pKb_prime = pk[base];
  return out;
}

struct TrisBorateInputs {
  double C_B = 0.2;  // boric acid total, mol/L
  double C_T = 0.2;  // tris total, mol/L
  presets::TrisBorateConstants constants{};

  void validate() const {
    auto ok = [](double c) { return c > 0.0 && c <= 1.0; };
    if (!ok(C_B) || !ok(C_T)) throw std::invalid_argument("C_B and C_T must lie in (0, 1] mol/L");
  }
};

struct ReducedState {
  double X = 0.0;   // lg[HB]
  double Y = 0.0;   // lg[T]
  double pH = 0.0;  // -lg[H+]
  /// All concentrations in the order of presets::tris_borate().
  Eigen::VectorXd xi;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
  std::vector<std::string> diagnostics;
};

namespace detail {

// Each species of the reduced model as coef * [HB]^a [T]^b [H+]^c.
struct Monomial {
  const char* name;
  double coef;
  int a, b, c;
};

struct TrisBorateReduced {
  double C_B, C_T;
  std::array<Monomial, 10> species;

  TrisBorateReduced(const TrisBorateInputs& in, std::span<const double> pK6, double pKw) : C_B(in.C_B), C_T(in.C_T) {
    auto K = [&](std::size_t i) { return std::pow(10.0, -pK6[i]); };
    const double Kw = std::pow(10.0, -pKw);
    species = {{{"HB", 1.0, 1, 0, 0},
                {"B", K(0), 1, 0, -1},
                {"H3B3", K(1), 3, 0, 0},
                {"H2B3", K(1) * K(2), 3, 0, -1},
                {"T", 1.0, 0, 1, 0},
                {"HTB", K(3), 1, 1, 0},
                {"TB", K(3) * K(4), 1, 1, -1},
                {"HT", 1.0 / K(5), 0, 1, 1},
                {"H", 1.0, 0, 0, 1},
                {"OH", Kw, 0, 0, -1}}};
  }

  static constexpr std::array<int, 10> tris_weight{0, 0, 0, 0, 1, 1, 1, 1, 0, 0};
  static constexpr std::array<int, 10> boron_weight{1, 1, 3, 3, 0, 1, 1, 0, 0, 0};
  static constexpr std::array<int, 10> charge{0, -1, 0, -1, 0, 0, -1, 1, 1, -1};

  std::array<double, 10> values(const Eigen::Vector3d& v) const {
    std::array<double, 10> out{};
    for (std::size_t k = 0; k < species.size(); ++k) {
      const auto& m = species[k];
      out[k] = m.coef * std::pow(10.0, m.a * v(0) + m.b * v(1) - m.c * v(2));
    }
    return out;
  }

  Eigen::Vector3d residuals(const Eigen::Vector3d& v) const {
    const auto s = values(v);
    double ct = 0, cb = 0, p = 0, q = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      ct += tris_weight[k] * s[k];
      cb += boron_weight[k] * s[k];
      p += charge[k] * s[k];
      q += std::abs(charge[k]) * s[k];
    }
    return {ct / C_T - 1.0, cb / C_B - 1.0, p / q};
  }

  Eigen::Matrix3d jacobian(const Eigen::Vector3d& v) const {
    const auto s = values(v);
    Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
    double p = 0, q = 0;
    Eigen::RowVector3d dp = Eigen::RowVector3d::Zero(), dq = Eigen::RowVector3d::Zero();
    for (std::size_t k = 0; k < s.size(); ++k) {
      const auto& m = species[k];
      const Eigen::RowVector3d ds = std::numbers::ln10 * s[k] * Eigen::RowVector3d(m.a, m.b, -m.c);
      J.row(0) += tris_weight[k] * ds / C_T;
      J.row(1) += boron_weight[k] * ds / C_B;
      p += charge[k] * s[k];
      q += std::abs(charge[k]) * s[k];
      dp += charge[k] * ds;
      dq += std::abs(charge[k]) * ds;
    }
    J.row(2) = (dp * q - p * dq) / (q * q);
    return J;
  }
};

}  // namespace detail

/// Newton on (X, Y, pH) for the three balance equations of the tris-borate
/// scheme at fixed constants pK6 (reactions 1..6), then back-substitution to
/// all species. Falls back to the generic solver if Newton diverges.
inline ReducedState tris_borate_reduced_solve(const TrisBorateInputs& inputs, std::span<const double> pK6, double pKw,
                                              double tol = 1e-12) {
  inputs.validate();
  if (pK6.size() != 6) throw std::invalid_argument("tris-borate reduced solve needs six constants");
  const detail::TrisBorateReduced sys(inputs, pK6, pKw);
  ReducedState out;

  Eigen::Vector3d v(std::log10(inputs.C_B / 2.0), std::log10(inputs.C_T / 2.0), 8.0);
  Eigen::Vector3d f = sys.residuals(v);
  for (int it = 0; it < 100; ++it) {
    out.iterations = it;
    if (f.lpNorm<Eigen::Infinity>() < tol) {
      out.converged = true;
      break;
    }
    Eigen::Vector3d dv = sys.jacobian(v).partialPivLu().solve(-f);
    const double biggest = dv.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(biggest)) break;
    if (biggest > 2.0) dv *= 2.0 / biggest;
    double step = 1.0;
    Eigen::Vector3d trial = v + dv;
    Eigen::Vector3d ft = sys.residuals(trial);
    for (int h = 0; h < 30 && !(ft.allFinite() && ft.norm() < f.norm()); ++h) {
      step *= 0.5;
      trial = v + step * dv;
      ft = sys.residuals(trial);
    }
    if (!(ft.allFinite() && ft.norm() < f.norm())) break;
    v = trial;
    f = ft;
  }

  const Scheme scheme = presets::tris_borate(inputs.constants);
  out.xi.resize(static_cast<Eigen::Index>(scheme.species_count()));
  if (out.converged) {
    out.X = v(0);
    out.Y = v(1);
    out.pH = v(2);
    const auto s = sys.values(v);
    for (std::size_t k = 0; k < s.size(); ++k) out.xi(static_cast<Eigen::Index>(*scheme.find(sys.species[k].name))) = s[k];
    return out;
  }

  out.used_fallback = true;
  out.diagnostics.push_back("reduced newton diverged; used the generic solver");
  const auto laws = canonical_moieties(scheme);
  const auto moieties = with_totals(laws, {{"B", inputs.C_B}, {"T", inputs.C_T}});
  std::vector<double> pk{pKw};
  pk.insert(pk.end(), pK6.begin(), pK6.end());
  const auto st = newton_solve(scheme, moieties, pk);
  out.converged = st.converged;
  out.iterations += st.newton_iters;
  out.xi = st.xi;
  out.X = std::log10(st.xi(static_cast<Eigen::Index>(*scheme.find("HB"))));
  out.Y = std::log10(st.xi(static_cast<Eigen::Index>(*scheme.find("T"))));
  out.pH = st.pH;
  return out;
}

/// Ionic-strength correction loop driven by the reduced solver. The returned
/// state uses the species order of presets::tris_borate().
inline EquilibriumState tris_borate_corrected(const TrisBorateInputs& inputs, const SolverConfig& cfg = {}) {
  const Scheme scheme = presets::tris_borate(inputs.constants);
  std::vector<double> pk;
  for (const auto& rx : scheme.reactions()) pk.push_back(rx.pK);

  EquilibriumState st;
  auto run = [&](const std::vector<double>& p) {
    const auto red = tris_borate_reduced_solve(inputs, std::span<const double>(p).subspan(1), p[0]);
    st.newton_iters += red.iterations;
    st.xi = red.xi;
    st.pH = red.pH;
    st.converged = red.converged;
    st.diagnostics.insert(st.diagnostics.end(), red.diagnostics.begin(), red.diagnostics.end());
    st.I = ionic_strength(std::span<const double>(st.xi.data(), static_cast<std::size_t>(st.xi.size())), scheme.charges());
  };
  run(pk);
  st.pH_I0 = st.pH;
  if (cfg.ionic_correction && st.converged) {
    bool settled = false;
    for (int it = 1; it <= cfg.max_correction_iters && st.converged; ++it) {
      const double before = st.pH;
      pk = corrected_pK(scheme, st.I, cfg.activity, cfg.correct_water);
      run(pk);
      st.correction_iters = it;
      if (std::abs(st.pH - before) < cfg.correction_tol) {
        settled = true;
        break;
      }
    }
    if (!settled) {
      st.converged = false;
      st.diagnostics.push_back("ionic-strength correction did not settle");
    }
  }
  st.u = st.xi.array().log().matrix();
  st.corrected_pK = pk;
  st.gamma = std::pow(10.0, cfg.activity.log10_gamma(1, st.I));
  st.pH_a = activity_pH(st.xi(0), st.gamma);
  return st;
}

}  // namespace speciation
