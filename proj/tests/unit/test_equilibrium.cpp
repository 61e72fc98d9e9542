#include "generators.hpp"

#include "speciation/check.hpp"
#include "speciation/closed_forms.hpp"
#include "speciation/equilibrium.hpp"
#include "speciation/presets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace speciation;

namespace {

std::vector<double> base_pK(const Scheme& s) {
  std::vector<double> pk;
  for (const auto& rx : s.reactions()) pk.push_back(rx.pK);
  return pk;
}

struct Mixture {
  Scheme scheme;
  std::vector<Moiety> moieties;
};

Mixture mixture(std::string_view text, const std::map<std::string, double>& totals) {
  Scheme s = parse_scheme(text);
  auto m = with_totals(canonical_moieties(s), totals);
  return {std::move(s), std::move(m)};
}

// Totals taken from an initial composition, for schemes without named moieties.
Mixture from_initial(std::string_view text, const std::map<std::string, double>& start) {
  Scheme s = parse_scheme(text);
  std::vector<double> xi0(s.species_count(), 0.0);
  for (const auto& [name, c] : start) xi0[*s.find(name)] = c;
  auto m = canonical_moieties(s).moieties;
  for (auto& mo : m) mo.total = analytical_concentration(mo, xi0);
  return {std::move(s), std::move(m)};
}

// Independent high-precision solves (40-digit arithmetic) of the tris-borate
// system at C_T = 0.2: pH at I = 0, and the corrected fixed point.
constexpr double kTrisBorate030_I0 = 7.93845648453875;
constexpr double kTrisBorate028_pH = 7.90679140884964;
constexpr double kTrisBorate028_pHa = 7.95744735801108;
constexpr double kTrisBorate028_I = 0.00989267091530656;

}  // namespace

TEST(Residuals, PureWaterSymmetricPoint) {
  const Scheme s = presets::pure_water();
  const std::vector<Moiety> none;
  Eigen::VectorXd u = Eigen::VectorXd::Constant(2, std::log(1e-7));
  const auto f = residuals(u, s, none, base_pK(s));
  EXPECT_LT(f.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Residuals, VanishAtConvergedState) {
  auto m = mixture(presets::tris_borate_text(), {{"B", 0.2}, {"T", 0.2}});
  const auto st = newton_solve(m.scheme, m.moieties, base_pK(m.scheme));
  ASSERT_TRUE(st.converged);
  EXPECT_LT(residuals(st.u, m.scheme, m.moieties, base_pK(m.scheme)).norm(), SolverConfig{}.newton_tol);
}

TEST(Residuals, AcidBaseClosedFormRoot) {
  auto m = mixture(presets::acid_base_text(), {{"A", 0.1}, {"B", 0.2}});
  const auto cf = acid_base_solve({0.1, 0.2}, Electroneutrality::full);
  const auto f = residuals(cf.state.u, m.scheme, m.moieties, base_pK(m.scheme));
  EXPECT_LT(f.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(cf.state.pH, 8.819, 1e-3);
}

TEST(Residuals, DimensionMismatch) {
  auto m = mixture(presets::acid_base_text(), {{"A", 0.1}, {"B", 0.2}});
  EXPECT_THROW(residuals(Eigen::VectorXd::Zero(3), m.scheme, m.moieties, base_pK(m.scheme)), std::invalid_argument);
}

TEST(Jacobian, EquilibriumRowsAreStoichiometry) {
  auto m = mixture(presets::tris_borate_text(), {{"B", 0.2}, {"T", 0.2}});
  std::mt19937_64 rng(2);
  std::normal_distribution<double> u(-10.0, 5.0);
  Eigen::VectorXd x(10);
  for (auto& v : x) v = u(rng);
  const auto J = jacobian(x, m.scheme, m.moieties);
  const Eigen::MatrixXd nu = stoichiometric_matrix(m.scheme).cast<double>();
  EXPECT_EQ(J.topRows(nu.rows()), nu);
}

TEST(Jacobian, SingleSpeciesNoReaction) {
  const Scheme s({Species{"A", 0, 0}}, {});
  Moiety a{"A", IntVector::Ones(1), 0.5};
  const std::vector<Moiety> ms{a};
  Eigen::VectorXd u(1);
  u << std::log(0.2);
  const auto J = jacobian(u, s, ms);
  ASSERT_EQ(J.rows(), 1);
  EXPECT_NEAR(J(0, 0), 0.2 / 0.5, 1e-15);
}

TEST(JacobianProperty, CentralDifferencesOnRandomSchemes) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lnxi(std::log(1e-12), 0.0);
  for (int n = 0; n < 100; ++n) {
    const auto g = gen::random_scheme(rng);
    auto m = mixture(g.text(), g.totals);
    Eigen::VectorXd u(static_cast<Eigen::Index>(m.scheme.species_count()));
    for (auto& v : u) v = lnxi(rng);
    EXPECT_LT(detail::jacobian_error(m.scheme, m.moieties, base_pK(m.scheme), u), 1e-5) << g.text();
  }
}

TEST(NewtonSolve, AcidBaseWithoutCorrection) {
  auto m = mixture(presets::acid_base_text(), {{"A", 0.1}, {"B", 0.1}});
  EXPECT_NEAR(newton_solve(m.scheme, m.moieties, base_pK(m.scheme)).pH, 8.635, 1e-3);
  auto m2 = mixture(presets::acid_base_text(), {{"A", 0.2}, {"B", 0.1}});
  EXPECT_NEAR(newton_solve(m2.scheme, m2.moieties, base_pK(m2.scheme)).pH, 8.451, 1e-3);
}

TEST(NewtonSolve, AgreesWithScalarAcidBase) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> c(1e-3, 1.0), pk(3.0, 11.0);
  for (int n = 0; n < 50; ++n) {
    const AcidBasePair p{c(rng), c(rng), pk(rng), pk(rng)};
    const Scheme s = presets::acid_base(p.pKa, p.pKb);
    const auto ms = with_totals(canonical_moieties(s), {{"A", p.a}, {"B", p.b}});
    const auto st = newton_solve(s, ms, base_pK(s));
    ASSERT_TRUE(st.converged);
    EXPECT_NEAR(st.pH, acid_base_solve(p, Electroneutrality::full).state.pH, 1e-9);
  }
}

TEST(NewtonSolve, TrisBorateAtZeroStrength) {
  auto m = mixture(presets::tris_borate_text(), {{"B", 0.3}, {"T", 0.2}});
  const auto st = newton_solve(m.scheme, m.moieties, base_pK(m.scheme));
  ASSERT_TRUE(st.converged);
  EXPECT_NEAR(st.pH, kTrisBorate030_I0, 1e-9);
}

TEST(NewtonSolve, NonConvergenceIsReportedNotThrown) {
  auto m = mixture(presets::tris_borate_text(), {{"B", 0.3}, {"T", 0.2}});
  SolverConfig cfg;
  cfg.max_newton_iters = 1;
  cfg.initial_guess = InitialGuess::neutral_pH;
  const auto st = newton_solve(m.scheme, m.moieties, base_pK(m.scheme), cfg);
  EXPECT_FALSE(st.converged);
  EXPECT_FALSE(st.diagnostics.empty());
}

TEST(NewtonSolve, ContinuationReachesSameState) {
  auto m = mixture(presets::tris_borate_text(), {{"B", 0.15}, {"T", 0.25}});
  SolverConfig cfg;
  cfg.initial_guess = InitialGuess::continuation;
  const auto a = newton_solve(m.scheme, m.moieties, base_pK(m.scheme), cfg);
  const auto b = newton_solve(m.scheme, m.moieties, base_pK(m.scheme));
  ASSERT_TRUE(a.converged && b.converged);
  EXPECT_NEAR(a.pH, b.pH, 1e-10);
}

TEST(NewtonSolve, UserGuess) {
  auto m = mixture(presets::tris_borate_text(), {{"B", 0.15}, {"T", 0.25}});
  const auto ref = newton_solve(m.scheme, m.moieties, base_pK(m.scheme));
  SolverConfig cfg;
  cfg.initial_guess = InitialGuess::user_supplied;
  cfg.user_guess = ref.u.array() + 0.3;
  const auto st = newton_solve(m.scheme, m.moieties, base_pK(m.scheme), cfg);
  ASSERT_TRUE(st.converged);
  EXPECT_NEAR(st.pH, ref.pH, 1e-10);
  cfg.user_guess = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(newton_solve(m.scheme, m.moieties, base_pK(m.scheme), cfg), std::invalid_argument);
}

TEST(IonicCorrection, MatchesHighPrecisionFixedPoint) {
  auto m = mixture(presets::tris_borate_text(), {{"B", 0.28}, {"T", 0.2}});
  const auto st = solve_with_ionic_correction(m.scheme, m.moieties);
  ASSERT_TRUE(st.converged);
  EXPECT_NEAR(st.pH, kTrisBorate028_pH, 1e-5);
  EXPECT_NEAR(st.pH_a, kTrisBorate028_pHa, 1e-5);
  EXPECT_NEAR(st.I, kTrisBorate028_I, 1e-7);
}

TEST(IonicCorrection, ReferenceRows) {
  auto m = mixture(presets::tris_borate_text(), {{"B", 0.1}, {"T", 0.2}});
  const auto st = solve_with_ionic_correction(m.scheme, m.moieties);
  EXPECT_NEAR(st.pH, 8.6778, 5e-3);
  EXPECT_NEAR(st.I, 1.731e-2, 2e-4);
  EXPECT_NEAR(st.gamma, 0.8570, 1e-3);
  auto ab = mixture(presets::acid_base_text(), {{"A", 0.1}, {"B", 0.2}});
  const auto st2 = solve_with_ionic_correction(ab.scheme, ab.moieties);
  EXPECT_NEAR(st2.pH, 8.739, 2e-3);
  EXPECT_NEAR(st2.I, 0.029653, 3e-4);
}

TEST(IonicCorrection, NeutralSchemeStopsAfterOnePass) {
  auto m = from_initial("A{0} = B{0} + C{0} ; pK=2\n", {{"A", 0.1}, {"B", 0.05}});
  const auto st = solve_with_ionic_correction(m.scheme, m.moieties);
  const auto plain = newton_solve(m.scheme, m.moieties, base_pK(m.scheme));
  ASSERT_TRUE(st.converged);
  EXPECT_EQ(st.correction_iters, 1);
  EXPECT_EQ(st.I, 0.0);
  EXPECT_EQ(st.xi, plain.xi);
}

TEST(IonicCorrection, IsAFixedPoint) {
  auto m = mixture(presets::tris_borate_text(), {{"B", 0.22}, {"T", 0.17}});
  const SolverConfig cfg;
  const auto st = solve_with_ionic_correction(m.scheme, m.moieties, cfg);
  ASSERT_TRUE(st.converged);
  const auto again = newton_solve(m.scheme, m.moieties, corrected_pK(m.scheme, st.I), cfg, st.u);
  EXPECT_LT(std::abs(again.pH - st.pH), cfg.correction_tol);
}

TEST(IonicCorrection, DirectCoupledAgrees) {
  auto m = mixture(presets::tris_borate_text(), {{"B", 0.22}, {"T", 0.17}});
  SolverConfig cfg;
  const auto loop = solve_with_ionic_correction(m.scheme, m.moieties, cfg);
  cfg.direct_coupled = true;
  const auto direct = solve_with_ionic_correction(m.scheme, m.moieties, cfg);
  ASSERT_TRUE(direct.converged);
  EXPECT_NEAR(direct.pH, loop.pH, 1e-5);
}

TEST(EquilibriumProperty, ConvergedStatesSatisfyInvariants) {
  std::mt19937_64 rng(29);
  int converged = 0;
  const int total = 200;
  for (int n = 0; n < total; ++n) {
    const auto g = gen::random_scheme(rng);
    auto m = mixture(g.text(), g.totals);
    const auto st = solve_with_ionic_correction(m.scheme, m.moieties);
    if (!st.converged) continue;
    ++converged;
    const auto rep = verify_state(m.scheme, m.moieties, st);
    EXPECT_TRUE(rep.within(1e-8)) << g.text() << " en=" << rep.electroneutrality << " m=" << rep.moiety
                                  << " eq=" << rep.equilibrium;
  }
  EXPECT_GE(converged, total * 95 / 100);
}

TEST(EquilibriumProperty, PermutationInvariance) {
  std::mt19937_64 rng(31);
  for (int n = 0; n < 100; ++n) {
    const auto g = gen::random_scheme(rng);
    auto a = mixture(g.text(), g.totals);
    auto b = mixture(g.text(&rng), g.totals);
    const auto sa = solve_with_ionic_correction(a.scheme, a.moieties);
    const auto sb = solve_with_ionic_correction(b.scheme, b.moieties);
    if (!sa.converged) continue;
    ASSERT_TRUE(sb.converged) << g.text(&rng);
    EXPECT_NEAR(sa.pH, sb.pH, 1e-10) << g.text();
  }
}

TEST(EquilibriumProperty, TrisBoratePermuted) {
  const std::string species = "species H{+1} HT{+1} TB{-1} T{0} HTB{0} H2B3{-1} H3B3{0} B{-1} HB{0} OH{-1}\n";
  std::string lines = presets::tris_borate_text();
  // reverse reaction order
  std::vector<std::string> rows;
  std::stringstream ss(lines);
  for (std::string l; std::getline(ss, l);) {
    if (!l.empty() && l[0] != '#') rows.push_back(l);
  }
  std::string reversed = species;
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) reversed += *it + "\n";
  auto a = mixture(presets::tris_borate_text(), {{"B", 0.26}, {"T", 0.2}});
  auto b = mixture(reversed, {{"B", 0.26}, {"T", 0.2}});
  const auto sa = solve_with_ionic_correction(a.scheme, a.moieties);
  const auto sb = solve_with_ionic_correction(b.scheme, b.moieties);
  EXPECT_NEAR(sa.pH, sb.pH, 1e-10);
  EXPECT_NEAR(sa.pH_a, sb.pH_a, 1e-10);
}

TEST(Degenerate, PureWater) {
  const Scheme s = presets::pure_water();
  const std::vector<Moiety> none;
  const auto st = solve_with_ionic_correction(s, none);
  ASSERT_TRUE(st.converged);
  EXPECT_NEAR(st.pH, 7.0, 1e-6);
}

TEST(Degenerate, ZeroTotalRejected) {
  const Scheme s = presets::acid_base();
  try {
    with_totals(canonical_moieties(s), {{"A", 0.0}, {"B", 0.1}});
    FAIL();
  } catch (const DegenerateInput& e) {
    EXPECT_NE(std::string(e.what()).find("moiety absent from mixture"), std::string::npos);
  }
  Moiety bad = canonical_moieties(s).moieties[0];
  bad.total = 0.0;
  const std::vector<Moiety> ms{bad, canonical_moieties(s).moieties[1]};
  EXPECT_THROW(newton_solve(s, ms, base_pK(s)), DegenerateInput);
}

TEST(Degenerate, ToyQuadratic) {
  // A = B + C, K = 1e-2, start A = 0.1: x^2 / (0.1 - x) = K
  auto m = from_initial("A{0} = B{0} + C{0} ; pK=2\n", {{"A", 0.1}});
  const double K = 1e-2;
  const double x = (-K + std::sqrt(K * K + 0.4 * K)) / 2;
  const Scheme& s = m.scheme;
  const auto st = newton_solve(s, m.moieties, base_pK(s));
  ASSERT_TRUE(st.converged);
  EXPECT_NEAR(st.xi(*s.find("B")), x, 1e-12);
  EXPECT_NEAR(st.xi(*s.find("A")), 0.1 - x, 1e-12);
}
