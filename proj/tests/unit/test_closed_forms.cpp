#include "speciation/check.hpp"
#include "speciation/closed_forms.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace speciation;

namespace {

// b h^2 + (b - a) Ka h - a Ka Kb = 0, solved in long double by the textbook formula.
double quadratic_h(const AcidBasePair& p) {
  const long double Ka = std::pow(10.0L, -static_cast<long double>(p.pKa));
  const long double Kb = std::pow(10.0L, -static_cast<long double>(p.pKb));
  const long double A = p.b, B = (p.b - p.a) * Ka, C = -p.a * Ka * Kb;
  const long double disc = std::sqrt(B * B - 4 * A * C);
  const long double h = B > 0 ? 2 * C / (-B - disc) : (-B + disc) / (2 * A);
  return static_cast<double>(h);
}

std::vector<double> preset_pK(const presets::TrisBorateConstants& c = {}) { return {c.pK.begin(), c.pK.end()}; }

}  // namespace

TEST(Henderson, EqualTotalsGiveMeanPk) {
  const AcidBasePair p{0.1, 0.1};
  EXPECT_NEAR(-std::log10(henderson_h_plus(p)), 0.5 * (9.29 + 7.98), 1e-12);
}

TEST(Henderson, ReferencePoints) {
  EXPECT_NEAR(-std::log10(henderson_h_plus({0.1, 0.2})), 8.819, 1e-3);
  EXPECT_NEAR(-std::log10(henderson_h_plus({0.2, 0.1})), 8.451, 1e-3);
}

TEST(Henderson, RejectsZeroTotals) {
  EXPECT_THROW(henderson_h_plus({0.0, 0.1}), DegenerateInput);
  EXPECT_THROW(henderson_h_plus({0.1, 0.0}), DegenerateInput);
}

TEST(HendersonProperty, MatchesLongDoubleQuadratic) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> lgc(-4.0, 0.0), pk(2.0, 12.0);
  for (int n = 0; n < 1000; ++n) {
    const AcidBasePair p{std::pow(10.0, lgc(rng)), std::pow(10.0, lgc(rng)), pk(rng), pk(rng)};
    const double h = henderson_h_plus(p);
    EXPECT_NEAR(h / quadratic_h(p), 1.0, 1e-12);
  }
}

TEST(HendersonProperty, DependsOnlyOnRatio) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> c(1e-3, 1.0), s(0.01, 100.0);
  for (int n = 0; n < 500; ++n) {
    const AcidBasePair p{c(rng), c(rng)};
    const double k = s(rng);
    const AcidBasePair q{p.a * k, p.b * k};
    EXPECT_NEAR(-std::log10(henderson_h_plus(p)), -std::log10(henderson_h_plus(q)), 1e-12);
  }
}

TEST(HendersonProperty, AgreesWithSimplifiedBalance) {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> c(1e-3, 1.0);
  for (int n = 0; n < 1000; ++n) {
    const AcidBasePair p{c(rng), c(rng)};
    const double pH = acid_base_solve(p, Electroneutrality::simplified).state.pH;
    EXPECT_NEAR(pH, -std::log10(henderson_h_plus(p)), 1e-12);
  }
}

TEST(AcidBase, FullVersusSimplified) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> c(1e-2, 1.0);
  for (int n = 0; n < 200; ++n) {
    const AcidBasePair p{c(rng), c(rng)};
    const double full = acid_base_solve(p, Electroneutrality::full).state.pH;
    const double simple = acid_base_solve(p, Electroneutrality::simplified).state.pH;
    const double no_oh = acid_base_solve(p, Electroneutrality::no_hydroxyl).state.pH;
    EXPECT_LT(std::abs(full - simple), 1e-3);
    EXPECT_LT(std::abs(no_oh - simple), 1e-3);
  }
}

TEST(AcidBase, ReferenceTable) {
  for (const auto& col : reference::acid_base_table) {
    const AcidBasePair p{col.a, col.b};
    const auto plain = acid_base_solve(p);
    EXPECT_NEAR(plain.state.pH, col.pH_uncorrected, 1e-3);
    const auto corr = acid_base_solve(p, Electroneutrality::full, true);
    ASSERT_TRUE(corr.state.converged);
    EXPECT_NEAR(corr.state.pH, col.pH, 1e-3);
    EXPECT_NEAR(corr.state.I, col.I, 5e-6);  // table pH is rounded to 1e-3
    EXPECT_NEAR(corr.state.gamma, col.gamma, 1e-5);
    EXPECT_NEAR(corr.pKa_prime, col.pKa_prime, 1e-4);
    EXPECT_DOUBLE_EQ(corr.pKb_prime, 7.98);
  }
}

TEST(AcidBase, DegreesConsistent) {
  const auto r = acid_base_solve({0.1, 0.2});
  const double h = std::pow(10.0, -r.state.pH);
  const double Ka = std::pow(10.0, -9.29), Kb = std::pow(10.0, -7.98);
  EXPECT_NEAR(r.alpha, Ka / (Ka + h), 1e-14);
  EXPECT_NEAR(r.beta, h / (Kb + h), 1e-14);
}

TEST(AcidBase, NoRootOutsideWindow) {
  // a 10 mol/L strong acid puts the root below pH 0
  EXPECT_THROW(acid_base_solve({10.0, 0.1, -5.0, -4.0}), std::domain_error);
}

TEST(TrisBorateReduced, ReferenceRowsAtCorrectedConstants) {
  for (double cb : {0.24, 0.20}) {
    const auto st = tris_borate_corrected({cb, 0.2});
    const auto it = std::find_if(reference::tris_borate_table.begin(), reference::tris_borate_table.end(),
                                 [&](const auto& r) { return std::abs(r.C_B - cb) < 1e-9; });
    ASSERT_TRUE(st.converged);
    EXPECT_NEAR(st.pH, it->pH, 5e-4);
    EXPECT_NEAR(st.pH_a, it->pH_a, 5e-4);
    EXPECT_NEAR(st.I, it->I, 2e-5);
  }
}

TEST(TrisBorateReduced, TotalsRecovered) {
  const auto red = tris_borate_reduced_solve({0.17, 0.23}, preset_pK(), 14.0);
  ASSERT_TRUE(red.converged);
  EXPECT_FALSE(red.used_fallback);
  const Scheme s = presets::tris_borate();
  const auto laws = canonical_moieties(s);
  const std::span<const double> xi(red.xi.data(), static_cast<std::size_t>(red.xi.size()));
  EXPECT_NEAR(analytical_concentration(*laws.find("T"), xi), 0.23, 1e-10);
  EXPECT_NEAR(analytical_concentration(*laws.find("B"), xi), 0.17, 1e-10);
  EXPECT_NEAR(red.pH, -std::log10(red.xi(0)), 1e-12);
  EXPECT_NEAR(red.X, std::log10(red.xi(*s.find("HB"))), 1e-12);
}

TEST(TrisBorateReduced, InputValidation) {
  EXPECT_THROW(tris_borate_reduced_solve({0.0, 0.2}, preset_pK(), 14.0), std::invalid_argument);
  EXPECT_THROW(tris_borate_reduced_solve({0.2, 1.5}, preset_pK(), 14.0), std::invalid_argument);
  const std::vector<double> five(5, 1.0);
  EXPECT_THROW(tris_borate_reduced_solve({0.2, 0.2}, five, 14.0), std::invalid_argument);
}

TEST(TrisBorateReducedProperty, AgreesWithGenericSolver) {
  const Scheme s = presets::tris_borate();
  const auto laws = canonical_moieties(s);
  std::vector<double> pk{14.0};
  for (double v : preset_pK()) pk.push_back(v);
  for (double cb = 0.1; cb <= 0.3 + 1e-9; cb += 0.05) {
    for (double ct = 0.1; ct <= 0.3 + 1e-9; ct += 0.05) {
      const auto red = tris_borate_reduced_solve({cb, ct}, preset_pK(), 14.0);
      const auto gen = newton_solve(s, with_totals(laws, {{"B", cb}, {"T", ct}}), pk);
      ASSERT_TRUE(red.converged && gen.converged);
      EXPECT_NEAR(red.pH, gen.pH, 1e-6);
    }
  }
}

TEST(TrisBorateReducedProperty, PhFallsWithBoricAcid) {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> ct(0.05, 0.5), cb(0.05, 0.5);
  for (int n = 0; n < 100; ++n) {
    const double t = ct(rng), b1 = cb(rng), b2 = cb(rng);
    const auto a = tris_borate_reduced_solve({std::min(b1, b2), t}, preset_pK(), 14.0);
    const auto b = tris_borate_reduced_solve({std::max(b1, b2), t}, preset_pK(), 14.0);
    if (b1 != b2) {
      EXPECT_GT(a.pH, b.pH);
    }
  }
}

TEST(TrisBorateCorrected, AgreesWithGenericCorrection) {
  const Scheme s = presets::tris_borate();
  const auto laws = canonical_moieties(s);
  const auto fast = tris_borate_corrected({0.26, 0.2});
  const auto slow = solve_with_ionic_correction(s, with_totals(laws, {{"B", 0.26}, {"T", 0.2}}));
  EXPECT_NEAR(fast.pH, slow.pH, 1e-6);
  EXPECT_NEAR(fast.I, slow.I, 1e-8);
}
