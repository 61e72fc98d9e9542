#include "speciation/activity.hpp"
#include "speciation/equilibrium.hpp"
#include "speciation/presets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace speciation;

TEST(IonicStrength, Basics) {
  const std::vector<double> neutral{0.1, 0.2};
  const std::vector<int> z0{0, 0};
  EXPECT_EQ(ionic_strength(neutral, z0), 0.0);
  const std::vector<double> pair{0.1, 0.1};
  const std::vector<int> z1{1, -1};
  EXPECT_DOUBLE_EQ(ionic_strength(pair, z1), 0.1);
  const std::vector<double> bad{-1e-3, 0.1};
  EXPECT_THROW(ionic_strength(bad, z1), std::invalid_argument);
}

TEST(DebyeHuckel, NeutralIsExactlyOne) {
  const DebyeHuckel dh;
  for (double I : {0.0, 0.01, 0.5, 3.0}) EXPECT_EQ(dh.log10_gamma(0, I), 0.0);
}

TEST(DebyeHuckel, SinglyChargedReferenceValues) {
  // lg gamma = -0.5093 sqrt(I)
  EXPECT_NEAR(std::pow(10.0, log10_gamma(1, 0.029653)), 0.817142, 5e-6);
  EXPECT_NEAR(log10_gamma(1, 0.029653), -0.08770, 5e-5);
  EXPECT_NEAR(std::pow(10.0, log10_gamma(-1, 0.020767)), 0.844513, 5e-6);
}

TEST(DebyeHuckel, MonotoneAndBounded) {
  const DebyeHuckel dh;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> I(0.0, 2.0);
  for (int n = 0; n < 1000; ++n) {
    const double a = I(rng), b = I(rng);
    for (int z : {-3, -2, -1, 1, 2, 3}) {
      const double ga = std::pow(10.0, dh.log10_gamma(z, a));
      EXPECT_GT(ga, 0.0);
      EXPECT_LE(ga, 1.0);
      if (a < b && dh.log10_gamma(z, b) > std::log10(kMinGamma)) EXPECT_GT(ga, std::pow(10.0, dh.log10_gamma(z, b)));
    }
  }
}

TEST(DebyeHuckel, FloorAtAbsurdStrength) {
  EXPECT_DOUBLE_EQ(log10_gamma(5, 1e6), std::log10(kMinGamma));
}

TEST(CorrectedConstants, IdentityAtZeroStrength) {
  for (const Scheme& s : {presets::tris_borate(), presets::acid_base()}) {
    const auto pk = corrected_pK(s, 0.0);
    for (std::size_t i = 0; i < s.reaction_count(); ++i) EXPECT_EQ(pk[i], s.reaction(i).pK);
    const auto K = corrected_constants(s, 0.0);
    for (std::size_t i = 0; i < s.reaction_count(); ++i) EXPECT_EQ(K[i], std::pow(10.0, -s.reaction(i).pK));
  }
}

TEST(CorrectedConstants, AcidBaseReference) {
  const Scheme s = presets::acid_base();
  const auto pk = corrected_pK(s, 0.029653);
  EXPECT_NEAR(pk[1], 9.114595, 1e-4);
  EXPECT_DOUBLE_EQ(pk[2], 7.98);
  EXPECT_DOUBLE_EQ(corrected_pK(s, 0.5)[2], 7.98);
}

TEST(CorrectedConstants, MechanicalExponents) {
  // Without the preset override, e = -sum nu z^2 gives -2, 0, -2, 0, -2, 0.
  const Scheme s = parse_scheme(
      "HB{0} = B{-1} + H{+1} ; pK=9.29\n3*HB = H3B3{0} ; pK=-1.77\nH3B3 = H2B3{-1} + H ; pK=9.02\n"
      "HB + T{0} = HTB{0} ; pK=-2.53\nHTB = TB{-1} + H ; pK=9.50\nHT{+1} = T + H ; pK=7.98\n");
  const std::vector<int> expected{-2, 0, -2, 0, -2, 0};
  const double I = 0.0173;
  const double lg = log10_gamma(1, I);
  const auto pk = corrected_pK(s, I);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(activity_exponent(s, i), expected[i]);
    EXPECT_NEAR(-pk[i], -s.reaction(i).pK + expected[i] * lg, 1e-12);
  }
}

TEST(CorrectedConstants, PresetExponents) {
  const Scheme s = presets::tris_borate();
  const std::vector<int> expected{0, -2, 3, -2, 0, -2, 0};  // water first
  const double I = 0.0121;
  const double lg = log10_gamma(1, I);
  const auto pk = corrected_pK(s, I);
  for (std::size_t i = 0; i < s.reaction_count(); ++i) {
    EXPECT_EQ(activity_exponent(s, i), expected[i]) << i;
    EXPECT_NEAR(-pk[i], -s.reaction(i).pK + expected[i] * lg, 1e-12);
  }
}

TEST(CorrectedConstants, WaterSwitch) {
  const Scheme s = presets::pure_water();
  EXPECT_EQ(corrected_pK(s, 0.1)[0], 14.0);
  EXPECT_NEAR(corrected_pK(s, 0.1, DebyeHuckel{}, true)[0], 14.0 - 2 * 0.5093 * std::sqrt(0.1), 1e-12);
}

TEST(ActivityPH, Definitions) {
  EXPECT_DOUBLE_EQ(activity_pH(1e-7, 1.0), 7.0);
  EXPECT_DOUBLE_EQ(plain_pH(1e-7), 7.0);
  EXPECT_THROW(activity_pH(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(activity_pH(1e-7, 0.0), std::invalid_argument);
  EXPECT_THROW(plain_pH(-1.0), std::invalid_argument);
  const double g = 0.8905;
  EXPECT_NEAR(activity_pH(1e-8, g) - plain_pH(1e-8), -std::log10(g), 1e-14);
}

TEST(ActivityPH, TrisBorateRows) {
  const Scheme s = presets::tris_borate();
  const auto laws = canonical_moieties(s);
  const auto st = solve_with_ionic_correction(s, with_totals(laws, {{"B", 0.2}, {"T", 0.2}}));
  EXPECT_NEAR(st.pH, 8.1620, 5e-3);
  EXPECT_NEAR(st.pH_a, 8.2180, 5e-3);
  EXPECT_NEAR(st.pH_a - st.pH, -std::log10(st.gamma), 1e-12);
  const auto st30 = solve_with_ionic_correction(s, with_totals(laws, {{"B", 0.3}, {"T", 0.2}}));
  EXPECT_NEAR(st30.pH_a - st30.pH, 5.034e-2, 5e-4);
  const auto st10 = solve_with_ionic_correction(s, with_totals(laws, {{"B", 0.1}, {"T", 0.2}}));
  EXPECT_NEAR(st10.I, 1.731e-2, 2e-4);
}
