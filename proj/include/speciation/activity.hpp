#pragma once

#include "scheme.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace speciation {

/// Any model giving lg(gamma) of an ion of charge z at ionic strength I.
template <class M>
concept ActivityModel = requires(const M& m, int z, double I) {
  { m.log10_gamma(z, I) } -> std::convertible_to<double>;
};

inline constexpr double kMinGamma = 1e-6;

/// Debye-Hueckel limiting law, lg(gamma) = -A z^2 sqrt(I). Neutral species
/// have gamma = 1 exactly; gamma is floored at 1e-6.
struct DebyeHuckel {
  double A = 0.5093;  // mol^-1/2 L^1/2

  explicit DebyeHuckel(double a = 0.5093) : A(a) {
    if (!(A > 0.0) || !std::isfinite(A)) throw std::invalid_argument("Debye-Hueckel A must be positive");
  }

  double log10_gamma(int z, double I) const {
    if (I < 0.0) throw std::invalid_argument("ionic strength must be non-negative");
    if (z == 0) return 0.0;
    const double lg = -A * static_cast<double>(z * z) * std::sqrt(I);
    return std::max(lg, std::log10(kMinGamma));
  }
};

static_assert(ActivityModel<DebyeHuckel>);

/// Ionic strength above which the limiting law is a poor approximation.
inline constexpr double kIonicStrengthValidity = 1.0;

struct IonicState {
  double I = 0.0;
  std::map<int, double> gamma_by_charge;  // keyed by |z|
  std::vector<double> corrected_pK;
};

/// I = 1/2 sum xi_k z_k^2
inline double ionic_strength(std::span<const double> xi, std::span<const int> z) {
  if (xi.size() != z.size()) throw std::invalid_argument("ionic_strength: dimension mismatch");
  double I = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    if (xi[k] < 0.0) throw std::invalid_argument("ionic_strength: negative concentration");
    I += xi[k] * static_cast<double>(z[k] * z[k]);
  }
  return 0.5 * I;
}

template <ActivityModel Model = DebyeHuckel>
double log10_gamma(int z, double I, const Model& model = Model{}) {
  return model.log10_gamma(z, I);
}

/// Exponent e with K' = K * gamma1^e where gamma1 is the singly charged
/// coefficient. Mechanically e = -sum_k nu_k z_k^2 unless the reaction
/// carries an override.
inline int activity_exponent(const Scheme& scheme, std::size_t i, bool correct_water = false) {
  const auto& rx = scheme.reaction(i);
  if (rx.gamma_exponent) return *rx.gamma_exponent;
  if (rx.kind == ReactionKind::autoprotolysis && !correct_water) return 0;
  int e = 0;
  for (std::size_t k = 0; k < scheme.species_count(); ++k) {
    const int z = scheme.species(k).charge;
    e -= rx.net(k) * z * z;
  }
  return e;
}

/// pK'_i at ionic strength I. For the mechanical case this is
/// lg K'_i = lg K_i - sum_k nu_ik lg gamma_k; an override exponent e uses
/// lg K'_i = lg K_i + e lg gamma_1 instead.
template <ActivityModel Model = DebyeHuckel>
std::vector<double> corrected_pK(const Scheme& scheme, double I, const Model& model = Model{}, bool correct_water = false) {
  if (I < 0.0) throw std::invalid_argument("ionic strength must be non-negative");
  std::vector<double> out;
  out.reserve(scheme.reaction_count());
  for (std::size_t i = 0; i < scheme.reaction_count(); ++i) {
    const auto& rx = scheme.reaction(i);
    if (I == 0.0) {
      out.push_back(rx.pK);
      continue;
    }
    double lgK = rx.log10_K();
    if (rx.gamma_exponent) {
      lgK += *rx.gamma_exponent * model.log10_gamma(1, I);
    } else if (rx.kind != ReactionKind::autoprotolysis || correct_water) {
      for (std::size_t k = 0; k < scheme.species_count(); ++k) {
        const int nu = rx.net(k);
        if (nu != 0) lgK -= nu * model.log10_gamma(scheme.species(k).charge, I);
      }
    }
    out.push_back(-lgK);
  }
  return out;
}

/// K'_i values (not logarithms).
template <ActivityModel Model = DebyeHuckel>
std::vector<double> corrected_constants(const Scheme& scheme, double I, const Model& model = Model{},
                                        bool correct_water = false) {
  auto pk = corrected_pK(scheme, I, model, correct_water);
  for (auto& v : pk) v = std::pow(10.0, -v);
  return pk;
}

template <ActivityModel Model = DebyeHuckel>
IonicState ionic_state(const Scheme& scheme, std::span<const double> xi, const Model& model = Model{},
                       bool correct_water = false) {
  IonicState st;
  const auto z = scheme.charges();
  st.I = ionic_strength(xi, z);
  for (int q : z) {
    const int a = q < 0 ? -q : q;
    st.gamma_by_charge[a] = std::pow(10.0, model.log10_gamma(a, st.I));
  }
  st.corrected_pK = corrected_pK(scheme, st.I, model, correct_water);
  return st;
}

/// pH = -lg[H+]
inline double plain_pH(double h_plus) {
  if (!(h_plus > 0.0)) throw std::invalid_argument("[H+] must be positive");
  return -std::log10(h_plus);
}

/// pH_a = -lg(gamma_H [H+])
inline double activity_pH(double h_plus, double gamma_h) {
  if (!(h_plus > 0.0)) throw std::invalid_argument("[H+] must be positive");
  if (!(gamma_h > 0.0) || gamma_h > 1.0) throw std::invalid_argument("gamma must lie in (0, 1]");
  return -std::log10(gamma_h * h_plus);
}

}  // namespace speciation
