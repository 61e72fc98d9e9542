#pragma once

// Conserved moieties: integer null space of the stoichiometric matrix and its
// chemically named basis.

#include "errors.hpp"
#include "integer_linalg.hpp"
#include "scheme.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace speciation {

/// Analytical concentration a = sum_k lambda_k xi_k.
struct Moiety {
  std::string name;
  IntVector lambda;
  double total = 0.0;
};

struct ChemicalSubsystem {
  const Moiety* moiety = nullptr;
  std::vector<std::size_t> members;
};

struct ConservationLaws {
  std::vector<Moiety> moieties;
  std::size_t null_dimension = 0;
  /// False when at least one moiety had to be taken from the raw null space.
  bool symbolic = true;
  std::vector<std::string> diagnostics;

  const Moiety* find(std::string_view name) const {
    for (const auto& m : moieties) {
      if (m.name == name) return &m;
    }
    return nullptr;
  }
};

/// Primitive integer basis of the kernel of a full-row-rank stoichiometric matrix.
inline std::vector<IntVector> null_space(const IntMatrix& nu) {
  if (integer_rank(nu) < static_cast<std::size_t>(nu.rows())) {
    throw SchemeError("dependent reaction set: stoichiometric matrix is rank deficient");
  }
  return integer_null_space(nu);
}

/// Element-like symbols of a species name: an uppercase letter, optional
/// lowercase letters, optional subscript. `H2B3` -> {H:2, B:3}. Names that do
/// not follow the pattern yield nullopt.
inline std::optional<std::map<std::string, int>> symbol_composition(std::string_view name) {
  std::map<std::string, int> out;
  std::size_t i = 0;
  while (i < name.size()) {
    if (!std::isupper(static_cast<unsigned char>(name[i]))) return std::nullopt;
    std::size_t j = i + 1;
    while (j < name.size() && std::islower(static_cast<unsigned char>(name[j]))) ++j;
    std::string symbol(name.substr(i, j - i));
    int count = 0;
    while (j < name.size() && std::isdigit(static_cast<unsigned char>(name[j]))) {
      count = count * 10 + (name[j] - '0');
      if (count > kMaxStoichiometricCoefficient) return std::nullopt;
      ++j;
    }
    out[symbol] += (count == 0 ? 1 : count);
    i = j;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

/// Validates a user-supplied lambda and wraps it as a moiety.
inline Moiety make_moiety(const Scheme& scheme, std::string name, IntVector lambda) {
  if (lambda.size() != static_cast<Eigen::Index>(scheme.species_count())) {
    throw SchemeError("moiety '" + name + "': lambda has wrong length");
  }
  if ((lambda.array() == 0).all()) throw SchemeError("moiety '" + name + "': lambda is zero");
  if (!is_in_kernel(stoichiometric_matrix(scheme), lambda)) {
    throw SchemeError("moiety '" + name + "' is not conserved by every reaction");
  }
  return Moiety{std::move(name), std::move(lambda), 0.0};
}

/// Builds r0 named moieties which, together with the charge vector, span the
/// null space. Candidates are tried in order: element symbols found in the
/// species names (excluding the symbols of H+ and OH-), then those excluded
/// symbols, then raw null-space vectors named M1, M2, ...
inline ConservationLaws canonical_moieties(const Scheme& scheme) {
  ConservationLaws laws;
  const IntMatrix nu = stoichiometric_matrix(scheme);
  const std::vector<IntVector> basis = null_space(nu);
  laws.null_dimension = basis.size();
  const Eigen::Index width = static_cast<Eigen::Index>(scheme.species_count());

  std::vector<IntVector> span;
  const IntVector z = charge_vector(scheme);
  const bool charged = (z.array() != 0).any();
  if (charged) span.push_back(z);
  const std::size_t needed = laws.null_dimension - (charged ? 1 : 0);

  auto try_add = [&](const std::string& name, const IntVector& lambda) {
    if (laws.moieties.size() >= needed) return;
    if ((lambda.array() == 0).all() || !is_in_kernel(nu, lambda)) return;
    span.push_back(lambda);
    if (rank_of_rows(span, width) < span.size()) {
      span.pop_back();
      return;
    }
    laws.moieties.push_back(Moiety{name, lambda, 0.0});
  };

  std::vector<std::optional<std::map<std::string, int>>> composition;
  std::set<std::string> solvent_symbols;
  for (const auto& s : scheme.species()) {
    composition.push_back(symbol_composition(s.name));
    if ((s.name == kHydrogenName || s.name == kHydroxylName) && composition.back()) {
      for (const auto& [sym, c] : *composition.back()) solvent_symbols.insert(sym);
    }
  }
  std::vector<std::string> primary;
  std::vector<std::string> secondary;
  for (const auto& comp : composition) {
    if (!comp) continue;
    for (const auto& [sym, c] : *comp) {
      auto& bucket = solvent_symbols.count(sym) ? secondary : primary;
      if (std::find(bucket.begin(), bucket.end(), sym) == bucket.end()) bucket.push_back(sym);
    }
  }
  auto symbol_vector = [&](const std::string& sym) {
    IntVector v = IntVector::Zero(width);
    for (std::size_t k = 0; k < composition.size(); ++k) {
      if (!composition[k]) continue;
      if (auto it = composition[k]->find(sym); it != composition[k]->end()) v(static_cast<Eigen::Index>(k)) = it->second;
    }
    return v;
  };
  for (const auto& sym : primary) try_add(sym, symbol_vector(sym));
  for (const auto& sym : secondary) try_add(sym, symbol_vector(sym));

  std::size_t auto_index = 0;
  for (const auto& v : basis) {
    if (laws.moieties.size() >= needed) break;
    const std::size_t before = laws.moieties.size();
    try_add("M" + std::to_string(auto_index + 1), v);
    if (laws.moieties.size() > before) {
      ++auto_index;
      laws.symbolic = false;
      laws.diagnostics.push_back("moiety " + laws.moieties.back().name +
                                 " taken from the raw null space; no element symbol matched");
    }
  }

  const auto n = static_cast<long>(scheme.non_hydrogen_count());
  const auto r = static_cast<long>(scheme.reaction_count());
  if (static_cast<long>(needed) != n - r) {
    laws.diagnostics.push_back("conserved-moiety count " + std::to_string(needed) + " differs from n - r = " +
                               std::to_string(n - r));
  }
  return laws;
}

inline ChemicalSubsystem subsystem(const Moiety& moiety) {
  ChemicalSubsystem sub{&moiety, {}};
  for (Eigen::Index k = 0; k < moiety.lambda.size(); ++k) {
    if (moiety.lambda(k) != 0) sub.members.push_back(static_cast<std::size_t>(k));
  }
  return sub;
}

inline double analytical_concentration(const Moiety& moiety, std::span<const double> xi) {
  double a = 0.0;
  for (Eigen::Index k = 0; k < moiety.lambda.size(); ++k) a += static_cast<double>(moiety.lambda(k)) * xi[static_cast<std::size_t>(k)];
  return a;
}

/// theta_k = lambda_k xi_k / a_s; zero for species outside the subsystem.
inline std::vector<double> dissociation_degrees(std::span<const double> xi, const Moiety& moiety) {
  if (!(moiety.total > 0.0)) throw DegenerateInput("moiety absent from mixture: '" + moiety.name + "' has zero total");
  if (xi.size() != static_cast<std::size_t>(moiety.lambda.size())) throw std::invalid_argument("dimension mismatch");
  std::vector<double> theta(xi.size(), 0.0);
  for (std::size_t k = 0; k < xi.size(); ++k) {
    theta[k] = static_cast<double>(moiety.lambda(static_cast<Eigen::Index>(k))) * xi[k] / moiety.total;
  }
  return theta;
}

/// Copies the moieties and assigns totals by name. Every moiety needs a
/// strictly positive total.
inline std::vector<Moiety> with_totals(const ConservationLaws& laws, const std::map<std::string, double>& totals) {
  std::vector<Moiety> out = laws.moieties;
  for (auto& m : out) {
    auto it = totals.find(m.name);
    if (it == totals.end()) throw std::invalid_argument("missing total for moiety '" + m.name + "'");
    if (!(it->second > 0.0) || !std::isfinite(it->second)) {
      throw DegenerateInput("moiety absent from mixture: total of '" + m.name + "' must be > 0");
    }
    m.total = it->second;
  }
  for (const auto& [name, v] : totals) {
    if (!laws.find(name)) throw std::invalid_argument("total given for unknown moiety '" + name + "'");
  }
  return out;
}

}  // namespace speciation
