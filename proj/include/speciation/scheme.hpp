#pragma once

#include "errors.hpp"
#include "integer_linalg.hpp"

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace speciation {

inline constexpr std::string_view kHydrogenName = "H";
inline constexpr std::string_view kHydroxylName = "OH";
inline constexpr int kMaxStoichiometricCoefficient = 99;
inline constexpr double kDefaultPKw = 14.0;

struct Species {
  std::string name;
  int charge = 0;
  std::size_t index = 0;
};

enum class ReactionKind {
  ordinary,
  /// H2O = H+ + OH-; the solvent side carries no species.
  autoprotolysis,
};

/// One reversible reaction  sum(forward) <=> sum(backward)  with K = 10^-pK.
/// Stoichiometry maps species index to a positive coefficient.
struct Reaction {
  std::map<std::size_t, int> forward;
  std::map<std::size_t, int> backward;
  double pK = 0.0;
  ReactionKind kind = ReactionKind::ordinary;
  /// Replaces the Debye-Hueckel exponent e in K' = K * gamma^e for this reaction.
  std::optional<int> gamma_exponent;

  double log10_K() const { return -pK; }
  double K() const { return std::pow(10.0, -pK); }

  /// nu_k = backward_k - forward_k
  int net(std::size_t species) const {
    int v = 0;
    if (auto it = backward.find(species); it != backward.end()) v += it->second;
    if (auto it = forward.find(species); it != forward.end()) v -= it->second;
    return v;
  }

  bool operator==(const Reaction&) const = default;
};

/// Immutable, validated reaction network. Species 0 is the hydrogen ion
/// whenever the scheme contains one.
class Scheme {
 public:
  Scheme(std::vector<Species> species, std::vector<Reaction> reactions)
      : species_(std::move(species)), reactions_(std::move(reactions)) {
    validate();
  }

  const std::vector<Species>& species() const noexcept { return species_; }
  const std::vector<Reaction>& reactions() const noexcept { return reactions_; }
  const Species& species(std::size_t k) const { return species_.at(k); }
  const Reaction& reaction(std::size_t i) const { return reactions_.at(i); }

  std::size_t species_count() const noexcept { return species_.size(); }
  std::size_t reaction_count() const noexcept { return reactions_.size(); }
  /// Number of components other than the hydrogen ion.
  std::size_t non_hydrogen_count() const noexcept { return species_.size() - (has_hydrogen() ? 1 : 0); }

  bool has_hydrogen() const noexcept {
    return !species_.empty() && species_[0].name == kHydrogenName && species_[0].charge == 1;
  }
  std::optional<std::size_t> hydrogen_index() const {
    if (has_hydrogen()) return 0;
    return std::nullopt;
  }
  std::optional<std::size_t> find(std::string_view name) const {
    if (auto it = by_name_.find(std::string(name)); it != by_name_.end()) return it->second;
    return std::nullopt;
  }

  /// pKw of the autoprotolysis reaction, when the scheme carries one.
  std::optional<double> pKw() const {
    for (const auto& r : reactions_) {
      if (r.kind == ReactionKind::autoprotolysis) return r.pK;
    }
    return std::nullopt;
  }

  std::vector<int> charges() const {
    std::vector<int> z;
    z.reserve(species_.size());
    for (const auto& s : species_) z.push_back(s.charge);
    return z;
  }

  bool has_charged_species() const {
    for (const auto& s : species_) {
      if (s.charge != 0) return true;
    }
    return false;
  }

  bool operator==(const Scheme& other) const {
    if (species_.size() != other.species_.size() || reactions_ != other.reactions_) return false;
    for (std::size_t k = 0; k < species_.size(); ++k) {
      if (species_[k].name != other.species_[k].name || species_[k].charge != other.species_[k].charge) return false;
    }
    return true;
  }

 private:
  void validate();

  std::vector<Species> species_;
  std::vector<Reaction> reactions_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

/// Signed stoichiometric matrix, entry (i, k) = nu-_ik - nu+_ik.
inline IntMatrix stoichiometric_matrix(const Scheme& scheme) {
  const auto r = static_cast<Eigen::Index>(scheme.reaction_count());
  const auto n = static_cast<Eigen::Index>(scheme.species_count());
  IntMatrix nu = IntMatrix::Zero(r, n);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& rx = scheme.reaction(static_cast<std::size_t>(i));
    for (const auto& [k, c] : rx.backward) nu(i, static_cast<Eigen::Index>(k)) += c;
    for (const auto& [k, c] : rx.forward) nu(i, static_cast<Eigen::Index>(k)) -= c;
  }
  return nu;
}

inline IntVector charge_vector(const Scheme& scheme) {
  IntVector z(static_cast<Eigen::Index>(scheme.species_count()));
  for (std::size_t k = 0; k < scheme.species_count(); ++k) z(static_cast<Eigen::Index>(k)) = scheme.species(k).charge;
  return z;
}

inline void Scheme::validate() {
  by_name_.clear();
  for (std::size_t k = 0; k < species_.size(); ++k) {
    auto& s = species_[k];
    s.index = k;
    if (s.name.empty()) throw SchemeError("species " + std::to_string(k) + " has an empty name");
    if (!by_name_.emplace(s.name, k).second) throw SchemeError("duplicate species '" + s.name + "'");
    if (s.name == kHydrogenName) {
      if (s.charge != 1) throw SchemeError("'H' is reserved for the hydrogen ion and must have charge +1");
      if (k != 0) throw SchemeError("the hydrogen ion must be species 0");
    }
  }

  for (std::size_t i = 0; i < reactions_.size(); ++i) {
    const auto& rx = reactions_[i];
    const std::string where = "reaction " + std::to_string(i + 1);
    if (!std::isfinite(rx.pK)) throw SchemeError(where + ": pK must be finite");
    auto check_side = [&](const std::map<std::size_t, int>& side) {
      for (const auto& [k, c] : side) {
        if (k >= species_.size()) throw SchemeError(where + ": unknown species index " + std::to_string(k));
        if (c <= 0) throw SchemeError(where + ": coefficients must be positive");
        if (c > kMaxStoichiometricCoefficient) {
          throw SchemeError(where + ": coefficient " + std::to_string(c) + " exceeds " +
                            std::to_string(kMaxStoichiometricCoefficient));
        }
      }
    };
    check_side(rx.forward);
    check_side(rx.backward);
    if (rx.backward.empty()) throw SchemeError(where + ": product side is empty");
    if (rx.forward.empty() && rx.kind != ReactionKind::autoprotolysis) throw SchemeError(where + ": reactant side is empty");
    if (rx.kind == ReactionKind::autoprotolysis) {
      const auto oh = by_name_.find(std::string(kHydroxylName));
      const bool ok = has_hydrogen() && oh != by_name_.end() && rx.forward.empty() && rx.backward.size() == 2 &&
                      rx.backward.count(0) == 1 && rx.backward.at(0) == 1 && rx.backward.count(oh->second) == 1 &&
                      rx.backward.at(oh->second) == 1;
      if (!ok) throw SchemeError(where + ": autoprotolysis must read H2O = H{+1} + OH{-1}");
    }

    int charge = 0;
    for (const auto& [k, c] : rx.backward) charge += c * species_[k].charge;
    for (const auto& [k, c] : rx.forward) charge -= c * species_[k].charge;
    if (charge != 0) throw SchemeError(where + ": charge is not conserved (net " + std::to_string(charge) + ")");
  }

  if (!reactions_.empty()) {
    const std::size_t rank = integer_rank(stoichiometric_matrix(*this));
    if (rank < reactions_.size()) {
      throw SchemeError("dependent reaction set: rank " + std::to_string(rank) + " < " +
                        std::to_string(reactions_.size()) + " reactions");
    }
  }
}

}  // namespace speciation
