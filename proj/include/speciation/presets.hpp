#pragma once

// Built-in reaction schemes.

#include "scheme.hpp"
#include "scheme_parser.hpp"

#include <array>
#include <map>
#include <stdexcept>
#include <string>

namespace speciation::presets {

/// Boric acid (HB) + tris (HT+) dissociation constants, pK1..pK6, and pKw.
struct TrisBorateConstants {
  std::array<double, 6> pK{9.29, -1.77, 9.02, -2.53, 9.50, 7.98};
  double pKw = 14.00;
};

/// Six reactions over H+, HB, B-, H3B3, H2B3-, T, HTB, TB-, HT+, plus water.
/// The triborate association carries activity exponent +3 so that the
/// corrected constants follow the reference tris-borate data set.
inline std::string tris_borate_text(const TrisBorateConstants& c = {}, bool with_water = true) {
  using detail::format_real;
  std::string s = "# boric acid / tris buffer\n";
  if (with_water) s += "water pKw=" + format_real(c.pKw) + "\n";
  s += "HB{0} = B{-1} + H{+1} ; pK=" + format_real(c.pK[0]) + "\n";
  s += "3*HB = H3B3{0} ; pK=" + format_real(c.pK[1]) + " ; gamma_exp=+3\n";
  s += "H3B3 = H2B3{-1} + H ; pK=" + format_real(c.pK[2]) + "\n";
  s += "HB + T{0} = HTB{0} ; pK=" + format_real(c.pK[3]) + "\n";
  s += "HTB = TB{-1} + H ; pK=" + format_real(c.pK[4]) + "\n";
  s += "HT{+1} = T + H ; pK=" + format_real(c.pK[5]) + "\n";
  return s;
}

inline Scheme tris_borate(const TrisBorateConstants& c = {}, bool with_water = true) {
  return parse_scheme(tris_borate_text(c, with_water));
}

/// Monobasic acid HA and conjugate acid HB+ of a monobasic base B.
inline std::string acid_base_text(double pKa = 9.29, double pKb = 7.98, double pKw = 14.0) {
  using detail::format_real;
  return "# monobasic acid HA and base B\n"
         "water pKw=" + format_real(pKw) + "\n"
         "HA{0} = A{-1} + H{+1} ; pK=" + format_real(pKa) + "\n"
         "HB{+1} = B{0} + H ; pK=" + format_real(pKb) + "\n";
}

inline Scheme acid_base(double pKa = 9.29, double pKb = 7.98, double pKw = 14.0) {
  return parse_scheme(acid_base_text(pKa, pKb, pKw));
}

inline std::string pure_water_text(double pKw = 14.0) { return "water pKw=" + detail::format_real(pKw) + "\n"; }

inline Scheme pure_water(double pKw = 14.0) { return parse_scheme(pure_water_text(pKw)); }

/// Preset by name with named constant overrides (pK1..pK6, pKa, pKb, pKw).
inline std::string preset_text(const std::string& name, const std::map<std::string, double>& overrides = {}) {
  auto take = [&](const std::string& key, double fallback) {
    auto it = overrides.find(key);
    return it == overrides.end() ? fallback : it->second;
  };
  auto reject_unknown = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : overrides) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) throw std::invalid_argument("preset '" + name + "' has no parameter '" + k + "'");
    }
  };
  if (name == "tris-borate") {
    reject_unknown({"pK1", "pK2", "pK3", "pK4", "pK5", "pK6", "pKw"});
    TrisBorateConstants c;
    for (std::size_t i = 0; i < c.pK.size(); ++i) c.pK[i] = take("pK" + std::to_string(i + 1), c.pK[i]);
    c.pKw = take("pKw", c.pKw);
    return tris_borate_text(c);
  }
  if (name == "acid-base") {
    reject_unknown({"pKa", "pKb", "pKw"});
    return acid_base_text(take("pKa", 9.29), take("pKb", 7.98), take("pKw", 14.0));
  }
  if (name == "water") {
    reject_unknown({"pKw"});
    return pure_water_text(take("pKw", 14.0));
  }
  throw std::invalid_argument("unknown preset '" + name + "' (expected tris-borate, acid-base or water)");
}

}  // namespace speciation::presets
