#pragma once

// Line-oriented text format for reaction schemes.
//
//   # comment
//   species H{+1} HB{0} B{-1}          optional, fixes species order
//   water pKw=14.0                     H2O = H{+1} + OH{-1}
//   HB{0} = B{-1} + H{+1} ; pK=9.29
//   3*HB = H3B3{0} ; pK=-1.77 ; gamma_exp=+3
//   total B = 0.2                      analytical concentration, mol/L
//
// A species charge is required on first mention and may be omitted afterwards.
// The hydrogen ion `H` is always placed at index 0.

#include "errors.hpp"
#include "scheme.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace speciation {

struct SchemeDocument {
  Scheme scheme;
  /// `total` statements in document order.
  std::vector<std::pair<std::string, double>> totals;
};

namespace detail {

class LineCursor {
 public:
  LineCursor(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }
  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  void expect(char c, const char* what) {
    if (!accept(c)) fail(std::string("expected ") + what);
  }
  std::size_t column() const { return pos_ + 1; }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, pos_ + 1); }

  std::string identifier() {
    skip_space();
    const std::size_t start = pos_;
    if (pos_ >= text_.size() || !(std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      fail("expected a species name");
    }
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  bool peek_identifier() {
    const char c = peek();
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }

  bool peek_digit() { return std::isdigit(static_cast<unsigned char>(peek())) != 0; }

  long integer(bool allow_sign) {
    skip_space();
    const std::size_t start = pos_;
    if (allow_sign && pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    long value = 0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) {
      pos_ = start;
      fail("expected an integer");
    }
    if (start < pos_ && text_[start] == '-') value = -value;
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  double real() {
    skip_space();
    const std::size_t start = pos_;
    std::size_t end = pos_;
    while (end < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '.' ||
                                  text_[end] == '+' || text_[end] == '-')) {
      ++end;
    }
    const std::string token(text_.substr(start, end - start));
    char* stop = nullptr;
    const double v = token.empty() ? 0.0 : std::strtod(token.c_str(), &stop);
    if (token.empty() || stop != token.c_str() + token.size() || !std::isfinite(v)) fail("expected a real number");
    pos_ = end;
    return v;
  }

  /// Consumes `word` if it is the next full identifier.
  bool keyword(std::string_view word) {
    skip_space();
    if (text_.substr(pos_, word.size()) != word) return false;
    const std::size_t after = pos_ + word.size();
    if (after < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[after])) || text_[after] == '_')) return false;
    pos_ = after;
    return true;
  }

  std::size_t save() const { return pos_; }
  void restore(std::size_t p) { pos_ = p; }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

struct PendingReaction {
  std::vector<std::pair<std::string, int>> forward;
  std::vector<std::pair<std::string, int>> backward;
  double pK = 0.0;
  ReactionKind kind = ReactionKind::ordinary;
  std::optional<int> gamma_exponent;
  std::size_t line = 0;
};

class SchemeParser {
 public:
  SchemeDocument parse(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t begin = 0;
    while (begin <= text.size()) {
      std::size_t end = text.find('\n', begin);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(begin, end - begin);
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      statement(LineCursor(line, line_no), line_no);
      begin = end + 1;
    }
    if (reactions_.empty()) throw ParseError("scheme has no reactions", line_no, 1);
    return build();
  }

 private:
  void statement(LineCursor cur, std::size_t line_no) {
    if (cur.at_end()) return;
    const std::size_t start = cur.save();
    if (cur.keyword("species") && cur.peek_identifier()) {
      while (!cur.at_end()) reference(cur);
      return;
    }
    cur.restore(start);
    if (cur.keyword("water") && (cur.at_end() || cur.peek_identifier())) {
      double pkw = kDefaultPKw;
      if (!cur.at_end()) {
        if (!cur.keyword("pKw")) cur.fail("expected pKw=<real>");
        cur.expect('=', "'='");
        pkw = cur.real();
      }
      if (!cur.at_end()) cur.fail("unexpected text after water statement");
      declare(std::string(kHydrogenName), 1, cur);
      declare(std::string(kHydroxylName), -1, cur);
      PendingReaction rx;
      rx.backward = {{std::string(kHydrogenName), 1}, {std::string(kHydroxylName), 1}};
      rx.pK = pkw;
      rx.kind = ReactionKind::autoprotolysis;
      rx.line = line_no;
      reactions_.push_back(std::move(rx));
      return;
    }
    cur.restore(start);
    if (cur.keyword("total") && cur.peek_identifier()) {
      const std::string name = cur.identifier();
      cur.expect('=', "'='");
      const double value = cur.real();
      if (!cur.at_end()) cur.fail("unexpected text after total");
      for (const auto& [n, v] : totals_) {
        if (n == name) cur.fail("duplicate total for '" + name + "'");
      }
      totals_.emplace_back(name, value);
      return;
    }
    cur.restore(start);
    reaction(cur, line_no);
  }

  void reaction(LineCursor& cur, std::size_t line_no) {
    PendingReaction rx;
    rx.line = line_no;
    rx.forward = side(cur);
    cur.expect('=', "'=' between reaction sides");
    rx.backward = side(cur);
    bool have_pk = false;
    while (cur.accept(';')) {
      if (cur.keyword("pK")) {
        cur.expect('=', "'='");
        rx.pK = cur.real();
        have_pk = true;
      } else if (cur.keyword("gamma_exp")) {
        cur.expect('=', "'='");
        rx.gamma_exponent = static_cast<int>(cur.integer(true));
      } else {
        cur.fail("expected pK=<real> or gamma_exp=<int>");
      }
    }
    if (!cur.at_end()) cur.fail("unexpected text after reaction");
    if (!have_pk) cur.fail("reaction is missing pK=<real>");

    int charge = 0;
    for (const auto& [name, c] : rx.backward) charge += c * charges_.at(name);
    for (const auto& [name, c] : rx.forward) charge -= c * charges_.at(name);
    if (charge != 0) throw ParseError("charge-imbalanced reaction (net charge " + std::to_string(charge) + ")", line_no, 1);
    reactions_.push_back(std::move(rx));
  }

  std::vector<std::pair<std::string, int>> side(LineCursor& cur) {
    std::vector<std::pair<std::string, int>> out;
    do {
      int coef = 1;
      if (cur.peek_digit()) {
        const std::size_t col = cur.save();
        const long c = cur.integer(false);
        if (c < 1 || c > kMaxStoichiometricCoefficient) {
          cur.restore(col);
          cur.fail("stoichiometric coefficient must lie in 1.." + std::to_string(kMaxStoichiometricCoefficient));
        }
        coef = static_cast<int>(c);
        cur.expect('*', "'*' after coefficient");
      }
      const std::string name = reference(cur);
      auto same = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == name; });
      if (same != out.end()) {
        same->second += coef;
        if (same->second > kMaxStoichiometricCoefficient) cur.fail("stoichiometric coefficient too large");
      } else {
        out.emplace_back(name, coef);
      }
    } while (cur.accept('+'));
    return out;
  }

  std::string reference(LineCursor& cur) {
    const std::size_t col = cur.save();
    std::string name = cur.identifier();
    if (cur.accept('{')) {
      const long q = cur.integer(true);
      cur.expect('}', "'}'");
      declare(name, static_cast<int>(q), cur);
    } else if (!charges_.count(name)) {
      cur.restore(col);
      cur.fail("species '" + name + "' needs a charge on first mention, e.g. " + name + "{0}");
    }
    return name;
  }

  void declare(const std::string& name, int charge, const LineCursor& cur) {
    if (auto it = charges_.find(name); it != charges_.end()) {
      if (it->second != charge) {
        cur.fail("species '" + name + "' redeclared with charge " + std::to_string(charge) + " (was " +
                 std::to_string(it->second) + ")");
      }
      return;
    }
    if (name == kHydrogenName && charge != 1) cur.fail("'H' is reserved for the hydrogen ion (charge +1)");
    charges_.emplace(name, charge);
    order_.push_back(name);
  }

  SchemeDocument build() {
    std::vector<std::string> names;
    if (charges_.count(std::string(kHydrogenName))) names.emplace_back(kHydrogenName);
    for (const auto& n : order_) {
      if (n != kHydrogenName) names.push_back(n);
    }
    std::vector<Species> species;
    for (std::size_t k = 0; k < names.size(); ++k) species.push_back({names[k], charges_.at(names[k]), k});
    auto index_of = [&](const std::string& n) {
      return static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin());
    };

    std::vector<Reaction> reactions;
    std::vector<IntVector> rows;
    for (const auto& p : reactions_) {
      Reaction rx;
      for (const auto& [n, c] : p.forward) rx.forward[index_of(n)] += c;
      for (const auto& [n, c] : p.backward) rx.backward[index_of(n)] += c;
      rx.pK = p.pK;
      rx.kind = p.kind;
      rx.gamma_exponent = p.gamma_exponent;

      IntVector row = IntVector::Zero(static_cast<Eigen::Index>(names.size()));
      for (std::size_t k = 0; k < names.size(); ++k) row(static_cast<Eigen::Index>(k)) = rx.net(k);
      rows.push_back(row);
      if (rank_of_rows(rows, row.size()) < rows.size()) {
        throw ParseError("dependent reaction set: reaction is a combination of earlier ones", p.line, 1);
      }
      reactions.push_back(std::move(rx));
    }
    try {
      return SchemeDocument{Scheme(std::move(species), std::move(reactions)), totals_};
    } catch (const SchemeError& e) {
      throw ParseError(e.what(), 0, 0);
    }
  }

  std::unordered_map<std::string, int> charges_;
  std::vector<std::string> order_;
  std::vector<PendingReaction> reactions_;
  std::vector<std::pair<std::string, double>> totals_;
};

inline std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline SchemeDocument parse_document(std::string_view text) { return detail::SchemeParser().parse(text); }

inline Scheme parse_scheme(std::string_view text) { return parse_document(text).scheme; }

/// Canonical text form; parse_scheme(render(s)) == s.
inline std::string render(const Scheme& scheme) {
  std::ostringstream os;
  auto ref = [&](std::size_t k) {
    const auto& s = scheme.species(k);
    return s.name + "{" + (s.charge > 0 ? "+" : "") + std::to_string(s.charge) + "}";
  };
  os << "species";
  for (std::size_t k = 0; k < scheme.species_count(); ++k) os << ' ' << ref(k);
  os << '\n';
  for (const auto& rx : scheme.reactions()) {
    if (rx.kind == ReactionKind::autoprotolysis) {
      os << "water pKw=" << detail::format_real(rx.pK) << '\n';
      continue;
    }
    auto side = [&](const std::map<std::size_t, int>& terms) {
      bool first = true;
      for (const auto& [k, c] : terms) {
        if (!first) os << " + ";
        first = false;
        if (c != 1) os << c << '*';
        os << ref(k);
      }
    };
    side(rx.forward);
    os << " = ";
    side(rx.backward);
    os << " ; pK=" << detail::format_real(rx.pK);
    if (rx.gamma_exponent) os << " ; gamma_exp=" << (*rx.gamma_exponent > 0 ? "+" : "") << *rx.gamma_exponent;
    os << '\n';
  }
  return os.str();
}

}  // namespace speciation
