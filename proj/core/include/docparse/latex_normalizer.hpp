#pragma once

#include <bitset>
#include <string>
#include <string_view>

namespace docparse::latex {

/// Standardization rules, applied in the fixed order
/// Bracket, Fraction, SubSup, Prime, Space.
enum class Rule : unsigned {
  Bracket = 0,  // \{ \} -> \lbrace \rbrace
  Fraction,     // {X \over Y} -> \frac{X}{Y}
  SubSup,       // a^1_2 -> a_2^1
  Prime,        // a' -> a^{\prime}
  Space,        // drop whitespace that carries no meaning
};

inline constexpr unsigned kRuleCount = 5;

class RuleSet {
public:
  static RuleSet all() { return RuleSet(std::bitset<kRuleCount>().set()); }
  static RuleSet none() { return RuleSet(); }
  static RuleSet only(Rule r) { return none().with(r); }

  /// Comma-separated rule names, case-insensitive ("bracket,subsup"), or
  /// "all" / "none". Throws ConfigError on unknown names.
  static RuleSet parse(std::string_view spec);

  RuleSet with(Rule r) const { auto b = bits_; b.set(static_cast<unsigned>(r)); return RuleSet(b); }
  RuleSet without(Rule r) const { auto b = bits_; b.reset(static_cast<unsigned>(r)); return RuleSet(b); }
  bool enabled(Rule r) const { return bits_.test(static_cast<unsigned>(r)); }

  std::string to_string() const;

private:
  RuleSet() = default;
  explicit RuleSet(std::bitset<kRuleCount> b) : bits_(b) {}
  std::bitset<kRuleCount> bits_;
};

const char* rule_name(Rule r);

/// Canonical form of LaTeX math or tabular source. Throws NormalizationError
/// on unbalanced braces or an `\over` whose operands cannot be resolved.
std::string normalize(std::string_view source, RuleSet rules = RuleSet::all());

/// 1 - len(normalized) / len(original), lengths in bytes. Throws
/// DomainError when `original` is empty.
double measure_reduction(std::string_view original, std::string_view normalized);

/// Whitespace-only canonicalization of a table cell (text context).
std::string collapse_text_spaces(std::string_view source);

}  // namespace docparse::latex
