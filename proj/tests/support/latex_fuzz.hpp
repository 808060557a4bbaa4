#pragma once

#include <string>

#include "docparse/rng.hpp"

namespace docparse::testing {

/// Random brace-balanced LaTeX built from the constructs the normalizer
/// rewrites (scripts, primes, \over groups, escaped braces, tabular specs)
/// mixed with ordinary commands, comments and irregular whitespace.
class LatexFuzzer {
public:
  explicit LatexFuzzer(std::uint64_t seed) : rng_(seed) {}

  std::string next() {
    if (rng_.bernoulli(0.1)) return tabular();
    return expr(3);
  }

private:
  std::string pick(std::initializer_list<const char*> options) {
    const auto i = rng_.uniform_int(0, static_cast<long>(options.size()) - 1);
    return *(options.begin() + i);
  }

  std::string blanks() {
    switch (rng_.uniform_int(0, 5)) {
      case 0: return " ";
      case 1: return "  ";
      case 2: return "\t";
      case 3: return " \n ";
      default: return "";
    }
  }

  std::string atom(int depth) {
    switch (rng_.uniform_int(0, depth > 0 ? 11 : 5)) {
      case 0: return pick({"a", "b", "x", "y", "z", "n"});
      case 1: return pick({"1", "2", "0", "+", "-", "=", "(", ")", ",", "<"});
      case 2: return pick({"\\alpha", "\\beta", "\\infty", "\\sum", "\\int", "\\cdot", "\\ldots"});
      case 3: return pick({"\\{", "\\}", "\\,", "\\;", "\\!", "\\\\", "\\ "});
      case 4: return pick({"\\alpha x", "\\mathrm d", "\\sin x", "\\log n"});
      case 5: return pick({"a'", "f''", "x'''", "y'"});
      case 6: return "{" + expr(depth - 1) + "}";
      case 7: return "{" + expr(depth - 1) + blanks() + "\\over" + blanks() + expr(depth - 1) + "}";
      case 8: return "\\frac{" + expr(depth - 1) + "}{" + expr(depth - 1) + "}";
      case 9: return "\\sqrt{" + expr(depth - 1) + "}";
      case 10: return "\\left(" + expr(depth - 1) + "\\right)";
      default: return "\\mathbf{" + expr(depth - 1) + "}";
    }
  }

  std::string script(int depth) {
    if (rng_.bernoulli(0.5)) return atom(0);
    return "{" + expr(depth - 1) + "}";
  }

  std::string term(int depth) {
    std::string t = atom(depth);
    const auto kind = rng_.uniform_int(0, 6);
    if (kind == 0) t += "^" + blanks() + script(depth);
    if (kind == 1) t += "_" + script(depth);
    if (kind == 2) t += "^" + script(depth) + blanks() + "_" + script(depth);
    if (kind == 3) t += "_" + script(depth) + "^" + script(depth);
    if (kind == 4 && rng_.bernoulli(0.5)) t += "'^" + script(depth);
    return t;
  }

  std::string expr(int depth) {
    std::string out;
    const long n = rng_.uniform_int(1, depth > 0 ? 4 : 2);
    for (long i = 0; i < n; ++i) {
      out += blanks();
      out += depth > 0 ? term(depth) : atom(0);
    }
    if (rng_.bernoulli(0.03)) out += "%note\n";
    return out + blanks();
  }

  std::string tabular() {
    std::string spec = pick({"l c", "|l|c|", "c c c", "lcr", "l  r"});
    std::string out = "\\begin{tabular}{" + spec + "}" + blanks();
    const long rows = rng_.uniform_int(1, 3);
    for (long r = 0; r < rows; ++r) {
      out += "\\hline " + expr(1) + " & $" + expr(1) + "$ \\\\" + blanks();
    }
    return out + "\\end{tabular}";
  }

  Rng rng_;
};

}  // namespace docparse::testing
