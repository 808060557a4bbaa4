#include "docparse/table_metrics.hpp"

#include <map>
#include <set>

#include "docparse/errors.hpp"
#include "docparse/latex_lexer.hpp"
#include "docparse/latex_normalizer.hpp"

namespace docparse {

namespace {

using latex::Token;
using latex::TokenKind;

const std::set<std::string, std::less<>> kEnvironments = {"tabular", "tabular*", "tabularx", "longtable", "array"};

const std::set<std::string, std::less<>> kRuleCommands = {"\\hline",   "\\toprule", "\\midrule", "\\bottomrule",
                                                          "\\cline",   "\\cmidrule", "\\specialrule",
                                                          "\\addlinespace", "\\centering", "\\raggedright"};

// Wrappers whose last brace argument is the visible content; value is the
// number of brace arguments taken.
const std::map<std::string, int, std::less<>> kWrappers = {
    {"\\multicolumn", 3}, {"\\multirow", 3},  {"\\textbf", 1},    {"\\textit", 1}, {"\\emph", 1},
    {"\\underline", 1},   {"\\mathbf", 1},    {"\\text", 1},      {"\\mbox", 1},   {"\\textrm", 1},
    {"\\texttt", 1},      {"\\textsf", 1},    {"\\shortstack", 1}, {"\\makecell", 1}, {"\\bf", 0},
    {"\\it", 0},          {"\\small", 0},     {"\\footnotesize", 0}, {"\\bfseries", 0}, {"\\itshape", 0},
};

// Tokens of the body of the first tabular-like environment, past the
// column specification.
std::vector<Token> environment_body(const std::vector<Token>& toks) {
  auto next_non_ws = [&](std::size_t i) {
    while (i < toks.size() && toks[i].kind == TokenKind::Whitespace) ++i;
    return i;
  };
  // Reads "{name}" starting at i; returns name and index past the group.
  auto read_name = [&](std::size_t i, std::string& name) -> std::size_t {
    i = next_non_ws(i);
    if (i >= toks.size() || toks[i].kind != TokenKind::GroupOpen) return std::string::npos;
    name.clear();
    ++i;
    while (i < toks.size() && toks[i].kind != TokenKind::GroupClose) name += toks[i++].text;
    return i < toks.size() ? i + 1 : std::string::npos;
  };
  auto skip_group = [&](std::size_t i) -> std::size_t {
    i = next_non_ws(i);
    if (i >= toks.size() || toks[i].kind != TokenKind::GroupOpen) return i;
    int depth = 0;
    for (; i < toks.size(); ++i) {
      if (toks[i].kind == TokenKind::GroupOpen) ++depth;
      else if (toks[i].kind == TokenKind::GroupClose && --depth == 0) return i + 1;
    }
    return i;
  };

  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].kind != TokenKind::Command || toks[i].text != "\\begin") continue;
    std::string name;
    std::size_t j = read_name(i + 1, name);
    if (j == std::string::npos || !kEnvironments.count(name)) continue;

    // Optional [pos], then width for tabular*/tabularx, then column spec.
    j = next_non_ws(j);
    if (j < toks.size() && toks[j].text == "[") {
      while (j < toks.size() && toks[j].text != "]") ++j;
      ++j;
    }
    if (name == "tabular*" || name == "tabularx") j = skip_group(j);
    j = skip_group(j);

    int depth = 0;
    std::vector<Token> body;
    for (std::size_t k = j; k < toks.size(); ++k) {
      if (toks[k].kind == TokenKind::Command && toks[k].text == "\\end" && depth == 0) {
        std::string end_name;
        if (read_name(k + 1, end_name) != std::string::npos && end_name == name) return body;
      }
      if (toks[k].kind == TokenKind::GroupOpen) ++depth;
      else if (toks[k].kind == TokenKind::GroupClose) --depth;
      body.push_back(toks[k]);
    }
    return body;
  }
  throw ExtractionError("no tabular environment found");
}

// Removes rule commands and unwraps formatting wrappers in one cell.
std::string clean_cell(const std::vector<Token>& cell) {
  std::string out;
  std::size_t i = 0;
  auto skip_ws = [&](std::size_t k) {
    while (k < cell.size() && cell[k].kind == TokenKind::Whitespace) ++k;
    return k;
  };
  // Index range [first, last) of the brace group starting at k, contents only.
  auto group_at = [&](std::size_t k, std::size_t& first, std::size_t& last) -> bool {
    k = skip_ws(k);
    if (k >= cell.size() || cell[k].kind != TokenKind::GroupOpen) return false;
    int depth = 0;
    for (std::size_t m = k; m < cell.size(); ++m) {
      if (cell[m].kind == TokenKind::GroupOpen) ++depth;
      else if (cell[m].kind == TokenKind::GroupClose && --depth == 0) {
        first = k + 1;
        last = m;
        return true;
      }
    }
    return false;
  };

  while (i < cell.size()) {
    const Token& t = cell[i];
    if (t.kind == TokenKind::Comment) {
      ++i;
      continue;
    }
    if (t.kind == TokenKind::Command && kRuleCommands.count(t.text)) {
      ++i;
      // \cmidrule(lr){2-3}, \cline{2-3}
      std::size_t k = skip_ws(i);
      if (k < cell.size() && cell[k].text == "(") {
        while (k < cell.size() && cell[k].text != ")") ++k;
        i = k + 1;
      }
      std::size_t first = 0, last = 0;
      if ((t.text == "\\cline" || t.text == "\\cmidrule" || t.text == "\\specialrule") && group_at(i, first, last)) {
        i = last + 1;
      }
      continue;
    }
    if (t.kind == TokenKind::Command) {
      auto w = kWrappers.find(t.text);
      if (w != kWrappers.end()) {
        std::size_t k = i + 1;
        std::size_t first = 0, last = 0;
        std::size_t content_first = 0, content_last = 0;
        bool ok = true;
        for (int a = 0; a < w->second; ++a) {
          const std::size_t probe = skip_ws(k);
          // \multirow{2}{*}{x} may carry an optional [..] before its width.
          if (probe < cell.size() && cell[probe].text == "[") {
            std::size_t m = probe;
            while (m < cell.size() && cell[m].text != "]") ++m;
            k = m + 1;
          }
          if (!group_at(k, first, last)) {
            ok = false;
            break;
          }
          content_first = first;
          content_last = last;
          k = last + 1;
        }
        if (ok) {
          if (w->second > 0) {
            out += clean_cell(std::vector<Token>(cell.begin() + static_cast<std::ptrdiff_t>(content_first),
                                                 cell.begin() + static_cast<std::ptrdiff_t>(content_last)));
          }
          i = k;
          continue;
        }
      }
    }
    out += t.text;
    ++i;
  }
  return out;
}

std::string strip_braces(const std::string& s) {
  // Bare grouping braces carry no content; escaped braces stay.
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      out += s[i];
      out += s[++i];
      continue;
    }
    if (s[i] == '{' || s[i] == '}') continue;
    out += s[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> extract_table_cells(std::string_view latex_src) {
  const auto body = environment_body(latex::tokenize(latex_src));

  std::vector<std::string> cells;
  std::vector<Token> cell;
  int depth = 0;
  auto flush = [&] {
    std::string text = latex::collapse_text_spaces(strip_braces(clean_cell(cell)));
    if (!text.empty()) cells.push_back(std::move(text));
    cell.clear();
  };
  for (const auto& t : body) {
    if (t.kind == TokenKind::GroupOpen) ++depth;
    else if (t.kind == TokenKind::GroupClose) --depth;
    if (depth == 0 && ((t.kind == TokenKind::Character && t.text == "&") ||
                       (t.kind == TokenKind::Command && (t.text == "\\\\" || t.text == "\\tabularnewline")))) {
      flush();
      continue;
    }
    cell.push_back(t);
  }
  flush();
  return cells;
}

TableF1 table_cell_f1(std::string_view pred_latex, std::string_view gt_latex) {
  TableF1 out;
  std::vector<std::string> pred;
  std::vector<std::string> gt;
  try {
    pred = extract_table_cells(pred_latex);
    gt = extract_table_cells(gt_latex);
  } catch (const ExtractionError& e) {
    out.failed = true;
    out.message = e.what();
    return out;
  }
  std::map<std::string, long> counts;
  for (const auto& c : gt) ++counts[c];
  std::size_t hits = 0;
  for (const auto& c : pred) {
    auto it = counts.find(c);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++hits;
    }
  }
  if (pred.empty() && gt.empty()) {
    out.precision = out.recall = out.f1 = 1.0;
    return out;
  }
  out.precision = pred.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pred.size());
  out.recall = gt.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(gt.size());
  out.f1 = (out.precision + out.recall > 0.0) ? 2.0 * out.precision * out.recall / (out.precision + out.recall) : 0.0;
  return out;
}

}  // namespace docparse
