#include "docparse/latex_normalizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>

#include "docparse/errors.hpp"
#include "docparse/latex_lexer.hpp"

namespace docparse::latex {

namespace {

// ---------------------------------------------------------------------------
// Brace tree

struct Node {
  TokenKind kind;  // GroupOpen marks a group node
  std::string text;
  std::size_t pos = 0;
  std::vector<Node> children;

  bool group() const { return kind == TokenKind::GroupOpen; }
  bool ws() const { return kind == TokenKind::Whitespace; }
  bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
  bool command(std::string_view t) const { return is(TokenKind::Command, t); }
  bool character(std::string_view t) const { return is(TokenKind::Character, t); }
  bool letter_command() const {
    return kind == TokenKind::Command && text.size() > 1 && std::isalpha(static_cast<unsigned char>(text[1]));
  }
  bool starts_with_letter() const {
    return kind == TokenKind::Character && !text.empty() && std::isalpha(static_cast<unsigned char>(text[0]));
  }
  bool alnum_char() const {
    return kind == TokenKind::Character && text.size() == 1 && std::isalnum(static_cast<unsigned char>(text[0]));
  }
};

using NodeList = std::vector<Node>;

Node make_leaf(TokenKind kind, std::string text, std::size_t pos) { return Node{kind, std::move(text), pos, {}}; }

Node make_group(NodeList children, std::size_t pos) {
  return Node{TokenKind::GroupOpen, "{", pos, std::move(children)};
}

NodeList build_tree(const std::vector<Token>& tokens) {
  std::vector<NodeList> stack(1);
  std::vector<std::size_t> open_pos;
  for (const auto& tok : tokens) {
    if (tok.kind == TokenKind::GroupOpen) {
      stack.emplace_back();
      open_pos.push_back(tok.position);
    } else if (tok.kind == TokenKind::GroupClose) {
      if (open_pos.empty()) throw NormalizationError("unbalanced '}'", tok.position);
      Node g = make_group(std::move(stack.back()), open_pos.back());
      stack.pop_back();
      open_pos.pop_back();
      stack.back().push_back(std::move(g));
    } else {
      stack.back().push_back(make_leaf(tok.kind, tok.text, tok.position));
    }
  }
  if (!open_pos.empty()) throw NormalizationError("unclosed '{'", open_pos.back());
  return std::move(stack.front());
}

// A letter-named command directly followed by a letter would re-lex as a
// longer command name, so a separating blank is emitted there. A comment
// runs to the end of its line; rewrites may have removed that line break, so
// one is restored before whatever follows the comment.
struct SerializeState {
  bool after_letter_command = false;
  bool open_comment = false;
};

void serialize(const NodeList& xs, std::string& out, SerializeState& st) {
  auto close_comment = [&] {
    if (st.open_comment) out += '\n';
    st.open_comment = false;
  };
  for (const auto& n : xs) {
    if (n.group()) {
      close_comment();
      out += '{';
      st.after_letter_command = false;
      serialize(n.children, out, st);
      close_comment();
      out += '}';
      st.after_letter_command = false;
      continue;
    }
    if (n.ws() && st.open_comment) {
      out += n.text.find('\n') == std::string::npos ? std::string("\n") : n.text;
      st.open_comment = false;
      st.after_letter_command = false;
      continue;
    }
    close_comment();
    if (st.after_letter_command && n.starts_with_letter()) out += ' ';
    out += n.text;
    st.after_letter_command = n.letter_command();
    st.open_comment = n.kind == TokenKind::Comment;
  }
}

std::string serialize(const NodeList& xs) {
  std::string out;
  SerializeState st;
  serialize(xs, out, st);
  return out;
}

std::string flat_text(const NodeList& xs) { return serialize(xs); }

// ---------------------------------------------------------------------------
// Mode tracking. Math is the default; tabular bodies and the arguments of
// text commands are text; tabular/array column specifications are Spec.

enum class Mode { Math, Text, Spec };

const std::set<std::string, std::less<>> kTextCommands = {
    "\\text",   "\\textbf", "\\textit", "\\textrm", "\\textsf",     "\\texttt", "\\textup",
    "\\textsc", "\\textsl", "\\mbox",   "\\hbox",   "\\textnormal", "\\emph",
};

const std::set<std::string, std::less<>> kTextEnvironments = {"tabular", "tabular*", "tabularx", "longtable"};

const std::set<std::string, std::less<>> kMathEnvironments = {
    "array",   "matrix",  "pmatrix", "bmatrix", "Bmatrix",  "vmatrix",   "Vmatrix", "smallmatrix", "cases",
    "aligned", "align",   "align*",  "gather",  "gathered", "equation",  "split",   "alignedat",   "eqnarray",
    "multline"};

struct ListModes {
  std::vector<Mode> leaf;   // mode in force at each sibling
  std::vector<Mode> inner;  // content mode of group siblings
};

std::optional<std::size_t> prev_non_ws(const NodeList& xs, std::size_t i) {
  while (i > 0) {
    --i;
    if (!xs[i].ws()) return i;
  }
  return std::nullopt;
}

ListModes annotate(const NodeList& xs, Mode base) {
  ListModes m{std::vector<Mode>(xs.size(), base), std::vector<Mode>(xs.size(), base)};
  Mode mode = base;
  bool pending_text_arg = false;
  int spec_countdown = 0;
  Mode mode_after_spec = base;
  std::vector<std::pair<std::string, Mode>> envs;

  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Node& n = xs[i];
    m.leaf[i] = mode;
    if (n.ws()) continue;

    if (n.group()) {
      Mode inner = mode;
      const auto p = prev_non_ws(xs, i);
      const bool after_begin = p && xs[*p].command("\\begin");
      const bool after_end = p && xs[*p].command("\\end");
      if (pending_text_arg) {
        inner = Mode::Text;
        pending_text_arg = false;
      } else if (spec_countdown > 0 && !after_begin) {
        if (--spec_countdown == 0) {
          inner = Mode::Spec;
          mode = mode_after_spec;
        }
      }
      m.inner[i] = inner;

      if (after_begin) {
        const std::string name = flat_text(n.children);
        envs.emplace_back(name, mode);
        if (kTextEnvironments.count(name)) {
          spec_countdown = (name == "tabular*" || name == "tabularx") ? 2 : 1;
          mode_after_spec = Mode::Text;
        } else if (name == "array") {
          spec_countdown = 1;
          mode_after_spec = Mode::Math;
        } else if (kMathEnvironments.count(name)) {
          mode = Mode::Math;
        }
      } else if (after_end) {
        const std::string name = flat_text(n.children);
        for (std::size_t e = envs.size(); e > 0; --e) {
          if (envs[e - 1].first == name) {
            mode = envs[e - 1].second;
            envs.resize(e - 1);
            break;
          }
        }
      }
      continue;
    }

    pending_text_arg = false;
    if (n.kind == TokenKind::Command) {
      if (kTextCommands.count(n.text)) pending_text_arg = true;
      else if (n.text == "\\tabular" || n.text == "\\array") {
        spec_countdown = 1;
        mode_after_spec = mode;
      } else if (n.text == "\\(" || n.text == "\\[") mode = Mode::Math;
      else if (n.text == "\\)" || n.text == "\\]") mode = Mode::Text;
    } else if (n.character("$") && mode != Mode::Spec) {
      mode = (mode == Mode::Math) ? Mode::Text : Mode::Math;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// BRACKET

void apply_bracket(NodeList& xs, Mode mode) {
  const ListModes m = annotate(xs, mode);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].group()) {
      apply_bracket(xs[i].children, m.inner[i]);
    } else if (m.leaf[i] == Mode::Math) {
      if (xs[i].command("\\{")) xs[i].text = "\\lbrace";
      else if (xs[i].command("\\}")) xs[i].text = "\\rbrace";
    }
  }
}

// ---------------------------------------------------------------------------
// FRACTION

std::optional<std::size_t> find_over(const NodeList& xs) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].command("\\over")) return i;
  }
  return std::nullopt;
}

NodeList trimmed(NodeList xs) {
  while (!xs.empty() && xs.back().ws()) xs.pop_back();
  auto first = std::find_if(xs.begin(), xs.end(), [](const Node& n) { return !n.ws(); });
  xs.erase(xs.begin(), first);
  if (xs.size() == 1 && xs.front().group()) return std::move(xs.front().children);
  return xs;
}

void check_operand(const NodeList& xs, std::size_t over_pos) {
  int left = 0;
  int envs = 0;
  for (const auto& n : xs) {
    if (n.command("\\left")) ++left;
    else if (n.command("\\right")) --left;
    else if (n.command("\\begin")) ++envs;
    else if (n.command("\\end")) --envs;
  }
  if (left != 0) throw NormalizationError("\\over operand splits a \\left/\\right pair", over_pos);
  if (envs != 0) throw NormalizationError("\\over operand splits an environment", over_pos);
}

// Rewrites a sibling list holding one top-level \over into \frac{X}{Y}.
NodeList make_frac(const NodeList& xs, std::size_t over) {
  for (std::size_t i = over + 1; i < xs.size(); ++i) {
    if (xs[i].command("\\over")) throw NormalizationError("ambiguous second \\over in one group", xs[i].pos);
  }
  const std::size_t pos = xs[over].pos;
  NodeList num(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(over));
  NodeList den(xs.begin() + static_cast<std::ptrdiff_t>(over) + 1, xs.end());
  check_operand(num, pos);
  check_operand(den, pos);
  NodeList out;
  out.push_back(make_leaf(TokenKind::Command, "\\frac", pos));
  out.push_back(make_group(trimmed(std::move(num)), pos));
  out.push_back(make_group(trimmed(std::move(den)), pos));
  return out;
}

// A group directly after a script marker, a command or another group is an
// argument and keeps its braces.
bool standalone(const NodeList& xs, std::size_t i) {
  const auto p = prev_non_ws(xs, i);
  if (!p) return true;
  const Node& prev = xs[*p];
  return !(prev.group() || prev.kind == TokenKind::Command || prev.kind == TokenKind::Superscript ||
           prev.kind == TokenKind::Subscript);
}

void apply_fraction(NodeList& xs, Mode mode) {
  const ListModes m = annotate(xs, mode);
  NodeList out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Node& n = xs[i];
    if (!n.group()) {
      out.push_back(std::move(n));
      continue;
    }
    if (m.inner[i] == Mode::Spec) {
      out.push_back(std::move(n));
      continue;
    }
    apply_fraction(n.children, m.inner[i]);
    const auto over = m.inner[i] == Mode::Math ? find_over(n.children) : std::nullopt;
    if (!over) {
      out.push_back(std::move(n));
      continue;
    }
    NodeList frac = make_frac(n.children, *over);
    if (standalone(xs, i)) {
      for (auto& f : frac) out.push_back(std::move(f));
    } else {
      n.children = std::move(frac);
      out.push_back(std::move(n));
    }
  }
  xs = std::move(out);
}

// ---------------------------------------------------------------------------
// SUBSUP and PRIME

// Number of brace arguments taken by commands that may appear as a script.
const std::map<std::string, int, std::less<>> kArity = {
    {"\\frac", 2},     {"\\dfrac", 2},   {"\\tfrac", 2},     {"\\binom", 2},     {"\\sqrt", 1},
    {"\\mathrm", 1},   {"\\mathbf", 1},  {"\\mathit", 1},    {"\\mathcal", 1},   {"\\mathbb", 1},
    {"\\mathsf", 1},   {"\\mathtt", 1},  {"\\mathfrak", 1},  {"\\boldsymbol", 1}, {"\\operatorname", 1},
    {"\\hat", 1},      {"\\bar", 1},     {"\\tilde", 1},     {"\\vec", 1},       {"\\dot", 1},
    {"\\ddot", 1},     {"\\overline", 1}, {"\\underline", 1}, {"\\widehat", 1},   {"\\widetilde", 1},
    {"\\text", 1},     {"\\textbf", 1},  {"\\textit", 1},    {"\\textrm", 1},    {"\\mbox", 1},
};

const std::set<std::string, std::less<>> kNeverScriptArgs = {"\\left", "\\right", "\\begin", "\\end",
                                                              "\\over", "\\middle"};

std::size_t skip_ws(const NodeList& xs, std::size_t i) {
  while (i < xs.size() && xs[i].ws()) ++i;
  return i;
}

// End (exclusive) of the script argument starting at index a.
std::optional<std::size_t> script_arg_end(const NodeList& xs, std::size_t a) {
  if (a >= xs.size()) return std::nullopt;
  const Node& n = xs[a];
  if (n.group()) return a + 1;
  switch (n.kind) {
    case TokenKind::Character:
      if (n.text == "'" || n.text == "&" || n.text == "$" || n.text == "#") return std::nullopt;
      return a + 1;
    case TokenKind::Command: {
      if (kNeverScriptArgs.count(n.text)) return std::nullopt;
      auto it = kArity.find(n.text);
      if (it == kArity.end()) return a + 1;
      std::size_t b = a + 1;
      for (int r = 0; r < it->second; ++r) {
        const std::size_t g = skip_ws(xs, b);
        if (g >= xs.size() || !xs[g].group()) return std::nullopt;
        b = g + 1;
      }
      return b;
    }
    default:
      return std::nullopt;
  }
}

struct Cluster {
  std::size_t end = 0;
  int primes = 0;
  std::optional<std::size_t> first_prime;
  std::optional<std::pair<std::size_t, std::size_t>> sup;  // argument range
  std::optional<std::pair<std::size_t, std::size_t>> sub;
  std::size_t sup_at = 0;
  std::size_t sub_at = 0;
};

std::optional<Cluster> parse_cluster(const NodeList& xs, std::size_t i) {
  Cluster c;
  std::size_t j = i;
  while (true) {
    const std::size_t k = (j == i) ? i : skip_ws(xs, j);
    if (k >= xs.size()) break;
    const Node& n = xs[k];
    if (n.character("'")) {
      if (!c.first_prime) c.first_prime = k;
      ++c.primes;
      j = k + 1;
      continue;
    }
    if (n.kind == TokenKind::Superscript || n.kind == TokenKind::Subscript) {
      const std::size_t a = skip_ws(xs, k + 1);
      const auto b = script_arg_end(xs, a);
      if (!b) return std::nullopt;
      auto& slot = n.kind == TokenKind::Superscript ? c.sup : c.sub;
      if (slot) return std::nullopt;  // double script: leave for the author
      slot = std::make_pair(a, *b);
      (n.kind == TokenKind::Superscript ? c.sup_at : c.sub_at) = k;
      j = *b;
      continue;
    }
    break;
  }
  c.end = j;
  return c;
}

NodeList copy_range(const NodeList& xs, std::pair<std::size_t, std::size_t> r) {
  return NodeList(xs.begin() + static_cast<std::ptrdiff_t>(r.first), xs.begin() + static_cast<std::ptrdiff_t>(r.second));
}

void apply_scripts(NodeList& xs, Mode mode, const RuleSet& rules) {
  const ListModes m = annotate(xs, mode);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].group()) apply_scripts(xs[i].children, m.inner[i], rules);
  }

  NodeList out;
  out.reserve(xs.size());
  std::size_t i = 0;
  while (i < xs.size()) {
    const Node& n = xs[i];
    const bool starts = n.kind == TokenKind::Superscript || n.kind == TokenKind::Subscript || n.character("'");
    if (!starts || m.leaf[i] != Mode::Math) {
      out.push_back(xs[i++]);
      continue;
    }
    const auto c = parse_cluster(xs, i);
    if (!c) {
      out.push_back(xs[i++]);
      continue;
    }
    const bool rewrite_primes = rules.enabled(Rule::Prime) && c->primes > 0;
    const bool reorder = rules.enabled(Rule::SubSup) && c->sup && c->sub && c->sup_at < c->sub_at;
    if ((c->primes > 0 && !rules.enabled(Rule::Prime)) || (!rewrite_primes && !reorder)) {
      for (; i < c->end; ++i) out.push_back(xs[i]);
      continue;
    }

    const std::size_t pos = n.pos;
    NodeList sub_nodes;
    if (c->sub) {
      sub_nodes.push_back(make_leaf(TokenKind::Subscript, "_", xs[c->sub_at].pos));
      for (auto& a : copy_range(xs, *c->sub)) sub_nodes.push_back(std::move(a));
    }
    NodeList sup_nodes;
    if (rewrite_primes) {
      NodeList content;
      for (int p = 0; p < c->primes; ++p) content.push_back(make_leaf(TokenKind::Command, "\\prime", pos));
      if (c->sup) {
        NodeList arg = copy_range(xs, *c->sup);
        if (arg.size() == 1 && arg.front().group()) arg = std::move(arg.front().children);
        for (auto& a : arg) content.push_back(std::move(a));
      }
      sup_nodes.push_back(make_leaf(TokenKind::Superscript, "^", pos));
      sup_nodes.push_back(make_group(std::move(content), pos));
    } else if (c->sup) {
      sup_nodes.push_back(make_leaf(TokenKind::Superscript, "^", xs[c->sup_at].pos));
      for (auto& a : copy_range(xs, *c->sup)) sup_nodes.push_back(std::move(a));
    }

    bool sub_first = rules.enabled(Rule::SubSup);
    if (!sub_first && c->sub) {
      std::size_t sup_pos = c->sup ? c->sup_at : xs.size();
      if (c->first_prime) sup_pos = std::min(sup_pos, *c->first_prime);
      sub_first = c->sub_at < sup_pos;
    }
    auto& first = sub_first ? sub_nodes : sup_nodes;
    auto& second = sub_first ? sup_nodes : sub_nodes;
    for (auto& x : first) out.push_back(std::move(x));
    for (auto& x : second) out.push_back(std::move(x));
    i = c->end;
  }
  xs = std::move(out);
}

// ---------------------------------------------------------------------------
// SPACE

bool is_cell_break(const Node* n) {
  return n && (n->character("&") || n->command("\\\\"));
}

std::string space_for(const Node* a, const Node* b, Mode mode, const std::string& ws) {
  if (a && a->kind == TokenKind::Comment) return "\n";
  if (mode == Mode::Text && std::count(ws.begin(), ws.end(), '\n') >= 2) return "\n\n";
  if (a && a->letter_command()) return (b && b->starts_with_letter()) ? " " : "";
  switch (mode) {
    case Mode::Spec:
      return "";
    case Mode::Math:
      return (a && b && a->alnum_char() && b->alnum_char()) ? " " : "";
    case Mode::Text:
      return (is_cell_break(a) || is_cell_break(b)) ? "" : " ";
  }
  return " ";
}

void apply_space(NodeList& xs, Mode mode) {
  // Merge whitespace runs that earlier rewrites may have made adjacent.
  NodeList merged;
  merged.reserve(xs.size());
  for (auto& n : xs) {
    if (n.ws() && !merged.empty() && merged.back().ws()) merged.back().text += n.text;
    else merged.push_back(std::move(n));
  }
  xs = std::move(merged);

  const ListModes m = annotate(xs, mode);
  NodeList out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Node& n = xs[i];
    if (n.group()) {
      apply_space(n.children, m.inner[i]);
      out.push_back(std::move(n));
      continue;
    }
    if (!n.ws()) {
      out.push_back(std::move(n));
      continue;
    }
    const Node* a = i > 0 ? &xs[i - 1] : nullptr;
    const Node* b = i + 1 < xs.size() ? &xs[i + 1] : nullptr;
    std::string keep = space_for(a, b, m.leaf[i], n.text);
    if (keep.empty()) continue;
    n.text = std::move(keep);
    out.push_back(std::move(n));
  }
  xs = std::move(out);
}

}  // namespace

const char* rule_name(Rule r) {
  switch (r) {
    case Rule::Bracket: return "bracket";
    case Rule::Fraction: return "fraction";
    case Rule::SubSup: return "subsup";
    case Rule::Prime: return "prime";
    case Rule::Space: return "space";
  }
  return "unknown";
}

RuleSet RuleSet::parse(std::string_view spec) {
  std::string lower;
  for (char c : spec) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "all") return all();
  if (lower == "none" || lower.empty()) return none();
  RuleSet out;
  std::size_t start = 0;
  while (start <= lower.size()) {
    const std::size_t comma = std::min(lower.find(',', start), lower.size());
    std::string name = lower.substr(start, comma - start);
    name.erase(std::remove_if(name.begin(), name.end(), [](unsigned char ch) { return std::isspace(ch); }),
               name.end());
    bool found = false;
    for (unsigned r = 0; r < kRuleCount; ++r) {
      if (name == rule_name(static_cast<Rule>(r))) {
        out = out.with(static_cast<Rule>(r));
        found = true;
      }
    }
    if (!found) throw ConfigError("unknown normalization rule '" + name + "'");
    start = comma + 1;
  }
  return out;
}

std::string RuleSet::to_string() const {
  std::string out;
  for (unsigned r = 0; r < kRuleCount; ++r) {
    if (!bits_.test(r)) continue;
    if (!out.empty()) out += ',';
    out += rule_name(static_cast<Rule>(r));
  }
  return out.empty() ? "none" : out;
}

std::string normalize(std::string_view source, RuleSet rules) {
  NodeList tree = build_tree(tokenize(source));
  if (rules.enabled(Rule::Bracket)) apply_bracket(tree, Mode::Math);
  if (rules.enabled(Rule::Fraction)) {
    apply_fraction(tree, Mode::Math);
    if (const auto over = find_over(tree)) tree = make_frac(tree, *over);
  }
  if (rules.enabled(Rule::SubSup) || rules.enabled(Rule::Prime)) apply_scripts(tree, Mode::Math, rules);
  if (rules.enabled(Rule::Space)) apply_space(tree, Mode::Math);
  return serialize(tree);
}

double measure_reduction(std::string_view original, std::string_view normalized) {
  if (original.empty()) throw DomainError("cannot measure reduction of an empty original");
  return 1.0 - static_cast<double>(normalized.size()) / static_cast<double>(original.size());
}

std::string collapse_text_spaces(std::string_view source) {
  NodeList tree;
  try {
    tree = build_tree(tokenize(source));
  } catch (const NormalizationError&) {
    std::string out;
    for (char c : source) {
      const bool blank = std::isspace(static_cast<unsigned char>(c)) != 0;
      if (blank && (out.empty() || out.back() == ' ')) continue;
      out += blank ? ' ' : c;
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
  }
  apply_space(tree, Mode::Text);
  std::string out = serialize(tree);
  const auto b = out.find_first_not_of(" \n");
  if (b == std::string::npos) return {};
  const auto e = out.find_last_not_of(" \n");
  return out.substr(b, e - b + 1);
}

}  // namespace docparse::latex
