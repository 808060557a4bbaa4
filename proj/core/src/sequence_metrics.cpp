#include "docparse/sequence_metrics.hpp"

#include <cctype>
#include <cmath>
#include <map>

#include "docparse/errors.hpp"
#include "docparse/latex_lexer.hpp"
#include "docparse/latex_normalizer.hpp"

namespace docparse {

Tokens tokenize_whitespace(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

Tokens tokenize_code_points(std::string_view text) {
  Tokens out;
  for (const auto& tok : latex::tokenize(text)) {
    // The lexer already splits characters on code-point boundaries; break
    // multi-character tokens down further.
    if (tok.kind == latex::TokenKind::Character) {
      out.push_back(tok.text);
      continue;
    }
    std::size_t i = 0;
    while (i < tok.text.size()) {
      const auto lead = static_cast<unsigned char>(tok.text[i]);
      std::size_t len = lead >= 0xF0 ? 4 : lead >= 0xE0 ? 3 : lead >= 0xC0 ? 2 : 1;
      len = std::min(len, tok.text.size() - i);
      out.push_back(tok.text.substr(i, len));
      i += len;
    }
  }
  return out;
}

Tokens tokenize_latex(std::string_view text) {
  Tokens out;
  for (auto& tok : latex::tokenize(text)) {
    if (tok.kind == latex::TokenKind::Whitespace || tok.kind == latex::TokenKind::Comment) continue;
    out.push_back(std::move(tok.text));
  }
  return out;
}

namespace {

using NgramCounts = std::map<Tokens, std::size_t>;

NgramCounts count_ngrams(const Tokens& toks, std::size_t n) {
  NgramCounts counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++counts[Tokens(toks.begin() + static_cast<std::ptrdiff_t>(i), toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

struct SegmentStats {
  std::vector<std::size_t> matches;
  std::vector<std::size_t> totals;
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
};

SegmentStats segment_stats(const Tokens& cand, const std::vector<Tokens>& refs, int max_n) {
  SegmentStats st;
  st.matches.assign(static_cast<std::size_t>(max_n), 0);
  st.totals.assign(static_cast<std::size_t>(max_n), 0);
  st.cand_len = cand.size();

  std::size_t best_diff = SIZE_MAX;
  for (const auto& r : refs) {
    const std::size_t diff = r.size() > cand.size() ? r.size() - cand.size() : cand.size() - r.size();
    if (diff < best_diff || (diff == best_diff && r.size() < st.ref_len)) {
      best_diff = diff;
      st.ref_len = r.size();
    }
  }

  for (int n = 1; n <= max_n; ++n) {
    const auto cand_counts = count_ngrams(cand, static_cast<std::size_t>(n));
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [gram, c] : count_ngrams(r, static_cast<std::size_t>(n))) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, c);
      }
    }
    std::size_t matched = 0;
    std::size_t total = 0;
    for (const auto& [gram, c] : cand_counts) {
      total += c;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) matched += std::min(c, it->second);
    }
    st.matches[static_cast<std::size_t>(n - 1)] = matched;
    st.totals[static_cast<std::size_t>(n - 1)] = total;
  }
  return st;
}

BleuResult finish(const SegmentStats& st, int max_n) {
  BleuResult r;
  r.candidate_length = st.cand_len;
  r.reference_length = st.ref_len;
  if (st.cand_len == 0) {
    r.empty_candidate = true;
    return r;
  }
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 1; n <= max_n; ++n) {
    const auto k = static_cast<std::size_t>(n - 1);
    double p = 0.0;
    if (n == 1) {
      p = static_cast<double>(st.matches[k]) / static_cast<double>(st.totals[k]);
    } else {
      p = static_cast<double>(st.matches[k] + 1) / static_cast<double>(st.totals[k] + 1);
    }
    r.precisions.push_back(p);
    if (p == 0.0) zero = true;
    else log_sum += std::log(p);
  }
  r.brevity_penalty = st.cand_len >= st.ref_len
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(st.ref_len) / static_cast<double>(st.cand_len));
  r.score = zero ? 0.0 : r.brevity_penalty * std::exp(log_sum / max_n);
  return r;
}

void check_order(int max_n) {
  if (max_n < 1) throw ConfigError("BLEU max_n must be >= 1");
}

}  // namespace

BleuResult bleu(const Tokens& candidate, const std::vector<Tokens>& references, int max_n) {
  check_order(max_n);
  if (references.empty()) throw DomainError("BLEU needs at least one reference");
  return finish(segment_stats(candidate, references, max_n), max_n);
}

BleuResult corpus_bleu(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references,
                       int max_n) {
  check_order(max_n);
  if (candidates.size() != references.size()) throw DomainError("corpus BLEU: candidate/reference count mismatch");
  SegmentStats total;
  total.matches.assign(static_cast<std::size_t>(max_n), 0);
  total.totals.assign(static_cast<std::size_t>(max_n), 0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (references[i].empty()) throw DomainError("BLEU needs at least one reference");
    const auto st = segment_stats(candidates[i], references[i], max_n);
    for (std::size_t k = 0; k < st.matches.size(); ++k) {
      total.matches[k] += st.matches[k];
      total.totals[k] += st.totals[k];
    }
    total.cand_len += st.cand_len;
    total.ref_len += st.ref_len;
  }
  return finish(total, max_n);
}

double exp_rate(const std::vector<std::string>& preds, const std::vector<std::string>& refs, bool normalize_first) {
  if (preds.size() != refs.size()) {
    throw DomainError("exp_rate: " + std::to_string(preds.size()) + " predictions vs " +
                      std::to_string(refs.size()) + " references");
  }
  if (preds.empty()) return 0.0;
  auto canon = [&](const std::string& s) {
    if (!normalize_first) return s;
    try {
      return latex::normalize(s);
    } catch (const NormalizationError&) {
      return s;
    }
  };
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (canon(preds[i]) == canon(refs[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace docparse
