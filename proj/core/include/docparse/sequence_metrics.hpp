#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace docparse {

/// Levenshtein distance between two random-access sequences with unit
/// insertion, deletion and substitution costs. O(|a| |b|) time, O(|b|) space.
template <typename SeqA, typename SeqB>
std::size_t edit_distance(const SeqA& a, const SeqB& b) {
  const std::size_t n = std::size(a);
  const std::size_t m = std::size(b);
  std::vector<std::size_t> row(m + 1);
  for (std::size_t j = 0; j <= m; ++j) row[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[m];
}

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  return edit_distance<std::string_view, std::string_view>(a, b);
}

/// edit_distance / max(|a|, |b|), with d(empty, empty) = 0.
template <typename SeqA, typename SeqB>
double normalized_edit_distance(const SeqA& a, const SeqB& b) {
  const std::size_t longest = std::max(std::size(a), std::size(b));
  if (longest == 0) return 0.0;
  return static_cast<double>(edit_distance(a, b)) / static_cast<double>(longest);
}

using Tokens = std::vector<std::string>;

Tokens tokenize_whitespace(std::string_view text);
Tokens tokenize_code_points(std::string_view text);
/// LaTeX lexer tokens with whitespace and comments dropped.
Tokens tokenize_latex(std::string_view text);

struct BleuResult {
  double score = 0.0;
  std::vector<double> precisions;  // smoothed modified precision per order
  double brevity_penalty = 0.0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
  bool empty_candidate = false;
};

/// Sentence BLEU: geometric mean of clipped n-gram precisions for
/// n = 1..max_n times the brevity penalty. Orders n >= 2 use add-one
/// smoothing, (matches + 1) / (total + 1); unigram precision is unsmoothed,
/// so a candidate sharing no unigram with any reference scores 0. The
/// effective reference length is the one closest to the candidate length,
/// the shorter on ties. An empty candidate scores 0 with `empty_candidate`.
BleuResult bleu(const Tokens& candidate, const std::vector<Tokens>& references, int max_n = 4);

/// Corpus BLEU: n-gram statistics and lengths summed over all segments
/// before the precisions and the brevity penalty are formed.
BleuResult corpus_bleu(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references,
                       int max_n = 4);

/// Fraction of exact matches. With `normalize_first`, both sides pass
/// through the LaTeX normalizer (raw text is compared if normalization
/// fails). Throws DomainError when the lengths differ.
double exp_rate(const std::vector<std::string>& preds, const std::vector<std::string>& refs,
                bool normalize_first = false);

}  // namespace docparse
