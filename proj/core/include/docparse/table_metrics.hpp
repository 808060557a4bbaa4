#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace docparse {

/// Cell strings of the first tabular-like environment (tabular, tabular*,
/// tabularx, longtable, array), in row-major order.
///
/// Rows split on `\\`, cells on unescaped `&`, both at brace depth zero.
/// Rule commands (\hline, \toprule, \midrule, \bottomrule, \cline,
/// \cmidrule) are dropped; \multicolumn and \multirow contribute their last
/// argument once; formatting wrappers (\textbf, \textit, \emph, \underline,
/// \mathbf, \text, \mbox, \shortstack, \makecell, ...) are replaced by their
/// argument. Whitespace is canonicalized with the normalizer's text-mode
/// space rule and trimmed; empty cells are dropped. Throws ExtractionError
/// if no environment is found.
std::vector<std::string> extract_table_cells(std::string_view latex);

struct TableF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool failed = false;  // extraction failed on either side; scored 0
  std::string message;
};

/// Multiset precision/recall/F1 between extracted cell contents.
TableF1 table_cell_f1(std::string_view pred_latex, std::string_view gt_latex);

}  // namespace docparse
