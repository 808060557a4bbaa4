#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace docparse {

/// Layout of the coordinate tokens inside the vocabulary. Coordinate bin b
/// is the vocabulary index start + b; the bins are contiguous and inclusive
/// on both ends.
struct CoordSpec {
  int bins = 1000;
  int start = 0;
  int end = 999;

  static CoordSpec with_bins(int bins, int start) { return {bins, start, start + bins - 1}; }

  bool contains(int token) const noexcept { return token >= start && token <= end; }
  int size() const noexcept { return end - start + 1; }

  /// Throws ConfigError unless end - start + 1 == bins and the range fits in
  /// a vocabulary of the given size.
  void validate(int vocab_size) const;
};

/// Axis-aligned box in normalized page coordinates.
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  bool valid() const noexcept;
  double area() const noexcept { return (x1 - x0) * (y1 - y0); }

  friend bool operator==(const Box&, const Box&) = default;
};

struct LayoutElement {
  std::string label;
  Box box;

  friend bool operator==(const LayoutElement&, const LayoutElement&) = default;
};

struct TokenSequence {
  std::vector<int> tokens;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// Assignment of class labels to vocabulary tokens plus the end-of-sequence
/// token that terminates a layout sequence.
class LabelMap {
public:
  LabelMap() = default;
  LabelMap(std::map<std::string, int> tokens, int eos);

  int token_for(const std::string& label) const;  // throws MappingError
  std::optional<std::string> label_for(int token) const;
  bool has_label(const std::string& label) const { return tokens_.count(label) != 0; }
  int eos() const noexcept { return eos_; }
  const std::map<std::string, int>& tokens() const noexcept { return tokens_; }

private:
  std::map<std::string, int> tokens_;
  std::map<int, std::string> labels_;
  int eos_ = -1;
};

/// round(c * (bins - 1)); throws DomainError outside [0, 1].
int quantize_coord(double c, const CoordSpec& spec);

/// b / (bins - 1); throws DomainError outside [0, bins).
double dequantize_coord(int bin, const CoordSpec& spec);

/// Display name of a bin, 1-based: bin 0 prints as "<loc_1>".
std::string loc_token_name(int bin);

/// Sorts elements into reading order: ascending y0, then ascending x0.
std::vector<LayoutElement> reading_order(std::vector<LayoutElement> elements);

/// Emits [label, loc(x0), loc(y0), loc(x1), loc(y1)] per element in reading
/// order, followed by the end-of-sequence token.
TokenSequence encode_layout(const std::vector<LayoutElement>& elements, const CoordSpec& spec,
                            const LabelMap& labels);

enum class ParseIssue {
  TruncatedGroup,
  NonCoordinateInSlot,
  UnexpectedToken,
  SwappedCorners,
  MissingEos,
  TrailingTokens,
};

const char* to_string(ParseIssue issue);

struct ParseDiagnostic {
  ParseIssue issue;
  std::size_t position;  // index into the token sequence
  std::string message;
};

struct ParsedLayout {
  std::vector<LayoutElement> elements;
  std::vector<ParseDiagnostic> diagnostics;
};

/// Tolerant inverse of encode_layout. Never throws on malformed input.
ParsedLayout parse_layout(const TokenSequence& seq, const CoordSpec& spec, const LabelMap& labels);

}  // namespace docparse
