#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "docparse/coord_codec.hpp"

namespace docparse {

/// One JSON object `{"label":..,"x0":..,"y0":..,"x1":..,"y1":..}` without a
/// trailing newline.
std::string layout_element_to_json(const LayoutElement& element);

/// Parses one JSON Lines record. Throws DomainError on malformed input.
LayoutElement layout_element_from_json(std::string_view line);

void write_layout_jsonl(std::ostream& out, const std::vector<LayoutElement>& elements);
std::vector<LayoutElement> read_layout_jsonl(std::istream& in);

/// Whitespace-separated vocabulary indices.
std::string format_tokens(const TokenSequence& seq);
TokenSequence parse_tokens(std::string_view text);

}  // namespace docparse
