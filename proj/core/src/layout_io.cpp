#include "docparse/layout_io.hpp"

#include <cctype>
#include <charconv>

#include <json.hpp>

#include "docparse/errors.hpp"

namespace docparse {

using nlohmann::json;

std::string layout_element_to_json(const LayoutElement& element) {
  json j = json::object();
  j["label"] = element.label;
  j["x0"] = element.box.x0;
  j["y0"] = element.box.y0;
  j["x1"] = element.box.x1;
  j["y1"] = element.box.y1;
  return j.dump();
}

LayoutElement layout_element_from_json(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DomainError("layout record is not a JSON object");
  LayoutElement el;
  try {
    el.label = j.at("label").get<std::string>();
    el.box = {j.at("x0").get<double>(), j.at("y0").get<double>(), j.at("x1").get<double>(),
              j.at("y1").get<double>()};
  } catch (const json::exception& e) {
    throw DomainError(std::string("layout record: ") + e.what());
  }
  if (!el.box.valid()) throw DomainError("layout record '" + el.label + "' has an invalid box");
  return el;
}

void write_layout_jsonl(std::ostream& out, const std::vector<LayoutElement>& elements) {
  for (const auto& el : elements) out << layout_element_to_json(el) << '\n';
}

std::vector<LayoutElement> read_layout_jsonl(std::istream& in) {
  std::vector<LayoutElement> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(layout_element_from_json(line));
    } catch (const DomainError& e) {
      throw DomainError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string format_tokens(const TokenSequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(seq.tokens[i]);
  }
  return out;
}

TokenSequence parse_tokens(std::string_view text) {
  TokenSequence seq;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + j, value);
    if (ec != std::errc{} || ptr != text.data() + j) {
      throw DomainError("bad token index '" + std::string(text.substr(i, j - i)) + "'");
    }
    seq.tokens.push_back(value);
    i = j;
  }
  return seq;
}

}  // namespace docparse
