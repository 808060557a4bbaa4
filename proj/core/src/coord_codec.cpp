#include "docparse/coord_codec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "docparse/errors.hpp"

namespace docparse {

void CoordSpec::validate(int vocab_size) const {
  if (bins < 2) throw ConfigError("coordinate bins must be at least 2, got " + std::to_string(bins));
  if (end - start + 1 != bins) {
    throw ConfigError("coordinate range [" + std::to_string(start) + ", " + std::to_string(end) +
                      "] does not hold " + std::to_string(bins) + " bins");
  }
  if (start < 0 || end >= vocab_size) {
    throw ConfigError("coordinate range [" + std::to_string(start) + ", " + std::to_string(end) +
                      "] exceeds vocabulary of size " + std::to_string(vocab_size));
  }
}

bool Box::valid() const noexcept {
  return 0.0 <= x0 && x0 <= x1 && x1 <= 1.0 && 0.0 <= y0 && y0 <= y1 && y1 <= 1.0;
}

LabelMap::LabelMap(std::map<std::string, int> tokens, int eos) : tokens_(std::move(tokens)), eos_(eos) {
  for (const auto& [label, token] : tokens_) {
    if (token == eos_) throw ConfigError("label '" + label + "' reuses the end-of-sequence token");
    if (!labels_.emplace(token, label).second) {
      throw ConfigError("token " + std::to_string(token) + " assigned to more than one label");
    }
  }
}

int LabelMap::token_for(const std::string& label) const {
  auto it = tokens_.find(label);
  if (it == tokens_.end()) throw MappingError("no token assigned to label '" + label + "'");
  return it->second;
}

std::optional<std::string> LabelMap::label_for(int token) const {
  auto it = labels_.find(token);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

int quantize_coord(double c, const CoordSpec& spec) {
  if (!(c >= 0.0 && c <= 1.0)) {
    std::ostringstream msg;
    msg << "coordinate " << c << " outside [0, 1]";
    throw DomainError(msg.str());
  }
  if (spec.bins < 2) throw ConfigError("coordinate bins must be at least 2");
  const long b = std::lround(c * (spec.bins - 1));
  return static_cast<int>(std::clamp<long>(b, 0, spec.bins - 1));
}

double dequantize_coord(int bin, const CoordSpec& spec) {
  if (bin < 0 || bin >= spec.bins) {
    throw DomainError("bin " + std::to_string(bin) + " outside [0, " + std::to_string(spec.bins) + ")");
  }
  return static_cast<double>(bin) / static_cast<double>(spec.bins - 1);
}

std::string loc_token_name(int bin) { return "<loc_" + std::to_string(bin + 1) + ">"; }

std::vector<LayoutElement> reading_order(std::vector<LayoutElement> elements) {
  std::stable_sort(elements.begin(), elements.end(), [](const LayoutElement& a, const LayoutElement& b) {
    if (a.box.y0 != b.box.y0) return a.box.y0 < b.box.y0;
    return a.box.x0 < b.box.x0;
  });
  return elements;
}

TokenSequence encode_layout(const std::vector<LayoutElement>& elements, const CoordSpec& spec,
                            const LabelMap& labels) {
  TokenSequence seq;
  seq.tokens.reserve(elements.size() * 5 + 1);
  for (const auto& el : reading_order(elements)) {
    if (!el.box.valid()) throw DomainError("element '" + el.label + "' has an invalid box");
    seq.tokens.push_back(labels.token_for(el.label));
    for (double c : {el.box.x0, el.box.y0, el.box.x1, el.box.y1}) {
      seq.tokens.push_back(spec.start + quantize_coord(c, spec));
    }
  }
  seq.tokens.push_back(labels.eos());
  return seq;
}

const char* to_string(ParseIssue issue) {
  switch (issue) {
    case ParseIssue::TruncatedGroup: return "truncated group";
    case ParseIssue::NonCoordinateInSlot: return "non-coordinate token in coordinate slot";
    case ParseIssue::UnexpectedToken: return "unexpected token";
    case ParseIssue::SwappedCorners: return "swapped corners";
    case ParseIssue::MissingEos: return "missing end-of-sequence";
    case ParseIssue::TrailingTokens: return "tokens after end-of-sequence";
  }
  return "unknown";
}

namespace {

void note(ParsedLayout& out, ParseIssue issue, std::size_t pos, std::string detail = {}) {
  std::string msg = to_string(issue);
  if (!detail.empty()) msg += ": " + detail;
  out.diagnostics.push_back({issue, pos, std::move(msg)});
}

}  // namespace

ParsedLayout parse_layout(const TokenSequence& seq, const CoordSpec& spec, const LabelMap& labels) {
  ParsedLayout out;
  const auto& t = seq.tokens;
  const std::size_t n = t.size();
  std::size_t i = 0;
  bool saw_eos = false;

  while (i < n) {
    if (t[i] == labels.eos()) {
      saw_eos = true;
      if (i + 1 < n) {
        note(out, ParseIssue::TrailingTokens, i + 1, std::to_string(n - i - 1) + " ignored");
      }
      break;
    }
    auto label = labels.label_for(t[i]);
    if (!label) {
      note(out, ParseIssue::UnexpectedToken, i, "token " + std::to_string(t[i]) + " where a label was expected");
      ++i;
      continue;
    }

    const std::size_t group_start = i;
    std::size_t j = i + 1;
    int coords[4];
    int got = 0;
    while (got < 4 && j < n && spec.contains(t[j])) {
      coords[got++] = t[j] - spec.start;
      ++j;
    }
    if (got < 4) {
      if (j >= n || t[j] == labels.eos()) {
        note(out, ParseIssue::TruncatedGroup, group_start,
             "label '" + *label + "' followed by " + std::to_string(got) + " of 4 coordinates");
      } else {
        note(out, ParseIssue::NonCoordinateInSlot, j,
             "token " + std::to_string(t[j]) + " in slot " + std::to_string(got + 1) + " of '" + *label + "'");
      }
      i = j;  // resynchronize on the offending token
      continue;
    }

    Box box{dequantize_coord(coords[0], spec), dequantize_coord(coords[1], spec),
            dequantize_coord(coords[2], spec), dequantize_coord(coords[3], spec)};
    if (box.x1 < box.x0 || box.y1 < box.y0) {
      if (box.x1 < box.x0) std::swap(box.x0, box.x1);
      if (box.y1 < box.y0) std::swap(box.y0, box.y1);
      note(out, ParseIssue::SwappedCorners, group_start, "label '" + *label + "'");
    }
    out.elements.push_back({*label, box});
    i = j;
  }

  if (!saw_eos) note(out, ParseIssue::MissingEos, n);
  return out;
}

}  // namespace docparse
